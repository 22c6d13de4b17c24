"""
Configurações do otimizador fail-safe de amortecedores viscosos
"""

from pathlib import Path
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

PROJECT_ROOT = Path(__file__).parent.parent

class Settings(BaseSettings):
    """Configurações da aplicação (variáveis FAILSAFE_* ou arquivo .env)"""

    model_config = SettingsConfigDict(
        env_prefix="FAILSAFE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Caminhos
    output_dir: Path = Field(default_factory=lambda: PROJECT_ROOT / "results")
    log_file: Path = Field(default_factory=lambda: PROJECT_ROOT / "results" / "failsafe.log")
    log_level: str = "INFO"

    # Projeto dos amortecedores
    c_bar: float = 150000.0          # kNs/m, coeficiente máximo por amortecedor
    zeta: float = 0.05               # amortecimento inerente (Rayleigh, dois primeiros modos)
    g_accel: float = 9.81            # m/s², conversão de registros em g

    # SLP / planos de corte
    ml: float = 0.02
    i_min: int = 50
    i_max: int = 400
    drop_margin: float = 0.02
    max_planes_per_pair: int = 20    # planos ativos mantidos por (cenário, registro)
    p_start: int = 100
    p_step: int = 500
    p_cap: int = 1_000_000
    q_start: int = 100
    q_step: int = 500
    q_cap: int = 1_000_000

    # Working-set
    epsilon: float = 0.05
    violation_tol: float = 1e-3
    max_scenarios: int = 100_000
    max_subproblems: int = 50
    max_record_passes: int = 10

    # Numérico
    max_workers: int = 1
    eig_max_iter: int = 5000
    eig_tol: float = 1e-12

    def ensure_directories(self):
        """Garante que o diretório de saída e o do log existem"""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.log_file.parent.mkdir(parents=True, exist_ok=True)


# Instância global de configurações
settings = Settings()
