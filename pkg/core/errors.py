"""
Exceções do otimizador e códigos de saída da CLI
"""

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_NON_CONVERGENCE = 3


class FailsafeError(Exception):
    "Erro base do pacote."
    exit_code = 1


class ModelValidationError(FailsafeError):
    "Arquivo de modelo inválido (esquema, dimensões ou propriedades das matrizes)."
    exit_code = EXIT_INPUT_ERROR

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"linha {line}")
        if field is not None:
            where.append(f"campo '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class GroundMotionFormatError(FailsafeError):
    "Registro sísmico ilegível ou com amostragem não uniforme."
    exit_code = EXIT_INPUT_ERROR


class ScenarioLimitError(FailsafeError):
    "Número de cenários de falha acima do limite configurado."
    exit_code = EXIT_INPUT_ERROR


class SingularSystemError(FailsafeError):
    "Matriz singular em uma fatoração (rigidez efetiva, matriz adjunta, massa)."


class EigenConvergenceError(FailsafeError):
    "Iteração inversa não convergiu dentro do limite de iterações."


class InfeasibleLPError(FailsafeError):
    "Subproblema linear inviável."


class UnboundedLPError(FailsafeError):
    "Subproblema linear ilimitado."


class LPIterationLimitError(FailsafeError):
    "Simplex atingiu o limite de pivôs sem certificar ótimo (possível ciclagem)."
    exit_code = EXIT_NON_CONVERGENCE


class NonConvergenceError(FailsafeError):
    "Otimização encerrada sem atingir o critério de convergência."
    exit_code = EXIT_NON_CONVERGENCE


class WorkingSetError(FailsafeError):
    "Uso do working-set fora da ordem do algoritmo (ex.: seleção sem violação)."


class ConfigurationError(FailsafeError):
    "Preset ou combinação de flags inválida."
    exit_code = EXIT_INPUT_ERROR
