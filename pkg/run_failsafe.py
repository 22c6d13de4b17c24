#!/usr/bin/env python3
"""
Ponto de entrada do otimizador fail-safe de amortecedores viscosos

Uso: python run_failsafe.py --help
"""

import os
import sys

# Adiciona a raiz do projeto ao path para importar o pacote core
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.cli import main

if __name__ == "__main__":
    sys.exit(main())
