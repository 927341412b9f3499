# settings.py
import logging
import os

from dotenv import load_dotenv

# Carrega o .env da raiz (se existir) antes de ler as variáveis
load_dotenv()

# ============ Logging ============
LOG_LEVEL = os.getenv('LAB_LOG_LEVEL', 'INFO').upper()

# ============ Numérica ============
# Máximo de nós de oscilação aceitos por chamada
NODE_CAP = int(os.getenv('LAB_NODE_CAP', '200000'))
# Meios-períodos integrados célula a célula antes da média
EXACT_CELLS = int(os.getenv('LAB_EXACT_CELLS', '1000'))
JACOBI_ORDER = int(os.getenv('LAB_JACOBI_ORDER', '20'))
TAIL_TOL = float(os.getenv('LAB_TAIL_TOL', '1e-12'))

# Operador de extensão (painéis de Gauss-Legendre)
EXTENSION_ORDER = int(os.getenv('LAB_EXTENSION_ORDER', '10'))
EXTENSION_BUDGET = int(os.getenv('LAB_EXTENSION_BUDGET', '2000000'))

# ============ Saída ============
OUTPUT_DIR = os.getenv('LAB_OUTPUT_DIR', 'resultados')
DEFAULT_SEED = int(os.getenv('LAB_SEED', '20240601'))


def configure_logging(level: str | None = None) -> None:
    """Configura o logging uma única vez (chamado só pela CLI)"""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
