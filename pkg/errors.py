# errors.py
"""Exceções do laboratório. Toda falha prevista herda de LabError."""


class LabError(Exception):
    """Base de todos os erros do laboratório"""

    operation = 'lab'


class DomainError(LabError, ValueError):
    """Ponto fora do domínio (t <= 0 ou fora do intervalo da curva)"""

    operation = 'domain'


class PreconditionError(LabError, ValueError):
    operation = 'precondition'


class DegeneratePhaseError(LabError):
    operation = 'amplitude_phase'


class NodeResolutionError(LabError):
    """Número de nós acima do limite configurado"""

    operation = 'oscillation_nodes'

    def __init__(self, message: str, count: int, interval: tuple[float, float]):
        super().__init__(message)
        self.count = count
        self.interval = interval


class SingularWeightError(LabError):
    operation = 'affine_weight'


class EmptyDomainError(LabError):
    operation = 'offspring'


class InvalidSimplexPointError(LabError, ValueError):
    operation = 'offspring_jacobian'


class DegenerateConfigurationError(LabError):
    operation = 'rolle_ratio'


class ExtensionBudgetError(LabError):
    """Tolerância inatingível dentro do orçamento de avaliações"""

    operation = 'extension_op'

    def __init__(self, message: str, estimate: complex, bound: float):
        super().__init__(message)
        self.estimate = estimate
        self.bound = bound


class CoverResolutionError(LabError):
    """Amostragem grossa demais: salto de faixa entre amostras vizinhas"""

    operation = 'build_cover'

    def __init__(self, message: str, subinterval: tuple[float, float]):
        super().__init__(message)
        self.subinterval = subinterval


class ConfigError(LabError):
    operation = 'config'

    def __init__(self, errors: list[str]):
        super().__init__('; '.join(errors))
        self.errors = errors
