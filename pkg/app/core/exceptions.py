class OPGGError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OPGGError, ValueError):
    pass


class ResourceLimitError(OPGGError):
    pass


class IntegrationError(OPGGError, ArithmeticError):
    def __init__(self, message: str, node: int | None = None):
        self.node = node
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)


class GridMismatchError(OPGGError, ValueError):
    pass


class InvalidWeightsError(OPGGError, ValueError):
    pass


class ScenarioConfigError(OPGGError, ValueError):
    def __init__(self, message: str, errors: list[str] | None = None):
        self.errors = errors or []
        if self.errors:
            message = f"{message}: " + "; ".join(self.errors)
        super().__init__(message)
