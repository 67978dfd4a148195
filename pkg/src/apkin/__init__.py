"""Standard and penalized IMEX Runge-Kutta schemes for stiff kinetic equations."""
from .tableau import ImexTableau, build_tableau, classify, get_scheme, registry

__all__ = ["ImexTableau", "build_tableau", "classify", "get_scheme", "registry"]
__version__ = "0.1.0"
