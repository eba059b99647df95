"""Sequential Gibbs measures on one-sided full shifts: pressure, Gibbs times and factor images."""

__version__ = "0.1.0"

from .shift import Alphabet, FactorMap, Point, TailSpec, Word  # noqa: E402
from .potentials import GeometricSeries, LocallyConstant, Renewal, potential_from_spec  # noqa: E402
from .thermo import ConvergenceError, MarkovMeasure, RpfEigendata, solve  # noqa: E402

__all__ = [
    "Alphabet", "FactorMap", "Point", "TailSpec", "Word",
    "GeometricSeries", "LocallyConstant", "Renewal", "potential_from_spec",
    "ConvergenceError", "MarkovMeasure", "RpfEigendata", "solve",
]
