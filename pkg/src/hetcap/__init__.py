"""Energy-constrained classical capacity of noisy heterodyne measurement channels.

Submodules: :mod:`numerics` (grids and information functionals),
:mod:`states` (grid wavefunctions), :mod:`measurement` (Husimi densities and
Wehrl entropies), :mod:`capacity` (closed forms and optimal encodings),
:mod:`verify` (numerical certificates), :mod:`oracle` (Blahut-Arimoto and
Monte Carlo rates) and :mod:`cli`.
"""
__version__ = "0.1.0"

from .capacity import CapacityResult, GaussianEncoding, SignalCovariance, capacity, classify
from .measurement import NoiseCovariance, build_model, husimi, min_wehrl_bound, wehrl_entropy
from .states import WaveFunction, squeezed_coherent, squeezed_fock

__all__ = [
    "CapacityResult", "GaussianEncoding", "NoiseCovariance", "SignalCovariance",
    "WaveFunction", "build_model", "capacity", "classify", "husimi",
    "min_wehrl_bound", "squeezed_coherent", "squeezed_fock", "wehrl_entropy",
]
