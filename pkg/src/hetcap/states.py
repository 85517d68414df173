"""Single-mode pure states sampled on a position grid.

Conventions: hbar = 1, ``p = -i d/dq``, and the displacement operator is used
in the symmetric form ``(D(x, y) psi)(q) = exp(i y (q - x/2)) psi(q - x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .numerics import Grid1D

MAX_FOCK = 64
DEFAULT_STATE_POINTS = 1024
DECAY_TOL = 1e-10


class GridError(ValueError):
    """The grid is too small or too coarse for the requested state."""


@dataclass
class WaveFunction:
    """Complex amplitudes on a uniform position grid.

    With ``check=True`` (the default) the state must be normalized and must have
    decayed at both grid ends: ``|psi|^2 < 1e-10`` at the boundary samples.
    Operator images such as the result of :func:`hetcap.measurement.apply_K_gaussian`
    are built with ``check=False``.
    """

    grid: Grid1D
    amps: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.shape != (self.grid.points,):
            raise ValueError(f"amplitude vector has shape {a.shape}, "
                             f"grid has {self.grid.points} points")
        a.setflags(write=False)
        self.amps = a
        if self.check:
            n = self.norm
            if abs(n - 1.0) > 1e-8:
                raise ValueError(f"state is not normalized: norm^2 = {n:.12f}")
            edge = max(abs(a[0]) ** 2, abs(a[-1]) ** 2)
            if edge > DECAY_TOL:
                raise GridError(f"|psi|^2 = {edge:.2e} at the grid boundary; "
                                "widen the grid")

    @property
    def q(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def norm(self) -> float:
        """Squared norm ``sum |amps|^2 * step``."""
        return float(np.sum(np.abs(self.amps) ** 2) * self.grid.step)

    def inner(self, other: "WaveFunction") -> complex:
        """``<self|other>``; both states must share a grid."""
        if other.grid != self.grid:
            raise ValueError("states live on different grids")
        return complex(np.vdot(self.amps, other.amps) * self.grid.step)

    def fidelity(self, other: "WaveFunction") -> float:
        return abs(self.inner(other)) ** 2

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amps / np.sqrt(self.norm))

    @cached_property
    def moments(self) -> "Moments":
        return state_moments(self)


@dataclass(frozen=True)
class Moments:
    mean_q: float
    mean_p: float
    q2: float
    p2: float

    @property
    def var_q(self) -> float:
        return self.q2 - self.mean_q**2

    @property
    def var_p(self) -> float:
        return self.p2 - self.mean_p**2


@dataclass
class PureEnsemble:
    """Density operator as a finite mixture ``sum_k w_k |phi_k><phi_k|``."""

    members: list

    def __post_init__(self):
        members = [(float(w), s) for w, s in self.members]
        if not members:
            raise ValueError("empty ensemble")
        if any(w <= 0 for w, _ in members):
            raise ValueError("ensemble weights must be positive")
        total = sum(w for w, _ in members)
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"ensemble weights sum to {total!r}")
        for _, s in members:
            if not s.check:
                raise ValueError("ensemble members must be checked, normalized states")
        self.members = members

    @classmethod
    def pure(cls, psi: WaveFunction) -> "PureEnsemble":
        return cls([(1.0, psi)])

    @classmethod
    def mixture(cls, weights, states) -> "PureEnsemble":
        w = np.asarray(weights, dtype=float)
        return cls(list(zip(w / w.sum(), states)))

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.members])

    @property
    def states(self) -> list:
        return [s for _, s in self.members]

    def moments(self) -> Moments:
        ms = [s.moments for s in self.states]
        w = self.weights
        return Moments(*(float(np.dot(w, [getattr(m, k) for m in ms]))
                         for k in ("mean_q", "mean_p", "q2", "p2")))


def as_ensemble(rho) -> PureEnsemble:
    if isinstance(rho, PureEnsemble):
        return rho
    if isinstance(rho, WaveFunction):
        return PureEnsemble.pure(rho)
    raise TypeError(f"expected WaveFunction or PureEnsemble, got {type(rho).__name__}")


# -- grids ----------------------------------------------------------------------

def state_grid(extent: float, points: int = DEFAULT_STATE_POINTS,
               center: float = 0.0) -> Grid1D:
    """Position grid ``center +- extent``."""
    return Grid1D(float(center), float(extent), int(points))


def fock_extent(n: int, delta: float, margin: float = 6.5) -> float:
    """Half-width holding squeezed Fock modes up to ``n``.

    The classical turning point of mode ``n`` sits at ``sqrt(2 delta (2n + 1))``;
    ``margin`` extra units of ``sqrt(2 delta)`` push ``|psi|^2`` below 1e-15.
    """
    return float(np.sqrt(2 * delta) * (np.sqrt(2 * n + 1) + margin))


# -- Hermite modes -------------------------------------------------------------

def hermite_functions(nmax: int, u: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions ``h_0..h_nmax`` evaluated at ``u``.

    Uses the three-term recurrence on the normalized functions themselves,
    ``h_{n+1} = sqrt(2/(n+1)) u h_n - sqrt(n/(n+1)) h_{n-1}``, which stays
    finite for large ``n``.  Returns an array of shape ``(nmax + 1,) + u.shape``.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty((nmax + 1,) + u.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * u**2)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * u * out[0]
    for n in range(1, nmax):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * u * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def squeezed_fock_modes(nmax: int, delta: float, q: np.ndarray) -> np.ndarray:
    """Real squeezed Fock wavefunctions with ground-state position variance ``delta``."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    s = np.sqrt(2.0 * delta)
    return hermite_functions(nmax, np.asarray(q) / s) / np.sqrt(s)


def squeezed_fock(n: int, delta: float, grid: Grid1D,
                  max_n: int = MAX_FOCK) -> WaveFunction:
    """``n``-th eigenmode of ``q^2/(2 delta) + 2 delta p^2`` (eigenvalue ``2n + 1``)."""
    if not 0 <= n <= max_n:
        raise ValueError(f"Fock index {n} outside 0..{max_n}")
    amps = squeezed_fock_modes(n, delta, grid.nodes)[n]
    return WaveFunction(grid, amps)


def squeezed_coherent(delta: float, x: float, y: float, grid: Grid1D) -> WaveFunction:
    """``|x, y>_delta = D(x, y)|0>_delta``: position variance ``delta``, momentum variance ``1/(4 delta)``."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    q = grid.nodes
    amps = ((2 * np.pi * delta) ** -0.25 * np.exp(-((q - x) ** 2) / (4 * delta))
            * np.exp(1j * y * (q - 0.5 * x)))
    return WaveFunction(grid, amps)


def displace(psi: WaveFunction, x: float, y: float) -> WaveFunction:
    """Apply ``D(x, y)``.  The position shift is done spectrally (exact for resolved states)."""
    g = psi.grid
    k = 2 * np.pi * np.fft.fftfreq(g.points, d=g.step)
    shifted = np.fft.ifft(np.fft.fft(psi.amps) * np.exp(-1j * k * x))
    amps = np.exp(1j * y * (g.nodes - 0.5 * x)) * shifted
    return WaveFunction(g, amps, check=psi.check)


# -- derivatives and moments ---------------------------------------------------

def derivative(amps: np.ndarray, step: float, order: int = 1) -> np.ndarray:
    """Sixth-order central finite differences; the state is taken as zero off-grid."""
    a = np.pad(np.asarray(amps, dtype=complex), 3)
    n = len(a) - 6
    if order == 1:
        c = (-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60)
        scale = step
    elif order == 2:
        c = (1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90)
        scale = step**2
    else:
        raise ValueError("only first and second derivatives are supported")
    d = sum(ck * a[k:k + n] for k, ck in enumerate(c) if ck)
    return d / scale


def spectral_derivative(amps: np.ndarray, step: float, order: int = 1) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(len(amps), d=step)
    return np.fft.ifft((1j * k) ** order * np.fft.fft(amps))


def gradient_energy(psi: WaveFunction) -> float:
    """``int |psi'(q)|^2 dq`` from finite differences."""
    d = derivative(psi.amps, psi.grid.step)
    return float(np.sum(np.abs(d) ** 2) * psi.grid.step)


def spectral_p2(psi: WaveFunction) -> float:
    """``<p^2>`` from the discrete Fourier transform (cross-check for :func:`gradient_energy`)."""
    a = psi.amps
    k = 2 * np.pi * np.fft.fftfreq(len(a), d=psi.grid.step)
    ahat = np.fft.fft(a)
    return float(np.sum(k**2 * np.abs(ahat) ** 2) / np.sum(np.abs(ahat) ** 2) * psi.norm)


def second_moments(psi: WaveFunction) -> tuple[float, float]:
    """``(<q^2>, <p^2>)`` with ``<p^2> = int |psi'|^2``."""
    q = psi.grid.nodes
    q2 = float(np.sum(q**2 * np.abs(psi.amps) ** 2) * psi.grid.step)
    return q2, gradient_energy(psi)


def state_moments(psi: WaveFunction) -> Moments:
    q = psi.grid.nodes
    h = psi.grid.step
    rho = np.abs(psi.amps) ** 2
    mean_q = float(np.sum(q * rho) * h)
    # <p> = Im int conj(psi) psi'
    mean_p = float(np.imag(np.vdot(psi.amps, derivative(psi.amps, h))) * h)
    q2, p2 = second_moments(psi)
    return Moments(mean_q, mean_p, q2, p2)


# -- random test vectors ---------------------------------------------------------

def random_state(seed, dim: int, delta: float, grid: Grid1D,
                 max_n: int = MAX_FOCK) -> WaveFunction:
    """Normalized superposition of ``squeezed_fock(0..dim-1, delta)``.

    Coefficients are i.i.d. standard complex normals drawn from
    ``numpy.random.default_rng(seed)``.
    """
    if not 1 <= dim <= max_n + 1:
        raise ValueError(f"dim must lie in 1..{max_n + 1}, got {dim}")
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return superpose(c, delta, grid)


def superpose(coeffs, delta: float, grid: Grid1D) -> WaveFunction:
    """State with squeezed-Fock expansion coefficients ``coeffs`` (renormalized)."""
    c = np.asarray(coeffs, dtype=complex)
    modes = squeezed_fock_modes(len(c) - 1, delta, grid.nodes)
    amps = c @ modes
    amps = amps / np.sqrt(np.sum(np.abs(amps) ** 2) * grid.step)
    return WaveFunction(grid, amps)
