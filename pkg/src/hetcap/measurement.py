"""Noisy heterodyne measurement: generalized Husimi densities and Wehrl entropies.

The POVM density is ``m(x, y) = D(x, y) rho_beta D(x, y)^* / (2 pi)`` where
``rho_beta`` is the centered Gaussian state with covariance
``diag(beta_q, beta_p)``.  ``rho_beta`` is a squeezed thermal state,

    rho_beta = sum_n w_n |chi_n><chi_n|,   w_n = nbar^n / (nbar + 1)^(n + 1),

with ``chi_n`` the squeezed Fock modes of ground variance
``delta_beta = sqrt(beta_q / beta_p) / 2`` and ``nbar = sqrt(beta_q beta_p) - 1/2``.
Outcome densities ``Tr[rho m(x, y)]`` are therefore sums of squared overlaps
of displaced Hermite modes with the state, truncated once the geometric tail
drops below ``eps``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .numerics import (Density2D, Grid1D, Grid2D, cross_entropy_2d,
                       differential_entropy)
from .states import (Moments, PureEnsemble, WaveFunction, as_ensemble,
                     derivative, hermite_functions, spectral_derivative)

HUSIMI_TOL_MASS = 1e-5
DEFAULT_OUTCOME_POINTS = 128
TAIL_FLOOR = 1e-13


class HusimiError(RuntimeError):
    """Husimi evaluation lost mass or broke the pointwise eigenvalue bound."""


class TailWarning(UserWarning):
    """A log-density was evaluated where the density is below numerical resolution."""


class ResolutionError(RuntimeError):
    """Finite-difference and spectral derivatives disagree: grid too coarse."""


@dataclass(frozen=True)
class NoiseCovariance:
    beta_q: float
    beta_p: float

    def __post_init__(self):
        if not (self.beta_q > 0 and self.beta_p > 0):
            raise ValueError(f"noise powers must be positive: {self}")
        # a product of exactly 1/4 may come out a hair below in floating point
        if self.beta_q * self.beta_p < 0.25 * (1 - 1e-12):
            raise ValueError(f"beta_q * beta_p = {self.beta_q * self.beta_p:.6g} < 1/4")

    @property
    def ratio(self) -> float:
        """``sqrt(beta_q / beta_p)``."""
        return float(np.sqrt(self.beta_q / self.beta_p))

    @property
    def geometric(self) -> float:
        """``sqrt(beta_q * beta_p)``."""
        return float(np.sqrt(self.beta_q * self.beta_p))

    @property
    def minimizer_delta(self) -> float:
        """Squeeze of the entropy-minimizing letters, ``sqrt(beta_q/beta_p) / 2``."""
        return 0.5 * self.ratio

    def swapped(self) -> "NoiseCovariance":
        return NoiseCovariance(self.beta_p, self.beta_q)


@dataclass(frozen=True)
class MeasurementModel:
    noise: NoiseCovariance
    delta_beta: float
    nbar: float
    weights: np.ndarray
    eps: float

    @property
    def n_th(self) -> int:
        return len(self.weights) - 1

    @property
    def sup_bound(self) -> float:
        """Largest eigenvalue of ``m(x, y)``: ``w_0 / (2 pi)``."""
        return 1.0 / (2 * np.pi * (self.nbar + 1.0))

    def covariance(self) -> tuple[float, float]:
        """Covariance of the truncated kernel, ``sum w_n (2n+1) diag(delta, 1/(4 delta))``."""
        n = np.arange(len(self.weights))
        s = float(np.dot(self.weights, 2 * n + 1))
        return s * self.delta_beta, s / (4 * self.delta_beta)


def build_model(noise: NoiseCovariance, eps: float = 1e-10) -> MeasurementModel:
    """Squeezed-thermal decomposition of ``rho_beta`` truncated at tail mass ``eps``."""
    if not 0 < eps < 1e-3:
        raise ValueError(f"truncation eps must lie in (0, 1e-3), got {eps}")
    nbar = max(noise.geometric - 0.5, 0.0)
    if nbar == 0.0:
        weights = np.array([1.0])
    else:
        r = nbar / (nbar + 1.0)
        # tail beyond N is r^(N+1); smallest N with r^(N+1) < eps
        n_th = max(int(np.ceil(np.log(eps) / np.log(r))) - 1, 0)
        while r ** (n_th + 1) >= eps:
            n_th += 1
        n = np.arange(n_th + 1)
        weights = r**n / (nbar + 1.0)
    weights.setflags(write=False)
    return MeasurementModel(noise, noise.minimizer_delta, nbar, weights, eps)


@dataclass(eq=False)
class HusimiDensity(Density2D):
    """Outcome density of the measurement, tagged with its noise and source moments."""

    noise: NoiseCovariance | None = None
    source: Moments | None = None


# -- grids ---------------------------------------------------------------------

def outcome_grid(noise: NoiseCovariance, rho, points: int = DEFAULT_OUTCOME_POINTS,
                 nsigma: float = 8.0) -> Grid2D:
    """Outcome grid covering ``mean +- nsigma * sigma`` of the Husimi density.

    ``rho`` may be a state, an ensemble or a sequence of them; the grid then
    covers all of them.
    """
    items = rho if isinstance(rho, (list, tuple)) else [rho]
    lo_x = lo_y = np.inf
    hi_x = hi_y = -np.inf
    for item in items:
        m = as_ensemble(item).moments()
        sx = np.sqrt(max(m.var_q, 0.0) + noise.beta_q)
        sy = np.sqrt(max(m.var_p, 0.0) + noise.beta_p)
        lo_x, hi_x = min(lo_x, m.mean_q - nsigma * sx), max(hi_x, m.mean_q + nsigma * sx)
        lo_y, hi_y = min(lo_y, m.mean_p - nsigma * sy), max(hi_y, m.mean_p + nsigma * sy)
    return Grid2D(Grid1D.spanning(lo_x, hi_x, points), Grid1D.spanning(lo_y, hi_y, points))


# -- Husimi evaluation ----------------------------------------------------------

def _span(states: Sequence[WaveFunction]):
    """Orthonormal basis of the span of ``states``: returns ``(coeffs, basis)``.

    ``amps[s] = coeffs[s] @ basis`` with basis rows orthonormal under the grid
    inner product.
    """
    g = states[0].grid
    a = np.stack([s.amps for s in states]) * np.sqrt(g.step)
    u, sv, vh = np.linalg.svd(a, full_matrices=False)
    r = int(np.sum(sv > 1e-13 * sv[0]))
    return u[:, :r] * sv[:r], vh[:r] / np.sqrt(g.step)


def _integration_stride(basis: np.ndarray, step: float, k_modes: float,
                        y_max: float, safety: float = 0.75) -> int:
    """Largest subsampling stride of the position grid that keeps overlaps exact.

    The overlap integrand ``chi_n(q - x) basis(q) exp(-i y q)`` is band-limited
    to ``k_basis + k_modes + |y|``; the trapezoid sum with step ``h`` has no
    aliasing error while ``2 pi / h`` exceeds that bandwidth.  Raises
    :class:`ResolutionError` when even the full grid is too coarse.
    """
    mag = np.max(np.abs(np.fft.fft(basis, axis=1)), axis=0)
    k = np.abs(2 * np.pi * np.fft.fftfreq(basis.shape[1], d=step))
    k_basis = float(k[mag > 1e-13 * mag.max()].max())
    band = k_basis + k_modes + y_max
    if band * step > 2 * np.pi:
        raise ResolutionError(f"position step {step:.3g} aliases the overlap integrand "
                              f"(bandwidth {band:.3g}); refine the state grid")
    return max(1, int(np.floor(safety * 2 * np.pi / (band * step))))


def _mode_overlaps(model: MeasurementModel, basis: np.ndarray, qgrid: Grid1D,
                   grid: Grid2D):
    """Yield ``(w_n, O_n)`` with ``O_n[a, i, j] = <chi_n| D(x_i, y_j)^* |basis_a>`` up to a phase.

    The phase ``exp(i x y / 2)`` common to all ``a`` and ``n`` is dropped; only
    products ``conj(O_a) O_b`` are ever used.
    """
    s = np.sqrt(2.0 * model.delta_beta)
    x = grid.gx.nodes
    y = grid.gy.nodes
    k_modes = (np.sqrt(2.0 * model.n_th + 1) + 6.5) / s
    stride = _integration_stride(basis, qgrid.step, k_modes, float(np.max(np.abs(y))))
    q = qgrid.nodes[::stride]
    b = basis[:, ::stride]
    live = np.max(np.abs(b), axis=0) > 1e-16 * np.max(np.abs(b))
    q, b = q[live], b[:, live]
    r, nq, ny = b.shape[0], len(q), len(y)
    # phased basis, laid out so one real matmul per mode covers every a and y
    phased = (b.T[:, :, None] * np.exp(-1j * np.outer(q, y))[:, None, :]) * (qgrid.step * stride)
    phased = np.ascontiguousarray(phased.reshape(nq, r * ny))
    pr = np.ascontiguousarray(np.concatenate([phased.real, phased.imag], axis=1))
    u = (q[None, :] - x[:, None]) / s
    # recurrence on normalized Hermite functions, one order at a time
    h_prev = None
    h_cur = np.pi**-0.25 * np.exp(-0.5 * u**2)
    for n, w in enumerate(model.weights):
        if n > 0:
            h_next = (np.sqrt(2.0 / n) * u * h_cur
                      - (np.sqrt((n - 1) / n) * h_prev if n > 1 else 0.0))
            h_prev, h_cur = h_cur, h_next
        out = (h_cur / np.sqrt(s)) @ pr
        o = out[:, :r * ny] + 1j * out[:, r * ny:]
        yield w, o.reshape(len(x), r, ny).transpose(1, 0, 2)


def husimi_values(model: MeasurementModel, states: Sequence[WaveFunction],
                  grid: Grid2D) -> np.ndarray:
    """Raw outcome densities ``<psi_s|m(x, y)|psi_s>`` for pure states on one grid.

    Returns an array of shape ``(len(states), nx, ny)``.  States are reduced to
    an orthonormal basis of their span first, so large batches drawn from a
    low-dimensional subspace cost little more than the subspace dimension.
    """
    states = list(states)
    qgrid = states[0].grid
    if any(s.grid != qgrid for s in states):
        raise ValueError("batched states must share a position grid")
    coeffs, basis = _span(states)
    n_states, r = coeffs.shape
    k = grid.gx.points * grid.gy.points
    n_modes = len(model.weights)
    use_gram = n_modes * r * r + n_states * r * r < n_modes * n_states * r
    if use_gram:
        gram = np.zeros((r, r, k), dtype=complex)
        for w, o in _mode_overlaps(model, basis, qgrid, grid):
            o = o.reshape(r, k)
            gram += w * (o.conj()[:, None, :] * o[None, :, :])
        pair = (coeffs.conj()[:, :, None] * coeffs[:, None, :]).reshape(n_states, r * r)
        vals = (pair @ gram.reshape(r * r, k)).real
    else:
        vals = np.zeros((n_states, k))
        for w, o in _mode_overlaps(model, basis, qgrid, grid):
            vals += w * np.abs(coeffs @ o.reshape(r, k)) ** 2
    vals = np.maximum(vals, 0.0) / (2 * np.pi)
    return vals.reshape(n_states, grid.gx.points, grid.gy.points)


def husimi(model: MeasurementModel, rho, grid: Grid2D) -> HusimiDensity:
    """Generalized Husimi density ``Tr[rho m(x, y)]`` of a state or ensemble."""
    ens = as_ensemble(rho)
    values = np.zeros(grid.shape)
    by_grid: dict = {}
    for w, s in ens.members:
        by_grid.setdefault(s.grid, []).append((w, s))
    for members in by_grid.values():
        w = np.array([m[0] for m in members])
        vals = husimi_values(model, [m[1] for m in members], grid)
        values += np.tensordot(w, vals, axes=1)
    return _wrap(model, values, grid, ens.moments())


def husimi_many(model: MeasurementModel, states: Sequence[WaveFunction],
                grid: Grid2D) -> list[HusimiDensity]:
    """:func:`husimi` for many pure states sharing a position grid, in one pass."""
    vals = husimi_values(model, states, grid)
    return [_wrap(model, v, grid, s.moments) for v, s in zip(vals, states)]


def _wrap(model, values, grid, moments) -> HusimiDensity:
    d = HusimiDensity(grid, values, tol_mass=HUSIMI_TOL_MASS, noise=model.noise,
                      source=moments)
    if not d.mass_ok:
        raise HusimiError(f"Husimi mass {d.mass:.9f}: outcome grid or mode "
                          "truncation insufficient")
    peak = float(d.values.max())
    if peak > model.sup_bound + 1e-9:
        raise HusimiError(f"Husimi peak {peak:.12f} exceeds the eigenvalue bound "
                          f"{model.sup_bound:.12f}")
    return d


def husimi_gaussian_closed_form(noise: NoiseCovariance, delta: float, x0: float,
                                y0: float, grid: Grid2D) -> HusimiDensity:
    """Outcome density of ``|x0, y0>_delta``: normal with variances ``(beta_q + delta, beta_p + 1/(4 delta))``."""
    vx, vy = gaussian_outcome_variances(noise, delta)
    gx = np.exp(-0.5 * (grid.gx.nodes - x0) ** 2 / vx)
    gy = np.exp(-0.5 * (grid.gy.nodes - y0) ** 2 / vy)
    values = np.outer(gx, gy) / (2 * np.pi * np.sqrt(vx * vy))
    src = Moments(x0, y0, delta + x0**2, 0.25 / delta + y0**2)
    return HusimiDensity(grid, values, tol_mass=HUSIMI_TOL_MASS, noise=noise, source=src)


def gaussian_outcome_variances(noise: NoiseCovariance, delta: float) -> tuple[float, float]:
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    return noise.beta_q + delta, noise.beta_p + 0.25 / delta


def gaussian_letter_entropy(noise: NoiseCovariance, delta: float) -> float:
    """Closed-form Wehrl entropy of any squeezed coherent state ``|x, y>_delta``."""
    vx, vy = gaussian_outcome_variances(noise, delta)
    return float(np.log(2 * np.pi * np.e * np.sqrt(vx * vy)))


# -- entropies -------------------------------------------------------------------

def wehrl_entropy(model: MeasurementModel, rho, grid: Grid2D) -> float:
    """Generalized Wehrl entropy ``h_M(rho)`` in nats."""
    return differential_entropy(husimi(model, rho, grid))


def min_wehrl_bound(noise: NoiseCovariance) -> float:
    """Minimum of ``h_M`` over pure states: ``ln 2 pi e (sqrt(beta_q beta_p) + 1/2)``."""
    return float(np.log(2 * np.pi * np.e * (noise.geometric + 0.5)))


def cross_entropy(model: MeasurementModel, psi: WaveFunction, rho,
                  grid: Grid2D) -> float:
    """``<psi|K(rho)|psi> = -int <psi|m|psi> ln Tr[rho m]`` by quadrature.

    Husimi values are accurate to roughly 1e-13 of their peak, so ``ln Tr[rho m]``
    is meaningless where the density is smaller than that.  A
    :class:`TailWarning` is issued when those cells contribute more than 1e-8
    to the integral; for Gaussian ``rho`` use the closed-form density instead.
    """
    p_psi = husimi(model, psi, grid)
    p_rho = husimi(model, rho, grid)
    q = p_rho.values
    tail = q < TAIL_FLOOR * q.max()
    if tail.any():
        risk = float(grid.gx.weights @ np.where(tail, p_psi.values * np.abs(np.log(
            np.maximum(q, 1e-300))), 0.0) @ grid.gy.weights)
        if risk > 1e-8:
            warnings.warn(f"cross_entropy: {risk:.2e} of the integral comes from cells "
                          "where Tr[rho m] is below roundoff", TailWarning, stacklevel=2)
    return cross_entropy_2d(p_psi, p_rho)


# -- K(rho) for Gaussian letters and the Lambda_0 operators ----------------------

def _checked_second_derivative(psi: WaveFunction, tol: float = 1e-4) -> np.ndarray:
    d2 = derivative(psi.amps, psi.grid.step, order=2)
    ref = spectral_derivative(psi.amps, psi.grid.step, order=2)
    scale = np.linalg.norm(ref)
    if scale > 0 and np.linalg.norm(d2 - ref) > tol * scale:
        raise ResolutionError(
            f"second derivative mismatch {np.linalg.norm(d2 - ref) / scale:.2e} "
            "between finite differences and FFT; refine the grid")
    return d2


def apply_K_gaussian(noise: NoiseCovariance, delta: float, x0: float, y0: float,
                     psi: WaveFunction) -> WaveFunction:
    """Apply ``K(rho_0(x0, y0))`` for the letter ``rho_0 = |x0, y0>_delta<x0, y0|``.

    For Gaussian letters the operator is the quadratic form

        c + ((q - x0)^2 + beta_q) / (2 (beta_q + delta))
          + ((p - y0)^2 + beta_p) / (2 (beta_p + 1/(4 delta)))

    with ``c = ln 2 pi sqrt((beta_q + delta)(beta_p + 1/(4 delta)))``.  The result
    is returned unnormalized.
    """
    vx, vy = gaussian_outcome_variances(noise, delta)
    c = np.log(2 * np.pi * np.sqrt(vx * vy))
    q = psi.grid.nodes
    a = psi.amps
    d1 = derivative(a, psi.grid.step)
    d2 = _checked_second_derivative(psi)
    # (p - y0)^2 psi = -psi'' + 2 i y0 psi' + y0^2 psi
    p_part = -d2 + 2j * y0 * d1 + (y0**2 + noise.beta_p) * a
    out = (c + ((q - x0) ** 2 + noise.beta_q) / (2 * vx)) * a + p_part / (2 * vy)
    return WaveFunction(psi.grid, out, check=False)


@dataclass(frozen=True)
class Lambda0:
    """The operator ``a I - b p^2``."""

    a: float
    b: float

    def expectation(self, p2: float) -> float:
        return self.a - self.b * p2

    def apply(self, psi: WaveFunction) -> WaveFunction:
        d2 = _checked_second_derivative(psi)
        return WaveFunction(psi.grid, self.a * psi.amps + self.b * d2, check=False)


def lambda0(case: str, noise: NoiseCovariance, delta: float | None = None) -> Lambda0:
    """Dual operator of the optimality conditions.

    Case ``"C"``: a multiple of the identity, ``ln 2 pi e (sqrt(beta_q beta_p) + 1/2)``.
    Case ``"L"``: ``a - b p^2`` with ``b >= 0`` requiring
    ``delta >= sqrt(beta_q / beta_p) / 2``.
    """
    case = case.upper()
    if case == "C":
        return Lambda0(min_wehrl_bound(noise), 0.0)
    if case != "L":
        raise ValueError(f"unknown case {case!r}; expected 'C' or 'L'")
    if delta is None:
        raise ValueError("case L needs the letter squeeze delta")
    if delta < noise.minimizer_delta * (1 - 1e-12):
        raise ValueError(f"case L needs delta >= {noise.minimizer_delta:.6g}, got {delta}")
    bq, bp = noise.beta_q, noise.beta_p
    vx, vy = gaussian_outcome_variances(noise, delta)
    a = (np.log(2 * np.pi * np.sqrt(vx * vy)) + (bq + 2 * delta) / (2 * vx)
         + bp / (2 * vy))
    b = 0.5 * (4 * delta**2 * bp - bq) / (vx * vy)
    return Lambda0(float(a), float(max(b, 0.0)))
