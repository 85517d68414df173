"""Uniform grids, trapezoid quadrature and classical information functionals.

Everything here works on densities sampled on a rectangular grid.  Axis 0 of a
``Density2D.values`` array is the ``x`` outcome, axis 1 is ``y``.  All
logarithms are natural, so entropies come out in nats.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.ndimage import convolve1d

TINY = 1e-300
DEFAULT_TOL_MASS = 1e-6


class MassWarning(UserWarning):
    """A density's quadrature mass drifted outside the configured tolerance."""


class SupportError(ValueError):
    """Reference density vanishes where the other density still carries mass."""


@dataclass(frozen=True)
class Grid1D:
    center: float
    half_width: float
    points: int = 256

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if int(self.points) != self.points or self.points < 16:
            raise ValueError(f"need at least 16 grid points, got {self.points}")

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.center - self.half_width,
                           self.center + self.half_width, self.points)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.points, self.step)
        w[0] = w[-1] = 0.5 * self.step
        return w

    @classmethod
    def covering(cls, mean: float, sigma: float, points: int = 256,
                 nsigma: float = 8.0) -> "Grid1D":
        """Grid spanning ``mean +- nsigma * sigma``."""
        return cls(float(mean), float(nsigma * sigma), int(points))

    @classmethod
    def spanning(cls, lo: float, hi: float, points: int = 256) -> "Grid1D":
        return cls(0.5 * (lo + hi), 0.5 * (hi - lo), int(points))


@dataclass(frozen=True)
class Grid2D:
    gx: Grid1D
    gy: Grid1D

    @property
    def shape(self) -> tuple[int, int]:
        return (self.gx.points, self.gy.points)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.gx.nodes, self.gy.nodes, indexing="ij")

    @property
    def area(self) -> float:
        return 4.0 * self.gx.half_width * self.gy.half_width


@dataclass
class Density2D:
    """Nonnegative samples of a density on a :class:`Grid2D`.

    ``probability`` marks densities that are meant to integrate to one; their
    mass is compared against ``tol_mass`` by :attr:`mass_ok`.
    """

    grid: Grid2D
    values: np.ndarray
    probability: bool = True
    tol_mass: float = DEFAULT_TOL_MASS

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("density has non-finite samples")
        if v.min() < 0:
            # roundoff from cancellations is tolerated and clipped
            if v.min() < -1e-12 * max(v.max(), 1.0):
                raise ValueError(f"negative density sample {v.min():.3e}")
            v = np.clip(v, 0.0, None)
        v.setflags(write=False)
        self.values = v

    @cached_property
    def mass(self) -> float:
        return integrate_2d(self)

    @property
    def mass_ok(self) -> bool:
        return abs(self.mass - 1.0) <= self.tol_mass

    def moment(self, fx=None, fy=None) -> float:
        """Integral of ``fx(x) * fy(y) * density``; a missing factor means 1."""
        wx = self.grid.gx.weights
        wy = self.grid.gy.weights
        if fx is not None:
            wx = wx * fx(self.grid.gx.nodes)
        if fy is not None:
            wy = wy * fy(self.grid.gy.nodes)
        return float(wx @ self.values @ wy)

    def marginal_x(self) -> np.ndarray:
        return self.values @ self.grid.gy.weights

    def marginal_y(self) -> np.ndarray:
        return self.grid.gx.weights @ self.values


def integrate_2d(d: Density2D) -> float:
    """Composite trapezoid double integral of ``d.values``."""
    return float(d.grid.gx.weights @ d.values @ d.grid.gy.weights)


def _check_mass(d: Density2D, what: str) -> None:
    if d.probability and not d.mass_ok:
        warnings.warn(f"{what}: mass {d.mass:.9f} deviates from 1 by more than "
                      f"{d.tol_mass:g}", MassWarning, stacklevel=3)


def plogp(values: np.ndarray) -> np.ndarray:
    """Elementwise ``p ln p`` with samples below 1e-300 contributing zero."""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    live = values > TINY
    out[live] = values[live] * np.log(values[live])
    return out


def differential_entropy(d: Density2D) -> float:
    """``-int p ln p`` in nats.  Off-normalized densities only raise a warning."""
    _check_mass(d, "differential_entropy")
    return -float(d.grid.gx.weights @ plogp(d.values) @ d.grid.gy.weights)


def cross_entropy_2d(p: Density2D, q: Density2D) -> float:
    """``-int p ln q`` with ``q`` floored at 1e-300 (see :func:`kl_divergence`)."""
    _same_grid(p, q)
    logq = _floored_log(p, q)
    return -float(p.grid.gx.weights @ (p.values * logq) @ p.grid.gy.weights)


def kl_divergence(p: Density2D, q: Density2D) -> float:
    """Relative entropy ``int p ln(p/q)`` in nats.

    ``q`` is clamped below at 1e-300; :class:`SupportError` is raised if the
    clamped cells carry more than 1e-9 of ``p``'s mass.
    """
    _same_grid(p, q)
    if np.array_equal(p.values, q.values):
        return 0.0
    logq = _floored_log(p, q)
    wx, wy = p.grid.gx.weights, p.grid.gy.weights
    integrand = plogp(p.values) - p.values * logq
    return float(wx @ integrand @ wy)


def _floored_log(p: Density2D, q: Density2D) -> np.ndarray:
    clamped = q.values < TINY
    if clamped.any():
        lost = float(p.grid.gx.weights @ np.where(clamped, p.values, 0.0)
                     @ p.grid.gy.weights)
        if lost > 1e-9:
            raise SupportError(f"{int(clamped.sum())} cells with q < 1e-300 carry "
                               f"p-mass {lost:.3e}")
    return np.log(np.maximum(q.values, TINY))


def _same_grid(p: Density2D, q: Density2D) -> None:
    if p.grid != q.grid:
        raise ValueError("densities live on different grids")


def gaussian_kernel(t: float, step: float) -> np.ndarray:
    """Sampled centered Gaussian of variance ``t`` truncated at +-8 sqrt(t), unit sum."""
    if t <= 0:
        raise ValueError(f"smoothing variance must be positive, got {t}")
    half = int(np.floor(8.0 * np.sqrt(t) / step))
    offsets = step * np.arange(-half, half + 1)
    k = np.exp(-0.5 * offsets**2 / t)
    return k / k.sum()


def smooth_y(p: Density2D, t: float) -> Density2D:
    """Markov smoothing along ``y``: convolve with a centered Gaussian of variance ``t``.

    Direct discrete convolution; the area beyond the grid edges is treated as
    empty, so any mass pushed off the grid is lost and reported by a
    :class:`MassWarning`.
    """
    kernel = gaussian_kernel(t, p.grid.gy.step)
    out = convolve1d(p.values, kernel, axis=1, mode="constant", cval=0.0)
    result = Density2D(p.grid, out, probability=p.probability, tol_mass=p.tol_mass)
    leak = integrate_2d(p) - result.mass
    if abs(leak) > p.tol_mass:
        warnings.warn(f"smooth_y: {leak:.3e} of mass left the grid", MassWarning,
                      stacklevel=2)
    return result


def gaussian_density(grid: Grid2D, mean=(0.0, 0.0), var=(1.0, 1.0),
                     probability: bool = True) -> Density2D:
    """Axis-aligned bivariate normal density sampled on ``grid``."""
    vx, vy = var
    gx = np.exp(-0.5 * (grid.gx.nodes - mean[0]) ** 2 / vx) / np.sqrt(2 * np.pi * vx)
    gy = np.exp(-0.5 * (grid.gy.nodes - mean[1]) ** 2 / vy) / np.sqrt(2 * np.pi * vy)
    return Density2D(grid, np.outer(gx, gy), probability=probability)


def gaussian_entropy(var_x: float, var_y: float) -> float:
    """Closed-form entropy of an axis-aligned 2D normal, ``ln(2 pi e sqrt(det))``."""
    return float(np.log(2 * np.pi * np.e * np.sqrt(var_x * var_y)))
