"""Achievability oracles that never touch the closed-form capacity formulas.

* :func:`blahut_arimoto` optimizes the prior of a finite constellation over a
  binned outcome channel under the mean-energy constraint.
* :func:`quadrature_rate` integrates the mutual information of a finite
  Gaussian constellation on an outcome grid.
* :func:`mc_rate` estimates the same quantity by sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .capacity import GaussianEncoding, capacity
from .measurement import NoiseCovariance
from .numerics import Density2D, Grid1D, Grid2D, differential_entropy, plogp


@dataclass
class Constellation:
    """Finite set of squeezed coherent letters ``|x, y>_delta`` with a prior.

    ``lattice`` records ``(n_x, n_y)`` when the letters form a product lattice
    in row-major ``(x, y)`` order with a common ``delta``.
    """

    letters: np.ndarray
    prior: np.ndarray
    lattice: tuple[int, int] | None = None

    def __post_init__(self):
        self.letters = np.atleast_2d(np.asarray(self.letters, dtype=float))
        self.prior = np.asarray(self.prior, dtype=float)
        if self.letters.shape[1] != 3 or len(self.prior) != len(self.letters):
            raise ValueError("letters must be (x, y, delta) rows matching the prior")
        if np.any(self.letters[:, 2] <= 0):
            raise ValueError("letter squeeze must be positive")
        if np.any(self.prior < 0) or abs(self.prior.sum() - 1) > 1e-12:
            raise ValueError("prior must be a probability vector")

    @property
    def x(self) -> np.ndarray:
        return self.letters[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.letters[:, 1]

    @property
    def delta(self) -> np.ndarray:
        return self.letters[:, 2]

    @property
    def energies(self) -> np.ndarray:
        """``Tr[rho H]`` per letter with ``H = (q^2 + p^2)/2``."""
        d = self.delta
        return 0.5 * (d + 0.25 / d + self.x**2 + self.y**2)

    @property
    def mean_energy(self) -> float:
        return float(self.prior @ self.energies)

    def with_prior(self, prior) -> "Constellation":
        return Constellation(self.letters, prior, self.lattice)


def gaussian_quantiles(k: int) -> np.ndarray:
    """``k`` equiprobable standard-normal quantiles rescaled to unit variance."""
    if k == 1:
        return np.zeros(1)
    z = ndtri((np.arange(k) + 0.5) / k)
    return z / np.sqrt(np.mean(z**2))


def nested_quantiles(k: int) -> np.ndarray:
    """Standard-normal quantiles at levels ``i/(k+1)``, ``i = 1..k``.

    For ``k = 2^m - 1`` each set contains the previous one, so refining
    ``7 -> 15 -> 31`` only ever adds letters.
    """
    return ndtri(np.arange(1, k + 1) / (k + 1))


def gaussian_constellation(enc: GaussianEncoding, n_x: int, n_y: int | None = None,
                           nested: bool = False) -> Constellation:
    """Discretize a Gaussian encoding on a lattice of Gaussian quantiles.

    Axes with zero displacement variance collapse to a single point.  By
    default the quantiles are equiprobable and rescaled so the uniform prior
    reproduces the encoding's covariance exactly; ``nested=True`` uses
    :func:`nested_quantiles` instead (unscaled, for refinement studies).
    """
    n_y = n_x if n_y is None else n_y
    n_x = n_x if enc.gamma_q > 0 else 1
    n_y = n_y if enc.gamma_p > 0 else 1
    quant = nested_quantiles if nested else gaussian_quantiles
    xs = np.sqrt(enc.gamma_q) * (quant(n_x) if n_x > 1 else np.zeros(1))
    ys = np.sqrt(enc.gamma_p) * (quant(n_y) if n_y > 1 else np.zeros(1))
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    letters = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, enc.delta)])
    return Constellation(letters, np.full(gx.size, 1.0 / gx.size), (n_x, n_y))


# -- channel --------------------------------------------------------------------

def _cell_masses(means, variances, nodes):
    """Normal masses of the cells between consecutive ``nodes``; outer cells run to +-inf."""
    edges = np.asarray(nodes, dtype=float).copy()
    edges[0], edges[-1] = -np.inf, np.inf
    z = (edges[None, :] - means[:, None]) / np.sqrt(variances)[:, None]
    return np.diff(ndtr(z), axis=1)


@dataclass
class ChannelMatrix:
    """Row-stochastic letter-to-cell matrix.

    Product-lattice constellations keep the per-axis factors
    ``probs[(a, b), (i, j)] = wx[a, i] * wy[b, j]`` and build the dense matrix
    only on demand.
    """

    grid: Grid2D
    factors: tuple[np.ndarray, np.ndarray] | None = None
    dense: np.ndarray | None = field(default=None, repr=False)

    @cached_property
    def probs(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        wx, wy = self.factors
        return np.einsum("ai,bj->abij", wx, wy).reshape(wx.shape[0] * wy.shape[0], -1)

    @property
    def n_letters(self) -> int:
        if self.factors is not None:
            return self.factors[0].shape[0] * self.factors[1].shape[0]
        return self.dense.shape[0]

    def row_sums(self) -> np.ndarray:
        if self.factors is not None:
            wx, wy = self.factors
            return np.outer(wx.sum(axis=1), wy.sum(axis=1)).ravel()
        return self.dense.sum(axis=1)


def channel_grid(con: Constellation, noise: NoiseCovariance, points: int = 96,
                 nsigma: float = 8.0) -> Grid2D:
    """Outcome partition nodes covering every letter's outcome law to ``nsigma``."""
    sx = np.sqrt(noise.beta_q + con.delta)
    sy = np.sqrt(noise.beta_p + 0.25 / con.delta)
    gx = Grid1D.spanning(np.min(con.x - nsigma * sx), np.max(con.x + nsigma * sx), points)
    gy = Grid1D.spanning(np.min(con.y - nsigma * sy), np.max(con.y + nsigma * sy), points)
    return Grid2D(gx, gy)


def build_channel(con: Constellation, noise: NoiseCovariance,
                  grid: Grid2D | None = None, factored: bool = True) -> ChannelMatrix:
    """Exact Gaussian cell masses of each letter's outcome law (error-function differences).

    The grid nodes are the cell edges; the two outermost cells on each axis
    extend to infinity so every row sums to one.
    """
    grid = channel_grid(con, noise) if grid is None else grid
    vx = noise.beta_q + con.delta
    vy = noise.beta_p + 0.25 / con.delta
    for lo, hi, c, s, ax in ((grid.gx.nodes[0], grid.gx.nodes[-1], con.x, np.sqrt(vx), "x"),
                             (grid.gy.nodes[0], grid.gy.nodes[-1], con.y, np.sqrt(vy), "y")):
        if np.any(c - 8 * s < lo - 1e-9) or np.any(c + 8 * s > hi + 1e-9):
            raise ValueError(f"outcome grid does not cover all letters to 8 sigma along {ax}")
    if factored and con.lattice is not None and np.ptp(con.delta) == 0:
        n_x, n_y = con.lattice
        xs = con.x.reshape(n_x, n_y)[:, 0]
        ys = con.y.reshape(n_x, n_y)[0, :]
        wx = _cell_masses(xs, np.full(n_x, vx[0]), grid.gx.nodes)
        wy = _cell_masses(ys, np.full(n_y, vy[0]), grid.gy.nodes)
        return ChannelMatrix(grid, factors=(wx, wy))
    wx = _cell_masses(con.x, vx, grid.gx.nodes)
    wy = _cell_masses(con.y, vy, grid.gy.nodes)
    dense = (wx[:, :, None] * wy[:, None, :]).reshape(len(con.x), -1)
    return ChannelMatrix(grid, dense=dense)


# -- Blahut-Arimoto -----------------------------------------------------------------

@dataclass
class BAResult:
    prior: np.ndarray
    mutual_information: float
    mean_energy: float
    lagrange_multiplier: float
    iterations: int
    converged: bool
    monotone: bool = True
    gap: float = np.nan


class _Component:
    """One channel factor with its letter costs: ``D_i = KL(W_i || pW)``."""

    def __init__(self, probs: np.ndarray, costs: np.ndarray):
        self.W = probs
        self.costs = costs
        self.neg = plogp(probs).sum(axis=1)

    def divergences(self, p):
        q = p @ self.W
        return self.neg - self.W @ np.log(np.maximum(q, 1e-300))


def _split(channel: ChannelMatrix, energies, p0):
    """Per-axis components when channel, costs and starting prior all factor.

    BA from a product prior on a product channel with additive costs stays a
    product, so the axes can be iterated separately with the same multiplier.
    Returns ``(components, starts, offset)``; a single dense component otherwise.
    """
    if channel.factors is not None:
        wx, wy = channel.factors
        nx, ny = wx.shape[0], wy.shape[0]
        e = energies.reshape(nx, ny)
        ex, ey = e[:, 0] - e[0, 0], e[0, :]
        P = p0.reshape(nx, ny)
        px, py = P.sum(axis=1), P.sum(axis=0)
        if (np.allclose(e, ex[:, None] + ey[None, :], rtol=0, atol=1e-12)
                and np.allclose(P, np.outer(px, py), rtol=0, atol=1e-15)):
            return [_Component(wx, ex), _Component(wy, ey)], [px, py]
    return [_Component(channel.probs, energies)], [p0]


def _ba_fixed_multiplier(comp: _Component, lam, p, tol, gap_tol, max_iter,
                         accelerate=True):
    """Tilted BA for ``max I(p) - lam * E(p)`` on one component.

    The update is ``p_i <- p_i exp(mu c_i)`` with ``c_i = D_i - lam e_i``;
    ``mu = 1`` is the textbook step.  With ``accelerate`` the exponent grows
    geometrically while the objective keeps increasing and falls back to 1
    otherwise, so every accepted step is monotone.  Stops when the duality gap
    ``max_i c_i - J`` drops below ``gap_tol`` or the increment below ``tol``.

    Returns ``(p, I, E, iterations, converged, monotone, gap)``.
    """
    e = comp.costs
    d = comp.divergences(p)
    J = p @ d - lam * (p @ e)
    mu, monotone, converged = 1.0, True, False
    it = 0
    while True:
        c = d - lam * e
        gap = float(c.max() - J)
        if gap < gap_tol:
            converged = True
            break
        if it >= max_iter:
            break
        while True:
            pn = p * np.exp(mu * (c - c.max()))
            pn /= pn.sum()
            dn = comp.divergences(pn)
            Jn = pn @ dn - lam * (pn @ e)
            if Jn >= J or mu == 1.0:
                break
            mu = 1.0
        if Jn < J - 1e-13 * max(1.0, abs(J)):
            monotone = False
        inc = Jn - J
        p, d, J = pn, dn, Jn
        it += 1
        if inc < tol and mu == 1.0:
            converged = True
            gap = float((d - lam * e).max() - J)
            break
        if accelerate:
            mu = min(2.0 * mu, 1e4)
    return p, float(p @ d), float(p @ e), it, converged, monotone, gap


def blahut_arimoto(channel: ChannelMatrix, energies, target_E: float, tol: float = 1e-14,
                   max_iter: int = 100000, lam_max: float = 50.0,
                   bisection_steps: int = 40, prior=None, gap_tol: float = 1e-6,
                   accelerate: bool = True) -> BAResult:
    """Energy-constrained capacity of a finite channel.

    The multiplier ``lam`` of the energy constraint is bisected on
    ``[0, lam_max]``.  Each inner solve starts from the solution at the nearest
    multiplier already visited, mixed with ``min(1e-3, |lam - lam_near|)`` of
    the initial prior so letters dropped at one multiplier can return at the next.  The returned point satisfies the energy
    constraint.  ``converged`` describes the inner solve at the returned
    multiplier; ``monotone`` covers every iteration of every solve.
    Non-convergence is reported in the result, not raised.
    """
    energies = np.asarray(energies, dtype=float)
    n = channel.n_letters
    if len(energies) != n:
        raise ValueError("one energy per letter required")
    if target_E < energies.min() - 1e-12:
        raise ValueError(f"target energy {target_E} below the cheapest letter")
    p0 = np.full(n, 1.0 / n) if prior is None else np.asarray(prior, dtype=float)
    if p0.shape != (n,) or np.any(p0 <= 0) or abs(p0.sum() - 1) > 1e-12:
        raise ValueError("initial prior must be a positive probability vector")
    comps, starts = _split(channel, energies, p0)
    offset = float(energies[0] - sum(c.costs[0] for c in comps))
    stats = {"it": 0, "mono": True}
    solved = {}

    def run(lam):
        if solved:
            near = min(solved, key=lambda l: abs(l - lam))
            eta = min(1e-3, abs(lam - near))
            init = [(1 - eta) * q + eta * s for q, s in zip(solved[near][0], starts)]
        else:
            init = starts
        out = [_ba_fixed_multiplier(c, lam, p, tol, gap_tol, max_iter, accelerate)
               for c, p in zip(comps, init)]
        stats["it"] += max(o[3] for o in out)
        stats["mono"] &= all(o[5] for o in out)
        ps = [o[0] for o in out]
        info = sum(o[1] for o in out)
        e = offset + sum(o[2] for o in out)
        gap = sum(o[6] for o in out)
        solved[lam] = (ps, info, e, gap, all(o[4] for o in out))
        return solved[lam]

    def result(lam):
        ps, info, e, gap, conv = solved[lam]
        p = ps[0] if len(ps) == 1 else np.outer(ps[0], ps[1]).ravel()
        return BAResult(p, max(info, 0.0), e, lam, stats["it"], conv, stats["mono"], gap)

    if run(0.0)[2] <= target_E:
        return result(0.0)
    lo, hi = 0.0, lam_max
    feasible = None
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        if run(mid)[2] <= target_E:
            hi, feasible = mid, mid
        else:
            lo = mid
    if feasible is None:
        run(lam_max)
        feasible = lam_max
    return result(feasible)


# -- rates of finite Gaussian constellations --------------------------------------

def _letter_profiles(con, noise, grid):
    vx = noise.beta_q + con.delta
    vy = noise.beta_p + 0.25 / con.delta
    gx = np.exp(-0.5 * (grid.gx.nodes[None, :] - con.x[:, None]) ** 2 / vx[:, None]) \
        / np.sqrt(2 * np.pi * vx)[:, None]
    gy = np.exp(-0.5 * (grid.gy.nodes[None, :] - con.y[:, None]) ** 2 / vy[:, None]) \
        / np.sqrt(2 * np.pi * vy)[:, None]
    return gx, gy


def mixture_grid(con: Constellation, noise: NoiseCovariance, points: int = 256,
                 nsigma: float = 8.0) -> Grid2D:
    """Grid covering the prior-averaged outcome density to ``nsigma``."""
    w = con.prior
    mx, my = w @ con.x, w @ con.y
    sx = np.sqrt(w @ (con.x - mx) ** 2 + np.max(noise.beta_q + con.delta))
    sy = np.sqrt(w @ (con.y - my) ** 2 + np.max(noise.beta_p + 0.25 / con.delta))
    return Grid2D(Grid1D.covering(mx, sx, points, nsigma), Grid1D.covering(my, sy, points, nsigma))


def quadrature_rate(con: Constellation, noise: NoiseCovariance,
                    grid: Grid2D | None = None) -> float:
    """``h(average outcome density) - sum_l prior_l h(letter l)`` in nats.

    Letter entropies are Gaussian and taken in closed form; the mixture
    entropy is integrated on ``grid``.
    """
    grid = mixture_grid(con, noise) if grid is None else grid
    live = con.prior > 0
    con = Constellation(con.letters[live], con.prior[live])
    gx, gy = _letter_profiles(con, noise, grid)
    mix = (gx * con.prior[:, None]).T @ gy
    h_out = differential_entropy(Density2D(grid, mix))
    vx = noise.beta_q + con.delta
    vy = noise.beta_p + 0.25 / con.delta
    h_letters = np.log(2 * np.pi * np.e * np.sqrt(vx * vy))
    return float(h_out - con.prior @ h_letters)


def mc_rate(con: Constellation, noise: NoiseCovariance, n_samples: int, seed,
            chunk: int = 2048) -> tuple[float, float]:
    """Monte Carlo estimate of the information rate and its standard error.

    Draws a letter from the prior and an outcome from that letter's exact
    Gaussian law, then averages ``ln p_letter(outcome) - ln p_mix(outcome)``.
    """
    if n_samples < 1000:
        raise ValueError("use at least 1000 samples")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(con.prior), size=n_samples, p=con.prior)
    vx = noise.beta_q + con.delta
    vy = noise.beta_p + 0.25 / con.delta
    ox = con.x[idx] + np.sqrt(vx[idx]) * rng.standard_normal(n_samples)
    oy = con.y[idx] + np.sqrt(vy[idx]) * rng.standard_normal(n_samples)

    def logpdf(o, mean, var):
        return -0.5 * (o - mean) ** 2 / var - 0.5 * np.log(2 * np.pi * var)

    own = logpdf(ox, con.x[idx], vx[idx]) + logpdf(oy, con.y[idx], vy[idx])
    with np.errstate(divide="ignore"):
        logw = np.log(con.prior)
    mix = np.empty(n_samples)
    for s in range(0, n_samples, chunk):
        sl = slice(s, s + chunk)
        terms = (logw[None, :] + logpdf(ox[sl, None], con.x[None, :], vx[None, :])
                 + logpdf(oy[sl, None], con.y[None, :], vy[None, :]))
        mix[sl] = logsumexp(terms, axis=1)
    z = own - mix
    return float(z.mean()), float(z.std(ddof=1) / np.sqrt(n_samples))


def ba_rate(noise: NoiseCovariance, E: float, lattice: int = 31,
            outcome_points: int = 96, grid: Grid2D | None = None, **kw) -> BAResult:
    """BA rate on the nested quantile lattice of the optimal Gaussian encoding at ``E``."""
    enc = capacity(noise, E).encoding
    con = gaussian_constellation(enc, lattice, nested=True)
    grid = channel_grid(con, noise, outcome_points) if grid is None else grid
    return blahut_arimoto(build_channel(con, noise, grid), con.energies, E, **kw)


def ba_refinement(noise: NoiseCovariance, E: float, lattices=(7, 15, 31),
                  outcome_points: int = 96, **kw) -> list[BAResult]:
    """BA rates on successively refined nested lattices sharing one outcome partition.

    The partition is sized for the finest lattice, so every coarser channel
    is a restriction of the finer one and the optimal rates can only grow.
    """
    enc = capacity(noise, E).encoding
    finest = gaussian_constellation(enc, max(lattices), nested=True)
    grid = channel_grid(finest, noise, outcome_points)
    return [ba_rate(noise, E, k, grid=grid, **kw) for k in lattices]


def rate_curve(noise: NoiseCovariance, energies, lattice: int = 31,
               outcome_points: int = 96, **kw) -> list[dict]:
    """Rows ``E, case, C_closed_form, C_BA, gap, lattice`` for a list of energies."""
    rows = []
    for E in energies:
        cap = capacity(noise, float(E))
        ba = ba_rate(noise, float(E), lattice, outcome_points, **kw)
        rows.append({"E": float(E), "case": cap.case, "C_closed_form": cap.value,
                     "C_BA": ba.mutual_information,
                     "gap": cap.value - ba.mutual_information, "lattice": lattice})
    return rows
