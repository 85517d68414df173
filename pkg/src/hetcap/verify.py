"""Numerical certificates for the entropy inequalities and optimality conditions.

Every check returns a :class:`CheckReport`.  Inequalities report
``slack = rhs - lhs`` and pass when ``slack >= -tolerance``; identities pass
when ``|slack| <= tolerance``; residual checks report a nonnegative residual
as the slack.  A passing report means "no counterexample at this tolerance";
nothing here is a proof.

Grids come from a :class:`Profile`.  ``fast`` uses 128 outcome points per
axis and 2048 position samples, ``strict`` uses 256 and 4096 and tightens
identity tolerances to 1e-7.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from .measurement import (HusimiError, NoiseCovariance, ResolutionError, apply_K_gaussian,
                          build_model, gaussian_outcome_variances,
                          husimi_gaussian_closed_form, husimi_values, lambda0,
                          min_wehrl_bound)
from .numerics import (Density2D, Grid1D, Grid2D, cross_entropy_2d,
                       differential_entropy, kl_divergence, smooth_y)
from .states import (Moments, PureEnsemble, WaveFunction, as_ensemble, displace,
                     fock_extent, gradient_energy, random_state, spectral_p2,
                     squeezed_coherent, squeezed_fock, superpose)

BATTERY_VERSION = "1"
GIBBS_TOL = 1e-8
DPI_TOL = 1e-6
SMOOTHING_TOL = 1e-5
PROFILE_ENV = "HETCAP_PROFILE"


@dataclass(frozen=True)
class Profile:
    name: str
    outcome_points: int
    state_points: int
    identity_tol: float
    inequality_tol: float


PROFILES = {
    "fast": Profile("fast", 128, 2048, 1e-5, 1e-5),
    "strict": Profile("strict", 256, 4096, 1e-7, 1e-5),
}


def get_profile(profile=None) -> Profile:
    """Resolve a profile object or name; ``None`` reads ``$HETCAP_PROFILE`` (default ``fast``)."""
    if isinstance(profile, Profile):
        return profile
    name = profile or os.environ.get(PROFILE_ENV, "fast")
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one numerical check.

    ``kind`` is ``"inequality"``, ``"identity"`` or ``"residual"``.  Secondary
    conditions a check insists on are folded into ``aux_ok`` and listed in
    ``extras``; ``passed`` requires both.
    """

    name: str
    params: dict
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tolerance: float
    kind: str
    extras: dict = field(default_factory=dict)
    aux_ok: bool = True

    @classmethod
    def inequality(cls, name, params, lhs, rhs, tol, extras=None, aux_ok=True):
        slack = float(rhs) - float(lhs)
        return cls(name, dict(params), float(lhs), float(rhs), slack,
                   bool(slack >= -tol and aux_ok), float(tol), "inequality",
                   dict(extras or {}), bool(aux_ok))

    @classmethod
    def identity(cls, name, params, lhs, rhs, tol, extras=None, aux_ok=True):
        slack = float(rhs) - float(lhs)
        return cls(name, dict(params), float(lhs), float(rhs), slack,
                   bool(abs(slack) <= tol and aux_ok), float(tol), "identity",
                   dict(extras or {}), bool(aux_ok))

    @classmethod
    def residual(cls, name, params, lhs, rhs, res, tol, extras=None, aux_ok=True):
        return cls(name, dict(params), float(lhs), float(rhs), float(res),
                   bool(abs(res) <= tol and aux_ok), float(tol), "residual",
                   dict(extras or {}), bool(aux_ok))

    def to_dict(self) -> dict:
        d = {"name": self.name, "params": self.params, "lhs": self.lhs, "rhs": self.rhs,
             "slack": self.slack, "pass": self.passed, "tolerance": self.tolerance,
             "kind": self.kind}
        if self.extras:
            d["extras"] = self.extras
        return d


# -- shared plumbing -----------------------------------------------------------------

def _noise_params(noise: NoiseCovariance) -> dict:
    return {"beta_q": noise.beta_q, "beta_p": noise.beta_p}


def position_grid(delta_max: float, n_max: int = 8, shift: float = 0.0,
                  points: int = 1024) -> Grid1D:
    """Symmetric position grid for squeezed Fock content up to ``n_max`` displaced by ``|shift|``."""
    return Grid1D(0.0, fock_extent(n_max, delta_max) + abs(shift), points)


def _cover(noise: NoiseCovariance, moments: Sequence[Moments], points: int,
           nsigma: float = 8.0) -> Grid2D:
    """Outcome grid covering every listed state's Husimi density to ``nsigma``."""
    lo_x = min(m.mean_q - nsigma * np.sqrt(max(m.var_q, 0) + noise.beta_q) for m in moments)
    hi_x = max(m.mean_q + nsigma * np.sqrt(max(m.var_q, 0) + noise.beta_q) for m in moments)
    lo_y = min(m.mean_p - nsigma * np.sqrt(max(m.var_p, 0) + noise.beta_p) for m in moments)
    hi_y = max(m.mean_p + nsigma * np.sqrt(max(m.var_p, 0) + noise.beta_p) for m in moments)
    return Grid2D(Grid1D.spanning(lo_x, hi_x, points), Grid1D.spanning(lo_y, hi_y, points))


@dataclass
class _Batch:
    """Husimi densities of several pure states on one outcome grid."""

    noise: NoiseCovariance
    grid: Grid2D
    states: list
    values: np.ndarray

    def density(self, weights) -> Density2D:
        w = np.asarray(weights, dtype=float)
        return Density2D(self.grid, np.tensordot(w, self.values, axes=1), tol_mass=1e-5)

    def pure(self, i: int) -> Density2D:
        return Density2D(self.grid, self.values[i], tol_mass=1e-5)


def _batch(noise: NoiseCovariance, states: Sequence[WaveFunction], points: int,
           grid: Grid2D | None = None) -> _Batch:
    states = list(states)
    if grid is None:
        grid = _cover(noise, [s.moments for s in states], points)
    model = build_model(noise)
    vals = husimi_values(model, states, grid)
    for v, s in zip(vals, states):
        mass = float(grid.gx.weights @ v @ grid.gy.weights)
        if abs(mass - 1) > 1e-5:
            raise HusimiError(f"Husimi mass {mass:.9f}; outcome grid too small")
    return _Batch(noise, grid, states, vals)


def _ensemble_moments(weights, moments: Sequence[Moments]) -> Moments:
    w = np.asarray(weights, dtype=float)
    return Moments(*(float(np.dot(w, [getattr(m, k) for m in moments]))
                     for k in ("mean_q", "mean_p", "q2", "p2")))


def _ensemble_batch(noise, ens: PureEnsemble, profile: Profile):
    b = _batch(noise, ens.states, profile.outcome_points)
    return b.density(ens.weights), ens.moments()


def _kl_to_squeezed_vacuum(p: Density2D, noise: NoiseCovariance, delta: float) -> float:
    ref = husimi_gaussian_closed_form(noise, delta, 0.0, 0.0, p.grid)
    return kl_divergence(p, ref)


def _check_delta(noise: NoiseCovariance, delta: float) -> None:
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if delta < noise.minimizer_delta * (1 - 1e-12):
        raise ValueError(f"delta={delta} is below sqrt(beta_q/beta_p)/2 = "
                         f"{noise.minimizer_delta:.6g}; the inequality does not apply")


# -- report builders shared by single checks and sweeps ------------------------

def _lemma1_report(p, m: Moments, noise, delta, tol, params) -> CheckReport:
    vx, vy = gaussian_outcome_variances(noise, delta)
    kl = _kl_to_squeezed_vacuum(p, noise, delta)
    bracket = (-differential_entropy(p) + np.log(2 * np.pi * np.sqrt(vx * vy))
               + (noise.beta_q + m.q2) / (2 * vx) + (noise.beta_p + m.p2) / (2 * vy))
    return CheckReport.identity("lemma1", params, kl, bracket, tol)


def _prop2_report(p, m: Moments, noise, delta, tol, params) -> CheckReport:
    kl = _kl_to_squeezed_vacuum(p, noise, delta)
    rhs = (m.q2 + 4 * delta**2 * m.p2 - 2 * delta) / (2 * (noise.beta_q + delta))
    wehrl_slack = differential_entropy(p) - min_wehrl_bound(noise)
    return CheckReport.inequality("prop2", params, kl, rhs, tol,
                                  extras={"wehrl_slack": float(wehrl_slack)})


def _log_sobolev_report(p, psi: WaveFunction, noise, delta, tol, params) -> CheckReport:
    lam = lambda0("L", noise, delta)
    grad = gradient_energy(psi)
    mom = spectral_p2(psi)
    if abs(grad - mom) > 1e-5 * max(abs(mom), 1e-300):
        raise ResolutionError(f"gradient integral {grad!r} and spectral <p^2> {mom!r} "
                              "disagree beyond 1e-5 relative")
    lhs = lam.a - differential_entropy(p)
    return CheckReport.inequality("log_sobolev", params, lhs, lam.b * grad, tol,
                                  extras={"rhs_spectral": float(lam.b * mom)})


def _condition_i_report(p_psi, p_rho, psi: WaveFunction, lam, tol, params) -> CheckReport:
    cross = cross_entropy_2d(p_psi, p_rho)
    gibbs = cross - differential_entropy(p_psi)
    lhs = lam.expectation(gradient_energy(psi))
    return CheckReport.inequality("condition_i", params, lhs, cross, tol,
                                  extras={"gibbs_slack": float(gibbs)},
                                  aux_ok=gibbs >= -GIBBS_TOL)


# -- single checks ----------------------------------------------------------------------

def check_lemma1(rho, noise: NoiseCovariance, delta: float, profile=None) -> CheckReport:
    """KL divergence from the squeezed-vacuum outcome law versus its moment expression."""
    prof = get_profile(profile)
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    ens = as_ensemble(rho)
    p, m = _ensemble_batch(noise, ens, prof)
    params = {**_noise_params(noise), "delta": delta, "profile": prof.name}
    return _lemma1_report(p, m, noise, delta, prof.identity_tol, params)


def check_prop2(rho, noise: NoiseCovariance, delta: float, profile=None) -> CheckReport:
    """``KL(p_rho || p_vac) <= (<q^2> + 4 delta^2 <p^2> - 2 delta) / (2 (beta_q + delta))``.

    Only defined for ``delta >= sqrt(beta_q / beta_p) / 2``; smaller values
    raise ``ValueError``.  ``extras["wehrl_slack"]`` is the entropy excess over
    the minimum, which equals the slack at the smallest admissible ``delta``.
    """
    prof = get_profile(profile)
    _check_delta(noise, delta)
    p, m = _ensemble_batch(noise, as_ensemble(rho), prof)
    params = {**_noise_params(noise), "delta": delta, "profile": prof.name}
    return _prop2_report(p, m, noise, delta, prof.inequality_tol, params)


def check_log_sobolev(psi: WaveFunction, noise: NoiseCovariance, delta: float,
                      profile=None) -> CheckReport:
    """Pure-state form with the gradient integral ``int |psi'|^2`` on the right.

    The right side is also evaluated with the spectral momentum moment and the
    two must agree to 1e-5 relative, otherwise ``ResolutionError``.
    """
    prof = get_profile(profile)
    _check_delta(noise, delta)
    b = _batch(noise, [psi], prof.outcome_points)
    params = {**_noise_params(noise), "delta": delta, "profile": prof.name}
    return _log_sobolev_report(b.pure(0), psi, noise, delta, prof.inequality_tol, params)


def _case_delta(case: str, noise: NoiseCovariance, delta: float | None) -> float:
    case = case.upper()
    if case == "C":
        dc = noise.minimizer_delta
        if delta is not None and abs(delta - dc) > 1e-12 * dc:
            raise ValueError(f"case C letters have delta = {dc:.6g}, got {delta}")
        return dc
    if case == "L":
        if delta is None:
            raise ValueError("case L needs the letter squeeze delta")
        _check_delta(noise, delta)
        return float(delta)
    raise ValueError(f"unknown case {case!r}; expected 'C' or 'L'")


def default_test_vectors(delta: float, x: float, y: float, grid: Grid1D,
                         n_max: int = 5) -> list[WaveFunction]:
    """Squeezed Fock modes ``0..n_max`` at ``delta`` and ``2 delta``, displaced to ``(x, y)``."""
    out = []
    for d in (delta, 2 * delta):
        center = Grid1D(0.0, grid.half_width, grid.points)
        for n in range(n_max + 1):
            out.append(displace(squeezed_fock(n, d, center), x, y))
    return out


def check_condition_ii(case: str, noise: NoiseCovariance, letter: tuple,
                       delta: float | None = None, test_vectors=None,
                       profile=None) -> CheckReport:
    """``K(rho_0) rho_0 = Lambda_0 rho_0`` tested against vectors ``phi``.

    ``letter`` is ``(x, y)``; case ``L`` letters must have ``y = 0``.  The
    residual is ``max_phi |<phi|K|letter> - <phi|Lambda_0|letter>|``.
    ``lhs``/``rhs`` are the diagonal elements ``<letter|K|letter>`` and
    ``<letter|Lambda_0|letter>``.
    """
    prof = get_profile(profile)
    delta = _case_delta(case, noise, delta)
    x, y = map(float, letter)
    if case.upper() == "L" and y != 0.0:
        raise ValueError("case L letters are position-only: y must be 0")
    grid = position_grid(2 * delta, 5, max(abs(x), abs(y)), prof.state_points)
    psi = squeezed_coherent(delta, x, y, grid)
    if test_vectors is None:
        test_vectors = default_test_vectors(delta, x, y, grid)
    k_psi = apply_K_gaussian(noise, delta, x, y, psi)
    l_psi = lambda0(case, noise, delta).apply(psi)
    h = grid.step
    res = max(abs(np.vdot(phi.amps, k_psi.amps - l_psi.amps)) * h for phi in test_vectors)
    diag_k = float(np.real(np.vdot(psi.amps, k_psi.amps)) * h)
    diag_l = float(np.real(np.vdot(psi.amps, l_psi.amps)) * h)
    params = {"case": case.upper(), **_noise_params(noise), "delta": delta, "x": x, "y": y,
              "n_test_vectors": len(test_vectors), "profile": prof.name}
    return CheckReport.residual("condition_ii", params, diag_k, diag_l, res,
                                prof.identity_tol)


def check_condition_i(psi: WaveFunction, rho, case: str, noise: NoiseCovariance,
                      delta: float | None = None, profile=None) -> CheckReport:
    """``<psi|Lambda_0|psi> <= <psi|K(rho)|psi>`` by quadrature.

    The intermediate step ``<psi|K(rho)|psi> >= h_M(psi)`` (nonnegativity of
    relative entropy) is reported as ``extras["gibbs_slack"]`` and must hold to
    1e-8.
    """
    prof = get_profile(profile)
    delta = _case_delta(case, noise, delta)
    ens = as_ensemble(rho)
    b = _batch(noise, [psi] + ens.states, prof.outcome_points)
    p_psi = b.pure(0)
    p_rho = b.density(np.concatenate([[0.0], ens.weights]))
    params = {"case": case.upper(), **_noise_params(noise), "delta": delta,
              "profile": prof.name}
    return _condition_i_report(p_psi, p_rho, psi, lambda0(case, noise, delta),
                               prof.inequality_tol, params)


def min_wehrl_scan(noise: NoiseCovariance, n_trials: int, seed: int = 0,
                   profile=None, dim: int = 8, curvature_eps=(0.05, 0.1)) -> CheckReport:
    """Smallest Wehrl entropy over a fixed family versus ``ln 2 pi e (sqrt(beta_q beta_p) + 1/2)``.

    Family: ``n_trials`` seeded random superpositions of ``dim`` squeezed Fock
    modes, squeezed Fock states ``0..10`` at ``delta_C`` and ``2 delta_C``, and
    squeezed coherent states at ``delta_C * {1/2, 1, 2}`` on the 3x3
    displacement lattice ``{-1, 0, 1}^2``, where ``delta_C = sqrt(beta_q/beta_p)/2``.
    Passing also requires that the minimum is a ``delta_C`` squeezed coherent
    state within 1e-3 of the bound, and that perturbing the minimizer along the
    second squeezed Fock mode raises the entropy quadratically (the first mode
    is a displacement direction, where the entropy is flat to fourth order).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    prof = get_profile(profile)
    dc = noise.minimizer_delta
    grid = position_grid(2 * dc, 10, np.sqrt(2), prof.state_points)
    labels, states = [], []
    seeds = np.random.default_rng(seed).integers(0, 2**31, size=n_trials)
    for s in seeds:
        labels.append(("random", dc))
        states.append(random_state(int(s), dim, dc, grid))
    for d in (dc, 2 * dc):
        for n in range(11):
            labels.append(("coherent" if n == 0 and d == dc else "fock", d))
            states.append(squeezed_fock(n, d, grid))
    for f in (0.5, 1.0, 2.0):
        for x in (-1.0, 0.0, 1.0):
            for y in (-1.0, 0.0, 1.0):
                labels.append(("coherent" if f == 1.0 else "squeezed", f * dc))
                states.append(squeezed_coherent(f * dc, x, y, grid))
    pert = []
    for eps in (0.0,) + tuple(curvature_eps):
        pert.append(superpose([1.0, 0.0, eps], dc, grid))
    b = _batch(noise, states + pert, prof.outcome_points)
    h = np.array([differential_entropy(b.pure(i)) for i in range(len(states) + len(pert))])
    h_pert = h[len(states):]
    h = h[:len(states)]
    bound = min_wehrl_bound(noise)
    i_min = int(np.argmin(h))
    coherent = [i for i, (kind, _) in enumerate(labels) if kind == "coherent"]
    best_coherent = float(h[coherent].min())
    rise = h_pert[1:] - h_pert[0]
    ratio = float(rise[1] / rise[0]) if rise[0] > 0 else float("nan")
    expected = (curvature_eps[1] / curvature_eps[0]) ** 2
    quadratic = bool(np.all(rise > 0) and abs(ratio / expected - 1) < 0.1)
    argmin_ok = labels[i_min][0] == "coherent" or h[i_min] >= best_coherent - 1e-9
    attained = abs(best_coherent - bound) <= 1e-3
    extras = {"argmin_kind": labels[i_min][0], "argmin_delta": labels[i_min][1],
              "best_coherent_gap": best_coherent - bound, "family_size": len(states),
              "curvature_ratio": ratio, "curvature_expected": expected,
              "min_random": float(h[:n_trials].min())}
    params = {**_noise_params(noise), "n_trials": n_trials, "seed": int(seed),
              "profile": prof.name}
    return CheckReport.inequality("prop1_scan", params, bound, float(h[i_min]), 1e-4,
                                  extras=extras, aux_ok=argmin_ok and attained and quadratic)


def check_data_processing(rho, noise: NoiseCovariance, delta: float,
                          profile=None) -> tuple[CheckReport, CheckReport]:
    """The smoothing step behind the relative-entropy moment bound.

    With ``bt = beta_q / (4 delta^2)`` the outcome density at ``(beta_q, beta_p)``
    is ``T_{beta_p - bt}`` applied to the one at ``(beta_q, bt)``.  Returns the
    sup-norm residual of that identity (tolerance 1e-5) and the KL
    monotonicity ``KL_{beta_p} <= KL_{bt} + 1e-6`` against squeezed vacuum.
    Requires ``sqrt(beta_q/beta_p)/2 < delta <= beta_q`` so that ``bt`` is a
    valid noise power below ``beta_p``.
    """
    prof = get_profile(profile)
    _check_delta(noise, delta)
    bt = noise.beta_q / (4 * delta**2)
    t = noise.beta_p - bt
    if not t > 0:
        raise ValueError("delta must exceed sqrt(beta_q/beta_p)/2 for a positive smoothing time")
    low = NoiseCovariance(noise.beta_q, bt)  # raises if delta > beta_q
    ens = as_ensemble(rho)
    hi_b = _batch(noise, ens.states, prof.outcome_points)
    lo_b = _batch(low, ens.states, prof.outcome_points, grid=hi_b.grid)
    p_hi = hi_b.density(ens.weights)
    p_lo = lo_b.density(ens.weights)
    smoothed = smooth_y(p_lo, t)
    sup = float(np.max(np.abs(smoothed.values - p_hi.values)))
    kl_hi = _kl_to_squeezed_vacuum(p_hi, noise, delta)
    kl_lo = _kl_to_squeezed_vacuum(p_lo, low, delta)
    params = {**_noise_params(noise), "delta": delta, "beta_p_tilde": bt, "t": t,
              "profile": prof.name}
    ident = CheckReport.residual("smoothing_identity", params, float(np.max(p_hi.values)),
                                 float(np.max(smoothed.values)), sup, SMOOTHING_TOL)
    mono = CheckReport.inequality("dpi_step", params, kl_hi, kl_lo, DPI_TOL)
    return ident, mono


def check_smoothing_monotonicity(p: Density2D, q: Density2D, t: float,
                                 tol: float = 1e-8, params=None) -> CheckReport:
    """``KL(T_t p || T_t q) <= KL(p || q)`` for two densities on one grid."""
    lhs = kl_divergence(smooth_y(p, t), smooth_y(q, t))
    rhs = kl_divergence(p, q)
    return CheckReport.inequality("kl_smoothing", {"t": t, **(params or {})}, lhs, rhs, tol)


def check_moment_identities(rho, noise: NoiseCovariance, profile=None) -> list[CheckReport]:
    """Mass, ``int x^2 p = <q^2> + beta_q`` and ``int y^2 p = <p^2> + beta_p``.

    Mass is compared absolutely at 1e-5, the second moments relatively at 1e-4
    (reported slack is relative).
    """
    prof = get_profile(profile)
    ens = as_ensemble(rho)
    p, m = _ensemble_batch(noise, ens, prof)
    return _moment_reports(p, m, noise, {**_noise_params(noise), "profile": prof.name})


def _moment_reports(p: Density2D, m: Moments, noise, params) -> list[CheckReport]:
    mass = p.mass
    x2 = p.moment(fx=np.square)
    y2 = p.moment(fy=np.square)
    ex, ey = m.q2 + noise.beta_q, m.p2 + noise.beta_p
    return [
        CheckReport.identity("moment_mass", params, mass, 1.0, 1e-5),
        CheckReport.residual("moment_x2", params, x2, ex, abs(x2 - ex) / ex, 1e-4),
        CheckReport.residual("moment_y2", params, y2, ey, abs(y2 - ey) / ey, 1e-4),
    ]


# -- sweeps -----------------------------------------------------------------------------

def random_states(seed: int, n: int, deltas: Sequence[float], grid: Grid1D,
                  dim: int = 8) -> list[WaveFunction]:
    """``n`` seeded random states; squeezes cycle through ``deltas``."""
    seeds = np.random.default_rng(seed).integers(0, 2**31, size=n)
    return [random_state(int(s), dim, deltas[i % len(deltas)], grid)
            for i, s in enumerate(seeds)]


def _state_family(seed, n, delta, profile, dim=8):
    deltas = (0.5 * delta, delta, 2.0 * delta)
    grid = position_grid(max(deltas), dim - 1, 0.0, profile.state_points)
    return random_states(seed, n, deltas, grid, dim)


def prop2_sweep(points: Iterable[tuple], n_states: int, seed: int = 0,
                profile=None) -> list[CheckReport]:
    """Relative-entropy moment bound for ``n_states`` random pure states at each ``(noise, delta)`` point."""
    prof = get_profile(profile)
    out = []
    for k, (noise, delta) in enumerate(points):
        _check_delta(noise, delta)
        states = _state_family(seed + k, n_states, delta, prof)
        b = _batch(noise, states, prof.outcome_points)
        for i, s in enumerate(states):
            params = {**_noise_params(noise), "delta": delta, "state": i,
                      "seed": seed + k, "profile": prof.name}
            out.append(_prop2_report(b.pure(i), s.moments, noise, delta,
                                     prof.inequality_tol, params))
    return out


def log_sobolev_sweep(points: Iterable[tuple], n_states: int, seed: int = 0,
                      profile=None) -> list[CheckReport]:
    prof = get_profile(profile)
    out = []
    for k, (noise, delta) in enumerate(points):
        _check_delta(noise, delta)
        states = _state_family(seed + k, n_states, delta, prof)
        b = _batch(noise, states, prof.outcome_points)
        for i, s in enumerate(states):
            params = {**_noise_params(noise), "delta": delta, "state": i,
                      "seed": seed + k, "profile": prof.name}
            out.append(_log_sobolev_report(b.pure(i), s, noise, delta,
                                           prof.inequality_tol, params))
    return out


def lemma1_sweep(noises: Sequence[NoiseCovariance], deltas: Sequence[float],
                 n_states: int, seed: int = 0, profile=None,
                 mixtures: int = 0) -> list[CheckReport]:
    """Relative-entropy moment identity for random pure states (and two-member mixtures) at every noise and delta.

    Husimi densities are shared across ``deltas``: only the reference
    squeezed vacuum changes.
    """
    prof = get_profile(profile)
    out = []
    for k, noise in enumerate(noises):
        states = _state_family(seed + k, n_states, noise.minimizer_delta * 2, prof)
        b = _batch(noise, states, prof.outcome_points)
        items = [(b.pure(i), s.moments, f"pure{i}") for i, s in enumerate(states)]
        rng = np.random.default_rng(seed + 1000 + k)
        for j in range(mixtures):
            a, c = rng.choice(n_states, size=2, replace=False)
            w = rng.uniform(0.2, 0.8)
            weights = np.zeros(n_states)
            weights[a], weights[c] = w, 1 - w
            m = _ensemble_moments([w, 1 - w], [states[a].moments, states[c].moments])
            items.append((b.density(weights), m, f"mix{j}"))
        for delta in deltas:
            for p, m, tag in items:
                params = {**_noise_params(noise), "delta": float(delta), "state": tag,
                          "seed": seed + k, "profile": prof.name}
                out.append(_lemma1_report(p, m, noise, float(delta), prof.identity_tol, params))
    return out


def condition_i_sweep(case: str, noise: NoiseCovariance, delta: float | None,
                      n_pairs: int, seed: int = 0, profile=None) -> list[CheckReport]:
    """Condition (i) for random ``psi`` against random two-member mixtures ``rho``."""
    prof = get_profile(profile)
    delta = _case_delta(case, noise, delta)
    lam = lambda0(case, noise, delta)
    states = _state_family(seed, 3 * n_pairs, delta, prof)
    b = _batch(noise, states, prof.outcome_points)
    rng = np.random.default_rng(seed + 1)
    out = []
    for i in range(n_pairs):
        w = rng.uniform(0.1, 0.9)
        weights = np.zeros(len(states))
        weights[n_pairs + 2 * i], weights[n_pairs + 2 * i + 1] = w, 1 - w
        params = {"case": case.upper(), **_noise_params(noise), "delta": delta,
                  "pair": i, "seed": seed, "profile": prof.name}
        out.append(_condition_i_report(b.pure(i), b.density(weights), states[i], lam,
                                       prof.inequality_tol, params))
    return out


def moment_sweep(noise: NoiseCovariance, n_states: int, seed: int = 0,
                 profile=None) -> list[CheckReport]:
    prof = get_profile(profile)
    states = _state_family(seed, n_states, noise.minimizer_delta * 2, prof)
    b = _batch(noise, states, prof.outcome_points)
    out = []
    for i, s in enumerate(states):
        params = {**_noise_params(noise), "state": i, "seed": seed, "profile": prof.name}
        out.extend(_moment_reports(b.pure(i), s.moments, noise, params))
    return out


def data_processing_sweep(points: Iterable[tuple], n_states: int, seed: int = 0,
                          profile=None) -> list[CheckReport]:
    prof = get_profile(profile)
    out = []
    for k, (noise, delta) in enumerate(points):
        states = _state_family(seed + k, n_states, delta, prof)
        for i, s in enumerate(states):
            for r in check_data_processing(s, noise, delta, prof):
                out.append(replace(r, params={**r.params, "state": i, "seed": seed + k}))
    return out


# -- the versioned battery ----------------------------------------------------------------

BATTERY_NOISES = ((0.5, 0.5), (1.0, 1.0), (0.5, 8.0), (2.0, 0.5))


def run_battery(profile=None, seed: int = 0) -> Iterator[tuple[str, CheckReport]]:
    """Yield ``(family, report)`` for the fixed check battery (about a thousand checks).

    The family list and sizes are part of :data:`BATTERY_VERSION`.
    """
    prof = get_profile(profile)
    noises = [NoiseCovariance(*b) for b in BATTERY_NOISES]
    for k, noise in enumerate(noises):
        for r in moment_sweep(noise, 25, seed + k, prof):
            yield "moments", r
    for r in lemma1_sweep(noises, (0.25, 1.0), 10, seed, prof, mixtures=2):
        yield "lemma1", r
    for k, noise in enumerate(noises):
        yield "prop1", min_wehrl_scan(noise, 50, seed + k, prof)
    points = [(n, f * n.minimizer_delta) for n in noises for f in (1.0, 2.0)]
    for r in prop2_sweep(points, 50, seed, prof):
        yield "prop2", r
    for r in log_sobolev_sweep([(n, 2 * n.minimizer_delta) for n in noises], 5, seed, prof):
        yield "log_sobolev", r
    lattice = [(x, y) for x in (-1.0, 0.0, 1.0) for y in (-1.0, 0.0, 1.0)]
    for noise in noises:
        for letter in lattice:
            yield "condition_ii", check_condition_ii("C", noise, letter, profile=prof)
    lnoise = NoiseCovariance(0.5, 8.0)
    for delta in (lnoise.minimizer_delta, 0.25, 0.5):
        for x in (-2.0, 0.0, 2.0):
            yield "condition_ii", check_condition_ii("L", lnoise, (x, 0.0), delta, profile=prof)
    for k, noise in enumerate(noises):
        for r in condition_i_sweep("C", noise, None, 25, seed + k, prof):
            yield "condition_i", r
    for r in condition_i_sweep("L", lnoise, 0.25, 25, seed, prof):
        yield "condition_i", r
    dpi_points = [(NoiseCovariance(0.5, 8.0), 0.25), (NoiseCovariance(0.5, 8.0), 0.5),
                  (NoiseCovariance(1.0, 1.0), 0.75), (NoiseCovariance(2.0, 0.5), 1.5)]
    for r in data_processing_sweep(dpi_points, 3, seed, prof):
        yield "data_processing", r
