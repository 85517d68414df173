"""Energy-constrained capacity of the noisy heterodyne channel and its optimal encodings.

Three regimes are distinguished by where ``sqrt(beta_q / beta_p)`` falls
relative to the optimal average-state covariance ``alpha``:

* ``C``: ``1/(2 alpha_p) < sqrt(beta_q/beta_p) < 2 alpha_q``. Letters are
  squeezed coherent states ``|x, y>_delta`` with ``delta = sqrt(beta_q/beta_p)/2``
  and a two-dimensional Gaussian displacement law.
* ``L``: ``1/(2 alpha_p) >= sqrt(beta_q/beta_p)``. Only the position is
  modulated; letters ``|x, 0>_delta`` with ``delta = 1/(4 alpha_p)``.
* ``R``: the mirror image of ``L`` under ``q <-> p``.

Values are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .measurement import NoiseCovariance

CASES = ("C", "L", "R")


@dataclass(frozen=True)
class SignalCovariance:
    alpha_q: float
    alpha_p: float

    def __post_init__(self):
        if not (self.alpha_q > 0 and self.alpha_p > 0):
            raise ValueError(f"signal variances must be positive: {self}")
        if self.alpha_q * self.alpha_p < 0.25 * (1 - 1e-12):
            raise ValueError("alpha_q * alpha_p < 1/4 is not a quantum state")

    @property
    def energy(self) -> float:
        """Mean oscillator energy ``(alpha_q + alpha_p) / 2``."""
        return 0.5 * (self.alpha_q + self.alpha_p)

    def swapped(self) -> "SignalCovariance":
        return SignalCovariance(self.alpha_p, self.alpha_q)


@dataclass(frozen=True)
class GaussianEncoding:
    """Squeezed coherent letters ``|x, y>_delta`` with ``(x, y) ~ N(0, diag(gamma_q, gamma_p))``."""

    case: str
    delta: float
    gamma_q: float
    gamma_p: float
    alpha: SignalCovariance

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}")
        if self.delta <= 0 or self.gamma_q < 0 or self.gamma_p < 0:
            raise ValueError(f"invalid encoding parameters: {self}")
        aq, ap = self.average_covariance()
        if abs(aq - self.alpha.alpha_q) > 1e-12 * max(1.0, aq) or \
           abs(ap - self.alpha.alpha_p) > 1e-12 * max(1.0, ap):
            raise ValueError("letter and displacement variances do not add up to alpha")

    def average_covariance(self) -> tuple[float, float]:
        return self.gamma_q + self.delta, self.gamma_p + 0.25 / self.delta

    @property
    def energy(self) -> float:
        return self.alpha.energy


@dataclass(frozen=True)
class CapacityResult:
    case: str
    value: float
    E: float
    noise: NoiseCovariance
    encoding: GaussianEncoding

    @property
    def bits(self) -> float:
        return self.value / np.log(2.0)


def classify(alpha: SignalCovariance, noise: NoiseCovariance) -> str:
    """Regime of ``alpha`` relative to the threshold; ties go to ``L``/``R``."""
    r = noise.ratio
    if 1.0 / (2.0 * alpha.alpha_p) >= r:
        return "L"
    if r >= 2.0 * alpha.alpha_q:
        return "R"
    return "C"


def energy_threshold(b1: float, b2: float) -> float:
    """``E(b1, b2) = (b1 - b2 + sqrt(b1 / b2)) / 2``."""
    if not (b1 > 0 and b2 > 0):
        raise ValueError("noise powers must be positive")
    return 0.5 * (b1 - b2 + np.sqrt(b1 / b2))


def central_threshold(noise: NoiseCovariance) -> float:
    """Smallest energy at which the two-parameter encoding is optimal."""
    return max(energy_threshold(noise.beta_p, noise.beta_q),
               energy_threshold(noise.beta_q, noise.beta_p), 0.5)


def encoding_rate(enc: GaussianEncoding, noise: NoiseCovariance) -> float:
    """Information rate of a Gaussian encoding (output entropy minus letter entropy)."""
    aq, ap = enc.alpha.alpha_q, enc.alpha.alpha_p
    vq, vp = noise.beta_q + enc.delta, noise.beta_p + 0.25 / enc.delta
    return 0.5 * float(np.log((aq + noise.beta_q) * (ap + noise.beta_p) / (vq * vp)))


def rate_of_encoding_C(alpha: SignalCovariance, noise: NoiseCovariance) -> float:
    """Rate of the two-parameter encoding with average covariance ``alpha``.

    Valid on the closure of case ``C``, where one displacement variance may vanish.
    """
    r = noise.ratio
    if 1.0 / (2.0 * alpha.alpha_p) > r * (1 + 1e-12) or r > 2.0 * alpha.alpha_q * (1 + 1e-12):
        raise ValueError(f"alpha={alpha} lies outside case C")
    return _rate_C(alpha, noise)


def _rate_C(alpha: SignalCovariance, noise: NoiseCovariance) -> float:
    return 0.5 * float(np.log((alpha.alpha_q + noise.beta_q) * (alpha.alpha_p + noise.beta_p)
                              / (noise.geometric + 0.5) ** 2))


def capacity_case_C(noise: NoiseCovariance, E: float) -> CapacityResult:
    """Closed-form capacity above the energy threshold.

    The average covariance splits the energy so that
    ``alpha_q + beta_q = alpha_p + beta_p``.  At exactly the threshold energy
    one displacement variance vanishes and the encoding sits on the boundary
    of case ``C``.
    """
    if E < central_threshold(noise) * (1 - 1e-12):
        raise ValueError(f"E={E} is below the case-C energy threshold "
                         f"{central_threshold(noise):.6g}; use capacity()")
    bq, bp = noise.beta_q, noise.beta_p
    alpha = SignalCovariance(E + 0.5 * (bp - bq), E + 0.5 * (bq - bp))
    delta = noise.minimizer_delta
    # clip the -1e-16 roundoff that appears exactly at the threshold
    gq = max(alpha.alpha_q - delta, 0.0)
    gp = max(alpha.alpha_p - 0.25 / delta, 0.0)
    alpha = SignalCovariance(gq + delta, gp + 0.25 / delta)
    enc = GaussianEncoding("C", delta, gq, gp, alpha)
    value = max(float(np.log((E + 0.5 * (bq + bp)) / (noise.geometric + 0.5))), 0.0)
    return CapacityResult("C", value, float(E), noise, enc)


def capacity_L_closed_form(noise: NoiseCovariance, E: float) -> float:
    """``ln((sqrt(1 + 8 E beta_q + 4 beta_q^2) - 1) / (2 beta_q))``."""
    bq = noise.beta_q
    return float(np.log((np.sqrt(1 + 8 * E * bq + 4 * bq**2) - 1) / (2 * bq)))


def _rate_L(delta: float, noise: NoiseCovariance, E: float) -> float:
    """Rate of position-only letters of squeeze ``delta`` using all of ``E``."""
    return 0.5 * float(np.log((2 * E - 0.25 / delta + noise.beta_q) / (delta + noise.beta_q)))


def optimal_delta_L(noise: NoiseCovariance, E: float, xatol: float = 1e-11):
    """Best letter squeeze for position-only modulation at energy ``E``.

    Maximizes the one-letter rate over ``delta`` subject to
    ``alpha_p = 1/(4 delta)``, ``alpha_q = 2E - 1/(4 delta) >= delta`` and
    ``delta >= sqrt(beta_q/beta_p)/2``.  Returns ``(delta, alpha, gamma)``.
    """
    if E < 0.5:
        raise ValueError(f"E={E} is below the vacuum energy 1/2")
    disc = np.sqrt(max(E * E - 0.25, 0.0))
    lo = max(E - disc, noise.minimizer_delta)
    hi = E + disc
    if lo > hi * (1 + 1e-12):
        raise ValueError("no admissible letter squeeze: case-L preconditions violated")
    if hi - lo < 1e-14:
        delta = 0.5 * (lo + hi)
    else:
        res = minimize_scalar(lambda d: -_rate_L(d, noise, E), bounds=(lo, hi),
                              method="bounded", options={"xatol": xatol})
        delta = float(res.x)
    gamma = max(2 * E - 0.25 / delta - delta, 0.0)
    alpha = SignalCovariance(gamma + delta, 0.25 / delta)
    return delta, alpha, gamma


def capacity_case_L(noise: NoiseCovariance, E: float) -> CapacityResult:
    """Capacity below the threshold with ``beta_q <= beta_p``.

    The encoding comes from :func:`optimal_delta_L`; its rate is checked
    against the closed form.
    """
    if noise.beta_q > noise.beta_p:
        raise ValueError("case L needs beta_q <= beta_p; use capacity() for case R")
    thr = energy_threshold(noise.beta_p, noise.beta_q)
    if not 0.5 <= E <= thr * (1 + 1e-12):
        raise ValueError(f"case L needs 1/2 <= E <= {thr:.6g}, got {E}")
    delta, alpha, gamma = optimal_delta_L(noise, E)
    enc = GaussianEncoding("L", delta, gamma, 0.0, alpha)
    value = max(capacity_L_closed_form(noise, E), 0.0)
    achieved = encoding_rate(enc, noise)
    if abs(achieved - value) > 1e-8:
        raise ArithmeticError(f"optimized rate {achieved!r} misses closed form {value!r}")
    return CapacityResult("L", value, float(E), noise, enc)


def _mirror(enc: GaussianEncoding, case: str) -> GaussianEncoding:
    """Relabel an encoding under ``q <-> p``."""
    return GaussianEncoding(case, 0.25 / enc.delta, enc.gamma_p, enc.gamma_q,
                            enc.alpha.swapped())


def capacity(noise: NoiseCovariance, E: float) -> CapacityResult:
    """Capacity and optimal Gaussian encoding for any ``E >= 1/2``."""
    if E < 0.5:
        raise ValueError(f"E={E} is below the vacuum energy 1/2")
    if E >= central_threshold(noise):
        return capacity_case_C(noise, E)
    if noise.beta_q <= noise.beta_p:
        return capacity_case_L(noise, E)
    res = capacity_case_L(noise.swapped(), E)
    return replace(res, case="R", noise=noise, encoding=_mirror(res.encoding, "R"))
