"""
Closed-form average bit error probabilities of the far user.

Everything here works on linear quantities. Average SNRs follow the
normalisation N0 = 1, so Ps = rho and Pr = relay_power_ratio * rho:

    gamma_s1 = sigma2_s1 * rho
    gamma_s2 = sigma2_s2 * rho
    gamma_r  = sigma2_r * relay_power_ratio * rho

Each error probability is the sum over the mode coefficient terms i of a per-term
contribution that already carries its alpha_i weight; the ``*_terms``
functions return those contributions as arrays, the ``abep_*`` functions
their sums.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
from scipy import integrate, optimize, special

from .constellations import check_power_split, mode_schemes
from .errors import (
    ConfigurationError,
    DomainError,
    InvalidPowerAllocationError,
    UndefinedConditionalError,
)

logger = logging.getLogger(__name__)

INFEASIBLE = math.inf
"""phi_th value meaning the SINR gate can never open (a2 <= a1 * SINR_th)."""

SINGULARITY_TOLERANCE = 1e-9
SINGULARITY_PERTURBATION = 1e-6
Q_INV_TOLERANCE = 1e-12
DEFAULT_RELAY_POWER_RATIO = 0.5

FloatOrArray = Union[float, np.ndarray]


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    return float(10.0 * math.log10(value))


def is_infeasible(phi_th: float) -> bool:
    return math.isinf(phi_th)


# ---------------------------------------------------------------------------
# Gaussian tail
# ---------------------------------------------------------------------------

def q_func(x: FloatOrArray) -> FloatOrArray:
    """Gaussian tail probability Q(x) = erfc(x / sqrt(2)) / 2."""
    value = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


def _q_prime(x: float) -> float:
    return -math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def q_inv(p: float) -> float:
    """Inverse of q_func on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"q_inv needs 0 < p < 1, got {p}")
    guess = float(-special.ndtri(p))

    def residual(x: float) -> float:
        return q_func(x) - p

    try:
        root = optimize.newton(residual, guess, fprime=_q_prime,
                               tol=Q_INV_TOLERANCE, maxiter=50)
    except (RuntimeError, ZeroDivisionError, OverflowError):
        root = math.nan
    if not math.isfinite(root) or abs(residual(root)) > Q_INV_TOLERANCE * p:
        # Newton left the basin; bracket around the normal quantile instead
        low, high = guess - 1.0, guess + 1.0
        while residual(low) < 0.0:
            low -= 1.0
        while residual(high) > 0.0:
            high += 1.0
        root = optimize.brentq(residual, low, high, xtol=1e-15,
                               rtol=4 * np.finfo(float).eps)
    return float(root)


# ---------------------------------------------------------------------------
# Mode coefficients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeCoefficients:
    """Conditional BEP coefficients: P(e | gamma) = sum_i alpha_i Q(sqrt(beta_i gamma))."""

    mode_id: int
    n_terms: int
    alpha: Tuple[float, ...]
    beta: Tuple[float, ...]
    m_far: int
    relay_beta: float

    @property
    def alphas(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    @property
    def betas(self) -> np.ndarray:
        return np.asarray(self.beta, dtype=float)

    def with_beta(self, beta: Tuple[float, ...]) -> "ModeCoefficients":
        return replace(self, beta=tuple(beta))


# mode -> (alpha, beta scale, far amplitude scale, near-user amplitude offsets)
# beta_i = scale * (sqrt(a2 * far) -/+ k * sqrt(a1 * near))^2 ; the last entry
# of mode 2 is the interference-free quadrature branch beta_3 = a2
_MODE_TABLE = {
    1: ((0.5, 0.5), 2.0, 1.0, 1.0, (1.0,)),
    2: ((0.25, 0.25, 0.5), 2.0, 0.5, 1.0, (1.0,)),
    3: ((0.5, 0.5), 2.0, 1.0, 0.5, (1.0,)),
    4: ((0.5, 0.5), 1.0, 1.0, 1.0, (1.0,)),
    5: ((0.25, 0.25, 0.25, 0.25), 2.0, 1.0, 0.1, (1.0, 3.0)),
    6: ((0.25, 0.25, 0.25, 0.25), 1.0, 1.0, 0.2, (1.0, 3.0)),
}


def table1_coeffs(mode_id: int, a1: float, a2: float) -> ModeCoefficients:
    """Build the (N, alpha_i, beta_i) coefficients of a mode for a power split."""
    if mode_id not in _MODE_TABLE:
        raise ConfigurationError(f"unknown mode {mode_id!r}, expected 1..6")
    if abs(a1 + a2 - 1.0) > 1e-9 or a1 < 0.0:
        raise ConfigurationError(f"invalid power split a1={a1}, a2={a2}")
    alpha, scale, far, near, offsets = _MODE_TABLE[mode_id]

    beta = []
    term = 0
    for k in offsets:
        for sign in (-1.0, 1.0):
            term += 1
            amplitude = math.sqrt(a2 * far) + sign * k * math.sqrt(a1 * near)
            if amplitude <= 0.0:
                raise InvalidPowerAllocationError(
                    mode_id, term, scale * amplitude * abs(amplitude),
                    f"{k:g}*sqrt(a1*{near:g}) >= sqrt(a2*{far:g})",
                )
            beta.append(scale * amplitude ** 2)
    if mode_id == 2:
        beta.append(a2)

    _, far_scheme = mode_schemes(mode_id)
    return ModeCoefficients(
        mode_id=mode_id,
        n_terms=len(alpha),
        alpha=alpha,
        beta=tuple(beta),
        m_far=far_scheme.order,
        relay_beta=far_scheme.relay_beta,
    )


def propagation_c(m: int) -> np.ndarray:
    """c_{j,M} for j = 1..M-1 (symbol-offset geometry of a wrongly relayed symbol)."""
    if m < 2:
        raise ConfigurationError(f"constellation order must be >= 2, got {m}")
    j = np.arange(1, m)
    base = math.sin(math.pi / m)
    return np.where(
        j <= m // 2,
        np.sin(np.pi * (2 * j - 1) / m) / base,
        -np.sin(np.pi * (2 * j + 1) / m) / base,
    )


# ---------------------------------------------------------------------------
# Network configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkConfig:
    """Power allocation, average link gains and transmit SNR (all linear)."""

    a1: float
    a2: float
    rho: float
    sigma2_s1: float = 1.0
    sigma2_s2: float = 1.0
    sigma2_r: float = 1.0
    relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO

    def __post_init__(self) -> None:
        check_power_split(self.a1, self.a2)
        for name in ("rho", "sigma2_s1", "sigma2_s2", "sigma2_r", "relay_power_ratio"):
            value = getattr(self, name)
            if not value > 0.0 or not math.isfinite(value):
                raise ConfigurationError(f"{name} must be positive and finite, got {value}")

    @classmethod
    def from_db(cls, a1: float, snr_db: float, sigma2_s1_db: float = 0.0,
                sigma2_s2_db: float = 0.0, sigma2_r_db: float = 0.0,
                relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO) -> "NetworkConfig":
        return cls(
            a1=a1,
            a2=1.0 - a1,
            rho=db_to_linear(snr_db),
            sigma2_s1=db_to_linear(sigma2_s1_db),
            sigma2_s2=db_to_linear(sigma2_s2_db),
            sigma2_r=db_to_linear(sigma2_r_db),
            relay_power_ratio=relay_power_ratio,
        )

    def with_rho(self, rho: float) -> "NetworkConfig":
        return replace(self, rho=rho)

    @property
    def snr_db(self) -> float:
        return linear_to_db(self.rho)

    @property
    def ps(self) -> float:
        return self.rho

    @property
    def pr(self) -> float:
        return self.relay_power_ratio * self.rho

    @property
    def gamma_s1(self) -> float:
        return self.sigma2_s1 * self.rho

    @property
    def gamma_s2(self) -> float:
        return self.sigma2_s2 * self.rho

    @property
    def gamma_r(self) -> float:
        return self.sigma2_r * self.pr

    @property
    def feasibility_bound(self) -> float:
        """SINR_th values at or above a2/a1 never activate the relay."""
        return self.a2 / self.a1


# ---------------------------------------------------------------------------
# Relay activation
# ---------------------------------------------------------------------------

def phi_threshold(sinr_th: float, a1: float, a2: float) -> float:
    """SNR threshold on gamma_s1 equivalent to an SINR threshold, or INFEASIBLE."""
    if sinr_th < 0.0:
        raise ConfigurationError(f"SINR threshold must be non-negative, got {sinr_th}")
    denominator = a2 - a1 * sinr_th
    if denominator <= 0.0:
        return INFEASIBLE
    return sinr_th / denominator


def prob_relay_active(phi_th: float, gamma_s1: float) -> float:
    """P(gamma_s1 >= phi_th) for exponentially distributed gamma_s1."""
    if is_infeasible(phi_th):
        return 0.0
    return math.exp(-phi_th / gamma_s1)


# ---------------------------------------------------------------------------
# Per-term closed forms
# ---------------------------------------------------------------------------

def _one_minus_sqrt_ratio(x: np.ndarray, c: float) -> np.ndarray:
    """1 - sqrt(x / (c + x)) without cancellation for large x."""
    ratio = x / (c + x)
    return (c / (c + x)) / (1.0 + np.sqrt(ratio))


def sic_terms(coeffs: ModeCoefficients, phi_th: float, gamma_s1: float) -> np.ndarray:
    """
    Per-term BEP of the far user's symbols at the near user, conditioned on
    gamma_s1 >= phi_th (truncated exponential pdf).

    Evaluated as
    (alpha_i / 2) [erfc(sqrt(beta_i phi / 2))
                   - sqrt(beta_i g / (beta_i g + 2)) erfcx(sqrt(k phi)) exp(-beta_i phi / 2)]
    with k = beta_i / 2 + 1 / g, the overflow-free form of the closed form.
    """
    if is_infeasible(phi_th):
        raise UndefinedConditionalError(
            "relay never activates for this threshold; conditional SIC error is undefined"
        )
    if phi_th < 0.0:
        raise ConfigurationError(f"phi_th must be non-negative, got {phi_th}")
    alpha, beta = coeffs.alphas, coeffs.betas
    k = beta / 2.0 + 1.0 / gamma_s1
    gain = np.sqrt(beta * gamma_s1 / (beta * gamma_s1 + 2.0))
    if phi_th == 0.0:
        return 0.5 * alpha * _one_minus_sqrt_ratio(beta * gamma_s1, 2.0)
    truncated = (special.erfc(np.sqrt(beta * phi_th / 2.0))
                 - gain * special.erfcx(np.sqrt(k * phi_th)) * np.exp(-beta * phi_th / 2.0))
    return 0.5 * alpha * np.maximum(truncated, 0.0)


def direct_terms(coeffs: ModeCoefficients, gamma_s2: float) -> np.ndarray:
    """Per-term Rayleigh-averaged BEP of the direct link."""
    return 0.5 * coeffs.alphas * _one_minus_sqrt_ratio(coeffs.betas * gamma_s2, 2.0)


def _branch_snrs(coeffs: ModeCoefficients, gamma_s2: float,
                 gamma_r: float) -> Tuple[np.ndarray, float]:
    direct = coeffs.betas * gamma_s2 / 2.0
    relay = coeffs.relay_beta * gamma_r / 2.0
    return direct, relay


class RelayLinkModel(Enum):
    """How the far user's error is evaluated in a slot where the relay transmits."""

    COMBINER = "combiner"
    PRINTED = "printed"


def _mrc_diversity_terms(coeffs: ModeCoefficients, gamma_s2: float,
                         gamma_r: float) -> np.ndarray:
    g1, g2 = _branch_snrs(coeffs, gamma_s2, gamma_r)
    g2 = np.full_like(g1, g2)
    close = np.abs(g1 - g2) < SINGULARITY_TOLERANCE * np.maximum(g1, g2)
    if np.any(close):
        logger.debug(f"two-branch MRC singularity at terms {np.flatnonzero(close) + 1}")
        g2 = np.where(close, g2 * (1.0 + SINGULARITY_PERTURBATION), g2)
    tail1 = g1 * _one_minus_sqrt_ratio(g1, 1.0)
    tail2 = g2 * _one_minus_sqrt_ratio(g2, 1.0)
    return 0.5 * coeffs.alphas * (tail1 - tail2) / (g1 - g2)


def _two_branch_tail(gamma: float) -> float:
    """Average of Q(sqrt(2 g)) over g = sum of two i.i.d. exponentials of mean gamma."""
    tail = float(_one_minus_sqrt_ratio(gamma, 1.0))
    return 0.25 * tail * tail * (3.0 - tail)


@lru_cache(maxsize=4096)
def _combiner_bep(beta: Tuple[float, ...], relay_beta: float, gamma_s2: float,
                  gamma_r: float, relay_power_ratio: float,
                  relay_correct: bool) -> Tuple[float, ...]:
    """
    Per-term conditional BEP of the combiner output y_s2 h_s2* + y_r h_r*.

    Per dimension the joint ML decision is the sign of
    sqrt(Ps) |h_s2|^2 d_i +/- sqrt(Pr) |h_r|^2 A + noise, noise variance
    (|h_s2|^2 + |h_r|^2) / 2, with d_i = sqrt(beta_i / 2) and
    A = sqrt(relay_beta / 2); the relay term adds when the forwarded bit is
    right and subtracts when it is wrong. With m1 = gamma_s2,
    m2 = gamma_r Ps / Pr and b = A sqrt(Pr / Ps), the radial part of the
    double Rayleigh average is a two-branch tail, leaving

        integral_0^1 T(z^2 / L) du,  z = d_i m1 u +/- b m2 (1 - u),  L = m1 u + m2 (1 - u),

    where T is the two-branch tail for z >= 0 and 1 - T otherwise.
    """
    m1 = gamma_s2
    m2 = gamma_r / relay_power_ratio
    b = math.sqrt(relay_beta / 2.0 * relay_power_ratio)
    sign = 1.0 if relay_correct else -1.0
    values = []
    for beta_i in beta:
        d = math.sqrt(beta_i / 2.0)

        def integrand(u: float, d: float = d) -> float:
            margin = d * m1 * u + sign * b * m2 * (1.0 - u)
            tail = _two_branch_tail(margin * margin / (m1 * u + m2 * (1.0 - u)))
            return tail if margin >= 0.0 else 1.0 - tail

        points = None if relay_correct else [b * m2 / (d * m1 + b * m2)]
        value, _ = integrate.quad(integrand, 0.0, 1.0, points=points,
                                  epsabs=1e-13, epsrel=1e-10, limit=200)
        values.append(min(max(value, 0.0), 1.0))
    return tuple(values)


def _combiner_terms(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                    relay_power_ratio: float, relay_correct: bool) -> np.ndarray:
    if not relay_power_ratio > 0.0:
        raise ConfigurationError(f"relay power ratio must be positive, got {relay_power_ratio}")
    conditional = _combiner_bep(tuple(coeffs.beta), coeffs.relay_beta, float(gamma_s2),
                                float(gamma_r), float(relay_power_ratio), relay_correct)
    return coeffs.alphas * np.asarray(conditional)


def diversity_terms(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                    relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO,
                    model: RelayLinkModel = RelayLinkModel.COMBINER) -> np.ndarray:
    """
    Per-term BEP at the far user when the relay forwards the right symbol.

    ``COMBINER`` is the error of the implemented equal-weight combiner.
    ``PRINTED`` is the two-branch MRC closed form with branch SNRs
    beta_i g_s2 / 2 and relay_beta g_r / 2:

    (alpha_i / 2) [G1 (1 - mu(G1)) - G2 (1 - mu(G2))] / (G1 - G2),
    mu(G) = sqrt(G / (1 + G)).

    MRC bounds the combiner error from below; the two agree for points at
    distance A sqrt(Pr / Ps) from the decision boundary.
    """
    if model is RelayLinkModel.PRINTED:
        return _mrc_diversity_terms(coeffs, gamma_s2, gamma_r)
    return _combiner_terms(coeffs, gamma_s2, gamma_r, relay_power_ratio, True)


def propagation_terms(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                      relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO,
                      model: RelayLinkModel = RelayLinkModel.COMBINER) -> np.ndarray:
    """
    Per-term BEP at the far user when the relay forwards a wrong symbol.

    ``COMBINER`` is the error of the implemented y_s2 h_s2* + y_r h_r* joint ML
    detector. ``PRINTED`` is the SNR-share approximation averaged uniformly over
    the offsets c_{j,M}; it ignores the detector geometry and is kept for comparison.
    """
    if model is RelayLinkModel.PRINTED:
        direct, relay = _branch_snrs(coeffs, gamma_s2, gamma_r)
        c = propagation_c(coeffs.m_far)
        weighted = c[None, :] * relay
        share = weighted / (direct[:, None] + weighted)
        return coeffs.alphas * share.mean(axis=1)
    return _combiner_terms(coeffs, gamma_s2, gamma_r, relay_power_ratio, False)


def relay_link_terms(coeffs: ModeCoefficients, config: NetworkConfig,
                     model: RelayLinkModel = RelayLinkModel.COMBINER
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """Per-term (diversity, propagation) BEPs at one operating point."""
    div = diversity_terms(coeffs, config.gamma_s2, config.gamma_r,
                          config.relay_power_ratio, model)
    prop = propagation_terms(coeffs, config.gamma_s2, config.gamma_r,
                             config.relay_power_ratio, model)
    return div, prop


# ---------------------------------------------------------------------------
# Aggregated closed forms
# ---------------------------------------------------------------------------

def abep_sic_at_ue1(coeffs: ModeCoefficients, phi_th: float, gamma_s1: float) -> float:
    """
    ABEP of the far user's symbols at the near user given the relay is active.

    The closed form is printed as an upper bound; for the truncated
    exponential pdf it is attained, and it is used as the working value.
    """
    return float(np.sum(sic_terms(coeffs, phi_th, gamma_s1)))


def abep_sic_unconditional(coeffs: ModeCoefficients, gamma_s1: float) -> float:
    """Rayleigh-averaged SIC-stage BEP at the near user (no threshold)."""
    return abep_sic_at_ue1(coeffs, 0.0, gamma_s1)


def abep_direct(coeffs: ModeCoefficients, gamma_s2: float) -> float:
    return float(np.sum(direct_terms(coeffs, gamma_s2)))


def abep_diversity(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                   relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO,
                   model: RelayLinkModel = RelayLinkModel.COMBINER) -> float:
    return float(np.sum(diversity_terms(coeffs, gamma_s2, gamma_r, relay_power_ratio, model)))


def abep_propagation(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                     relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO,
                     model: RelayLinkModel = RelayLinkModel.COMBINER) -> float:
    value = float(np.sum(propagation_terms(coeffs, gamma_s2, gamma_r, relay_power_ratio,
                                           model)))
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class E2eBreakdown:
    """The constituents of the end-to-end ABEP at one operating point."""

    phi_th: float
    p_active: float
    p_direct: float
    p_diversity: float
    p_sic: float
    p_propagation: float
    p_relayed: float
    total: float


def relayed_terms(coeffs: ModeCoefficients, config: NetworkConfig, phi_th: float,
                  perfect_sic: bool = False,
                  model: RelayLinkModel = RelayLinkModel.COMBINER) -> np.ndarray:
    """
    Per-term far-user BEP in a slot where the relay transmits.

    The near-user level behind term i is common to the SIC stage and to the
    combiner, so diversity and propagation are mixed term by term with the
    conditional SIC error sic_i / alpha_i.
    """
    div, prop = relay_link_terms(coeffs, config, model)
    if perfect_sic:
        return div
    wrong = sic_terms(coeffs, phi_th, config.gamma_s1) / coeffs.alphas
    return div * (1.0 - wrong) + prop * wrong


def e2e_breakdown(coeffs: ModeCoefficients, config: NetworkConfig,
                  sinr_th: float, perfect_sic: bool = False,
                  model: RelayLinkModel = RelayLinkModel.COMBINER) -> E2eBreakdown:
    """Law-of-total-probability combination of the direct, diversity and propagation events."""
    phi = phi_threshold(sinr_th, config.a1, config.a2)
    p_active = prob_relay_active(phi, config.gamma_s1)
    p_direct = abep_direct(coeffs, config.gamma_s2)
    if p_active == 0.0:
        return E2eBreakdown(phi, 0.0, p_direct, math.nan, math.nan, math.nan, math.nan,
                            p_direct)

    div, prop = relay_link_terms(coeffs, config, model)
    p_div = float(np.sum(div))
    p_prop = min(max(float(np.sum(prop)), 0.0), 1.0)
    p_sic = 0.0 if perfect_sic else abep_sic_at_ue1(coeffs, phi, config.gamma_s1)
    p_relayed = float(np.sum(relayed_terms(coeffs, config, phi, perfect_sic, model)))
    total = (1.0 - p_active) * p_direct + p_active * p_relayed
    return E2eBreakdown(phi, p_active, p_direct, p_div, p_sic, p_prop, p_relayed,
                        min(max(total, 0.0), 1.0))


def abep_e2e(coeffs: ModeCoefficients, config: NetworkConfig, sinr_th: float) -> float:
    """End-to-end ABEP of the far user for a fixed SINR threshold."""
    return e2e_breakdown(coeffs, config, sinr_th).total


# ---------------------------------------------------------------------------
# Quadrature of the defining integrals (oracles for the closed forms)
# ---------------------------------------------------------------------------

def _conditional_bep(coeffs: ModeCoefficients, gamma: float) -> float:
    return float(np.sum(coeffs.alphas * q_func(np.sqrt(coeffs.betas * gamma))))


def quad_sic_at_ue1(coeffs: ModeCoefficients, phi_th: float, gamma_s1: float) -> float:
    """Conditional SIC-stage ABEP by integrating over the truncated exponential pdf."""
    def integrand(t: float) -> float:
        return _conditional_bep(coeffs, phi_th + t) * math.exp(-t / gamma_s1) / gamma_s1

    value, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-13, epsrel=1e-11,
                              limit=200)
    return value


def quad_direct(coeffs: ModeCoefficients, gamma_s2: float) -> float:
    def integrand(g: float) -> float:
        return _conditional_bep(coeffs, g) * math.exp(-g / gamma_s2) / gamma_s2

    value, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-13, epsrel=1e-11,
                              limit=200)
    return value


def quad_diversity(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float) -> float:
    """Average of sum_i alpha_i Q(sqrt(beta_i g_s2 + relay_beta g_r)) over both exponentials."""
    alpha, beta = coeffs.alphas, coeffs.betas

    def integrand(g_r: float, g_s2: float) -> float:
        bep = np.sum(alpha * q_func(np.sqrt(beta * g_s2 + coeffs.relay_beta * g_r)))
        return float(bep) * math.exp(-g_s2 / gamma_s2 - g_r / gamma_r) / (gamma_s2 * gamma_r)

    value, _ = integrate.dblquad(integrand, 0.0, math.inf, 0.0, math.inf,
                                 epsabs=1e-11, epsrel=1e-9)
    return value


def _quad_combiner(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                   relay_power_ratio: float, relay_sign: float) -> float:
    alpha = coeffs.alphas
    d = np.sqrt(coeffs.betas / 2.0)
    kappa = 1.0 / relay_power_ratio
    relay_amplitude = relay_sign * math.sqrt(coeffs.relay_beta / 2.0 * kappa)

    def integrand(g_r: float, g_s2: float) -> float:
        density = math.exp(-g_s2 / gamma_s2 - g_r / gamma_r) / (gamma_s2 * gamma_r)
        spread = g_s2 + kappa * g_r
        if spread <= 0.0:
            return 0.5 * float(np.sum(alpha)) * density
        margin = math.sqrt(2.0 / spread) * (d * g_s2 + relay_amplitude * g_r)
        return float(np.sum(alpha * q_func(margin))) * density

    value, _ = integrate.dblquad(integrand, 0.0, math.inf, 0.0, math.inf,
                                 epsabs=1e-11, epsrel=1e-9)
    return value


def quad_diversity_combiner(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                            relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO) -> float:
    """Average of the right-relay combiner BEP over both exponentials."""
    return _quad_combiner(coeffs, gamma_s2, gamma_r, relay_power_ratio, 1.0)


def quad_propagation(coeffs: ModeCoefficients, gamma_s2: float, gamma_r: float,
                     relay_power_ratio: float = DEFAULT_RELAY_POWER_RATIO) -> float:
    """Average of the wrong-relay combiner BEP over both exponentials."""
    return _quad_combiner(coeffs, gamma_s2, gamma_r, relay_power_ratio, -1.0)
