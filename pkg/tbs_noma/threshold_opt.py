"""
Optimum relaying threshold.

The e2e ABEP depends on the threshold only through the activation
probability and the per-term conditional SIC errors. Setting its derivative
with respect to phi_th to zero gives

    sum_i w_i Q(sqrt(beta_i phi)) = delta,
    delta = (P_direct - P_div) / (P_prop - P_div),
    w_i = (P_prop,i - P_div,i) / (P_prop - P_div),

whose left-hand side falls from 1/2 at phi = 0 to 0, so the ABEP has a single
minimum. ``Convention.STATIONARY`` solves this equation directly. The per-term
closed form (each term solved on its own and the phi_i summed) is kept as
``Convention.PRINTED`` and, without the alpha_i rescaling, as
``Convention.ALPHA_EXCLUDED``; the brute-force minimiser below arbitrates
between them.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import optimize

from .analytic import (
    ModeCoefficients,
    NetworkConfig,
    abep_e2e,
    direct_terms,
    q_func,
    q_inv,
    relay_link_terms,
)
from .errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

ACTIVE_DELTA_LIMIT = 0.5
DEGENERATE_DENOMINATOR = 1e-15
DEFAULT_GRID_STEPS = 200
REFINE_TOLERANCE = 1e-6
MAX_BRACKET_DOUBLINGS = 200


class Convention(Enum):
    STATIONARY = "stationary"
    PRINTED = "printed"
    ALPHA_EXCLUDED = "alpha-excluded"


DEFAULT_CONVENTION = Convention.STATIONARY


@dataclass(frozen=True)
class ThresholdSolution:
    phi_opt: float
    sinr_th_opt: float
    per_term_delta: Tuple[float, ...]
    active_terms: Tuple[int, ...]
    convention: Convention
    aggregate_delta: float


@dataclass(frozen=True)
class BruteForceResult:
    sinr_th: float
    abep: float
    grid_step: float


def _ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    """numerator / denominator with NaN wherever the denominator is degenerate."""
    numerator = np.atleast_1d(np.asarray(numerator, dtype=float))
    denominator = np.atleast_1d(np.asarray(denominator, dtype=float))
    degenerate = denominator <= DEGENERATE_DENOMINATOR
    safe = np.where(degenerate, 1.0, denominator)
    return np.where(degenerate, math.nan, numerator / safe)


def delta_terms(coeffs: ModeCoefficients, config: NetworkConfig) -> np.ndarray:
    """
    Per-term delta_i from the i-th summands of the direct, diversity and
    propagation probabilities. Terms whose propagation summand does not
    exceed the diversity summand come back as NaN (inactive).
    """
    p_direct = direct_terms(coeffs, config.gamma_s2)
    p_div, p_prop = relay_link_terms(coeffs, config)
    return _ratio(p_direct - p_div, p_prop - p_div)


def aggregate_delta(coeffs: ModeCoefficients, config: NetworkConfig) -> float:
    p_div, p_prop = relay_link_terms(coeffs, config)
    p_direct = np.sum(direct_terms(coeffs, config.gamma_s2))
    return float(_ratio(p_direct - np.sum(p_div), np.sum(p_prop) - np.sum(p_div))[0])


def stationary_weights(coeffs: ModeCoefficients, config: NetworkConfig) -> np.ndarray:
    """Each term's share of P_prop - P_div; the weights sum to one."""
    p_div, p_prop = relay_link_terms(coeffs, config)
    gap = p_prop - p_div
    total = float(np.sum(gap))
    if total <= DEGENERATE_DENOMINATOR:
        return coeffs.alphas
    return gap / total


def active_mask(deltas: np.ndarray) -> np.ndarray:
    deltas = np.asarray(deltas, dtype=float)
    return np.isfinite(deltas) & (deltas < ACTIVE_DELTA_LIMIT)


def phi_opt(coeffs: ModeCoefficients, deltas: np.ndarray,
            include_alpha: bool = True) -> float:
    """Per-term closed form: sum over active terms of q_inv(delta_i / alpha_i)^2 / beta_i."""
    deltas = np.asarray(deltas, dtype=float)
    total = 0.0
    for i in np.flatnonzero(active_mask(deltas)):
        ratio = deltas[i] / coeffs.alpha[i] if include_alpha else deltas[i]
        if not 0.0 < ratio < 1.0:
            logger.debug(f"mode {coeffs.mode_id}: term {i + 1} excluded, "
                         f"delta/alpha = {ratio:.6g} outside (0, 1)")
            continue
        total += q_inv(ratio) ** 2 / coeffs.beta[i]
    return total


def sinr_th_opt(phi: float, a1: float, a2: float) -> float:
    """SINR threshold corresponding to a phi_th value (inverse of phi_threshold)."""
    if phi < 0.0:
        raise ConfigurationError(f"phi must be non-negative, got {phi}")
    if math.isinf(phi):
        return a2 / a1
    return a2 * phi / (1.0 + a1 * phi)


def phi_stationary(coeffs: ModeCoefficients, delta: float,
                   weights: Optional[np.ndarray] = None) -> float:
    """
    Root of sum_i w_i Q(sqrt(beta_i phi)) = delta, or 0 when delta is outside (0, 1/2).
    The weights default to alpha_i.
    """
    if not math.isfinite(delta) or delta >= ACTIVE_DELTA_LIMIT:
        return 0.0
    if delta <= 0.0:
        logger.warning(f"mode {coeffs.mode_id}: aggregate delta {delta:.3g} <= 0, "
                       f"falling back to phi = 0")
        return 0.0
    weight = coeffs.alphas if weights is None else np.asarray(weights, dtype=float)
    beta = coeffs.betas

    def excess(phi: float) -> float:
        return float(np.sum(weight * q_func(np.sqrt(beta * phi)))) - delta

    upper = max(q_inv(delta) ** 2 / float(np.min(beta)), 1.0)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if excess(upper) < 0.0:
            break
        upper *= 2.0
    else:
        raise DomainError(f"mode {coeffs.mode_id}: no stationary point below phi = {upper:.3g}")
    return float(optimize.brentq(excess, 0.0, upper, xtol=1e-14, rtol=1e-13))


def optimum_threshold(coeffs: ModeCoefficients, config: NetworkConfig,
                      convention: Convention = DEFAULT_CONVENTION) -> ThresholdSolution:
    """Optimum threshold for one operating point."""
    deltas = delta_terms(coeffs, config)
    delta = aggregate_delta(coeffs, config)
    if convention is Convention.STATIONARY:
        phi = phi_stationary(coeffs, delta, stationary_weights(coeffs, config))
    else:
        phi = phi_opt(coeffs, deltas,
                      include_alpha=convention is Convention.PRINTED)
    active = tuple(int(i) + 1 for i in np.flatnonzero(active_mask(deltas)))
    return ThresholdSolution(
        phi_opt=phi,
        sinr_th_opt=sinr_th_opt(phi, config.a1, config.a2),
        per_term_delta=tuple(float(d) for d in deltas),
        active_terms=active,
        convention=convention,
        aggregate_delta=delta,
    )


def brute_force_threshold(coeffs: ModeCoefficients, config: NetworkConfig,
                          lo: float = 0.0, hi: Optional[float] = None,
                          steps: int = DEFAULT_GRID_STEPS) -> BruteForceResult:
    """Grid search of the analytic e2e ABEP over SINR_th, refined by golden-section search."""
    bound = config.feasibility_bound
    if hi is None:
        hi = bound * (1.0 - 1e-3)
    if not 0.0 <= lo < hi < bound:
        raise ConfigurationError(
            f"threshold grid needs 0 <= lo < hi < a2/a1 = {bound:.6g}, got [{lo}, {hi}]"
        )
    if steps < 3:
        raise ConfigurationError(f"threshold grid needs at least 3 points, got {steps}")

    def objective(sinr_th: float) -> float:
        return abep_e2e(coeffs, config, float(np.clip(sinr_th, lo, hi)))

    grid = np.linspace(lo, hi, steps)
    values = np.array([objective(x) for x in grid])
    k = int(np.argmin(values))
    best_x, best_f = float(grid[k]), float(values[k])

    interior = 0 < k < steps - 1 and values[k] < values[k - 1] and values[k] < values[k + 1]
    if interior:
        result = optimize.minimize_scalar(
            objective, bracket=(grid[k - 1], grid[k], grid[k + 1]), method="golden",
            options={"xtol": REFINE_TOLERANCE / max(1.0, abs(best_x)), "maxiter": 500},
        )
    else:
        left, right = grid[max(k - 1, 0)], grid[min(k + 1, steps - 1)]
        result = optimize.minimize_scalar(
            objective, bounds=(left, right), method="bounded",
            options={"xatol": REFINE_TOLERANCE},
        )
    refined_x = float(np.clip(result.x, lo, hi))
    refined_f = objective(refined_x)
    if refined_f < best_f or (refined_f == best_f and refined_x < best_x):
        best_x, best_f = refined_x, refined_f
    logger.debug(f"brute force: SINR_th* = {best_x:.6g}, ABEP* = {best_f:.6g}")
    return BruteForceResult(best_x, best_f, float(grid[1] - grid[0]))
