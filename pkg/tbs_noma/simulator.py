"""
Monte Carlo link-level simulation of threshold-based selective cooperation.

One slot is one channel use of both phases:

1. The base station sends sqrt(Ps) (sqrt(a1) x1 + sqrt(a2) x2) to both users
   over h_s1 and h_s2.
2. The near user detects x2 (joint ML over the superposed alphabet) and, if its
   SINR clears the policy threshold, forwards sqrt(Pr) x2_hat over h_r.
3. The far user combines y_s2 h_s2* + y_r h_r* and detects x2 by joint ML.

Noise is CN(0, 1) on every reception (N0 = 1, Ps = rho). Only the far user's
bits are counted.

Randomness is counter based: slots are grouped in blocks of ``BLOCK_SIZE`` and
block b draws from Philox keyed by the master seed with counter word b, so a
campaign is reproducible whatever the number of workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, Optional, Sequence

import numpy as np

from .analytic import (
    ModeCoefficients,
    NetworkConfig,
    abep_direct,
    e2e_breakdown,
    phi_threshold,
    prob_relay_active,
    table1_coeffs,
)
from .constellations import (
    detect_combined_indices,
    mode_schemes,
    sic_detect_far_indices,
)
from .errors import ConfigurationError
from .threshold_opt import DEFAULT_CONVENTION, Convention, optimum_threshold

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096
DEFAULT_TARGET_ERRORS = 2000
DEFAULT_MAX_BITS = 10 ** 8
MIN_TARGET_ERRORS = 100


class PolicyKind(Enum):
    FIXED = "fixed"
    OPTIMUM = "optimum"
    ALWAYS = "always"
    NEVER = "never"
    PERFECT_SIC = "perfect-sic"


@dataclass(frozen=True)
class RelayPolicy:
    """When the near user relays, and what it relays."""

    kind: PolicyKind
    sinr_th: float = 0.0
    convention: Convention = DEFAULT_CONVENTION

    @classmethod
    def fixed(cls, sinr_th: float) -> "RelayPolicy":
        if not sinr_th >= 0.0:
            raise ConfigurationError(f"fixed threshold must be >= 0, got {sinr_th}")
        return cls(PolicyKind.FIXED, float(sinr_th))

    @classmethod
    def optimum(cls, convention: Convention = DEFAULT_CONVENTION) -> "RelayPolicy":
        return cls(PolicyKind.OPTIMUM, convention=convention)

    @classmethod
    def always(cls) -> "RelayPolicy":
        return cls(PolicyKind.ALWAYS)

    @classmethod
    def never(cls) -> "RelayPolicy":
        return cls(PolicyKind.NEVER, math.inf)

    @classmethod
    def perfect_sic(cls, sinr_th: float = 0.0) -> "RelayPolicy":
        return cls(PolicyKind.PERFECT_SIC, float(sinr_th))

    @classmethod
    def parse(cls, descriptor: str) -> "RelayPolicy":
        """Parse ``fixed:<v> | optimum | always | never | perfect-sic[:<v>]``."""
        name, _, value = descriptor.strip().lower().partition(":")
        try:
            if name == "fixed" and value:
                return cls.fixed(float(value))
            if name == "perfect-sic":
                return cls.perfect_sic(float(value) if value else 0.0)
            if name == "optimum":
                return cls.optimum(Convention(value) if value else DEFAULT_CONVENTION)
            if name == "always" and not value:
                return cls.always()
            if name == "never" and not value:
                return cls.never()
        except ValueError as e:
            raise ConfigurationError(f"bad policy descriptor {descriptor!r}: {e}") from e
        raise ConfigurationError(
            f"bad policy descriptor {descriptor!r}; expected fixed:<v>, optimum, "
            f"always, never or perfect-sic"
        )

    def describe(self) -> str:
        if self.kind is PolicyKind.FIXED:
            return f"fixed:{self.sinr_th:g}"
        if self.kind is PolicyKind.PERFECT_SIC and self.sinr_th > 0.0:
            return f"perfect-sic:{self.sinr_th:g}"
        if self.kind is PolicyKind.OPTIMUM and self.convention is not DEFAULT_CONVENTION:
            return f"optimum:{self.convention.value}"
        return self.kind.value

    @property
    def forwards_true_symbol(self) -> bool:
        return self.kind is PolicyKind.PERFECT_SIC

    def resolve_threshold(self, coeffs: ModeCoefficients, config: NetworkConfig) -> float:
        """SINR threshold gating the relay at this operating point (inf = never)."""
        if self.kind is PolicyKind.OPTIMUM:
            return optimum_threshold(coeffs, config, self.convention).sinr_th_opt
        if self.kind is PolicyKind.ALWAYS:
            return 0.0
        return self.sinr_th


def analytic_abep(coeffs: ModeCoefficients, config: NetworkConfig,
                  policy: RelayPolicy) -> float:
    """Closed-form far-user ABEP under a relay policy."""
    if policy.kind is PolicyKind.NEVER:
        return abep_direct(coeffs, config.gamma_s2)
    sinr_th = policy.resolve_threshold(coeffs, config)
    return e2e_breakdown(coeffs, config, sinr_th,
                         perfect_sic=policy.forwards_true_symbol).total


def analytic_relay_fraction(coeffs: ModeCoefficients, config: NetworkConfig,
                            policy: RelayPolicy) -> float:
    sinr_th = policy.resolve_threshold(coeffs, config)
    if math.isinf(sinr_th):
        return 0.0
    return prob_relay_active(phi_threshold(sinr_th, config.a1, config.a2),
                             config.gamma_s1)


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

def block_generator(master_seed: int, block_index: int) -> np.random.Generator:
    """Independent counter-based stream for one block of slots."""
    if master_seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {master_seed}")
    bit_generator = np.random.Philox(key=master_seed,
                                     counter=[0, 0, block_index, 0])
    return np.random.Generator(bit_generator)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Child seed for one campaign of a sweep, e.g. keyed by (mode, point index)."""
    words = np.random.SeedSequence(master_seed, spawn_key=keys).generate_state(2, np.uint64)
    return int(words[0]) | (int(words[1]) << 64)


def sample_channel(sigma2: float, rng: np.random.Generator,
                   size: Optional[int] = None):
    """Circularly-symmetric complex Gaussian fading with total variance sigma2."""
    scale = math.sqrt(sigma2 / 2.0)
    h = scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
    return complex(h) if size is None else h


def _noise(rng: np.random.Generator, size: int) -> np.ndarray:
    return sample_channel(1.0, rng, size)


# ---------------------------------------------------------------------------
# Slots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialOutcome:
    relay_active: bool
    sic_correct: bool
    ue2_bit_errors: int
    bits: int


@dataclass(frozen=True)
class BlockCounts:
    slots: int
    bits: int
    errors: int
    squared_errors: int
    relay_active: int
    sic_bit_errors: int


def _simulate_slots(config: NetworkConfig, mode_id: int, sinr_th: float,
                    forwards_true: bool, rng: np.random.Generator,
                    n: int) -> Dict[str, np.ndarray]:
    near, far = mode_schemes(mode_id)
    a1, a2 = config.a1, config.a2
    sqrt_ps, sqrt_pr = math.sqrt(config.ps), math.sqrt(config.pr)

    x1 = rng.integers(near.order, size=n)
    x2 = rng.integers(far.order, size=n)
    h_s1 = sample_channel(config.sigma2_s1, rng, n)
    h_s2 = sample_channel(config.sigma2_s2, rng, n)
    h_r = sample_channel(config.sigma2_r, rng, n)
    n_s1, n_s2, n_r = _noise(rng, n), _noise(rng, n), _noise(rng, n)

    composite = math.sqrt(a1) * near.points[x1] + math.sqrt(a2) * far.points[x2]
    y_s1 = sqrt_ps * h_s1 * composite + n_s1
    y_s2 = sqrt_ps * h_s2 * composite + n_s2

    gain_s1 = config.rho * np.abs(h_s1) ** 2
    sinr = a2 * gain_s1 / (a1 * gain_s1 + 1.0)
    active = sinr >= sinr_th

    x2_hat = sic_detect_far_indices(y_s1, h_s1, sqrt_ps, mode_id, a1, a2)
    relayed = x2 if forwards_true else x2_hat
    y_r = sqrt_pr * h_r * far.points[relayed] + n_r

    y2 = y_s2 * np.conj(h_s2) + np.where(active, y_r * np.conj(h_r), 0.0)
    decided = detect_combined_indices(y2, h_s2, h_r, active, sqrt_ps, sqrt_pr,
                                      mode_id, a1, a2)
    return {
        "relay_active": active,
        "sic_correct": x2_hat == x2,
        "sic_errors": far.hamming[x2, x2_hat],
        "errors": far.hamming[x2, decided],
        "bits_per_slot": np.full(n, far.bits_per_symbol),
    }


def run_slot(config: NetworkConfig, mode_id: int, policy: RelayPolicy,
             rng: np.random.Generator) -> TrialOutcome:
    """Simulate a single slot of the two-phase protocol."""
    coeffs = table1_coeffs(mode_id, config.a1, config.a2)
    sinr_th = policy.resolve_threshold(coeffs, config)
    slot = _simulate_slots(config, mode_id, sinr_th, policy.forwards_true_symbol, rng, 1)
    return TrialOutcome(
        relay_active=bool(slot["relay_active"][0]),
        sic_correct=bool(slot["sic_correct"][0]),
        ue2_bit_errors=int(slot["errors"][0]),
        bits=int(slot["bits_per_slot"][0]),
    )


def run_block(config: NetworkConfig, mode_id: int, sinr_th: float,
              forwards_true: bool, master_seed: int, block_index: int,
              block_size: int = BLOCK_SIZE) -> BlockCounts:
    rng = block_generator(master_seed, block_index)
    slots = _simulate_slots(config, mode_id, sinr_th, forwards_true, rng, block_size)
    return BlockCounts(
        slots=block_size,
        bits=int(np.sum(slots["bits_per_slot"])),
        errors=int(np.sum(slots["errors"])),
        squared_errors=int(np.sum(slots["errors"] ** 2)),
        relay_active=int(np.count_nonzero(slots["relay_active"])),
        sic_bit_errors=int(np.sum(slots["sic_errors"])),
    )


# ---------------------------------------------------------------------------
# Campaigns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StopRule:
    target_errors: int = DEFAULT_TARGET_ERRORS
    max_bits: int = DEFAULT_MAX_BITS

    def __post_init__(self) -> None:
        if self.target_errors < MIN_TARGET_ERRORS:
            raise ConfigurationError(
                f"target_errors must be >= {MIN_TARGET_ERRORS}, got {self.target_errors}"
            )
        if self.max_bits <= 0:
            raise ConfigurationError(f"max_bits must be positive, got {self.max_bits}")


@dataclass(frozen=True)
class CampaignResult:
    ber: float
    std_err: float
    bits_simulated: int
    errors_observed: int
    relay_active_fraction: float
    slots: int
    sinr_th_used: float
    sic_ber: float = 0.0
    unresolved: bool = False

    @property
    def relay_std_err(self) -> float:
        p = self.relay_active_fraction
        return math.sqrt(p * (1.0 - p) / self.slots) if self.slots else 0.0


def wald_std_err(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n > 0 else 0.0


def slot_std_err(bits: int, errors: int, squared_errors: int, slots: int) -> float:
    """
    Standard error of the BER with the slot as the sampling unit.

    Bits of one symbol share a channel draw, so their errors are correlated;
    for one bit per slot this is the Wald error.
    """
    if slots <= 0 or bits <= 0:
        return 0.0
    per_slot = bits / slots
    mean = errors / bits
    second = squared_errors / (per_slot * per_slot * slots)
    return math.sqrt(max(second - mean * mean, 0.0) / slots)


def _blocks(config: NetworkConfig, mode_id: int, sinr_th: float,
            forwards_true: bool, master_seed: int, workers: int,
            block_size: int) -> Iterator[BlockCounts]:
    """Block counts in index order; ``workers`` blocks are simulated at a time."""
    def job(index: int) -> BlockCounts:
        return run_block(config, mode_id, sinr_th, forwards_true, master_seed,
                         index, block_size)

    start = 0
    if workers <= 1:
        while True:
            yield job(start)
            start += 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while True:
            for counts in pool.map(job, range(start, start + workers)):
                yield counts
            start += workers


def run_campaign(config: NetworkConfig, mode_id: int, policy: RelayPolicy,
                 stop: StopRule = StopRule(), master_seed: int = 0,
                 workers: int = 1, block_size: int = BLOCK_SIZE) -> CampaignResult:
    """Simulate slots until the error target or the bit budget is reached."""
    if workers < 1:
        raise ConfigurationError(f"workers must be >= 1, got {workers}")
    coeffs = table1_coeffs(mode_id, config.a1, config.a2)
    sinr_th = policy.resolve_threshold(coeffs, config)

    slots = bits = errors = squared = active = sic_errors = 0
    blocks = _blocks(config, mode_id, sinr_th, policy.forwards_true_symbol,
                     master_seed, workers, block_size)
    for index, counts in enumerate(blocks):
        slots += counts.slots
        bits += counts.bits
        errors += counts.errors
        squared += counts.squared_errors
        active += counts.relay_active
        sic_errors += counts.sic_bit_errors
        logger.debug(f"block {index}: {errors} errors in {bits} bits")
        if errors >= stop.target_errors or bits >= stop.max_bits:
            break
    blocks.close()

    ber = errors / bits
    result = CampaignResult(
        ber=ber,
        std_err=slot_std_err(bits, errors, squared, slots),
        bits_simulated=bits,
        errors_observed=errors,
        relay_active_fraction=active / slots,
        slots=slots,
        sinr_th_used=sinr_th,
        sic_ber=sic_errors / bits,
        unresolved=errors == 0,
    )
    if result.unresolved:
        logger.warning(f"mode {mode_id}, {policy.describe()}, {config.snr_db:.1f} dB: "
                       f"no errors in {bits} bits, BER below resolution")
    else:
        logger.info(f"mode {mode_id}, {policy.describe()}, {config.snr_db:.1f} dB: "
                    f"BER {ber:.4e} +/- {result.std_err:.1e} ({errors} errors)")
    return result


def fit_loglog_slope(snr_db: Sequence[float], ber: Sequence[float]) -> float:
    """Least-squares slope of log10(BER) against log10(SNR); -diversity order."""
    snr = np.asarray(snr_db, dtype=float) / 10.0
    values = np.log10(np.asarray(ber, dtype=float))
    slope, _ = np.polyfit(snr, values, 1)
    return float(slope)
