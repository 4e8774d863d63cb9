"""
Acceptance checks: closed forms against quadrature, the optimum threshold
against brute force, and the Monte Carlo simulator against the closed forms.

Each check returns one CheckResult per comparison; ``run_validation`` runs
them all under a tolerance profile and gathers a ValidationReport.
"""

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .analytic import (
    ModeCoefficients,
    NetworkConfig,
    RelayLinkModel,
    abep_diversity,
    abep_direct,
    abep_e2e,
    abep_propagation,
    abep_sic_at_ue1,
    abep_sic_unconditional,
    phi_threshold,
    prob_relay_active,
    quad_direct,
    quad_diversity,
    quad_diversity_combiner,
    quad_propagation,
    quad_sic_at_ue1,
    table1_coeffs,
)
from .constellations import MODES, SchemeKind, composite_alphabet, get_scheme
from .errors import ConfigurationError, ValidationFailure
from .simulator import (
    CampaignResult,
    RelayPolicy,
    StopRule,
    analytic_abep,
    block_generator,
    derive_seed,
    fit_loglog_slope,
    run_campaign,
    sample_channel,
    wald_std_err,
)
from .threshold_opt import brute_force_threshold, optimum_threshold, sinr_th_opt

logger = logging.getLogger(__name__)

DEFAULT_SEED = 2019
QUADRATURE_TOLERANCE = 1e-6
EXACT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Profile:
    """How hard the suite looks: sigma multiplier and Monte Carlo effort."""

    name: str
    sigma: float
    target_errors: int
    max_bits: int
    quadrature_points: int
    sweep_db: Tuple[float, ...]
    ordering_db: Tuple[float, ...]


PROFILES: Dict[str, Profile] = {
    "strict": Profile("strict", 3.0, 2000, 10 ** 8, 4,
                      (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0), (0.0, 5.0, 10.0, 15.0, 20.0)),
    # wider band: the full suite makes some sixty Monte Carlo comparisons
    "default": Profile("default", 4.0, 2000, 10 ** 8, 4,
                       (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0), (0.0, 5.0, 10.0, 15.0, 20.0)),
    "quick": Profile("quick", 4.0, 300, 10 ** 7, 2,
                     (0.0, 10.0, 20.0), (0.0, 10.0, 20.0)),
}


@dataclass(frozen=True)
class Scenario:
    """A named network setting used by the checks (and by the tests)."""

    name: str
    mode_id: int
    a1: float
    sigma2_s1_db: float = 0.0
    sigma2_s2_db: float = 0.0
    sigma2_r_db: float = 0.0
    relay_power_ratio: float = 0.5

    def config(self, snr_db: float) -> NetworkConfig:
        return NetworkConfig.from_db(self.a1, snr_db, self.sigma2_s1_db,
                                     self.sigma2_s2_db, self.sigma2_r_db,
                                     self.relay_power_ratio)

    def coeffs(self, mode_id: Optional[int] = None) -> ModeCoefficients:
        return table1_coeffs(mode_id or self.mode_id, self.a1, 1.0 - self.a1)


# all links 0 dB, a1 = 0.1: threshold curve and the six-mode BER sweep
EQUAL_GAINS = Scenario("equal-gains", 1, 0.1)
# strong source-relay and relay-far links, a1 = 0.2
STRONG_RELAY = Scenario("strong-relay", 1, 0.2, sigma2_s1_db=10.0, sigma2_r_db=10.0)
# strong links towards the far user, QPSK near user over BPSK far user
STRONG_FAR_LINKS = Scenario("strong-far-links", 3, 0.2, sigma2_s2_db=10.0, sigma2_r_db=10.0)

SWEEP_THRESHOLD = 2.0
THRESHOLD_SNR_DB = tuple(float(x) for x in range(0, 45, 5))
SLOPE_SNR_DB = (25.0, 30.0, 35.0, 40.0)
OPTIMUM_SLOPE_RANGE = (-2.3, -1.7)
ALWAYS_SLOPE_RANGE = (-1.3, -0.7)


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: float
    expected: float
    tolerance: float
    seed: Optional[int] = None
    detail: str = ""


@dataclass
class ValidationReport:
    profile: str
    seed: int
    checks: List[CheckResult] = field(default_factory=list)
    runtime: float = 0.0
    check_runtimes: Dict[str, float] = field(default_factory=dict)

    @property
    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def raise_for_failures(self) -> None:
        if self.failures:
            raise ValidationFailure(len(self.failures), len(self.checks))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "profile": self.profile,
            "seed": self.seed,
            "passed": self.passed,
            "total_checks": len(self.checks),
            "failed_checks": len(self.failures),
            "runtime_seconds": round(self.runtime, 3),
            "check_runtimes": {k: round(v, 3) for k, v in self.check_runtimes.items()},
            "checks": [asdict(c) for c in self.checks],
        }

    def format(self) -> str:
        lines = [f"validation profile '{self.profile}', seed {self.seed}"]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            line = (f"  [{status}] {c.name}: observed {c.observed:.6g}, "
                    f"expected {c.expected:.6g}, tolerance {c.tolerance:.3g}")
            if c.seed is not None:
                line += f", seed {c.seed}"
            if c.detail:
                line += f" ({c.detail})"
            lines.append(line)
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks "
                     f"passed in {self.runtime:.1f} s")
        return "\n".join(lines)


@dataclass(frozen=True)
class Context:
    profile: Profile
    seed: int
    workers: int = 1
    corrupt_beta: Optional[float] = None

    def stop_rule(self) -> StopRule:
        return StopRule(self.profile.target_errors, self.profile.max_bits)


def _compare(name: str, observed: float, expected: float, tolerance: float,
             seed: Optional[int] = None, detail: str = "") -> CheckResult:
    passed = bool(abs(observed - expected) <= tolerance)
    return CheckResult(name, passed, float(observed), float(expected), float(tolerance),
                       seed, detail)


def _bound(name: str, observed: float, limit: float, seed: Optional[int] = None,
           detail: str = "") -> CheckResult:
    """observed <= limit."""
    return CheckResult(name, bool(observed <= limit), float(observed), float(limit),
                       0.0, seed, detail)


def _mc_tolerance(ctx: Context, result: CampaignResult) -> float:
    return ctx.profile.sigma * result.std_err


# ---------------------------------------------------------------------------
# Deterministic checks
# ---------------------------------------------------------------------------

def check_constellations(ctx: Context) -> List[CheckResult]:
    results = []
    for scheme in (get_scheme(kind) for kind in SchemeKind):
        energy = float(np.mean(np.abs(scheme.points) ** 2))
        results.append(_compare(f"unit energy {scheme.name}", energy, 1.0, EXACT_TOLERANCE))
        distances = np.abs(scheme.points[:, None] - scheme.points[None, :])
        np.fill_diagonal(distances, np.inf)
        neighbours = np.isclose(distances, distances.min())
        worst = int(np.max(scheme.hamming[neighbours]))
        results.append(_compare(f"Gray mapping {scheme.name}", worst, 1, 0))
    for mode_id in MODES:
        points, _, _ = composite_alphabet(mode_id, 0.1, 0.9)
        energy = float(np.mean(np.abs(points) ** 2))
        results.append(_compare(f"superposed energy mode {mode_id}", energy, 1.0,
                                EXACT_TOLERANCE))
    return results


def check_threshold_round_trip(ctx: Context) -> List[CheckResult]:
    worst = 0.0
    for a1 in (0.1, 0.2, 0.3, 0.45):
        a2 = 1.0 - a1
        for sinr in np.linspace(0.0, 0.999 * a2 / a1, 41):
            back = sinr_th_opt(phi_threshold(sinr, a1, a2), a1, a2)
            worst = max(worst, abs(back - sinr) / max(1.0, sinr))
    return [_compare("SINR/phi threshold round trip", worst, 0.0, 1e-9)]


def check_sic_at_zero(ctx: Context) -> List[CheckResult]:
    worst = 0.0
    for mode_id in MODES:
        coeffs = table1_coeffs(mode_id, 0.1, 0.9)
        for gamma in (0.5, 1.0, 10.0, 100.0, 1e4):
            worst = max(worst, abs(abep_sic_at_ue1(coeffs, 0.0, gamma)
                                   - abep_direct(coeffs, gamma)))
    return [_compare("SIC-stage ABEP at zero threshold equals direct ABEP", worst, 0.0,
                     EXACT_TOLERANCE)]


def _quadrature_points(ctx: Context) -> List[Tuple[ModeCoefficients, float, float, float]]:
    rng = np.random.default_rng(ctx.seed)
    points = []
    for _ in range(ctx.profile.quadrature_points):
        mode_id = int(rng.integers(1, 7))
        coeffs = table1_coeffs(mode_id, 0.1, 0.9)
        gamma = float(10 ** rng.uniform(-0.5, 2.5))
        gamma_r = float(10 ** rng.uniform(-0.5, 2.5))
        phi = float(rng.uniform(0.0, 5.0))
        points.append((coeffs, gamma, gamma_r, phi))
    return points


def check_quadrature(ctx: Context) -> List[CheckResult]:
    """Closed forms against direct numerical integration of their defining integrals."""
    worst: Dict[str, float] = {}
    for coeffs, gamma, gamma_r, phi in _quadrature_points(ctx):
        closed = coeffs
        if ctx.corrupt_beta is not None:
            closed = coeffs.with_beta(tuple(b * (1.0 + ctx.corrupt_beta) for b in coeffs.beta))
        pairs = {
            "conditional SIC-stage ABEP": (abep_sic_at_ue1(closed, phi, gamma),
                                           quad_sic_at_ue1(coeffs, phi, gamma)),
            "direct-link ABEP": (abep_direct(closed, gamma), quad_direct(coeffs, gamma)),
            "two-branch MRC diversity ABEP": (
                abep_diversity(closed, gamma, gamma_r, model=RelayLinkModel.PRINTED),
                quad_diversity(coeffs, gamma, gamma_r)),
            "right-relay combiner ABEP": (abep_diversity(closed, gamma, gamma_r),
                                          quad_diversity_combiner(coeffs, gamma, gamma_r)),
            "wrong-relay combiner ABEP": (abep_propagation(closed, gamma, gamma_r),
                                          quad_propagation(coeffs, gamma, gamma_r)),
        }
        for label, (value, reference) in pairs.items():
            worst[label] = max(worst.get(label, 0.0), abs(value - reference))
    return [_compare(f"quadrature: {label}", error, 0.0, QUADRATURE_TOLERANCE, ctx.seed,
                     "max abs error over sampled operating points")
            for label, error in worst.items()]


def _threshold_curve(scenario: Scenario) -> Tuple[List[float], List[float], List[float]]:
    coeffs = scenario.coeffs()
    closed, brute, steps = [], [], []
    for snr_db in THRESHOLD_SNR_DB:
        config = scenario.config(snr_db)
        closed.append(optimum_threshold(coeffs, config).sinr_th_opt)
        result = brute_force_threshold(coeffs, config)
        brute.append(result.sinr_th)
        steps.append(result.grid_step)
    return closed, brute, steps


def check_optimum_threshold(ctx: Context) -> List[CheckResult]:
    results = []
    for scenario in (EQUAL_GAINS, STRONG_RELAY):
        coeffs = scenario.coeffs()
        bound = (1.0 - scenario.a1) / scenario.a1
        closed, brute, steps = _threshold_curve(scenario)
        ratio = max(abs(c - b) / max(1e-3, step) for c, b, step in zip(closed, brute, steps))
        results.append(_bound(f"optimum vs brute force ({scenario.name})", ratio, 1.0,
                              detail="largest |closed - brute| / max(1e-3, grid step)"))
        drop = max([0.0] + [prev - nxt for prev, nxt in zip(closed, closed[1:])])
        results.append(_bound(f"optimum nondecreasing in SNR ({scenario.name})", drop, 1e-9,
                              detail="largest decrease between SNR points"))
        results.append(CheckResult(f"optimum below a2/a1 ({scenario.name})",
                                   max(closed) < bound, max(closed), bound, 0.0,
                                   detail="largest optimum threshold"))
        excess = -math.inf
        for snr_db, c in zip(THRESHOLD_SNR_DB, closed):
            config = scenario.config(snr_db)
            at_optimum = abep_e2e(coeffs, config, c)
            for fixed in (0.0, 1.0, 2.0):
                if fixed < bound:
                    excess = max(excess, at_optimum - abep_e2e(coeffs, config, fixed))
        results.append(_bound(f"optimum beats fixed thresholds ({scenario.name})", excess,
                              1e-9, detail="largest ABEP excess over SINR_th in {0, 1, 2}"))
    return results


def check_diversity_slopes(ctx: Context) -> List[CheckResult]:
    scenario = STRONG_FAR_LINKS
    coeffs = scenario.coeffs()
    configs = [scenario.config(snr_db) for snr_db in SLOPE_SNR_DB]
    curves = {
        "optimum": [analytic_abep(coeffs, c, RelayPolicy.optimum()) for c in configs],
        "always": [analytic_abep(coeffs, c, RelayPolicy.always()) for c in configs],
        "never": [analytic_abep(coeffs, c, RelayPolicy.never()) for c in configs],
    }
    slopes = {name: fit_loglog_slope(SLOPE_SNR_DB, ber) for name, ber in curves.items()}
    results = []
    for name, (lo, hi) in (("optimum", OPTIMUM_SLOPE_RANGE), ("always", ALWAYS_SLOPE_RANGE)):
        centre, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        results.append(_compare(f"high-SNR slope, {name} relaying", slopes[name], centre, half,
                                detail=f"fit over {SLOPE_SNR_DB[0]:g}-{SLOPE_SNR_DB[-1]:g} dB"))
    results.append(_bound("never relaying has the shallower slope", slopes["optimum"],
                          slopes["never"]))
    return results


# ---------------------------------------------------------------------------
# Monte Carlo checks
# ---------------------------------------------------------------------------

def check_channel_statistics(ctx: Context) -> List[CheckResult]:
    n = 10 ** 6
    rho = 10.0
    seed = derive_seed(ctx.seed, 100)
    h = sample_channel(1.0, block_generator(seed, 0), n)
    gain = rho * np.abs(h) ** 2
    ks = stats.kstest(gain, stats.expon(scale=rho).cdf).statistic
    return [
        _compare("channel mean power", float(np.mean(np.abs(h) ** 2)), 1.0, 0.005, seed),
        _bound("channel gain KS statistic vs exponential", float(ks), 0.002, seed),
    ]


def check_link_oracles(ctx: Context) -> List[CheckResult]:
    stop = ctx.stop_rule()
    results = []
    config = EQUAL_GAINS.config(10.0)
    coeffs = EQUAL_GAINS.coeffs()

    seed = derive_seed(ctx.seed, 200)
    result = run_campaign(config, 1, RelayPolicy.fixed(SWEEP_THRESHOLD), stop, seed, ctx.workers)
    expected = prob_relay_active(phi_threshold(SWEEP_THRESHOLD, config.a1, config.a2),
                                 config.gamma_s1)
    results.append(_compare("relay activation probability", result.relay_active_fraction,
                            expected, ctx.profile.sigma * result.relay_std_err, seed))

    seed = derive_seed(ctx.seed, 201)
    result = run_campaign(config, 1, RelayPolicy.never(), stop, seed, ctx.workers)
    expected = abep_direct(coeffs, config.gamma_s2)
    results.append(_compare("never relaying vs direct-link ABEP", result.ber, expected,
                            _mc_tolerance(ctx, result), seed))

    sic_config = EQUAL_GAINS.config(20.0)
    seed = derive_seed(ctx.seed, 202)
    result = run_campaign(sic_config, 1, RelayPolicy.always(), stop, seed, ctx.workers)
    expected = abep_sic_unconditional(coeffs, sic_config.gamma_s1)
    sic_std = wald_std_err(result.sic_ber, result.bits_simulated)
    results.append(_compare("near-user detection of far-user symbols", result.sic_ber,
                            expected, ctx.profile.sigma * sic_std, seed))

    div_scenario = STRONG_FAR_LINKS
    div_config = div_scenario.config(0.0)
    seed = derive_seed(ctx.seed, 203)
    result = run_campaign(div_config, div_scenario.mode_id, RelayPolicy.perfect_sic(), stop,
                          seed, ctx.workers)
    expected = abep_diversity(div_scenario.coeffs(), div_config.gamma_s2, div_config.gamma_r,
                              div_config.relay_power_ratio)
    results.append(_compare("perfect-SIC relaying vs diversity ABEP", result.ber, expected,
                            _mc_tolerance(ctx, result), seed))
    return results


def check_determinism(ctx: Context) -> List[CheckResult]:
    stop = StopRule(target_errors=200, max_bits=10 ** 6)
    seed = derive_seed(ctx.seed, 300)
    config = EQUAL_GAINS.config(10.0)
    runs = [run_campaign(config, 2, RelayPolicy.optimum(), stop, seed, workers)
            for workers in (1, 3)]
    mismatches = sum(a != b for a, b in zip(asdict(runs[0]).values(), asdict(runs[1]).values()))
    return [_compare("campaign identical for 1 and 3 workers", mismatches, 0, 0, seed)]


def check_mode_sweep(ctx: Context) -> List[CheckResult]:
    """Every mode at SINR_th = 2 over the SNR sweep, where the error target was met."""
    stop = ctx.stop_rule()
    policy = RelayPolicy.fixed(SWEEP_THRESHOLD)
    results = []
    for mode_id in MODES:
        coeffs = EQUAL_GAINS.coeffs(mode_id)
        for index, snr_db in enumerate(ctx.profile.sweep_db):
            config = EQUAL_GAINS.config(snr_db)
            seed = derive_seed(ctx.seed, 400, mode_id, index)
            result = run_campaign(config, mode_id, policy, stop, seed, ctx.workers)
            if result.errors_observed < stop.target_errors:
                logger.info(f"mode {mode_id} at {snr_db:g} dB: {result.errors_observed} errors, "
                            f"below target, not compared")
                continue
            expected = analytic_abep(coeffs, config, policy)
            results.append(_compare(f"mode {mode_id} at {snr_db:g} dB vs end-to-end ABEP",
                                    result.ber, expected,
                                    _mc_tolerance(ctx, result), seed))
    return results


def check_policy_ordering(ctx: Context) -> List[CheckResult]:
    scenario = STRONG_FAR_LINKS
    stop = ctx.stop_rule()
    results = []
    for index, snr_db in enumerate(ctx.profile.ordering_db):
        config = scenario.config(snr_db)
        seed = derive_seed(ctx.seed, 500, index)
        runs = {
            name: run_campaign(config, scenario.mode_id, policy, stop, seed, ctx.workers)
            for name, policy in (("perfect-sic", RelayPolicy.perfect_sic()),
                                 ("optimum", RelayPolicy.optimum()),
                                 ("fixed:1", RelayPolicy.fixed(1.0)),
                                 ("fixed:2", RelayPolicy.fixed(2.0)),
                                 ("fixed:4", RelayPolicy.fixed(4.0)))
        }
        pairs = [("perfect-sic", "optimum")] + [("optimum", f) for f in ("fixed:1", "fixed:2",
                                                                         "fixed:4")]
        for better, worse in pairs:
            a, b = runs[better], runs[worse]
            slack = ctx.profile.sigma * math.hypot(a.std_err, b.std_err)
            results.append(_bound(f"{better} <= {worse} at {snr_db:g} dB", a.ber - b.ber,
                                  slack, seed, "BER difference"))
    return results


CHECKS: Sequence[Tuple[str, Callable[[Context], List[CheckResult]]]] = (
    ("constellations", check_constellations),
    ("threshold round trip", check_threshold_round_trip),
    ("SIC stage at zero threshold", check_sic_at_zero),
    ("quadrature", check_quadrature),
    ("optimum threshold", check_optimum_threshold),
    ("diversity slopes", check_diversity_slopes),
    ("channel statistics", check_channel_statistics),
    ("link oracles", check_link_oracles),
    ("determinism", check_determinism),
    ("mode sweep", check_mode_sweep),
    ("policy ordering", check_policy_ordering),
)


def run_validation(profile: str = "default", seed: int = DEFAULT_SEED, workers: int = 1,
                   corrupt_beta: Optional[float] = None,
                   only: Optional[Sequence[str]] = None) -> ValidationReport:
    """Run the acceptance suite; ``only`` restricts it to the named check groups."""
    if profile not in PROFILES:
        raise ConfigurationError(f"unknown validation profile {profile!r}, "
                                 f"expected one of {', '.join(PROFILES)}")
    if seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {seed}")
    ctx = Context(PROFILES[profile], seed, workers, corrupt_beta)
    if corrupt_beta is not None:
        logger.warning(f"beta coefficients corrupted by {corrupt_beta:+g} (relative) "
                       f"in the quadrature check")

    report = ValidationReport(profile, seed)
    started = time.perf_counter()
    for group, check in CHECKS:
        if only is not None and group not in only:
            continue
        logger.info(f"Running {group} checks...")
        group_started = time.perf_counter()
        try:
            results = check(ctx)
        except Exception as e:
            logger.error(f"{group} checks raised {type(e).__name__}: {e}")
            results = [CheckResult(group, False, math.nan, math.nan, 0.0, seed,
                                   f"{type(e).__name__}: {e}")]
        report.check_runtimes[group] = time.perf_counter() - group_started
        for result in results:
            if not result.passed:
                logger.warning(f"FAILED {result.name}: observed {result.observed:.6g}, "
                               f"expected {result.expected:.6g}")
        report.checks.extend(results)
    report.runtime = time.perf_counter() - started
    return report
