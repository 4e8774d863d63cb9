"""
Command line experiment runner.

Subcommands write self-describing CSV files (a '# key: value' header carrying
the full experiment spec and seed, then the table) or print to stdout:

    tbs-noma curve      BER against SNR for one or all modes, MC and closed form
    tbs-noma compare    several relay policies on the same SNR grid
    tbs-noma threshold  closed-form optimum threshold against brute force
    tbs-noma table      the (N, alpha, beta) coefficients of a mode
    tbs-noma validate   the acceptance suite

Exit codes: 0 ok, 1 validation failure, 2 bad configuration.
"""

import argparse
import csv
import logging
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml

from . import __version__
from .analytic import abep_e2e, table1_coeffs
from .config import Config, ExperimentSpec
from .constellations import MODES, check_power_split, mode_schemes
from .errors import ConfigurationError, TbsNomaError
from .simulator import (
    RelayPolicy,
    StopRule,
    analytic_abep,
    analytic_relay_fraction,
    derive_seed,
    run_campaign,
)
from .threshold_opt import Convention, brute_force_threshold, optimum_threshold
from .validation import DEFAULT_SEED, PROFILES, ValidationReport, run_validation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_BAD_CONFIGURATION = 2

CURVE_COLUMNS = [
    "snr_db", "mode", "policy", "sinr_th_used", "ber_analytic", "ber_mc", "mc_std_err",
    "bits", "errors", "relay_active_frac_mc", "relay_active_frac_analytic", "unresolved",
]
DEFAULT_COMPARE_POLICIES = "never,always,perfect-sic,fixed:1,fixed:2,fixed:4,optimum"


@dataclass(frozen=True)
class BerPoint:
    """One SNR grid point of a BER curve."""

    snr_db: float
    mode_id: int
    policy: str
    sinr_th_used: float
    ber_analytic: float
    ber_mc: float
    mc_std_err: float
    bits: int
    errors: int
    relay_active_frac_mc: float
    relay_active_frac_analytic: float
    unresolved: bool

    def as_row(self) -> List[str]:
        return [
            _fmt(self.snr_db), str(self.mode_id), self.policy, _fmt(self.sinr_th_used),
            _fmt(self.ber_analytic), _fmt(self.ber_mc), _fmt(self.mc_std_err),
            str(self.bits), str(self.errors), _fmt(self.relay_active_frac_mc),
            _fmt(self.relay_active_frac_analytic), str(int(self.unresolved)),
        ]


def _fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return format(value, ".10g")


def write_csv(path: Path, header: Sequence[str], columns: Sequence[str],
              rows: Sequence[Sequence[str]]) -> Path:
    """Write a '#'-commented header followed by a plain CSV table."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            for line in header:
                f.write(f"# {line}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(rows)
    except OSError as e:
        raise ConfigurationError(f"cannot write {path}: {e}") from e
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def simulate_point(spec: ExperimentSpec, mode_id: int, policy: RelayPolicy,
                   snr_db: float, seed: int) -> BerPoint:
    """Closed form and Monte Carlo estimate at one SNR point."""
    config = spec.network_config(snr_db)
    coeffs = table1_coeffs(mode_id, config.a1, config.a2)
    stop = StopRule(spec.target_errors, spec.max_bits)
    result = run_campaign(config, mode_id, policy, stop, seed, spec.workers)
    return BerPoint(
        snr_db=snr_db,
        mode_id=mode_id,
        policy=policy.describe(),
        sinr_th_used=result.sinr_th_used,
        ber_analytic=analytic_abep(coeffs, config, policy),
        ber_mc=result.ber,
        mc_std_err=result.std_err,
        bits=result.bits_simulated,
        errors=result.errors_observed,
        relay_active_frac_mc=result.relay_active_fraction,
        relay_active_frac_analytic=analytic_relay_fraction(coeffs, config, policy),
        unresolved=result.unresolved,
    )


def _mode_output(spec: ExperimentSpec, mode_id: int) -> Path:
    out = spec.output
    return out.with_name(f"{out.stem}_mode{mode_id}{out.suffix or '.csv'}")


def cmd_curve(spec: ExperimentSpec, modes: Optional[Sequence[int]] = None) -> List[Path]:
    """One CSV per mode: a row per SNR point. ``modes`` defaults to the experiment's mode."""
    policy = spec.relay_policy()
    written = []
    for mode_id in modes or [spec.mode_id]:
        mode_spec = spec if modes is None else replace(spec, mode_id=mode_id,
                                                       output=_mode_output(spec, mode_id))
        # fail on an invalid power split before any simulation
        table1_coeffs(mode_id, mode_spec.a1, mode_spec.a2)
        rows = [
            simulate_point(mode_spec, mode_id, policy, snr_db,
                           derive_seed(spec.seed, mode_id, index)).as_row()
            for index, snr_db in enumerate(mode_spec.snr_points())
        ]
        written.append(write_csv(mode_spec.output, mode_spec.describe(), CURVE_COLUMNS, rows))
    return written


def cmd_compare(spec: ExperimentSpec, policies: Sequence[str]) -> Path:
    """Every policy on the experiment's SNR grid; policies share random streams per SNR point."""
    parsed = [RelayPolicy.parse(p) for p in policies]
    if not parsed:
        raise ConfigurationError("no policies to compare")
    table1_coeffs(spec.mode_id, spec.a1, spec.a2)
    rows = []
    for index, snr_db in enumerate(spec.snr_points()):
        seed = derive_seed(spec.seed, spec.mode_id, index)
        for policy in parsed:
            rows.append(simulate_point(spec, spec.mode_id, policy, snr_db, seed).as_row())
    header = spec.describe() + [f"policies: {','.join(p.describe() for p in parsed)}"]
    return write_csv(spec.output, header, CURVE_COLUMNS, rows)


def cmd_threshold(spec: ExperimentSpec) -> Path:
    """Closed-form optimum threshold against the brute-force minimiser, per SNR point."""
    coeffs = table1_coeffs(spec.mode_id, spec.a1, spec.a2)
    columns = ["snr_db", "sinr_th_closed_form", "sinr_th_brute_force",
               "abep_at_closed_form", "abep_at_brute_force", "sinr_th_printed_sum",
               "aggregate_delta"] + [f"delta_{i + 1}" for i in range(coeffs.n_terms)]
    rows = []
    for snr_db in spec.snr_points():
        config = spec.network_config(snr_db)
        solution = optimum_threshold(coeffs, config)
        printed = optimum_threshold(coeffs, config, Convention.PRINTED)
        brute = brute_force_threshold(coeffs, config, steps=spec.grid_steps)
        gap = abs(solution.sinr_th_opt - brute.sinr_th)
        if gap > max(1e-3, brute.grid_step):
            logger.warning(f"{snr_db:g} dB: closed form {solution.sinr_th_opt:.6g} and "
                           f"brute force {brute.sinr_th:.6g} disagree by {gap:.3g}")
        rows.append([
            _fmt(snr_db), _fmt(solution.sinr_th_opt), _fmt(brute.sinr_th),
            _fmt(abep_e2e(coeffs, config, solution.sinr_th_opt)), _fmt(brute.abep),
            _fmt(printed.sinr_th_opt), _fmt(solution.aggregate_delta),
        ] + [_fmt(d) for d in solution.per_term_delta])
    return write_csv(spec.output, spec.describe(), columns, rows)


def cmd_table(mode_id: int, a1: float, fmt: str = "text") -> str:
    """The coefficients of a mode as a readable table or a YAML document."""
    check_power_split(a1, 1.0 - a1)
    coeffs = table1_coeffs(mode_id, a1, 1.0 - a1)
    near, far = mode_schemes(mode_id)
    if fmt == "yaml":
        return yaml.safe_dump({
            "mode": mode_id,
            "near_user": near.name,
            "far_user": far.name,
            "a1": a1,
            "a2": 1.0 - a1,
            "n_terms": coeffs.n_terms,
            "far_order": coeffs.m_far,
            "relay_beta": coeffs.relay_beta,
            "terms": [{"alpha": float(a), "beta": float(b)}
                      for a, b in zip(coeffs.alpha, coeffs.beta)],
        }, sort_keys=False)
    if fmt != "text":
        raise ConfigurationError(f"unknown table format {fmt!r}, expected text or yaml")
    lines = [
        f"mode {mode_id}: UE1 {near.name}, UE2 {far.name}, a1 = {a1:g}, a2 = {1.0 - a1:g}",
        f"N = {coeffs.n_terms}, M = {coeffs.m_far}, relay beta = {coeffs.relay_beta:g}",
        f"{'i':>3}  {'alpha':<12}{'beta':<12}",
    ]
    for i, (a, b) in enumerate(zip(coeffs.alpha, coeffs.beta), start=1):
        lines.append(f"{i:>3}  {a:<12.6g}{b:<12.6g}")
    return "\n".join(lines)


def cmd_validate(profile: str = "default", seed: int = DEFAULT_SEED, workers: int = 1,
                 report_path: Optional[Path] = None,
                 corrupt_beta: Optional[float] = None) -> ValidationReport:
    report = run_validation(profile, seed, workers, corrupt_beta)
    if report_path is not None:
        try:
            report_path.parent.mkdir(parents=True, exist_ok=True)
            with open(report_path, "w") as f:
                yaml.safe_dump(report.to_dict(), f, default_flow_style=False, sort_keys=False)
        except OSError as e:
            raise ConfigurationError(f"cannot write report {report_path}: {e}") from e
        logger.info(f"Validation report written to {report_path}")
    return report


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _mode_arg(value: str) -> Any:
    if value == "all":
        return value
    try:
        mode_id = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mode must be 1..6 or 'all', got {value!r}")
    if mode_id not in MODES:
        raise argparse.ArgumentTypeError(f"mode must be 1..6 or 'all', got {value!r}")
    return mode_id


def _logging_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_mutually_exclusive_group()
    group.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    group.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    return parent


def _experiment_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="YAML experiment file")
    parent.add_argument("--save-config", type=Path,
                        help="write the effective configuration to this YAML file")
    parent.add_argument("--mode", type=_mode_arg, help="modulation mode 1..6")
    parent.add_argument("--a1", type=float, help="near-user power fraction, in (0, 0.5)")
    parent.add_argument("--sigma-s1-db", type=float, help="BS-UE1 average gain (dB)")
    parent.add_argument("--sigma-s2-db", type=float, help="BS-UE2 average gain (dB)")
    parent.add_argument("--sigma-r-db", type=float, help="UE1-UE2 average gain (dB)")
    parent.add_argument("--relay-power-ratio", type=float, help="Pr / Ps")
    parent.add_argument("--snr-start", type=float, help="first transmit SNR (dB)")
    parent.add_argument("--snr-stop", type=float, help="last transmit SNR (dB)")
    parent.add_argument("--snr-step", type=float, help="SNR step (dB)")
    parent.add_argument("--policy",
                        help="fixed:<v> | optimum[:<convention>] | always | never | perfect-sic")
    parent.add_argument("--seed", type=int, help="master seed")
    parent.add_argument("--target-errors", type=int, help="stop after this many bit errors")
    parent.add_argument("--max-bits", type=int, help="stop after this many bits")
    parent.add_argument("--workers", type=int, help="parallel simulation threads")
    parent.add_argument("--out", type=Path, help="output CSV path")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tbs-noma",
        description="Threshold-based selective cooperative NOMA: closed-form ABEP, "
                    "Monte Carlo simulation and optimum relaying threshold",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    log_parent, exp_parent = _logging_parent(), _experiment_parent()

    sub.add_parser("curve", parents=[log_parent, exp_parent],
                   help="BER against SNR ('--mode all' writes one CSV per mode)")

    compare = sub.add_parser("compare", parents=[log_parent, exp_parent],
                             help="several relay policies on one SNR grid")
    compare.add_argument("--policies", default=DEFAULT_COMPARE_POLICIES,
                         help=f"comma separated policies (default: {DEFAULT_COMPARE_POLICIES})")

    threshold = sub.add_parser("threshold", parents=[log_parent, exp_parent],
                               help="optimum threshold: closed form against brute force")
    threshold.add_argument("--grid-steps", type=int, help="brute-force grid points")

    table = sub.add_parser("table", parents=[log_parent], help="print the coefficients of a mode")
    table.add_argument("--mode", type=_mode_arg, default=1)
    table.add_argument("--a1", type=float, default=0.1)
    table.add_argument("--format", choices=("text", "yaml"), default="text")

    validate = sub.add_parser("validate", parents=[log_parent], help="run the acceptance suite")
    validate.add_argument("--profile", choices=sorted(PROFILES), default="default")
    validate.add_argument("--seed", type=int, default=DEFAULT_SEED)
    validate.add_argument("--workers", type=int, default=1)
    validate.add_argument("--report", type=Path, help="also write the report as YAML")
    # negative control: perturbs the closed-form beta terms in the quadrature check
    validate.add_argument("--corrupt-beta", type=float, help=argparse.SUPPRESS)
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """Config file (if any) overlaid with the command line flags."""
    config = Config(str(args.config)) if args.config else Config()
    mode = args.mode
    overrides: Dict[str, Any] = {
        "mode_id": None if mode == "all" else mode,
        "a1": args.a1,
        "sigma2_s1_db": args.sigma_s1_db,
        "sigma2_s2_db": args.sigma_s2_db,
        "sigma2_r_db": args.sigma_r_db,
        "relay_power_ratio": args.relay_power_ratio,
        "snr_start": args.snr_start,
        "snr_stop": args.snr_stop,
        "snr_step": args.snr_step,
        "policy": args.policy,
        "seed": args.seed,
        "target_errors": args.target_errors,
        "max_bits": args.max_bits,
        "workers": args.workers,
        "grid_steps": getattr(args, "grid_steps", None),
        "output": args.out,
    }
    spec = ExperimentSpec.from_config(config, overrides)
    if args.save_config:
        spec.to_config().save(str(args.save_config))
    return spec


def run(args: argparse.Namespace) -> int:
    if args.command == "table":
        if args.mode == "all":
            print("\n\n".join(cmd_table(m, args.a1, args.format) for m in MODES))
        else:
            print(cmd_table(args.mode, args.a1, args.format))
        return EXIT_OK

    if args.command == "validate":
        report = cmd_validate(args.profile, args.seed, args.workers, args.report,
                              args.corrupt_beta)
        print(report.format())
        return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED

    if args.mode == "all" and args.command != "curve":
        raise ConfigurationError("--mode all is only supported by curve")
    spec = spec_from_args(args)
    if args.command == "curve":
        modes = list(MODES) if args.mode == "all" else None
        for path in cmd_curve(spec, modes):
            logger.info(f"Curve written to {path}")
    elif args.command == "compare":
        cmd_compare(spec, [p for p in args.policies.split(",") if p.strip()])
    elif args.command == "threshold":
        cmd_threshold(spec)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        return run(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_BAD_CONFIGURATION
    except TbsNomaError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_VALIDATION_FAILED
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
