"""Command-line front end.

Exit codes: 0 pass/valid, 1 usage or configuration error, 2 no computed data
(``simulate``), 3 compliance failure (``sweep``/``compare``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .altimeter import EchoChannel, estimate_altitude, synthesize_dechirped, trial_rng
from .cert import build_cia, build_moc_matrix, classify_change, emit_document
from .compliance import canonical_json, check_compliance, descent_profile, dual_comparison, fingerprint, run_sweep, trials_csv
from .config import ConfigError, load_change, load_moc_matrix, load_scenario
from .constants import FOOT
from .errors import RaltsimError, ValidationError
from .interference import inband_injection

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NCD = 2
EXIT_FAIL = 3

OUT_DIR_ENV = "RALTSIM_OUT_DIR"
DEFAULT_OUT_DIR = "raltsim-out"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def write_atomic(path: Path, data: bytes | str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _out_dir(args, configured: Optional[str]) -> Path:
    if args.out:
        return Path(args.out)
    if os.environ.get(OUT_DIR_ENV):
        return Path(os.environ[OUT_DIR_ENV])
    if configured:
        return Path(configured)
    return Path(DEFAULT_OUT_DIR)


def _load(args):
    cfg = load_scenario(args.scenario)
    scenario = cfg.scenario
    if getattr(args, "seed", None) is not None:
        scenario = scenario.replace(seed=args.seed)
    if getattr(args, "trials", None) is not None:
        scenario = scenario.replace(trials_per_point=args.trials)
    if getattr(args, "no_filter", False):
        scenario = scenario.without_filter()
    return cfg, scenario


def _format(args, cfg) -> str:
    return args.format or cfg.output_format


def cmd_simulate(args) -> int:
    cfg, scenario = _load(args)
    alt_ft = args.altitude
    h = alt_ft * FOOT
    injected = inband_injection(scenario.interferers, scenario.filter, scenario.chirp, h, scenario.propagation)
    samples = synthesize_dechirped(
        scenario.chirp,
        EchoChannel(h, scenario.reflectivity_loss_db),
        scenario.rx,
        injected,
        filt=scenario.filter,
        rng=trial_rng(scenario.seed, 0, 0),
    )
    out = estimate_altitude(samples, scenario.chirp, scenario.rx)
    payload = {
        "true_altitude_ft": alt_ft,
        "altitude_estimate_ft": out.altitude_estimate_ft,
        "snr_db": out.snr_db,
        "validity": out.validity,
        "peak_bin": out.peak_bin,
        "interpolated_offset": out.interpolated_offset,
        "seed": scenario.seed,
        "fingerprint": fingerprint(scenario),
    }
    sys.stdout.write(canonical_json(payload))
    if args.raw:
        n = scenario.chirp.sweep_samples
        lines = ["index,re,im"] + [f"{i},{samples[i].real!r},{samples[i].imag!r}" for i in range(n)]
        write_atomic(Path(args.raw), "\n".join(lines) + "\n")
    return EXIT_OK if out.valid else EXIT_NCD


def cmd_sweep(args) -> int:
    cfg, scenario = _load(args)
    results = run_sweep(scenario, cfg.table)
    report = check_compliance(results, cfg.table, cfg.pass_rate, fingerprint(scenario))
    out_dir = _out_dir(args, cfg.output_dir)
    fmt = _format(args, cfg)
    if fmt in ("json", "both"):
        write_atomic(out_dir / "report.json", report.to_json())
    if fmt in ("csv", "both"):
        write_atomic(out_dir / "trials.csv", trials_csv(results))
    totals = report.totals()
    print(
        f"verdict={report.verdict} trials={totals['trials']} within={totals['within_tolerance']}"
        f" erroneous={totals['erroneous']} ncd={totals['ncd']} fingerprint={report.fingerprint[:16]}"
    )
    for p in report.failing_points:
        print(f"  FAIL {p.altitude_ft:.3f} ft: pass_rate={p.pass_rate:.3f} erroneous={p.erroneous} ncd={p.ncd}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_compare(args) -> int:
    cfg, _ = _load(args)
    if cfg.compare is None:
        raise ConfigError("scenario has no 'compare' block", cfg.source)
    spec = cfg.compare
    unit_a, unit_b = spec.unit_a, spec.unit_b
    if args.seed is not None:
        unit_a, unit_b = unit_a.replace(seed=args.seed), unit_b.replace(seed=args.seed)
    if args.no_filter:
        unit_a, unit_b = unit_a.without_filter(), unit_b.without_filter()
    p = spec.profile
    profile = descent_profile(p.ceiling_ft, p.floor_ft, p.steps, p.shape)
    report = dual_comparison(
        profile, unit_a, unit_b, spec.max_divergence_ft, spec.max_divergence_pct, unit_a.seed, cfg.table
    )
    out_dir = _out_dir(args, cfg.output_dir)
    fmt = _format(args, cfg)
    if fmt in ("json", "both"):
        write_atomic(out_dir / "comparison.json", report.to_json())
    if fmt in ("csv", "both"):
        write_atomic(out_dir / "comparison.csv", report.to_csv())
    print(
        f"verdict={report.verdict} steps={len(report.steps)} max_divergence_ft={report.max_divergence_ft:.6f}"
        f" ncd_disagreements={report.ncd_disagreements}"
    )
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_classify(args) -> int:
    change = load_change(args.change)
    result = classify_change(change)
    text = json.dumps(result.to_dict(), sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        write_atomic(Path(args.out) / "classification.json", text)
    return EXIT_OK


def _evidence_ref(value: str) -> str:
    path = Path(value)
    if path.is_file():
        try:
            fp = json.loads(path.read_text(encoding="utf-8")).get("fingerprint")
        except (ValueError, AttributeError):
            fp = None
        if not fp:
            raise ConfigError("evidence file has no 'fingerprint' field", str(path))
        return fp
    return value


def cmd_cia(args) -> int:
    change = load_change(args.change)
    matrix = load_moc_matrix(args.matrix) if args.matrix else build_moc_matrix()
    evidence: dict[str, list[str]] = {}
    for item in args.evidence or []:
        standard, sep, ref = item.partition("=")
        if not sep or not standard or not ref:
            raise ConfigError(f"--evidence expects STANDARD=REPORT_OR_FINGERPRINT, got {item!r}", "<args>")
        evidence.setdefault(standard, []).append(_evidence_ref(ref))
    doc = build_cia(
        change,
        classify_change(change),
        matrix,
        evidence,
        schedule_note=args.schedule or "",
        return_to_service_note=args.return_to_service or "",
    )
    fmt = args.format or "both"
    out_dir = _out_dir(args, None)
    if fmt in ("json", "both"):
        write_atomic(out_dir / "cia.json", emit_document(doc, "json"))
    if fmt in ("text", "both"):
        write_atomic(out_dir / "cia.txt", emit_document(doc, "text"))
    print(f"CIA: {doc.declaration.level} change, {len(doc.moc_matrix.rows)} MOC rows, written to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="raltsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"raltsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_opts(p, trials=True):
        p.add_argument("--scenario", required=True, help="YAML scenario file")
        p.add_argument("--seed", type=_u64, help="override the scenario seed")
        p.add_argument("--no-filter", action="store_true", help="remove the receiver filter (legacy unit)")
        p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV}, then output.dir, then ./{DEFAULT_OUT_DIR})")
        if trials:
            p.add_argument("--trials", type=_positive_int, help="override trials per altitude")
        p.add_argument("--format", choices=("json", "csv", "both"), help="which result files to write")

    p = sub.add_parser("simulate", help="single trial at one altitude")
    scenario_opts(p, trials=False)
    p.add_argument("--altitude", type=float, required=True, help="true altitude in feet")
    p.add_argument("--raw", help="write the raw sweep samples to this CSV file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo accuracy sweep and compliance verdict")
    scenario_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="dual-altimeter descent comparison")
    scenario_opts(p, trials=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("classify", help="major/minor classification of a change descriptor")
    p.add_argument("--change", required=True, help="YAML change descriptor")
    p.add_argument("--out", help="also write classification.json here")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("cia", help="assemble a Change Impact Analysis document")
    p.add_argument("--change", required=True, help="YAML change descriptor")
    p.add_argument("--matrix", help="YAML MOC matrix (default: the shipped two-row matrix)")
    p.add_argument(
        "--evidence",
        action="append",
        metavar="STANDARD=REF",
        help="link a sweep report (path to report.json, or a raw fingerprint) to a MOC row; repeatable",
    )
    p.add_argument("--schedule", help="free-text project schedule note")
    p.add_argument("--return-to-service", help="free-text return-to-service note")
    p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV}, then ./{DEFAULT_OUT_DIR})")
    p.add_argument("--format", choices=("json", "text", "both"))
    p.set_defaults(func=cmd_cia)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (RaltsimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
