"""Accuracy checking, Monte Carlo sweeps and dual-unit comparison.

Feet are the external unit everywhere in this module (accuracy tables, grids,
reports); the signal chain underneath works in metres.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .altimeter import (
    AltimeterOutput,
    ChirpConfig,
    EchoChannel,
    ReceiverConfig,
    altitude_resolution,
    estimate_altitude,
    synthesize_dechirped,
    trial_rng,
)
from .constants import FOOT
from .errors import ConfigurationError, ContractError, DomainError, OutOfTableError, RaltsimError
from .interference import FREE_SPACE, InterfererSpec, PropagationModel, inband_injection
from .spectrum import DEFAULT_FILTER, FilterSpec

WITHIN = "within_tolerance"
ERRONEOUS = "erroneous"
NCD = "ncd"
CLASSIFICATIONS = (WITHIN, ERRONEOUS, NCD)

ABSOLUTE = "absolute_ft"
PERCENT = "percent"

TABLE_FLOOR_FT = 3.0


@dataclass(frozen=True)
class AccuracyRow:
    low_ft: float
    high_ft: float  # exclusive; math.inf for the open top row
    rule: str
    value: float

    def tolerance(self, altitude_ft: float) -> float:
        if self.rule == ABSOLUTE:
            return self.value
        return altitude_ft * self.value / 100.0


@dataclass(frozen=True)
class AccuracyTable:
    rows: tuple[AccuracyRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise ConfigurationError("accuracy table needs at least one row")
        if self.rows[0].low_ft != TABLE_FLOOR_FT:
            raise ConfigurationError(f"accuracy table must start at {TABLE_FLOOR_FT} ft")
        for prev, nxt in zip(self.rows, self.rows[1:]):
            if prev.high_ft != nxt.low_ft:
                raise ConfigurationError(
                    f"accuracy rows must tile without gaps or overlaps ({prev.high_ft} != {nxt.low_ft})"
                )
        if self.rows[-1].high_ft != math.inf:
            raise ConfigurationError("last accuracy row must be open-ended")
        for row in self.rows:
            if not row.low_ft < row.high_ft:
                raise ConfigurationError(f"empty accuracy interval [{row.low_ft}, {row.high_ft})")
            if row.rule not in (ABSOLUTE, PERCENT) or not row.value > 0:
                raise ConfigurationError(f"bad tolerance rule {row.rule!r}={row.value}")


TSO_C87_TABLE = AccuracyTable(
    (
        AccuracyRow(3.0, 100.0, ABSOLUTE, 3.0),
        AccuracyRow(100.0, 500.0, PERCENT, 3.0),
        AccuracyRow(500.0, math.inf, PERCENT, 5.0),
    )
)


def tolerance_at(table: AccuracyTable, altitude_ft: float) -> float:
    """Allowed +/- error in feet at ``altitude_ft``."""
    if not altitude_ft >= TABLE_FLOOR_FT:
        raise OutOfTableError(f"altitude {altitude_ft} ft is below the {TABLE_FLOOR_FT} ft table floor")
    for row in table.rows:
        if row.low_ft <= altitude_ft < row.high_ft:
            return row.tolerance(altitude_ft)
    raise OutOfTableError(f"altitude {altitude_ft} ft not covered by the accuracy table")


def default_altitude_grid(count: int = 25, low_ft: float = 3.0, high_ft: float = 2500.0) -> tuple[float, ...]:
    return tuple(float(x) for x in np.geomspace(low_ft, high_ft, count))


@dataclass(frozen=True)
class Scenario:
    chirp: ChirpConfig = ChirpConfig()
    rx: ReceiverConfig = ReceiverConfig(gain_compensation_db=DEFAULT_FILTER.insertion_loss)
    filter: Optional[FilterSpec] = DEFAULT_FILTER
    interferers: tuple[InterfererSpec, ...] = ()
    altitudes_ft: tuple[float, ...] = field(default_factory=default_altitude_grid)
    trials_per_point: int = 200
    seed: int = 0
    reflectivity_loss_db: float = 12.0
    propagation: PropagationModel = FREE_SPACE

    def __post_init__(self):
        object.__setattr__(self, "interferers", tuple(self.interferers))
        object.__setattr__(self, "altitudes_ft", tuple(float(a) for a in self.altitudes_ft))
        if int(self.trials_per_point) != self.trials_per_point or self.trials_per_point < 1:
            raise ConfigurationError(f"trials_per_point must be an integer >= 1, got {self.trials_per_point}")
        if not self.altitudes_ft:
            raise ConfigurationError("scenario needs at least one altitude")
        ceiling_ft = self.chirp.altitude_ceiling_m / FOOT
        for alt in self.altitudes_ft:
            if not (TABLE_FLOOR_FT <= alt <= ceiling_ft * (1 + 1e-12)):
                raise ConfigurationError(
                    f"altitude {alt} ft outside [{TABLE_FLOOR_FT}, {ceiling_ft:.6g}] ft"
                )
        if not self.reflectivity_loss_db >= 0:
            raise ConfigurationError("reflectivity_loss_db must be >= 0")

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def without_filter(self) -> "Scenario":
        """Legacy unit: no filter and therefore nothing to compensate."""
        return self.replace(filter=None, rx=dataclasses.replace(self.rx, gain_compensation_db=0.0))


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"type": type(obj).__name__}
        for f in dataclasses.fields(obj):
            out[f.name] = _plain(getattr(obj, f.name))
        return out
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def config_dict(obj) -> dict:
    """Type-tagged plain-data view of any config dataclass."""
    return _plain(obj)


def fingerprint(scenario: Scenario) -> str:
    """SHA-256 over the canonical encoding of every scenario field, seed included."""
    payload = json.dumps(config_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class TrialResult:
    true_altitude_ft: float
    trial: int
    output: AltimeterOutput
    error_ft: Optional[float]
    tolerance_ft: float
    classification: str
    altitude_index: int = 0

    @property
    def within_tolerance(self) -> bool:
        return self.classification == WITHIN

    @property
    def erroneous(self) -> bool:
        return self.classification == ERRONEOUS

    @property
    def ncd(self) -> bool:
        return self.classification == NCD


def classify(output: AltimeterOutput, altitude_ft: float, table: AccuracyTable) -> tuple[Optional[float], float, str]:
    """``(error_ft, tolerance_ft, classification)`` for one altimeter output."""
    tol = tolerance_at(table, altitude_ft)
    if not output.valid:
        return None, tol, NCD
    err = output.altitude_estimate_ft - altitude_ft
    return err, tol, WITHIN if abs(err) <= tol else ERRONEOUS


def run_unit(scenario: Scenario, altitude_ft: float, rng: np.random.Generator) -> AltimeterOutput:
    """One full pipeline pass (injection, synthesis, estimation) at one altitude."""
    h = altitude_ft * FOOT
    injected = inband_injection(scenario.interferers, scenario.filter, scenario.chirp, h, scenario.propagation)
    channel = EchoChannel(h, scenario.reflectivity_loss_db)
    samples = synthesize_dechirped(scenario.chirp, channel, scenario.rx, injected, filt=scenario.filter, rng=rng)
    return estimate_altitude(samples, scenario.chirp, scenario.rx)


def _annotated(exc: Exception, altitude_ft: float, trial: int) -> Exception:
    msg = f"altitude {altitude_ft:g} ft, trial {trial}: {exc}"
    try:
        return type(exc)(msg)
    except TypeError:
        return ConfigurationError(msg)


def run_sweep(scenario: Scenario, table: AccuracyTable = TSO_C87_TABLE) -> list[TrialResult]:
    """Every (altitude, trial) pair of ``scenario``, classified against ``table``.

    Each trial draws from ``trial_rng(seed, altitude_index, trial)`` so the
    list is identical however the work is ordered or split.
    """
    results: list[TrialResult] = []
    chirp, rx, filt = scenario.chirp, scenario.rx, scenario.filter
    for ai, alt_ft in enumerate(scenario.altitudes_ft):
        h = alt_ft * FOOT
        try:
            injected = inband_injection(scenario.interferers, filt, chirp, h, scenario.propagation)
            channel = EchoChannel(h, scenario.reflectivity_loss_db)
        except (RaltsimError, ValueError) as exc:
            raise _annotated(exc, alt_ft, 0) from exc
        for t in range(int(scenario.trials_per_point)):
            try:
                samples = synthesize_dechirped(
                    chirp, channel, rx, injected, filt=filt, rng=trial_rng(scenario.seed, ai, t)
                )
                out = estimate_altitude(samples, chirp, rx)
                err, tol, cls = classify(out, alt_ft, table)
            except (RaltsimError, ValueError) as exc:
                raise _annotated(exc, alt_ft, t) from exc
            results.append(TrialResult(alt_ft, t, out, err, tol, cls, ai))
    return results


@dataclass(frozen=True)
class PointSummary:
    altitude_ft: float
    tolerance_ft: float
    trials: int
    within: int
    erroneous: int
    ncd: int
    passed: bool

    @property
    def pass_rate(self) -> float:
        return self.within / self.trials

    @property
    def ncd_rate(self) -> float:
        return self.ncd / self.trials

    @property
    def erroneous_rate(self) -> float:
        return self.erroneous / self.trials

    def to_dict(self) -> dict:
        return {
            "altitude_ft": self.altitude_ft,
            "tolerance_ft": self.tolerance_ft,
            "trials": self.trials,
            "within_tolerance": self.within,
            "erroneous": self.erroneous,
            "ncd": self.ncd,
            "pass_rate": self.pass_rate,
            "ncd_rate": self.ncd_rate,
            "erroneous_rate": self.erroneous_rate,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ComplianceReport:
    points: tuple[PointSummary, ...]
    required_pass_rate: float
    verdict: str
    fingerprint: str = ""
    tool_version: str = __version__

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def failing_points(self) -> tuple[PointSummary, ...]:
        return tuple(p for p in self.points if not p.passed)

    def totals(self) -> dict:
        trials = sum(p.trials for p in self.points)
        return {
            "trials": trials,
            "within_tolerance": sum(p.within for p in self.points),
            "erroneous": sum(p.erroneous for p in self.points),
            "ncd": sum(p.ncd for p in self.points),
        }

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "required_pass_rate": self.required_pass_rate,
            "criterion": "every altitude: within-tolerance rate >= required_pass_rate and zero erroneous trials",
            "fingerprint": self.fingerprint,
            "tool_version": self.tool_version,
            "totals": self.totals(),
            "points": [p.to_dict() for p in self.points],
            "failing_altitudes_ft": [p.altitude_ft for p in self.failing_points],
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def canonical_json(data) -> str:
    return json.dumps(_finite(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _finite(data):
    if isinstance(data, dict):
        return {k: _finite(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_finite(v) for v in data]
    if isinstance(data, float) and not math.isfinite(data):
        return None
    return data


def check_compliance(
    results: Sequence[TrialResult],
    table: AccuracyTable = TSO_C87_TABLE,
    pass_rate: float = 0.95,
    fingerprint: str = "",
) -> ComplianceReport:
    """Aggregate per altitude and decide the verdict.

    A point passes when its within-tolerance rate reaches ``pass_rate`` and it
    has no erroneous trial at all; the report passes when every point does.
    """
    if not results:
        raise ContractError("check_compliance needs at least one trial result")
    groups: dict[float, list[str]] = {}
    for r in results:
        _, _, cls = classify(r.output, r.true_altitude_ft, table)
        groups.setdefault(r.true_altitude_ft, []).append(cls)
    points = []
    for alt, classes in groups.items():
        n = len(classes)
        within = classes.count(WITHIN)
        erroneous = classes.count(ERRONEOUS)
        points.append(
            PointSummary(
                altitude_ft=alt,
                tolerance_ft=tolerance_at(table, alt),
                trials=n,
                within=within,
                erroneous=erroneous,
                ncd=classes.count(NCD),
                passed=within / n >= pass_rate and erroneous == 0,
            )
        )
    verdict = "pass" if all(p.passed for p in points) else "fail"
    return ComplianceReport(tuple(points), pass_rate, verdict, fingerprint)


TRIAL_CSV_COLUMNS = ("altitude_ft", "trial", "estimate_ft", "error_ft", "snr_db", "classification")


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return ""
    if not math.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


def trials_csv(results: Iterable[TrialResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_CSV_COLUMNS)
    for r in results:
        writer.writerow(
            [
                _fmt(r.true_altitude_ft),
                r.trial,
                _fmt(r.output.altitude_estimate_ft),
                _fmt(r.error_ft),
                _fmt(r.output.snr_db),
                r.classification,
            ]
        )
    return buf.getvalue()


def descent_profile(ceiling: float, floor: float, steps: int, shape: str = "linear") -> list[float]:
    """Strictly decreasing altitude schedule (ft) from ``ceiling`` to ``floor``."""
    if not (ceiling > floor >= TABLE_FLOOR_FT):
        raise DomainError(f"need ceiling > floor >= {TABLE_FLOOR_FT} ft, got {ceiling} / {floor}")
    if int(steps) != steps or steps < 2:
        raise DomainError(f"steps must be an integer >= 2, got {steps}")
    if shape == "linear":
        values = np.linspace(ceiling, floor, int(steps))
    elif shape == "exponential":
        values = np.geomspace(ceiling, floor, int(steps))
    else:
        raise DomainError(f"unknown profile shape {shape!r}")
    out = [float(v) for v in values]
    out[0], out[-1] = float(ceiling), float(floor)
    return out


@dataclass(frozen=True)
class ComparisonStep:
    altitude_ft: float
    estimate_a_ft: Optional[float]
    estimate_b_ft: Optional[float]
    class_a: str
    class_b: str
    divergence_ft: Optional[float]
    bound_ft: float

    @property
    def ncd_disagreement(self) -> bool:
        return (self.class_a == NCD) != (self.class_b == NCD)

    @property
    def within_bound(self) -> bool:
        return self.divergence_ft is None or self.divergence_ft <= self.bound_ft


@dataclass(frozen=True)
class ComparisonReport:
    steps: tuple[ComparisonStep, ...]
    verdict: str
    fingerprint_a: str = ""
    fingerprint_b: str = ""
    seed: int = 0

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def max_divergence_ft(self) -> float:
        vals = [s.divergence_ft for s in self.steps if s.divergence_ft is not None]
        return max(vals) if vals else 0.0

    @property
    def ncd_disagreements(self) -> int:
        return sum(s.ncd_disagreement for s in self.steps)

    def counts(self, unit: str) -> dict:
        attr = "class_a" if unit == "a" else "class_b"
        classes = [getattr(s, attr) for s in self.steps]
        return {c: classes.count(c) for c in CLASSIFICATIONS}

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "seed": self.seed,
            "fingerprint_a": self.fingerprint_a,
            "fingerprint_b": self.fingerprint_b,
            "tool_version": __version__,
            "steps": len(self.steps),
            "max_divergence_ft": self.max_divergence_ft,
            "ncd_disagreements": self.ncd_disagreements,
            "divergence_violations": sum(not s.within_bound for s in self.steps),
            "unit_a": self.counts("a"),
            "unit_b": self.counts("b"),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["step", "altitude_ft", "estimate_a_ft", "estimate_b_ft", "class_a", "class_b", "divergence_ft", "bound_ft"]
        )
        for i, s in enumerate(self.steps):
            writer.writerow(
                [
                    i,
                    _fmt(s.altitude_ft),
                    _fmt(s.estimate_a_ft),
                    _fmt(s.estimate_b_ft),
                    s.class_a,
                    s.class_b,
                    _fmt(s.divergence_ft),
                    _fmt(s.bound_ft),
                ]
            )
        return buf.getvalue()


def one_bin_bound_ft(chirp: ChirpConfig) -> float:
    """One interpolated FFT bin, taken as 0.2 x altitude resolution, in feet."""
    return 0.2 * altitude_resolution(chirp) / FOOT


def compare_tracks(
    profile: Sequence[float],
    outputs_a: Sequence[AltimeterOutput],
    outputs_b: Sequence[AltimeterOutput],
    bounds_ft: Sequence[float],
    table: AccuracyTable = TSO_C87_TABLE,
) -> tuple[ComparisonStep, ...]:
    if not (len(profile) == len(outputs_a) == len(outputs_b) == len(bounds_ft)):
        raise ContractError(
            f"paired tracks differ in length: profile {len(profile)}, a {len(outputs_a)}, b {len(outputs_b)}"
        )
    steps = []
    for alt, a, b, bound in zip(profile, outputs_a, outputs_b, bounds_ft):
        _, _, cls_a = classify(a, alt, table)
        _, _, cls_b = classify(b, alt, table)
        div = None
        if a.valid and b.valid:
            div = abs(a.altitude_estimate_ft - b.altitude_estimate_ft)
        steps.append(ComparisonStep(alt, a.altitude_estimate_ft, b.altitude_estimate_ft, cls_a, cls_b, div, bound))
    return tuple(steps)


def dual_comparison(
    profile: Sequence[float],
    unit_a: Scenario,
    unit_b: Scenario,
    max_divergence_ft: Optional[float] = None,
    max_divergence_pct: Optional[float] = None,
    seed: Optional[int] = None,
    table: AccuracyTable = TSO_C87_TABLE,
) -> ComparisonReport:
    """Fly two units down the same profile on a shared noise stream.

    Step ``i`` of both units draws from ``trial_rng(seed, i)``, so any
    divergence comes from the configurations alone. Without an explicit
    bound, divergence must stay within one interpolated bin of unit A.
    """
    if max_divergence_ft is not None and max_divergence_pct is not None:
        raise ContractError("give max_divergence_ft or max_divergence_pct, not both")
    if seed is None:
        seed = unit_a.seed
    profile = [float(p) for p in profile]
    if max_divergence_pct is not None:
        bounds = [alt * max_divergence_pct / 100.0 for alt in profile]
    else:
        bound = max_divergence_ft if max_divergence_ft is not None else one_bin_bound_ft(unit_a.chirp)
        bounds = [bound] * len(profile)
    outs_a = [run_unit(unit_a, alt, trial_rng(seed, i)) for i, alt in enumerate(profile)]
    outs_b = [run_unit(unit_b, alt, trial_rng(seed, i)) for i, alt in enumerate(profile)]
    steps = compare_tracks(profile, outs_a, outs_b, bounds, table)
    verdict = "pass" if all(s.within_bound for s in steps) else "fail"
    return ComparisonReport(steps, verdict, fingerprint(unit_a), fingerprint(unit_b), int(seed))


def echo_at_antenna_dbm(scenario: Scenario, altitude_ft: float) -> float:
    """Echo power at the antenna port, before any filter or software gain."""
    from .altimeter import echo_power_dbm

    channel = EchoChannel(altitude_ft * FOOT, scenario.reflectivity_loss_db)
    return echo_power_dbm(scenario.chirp, channel, ReceiverConfig(), None)


def echo_referenced_tone(
    scenario: Scenario,
    rf_hz: float,
    ratio_db: float,
    reference_altitude_ft: float,
    false_altitude_ft: Optional[float] = None,
    geometry=None,
    emission_band=None,
    name: str = "coherent-spur",
) -> InterfererSpec:
    """Spurious single-tone emitter whose received power sits ``ratio_db``
    above the echo at ``reference_altitude_ft``.

    With ``false_altitude_ft`` the tone is coherent and lands on the baseband
    frequency of that altitude; otherwise it is spread as noise.
    """
    from .interference import SPURIOUS, FixedDistance, SpurTone, SpurTones, baseband_for_altitude, received_power
    from .spectrum import US_5G_BAND

    geometry = geometry if geometry is not None else FixedDistance(300.0)
    emission_band = emission_band if emission_band is not None else US_5G_BAND
    baseband = None if false_altitude_ft is None else baseband_for_altitude(false_altitude_ft * FOOT, scenario.chirp)

    def build(eirp):
        return InterfererSpec(
            emission_band=emission_band,
            kind=SPURIOUS,
            geometry=geometry,
            spurious=SpurTones((SpurTone(rf_hz, eirp, baseband),)),
            name=name,
        )

    h = reference_altitude_ft * FOOT
    target = echo_at_antenna_dbm(scenario, reference_altitude_ft) + ratio_db
    return build(target - received_power(build(0.0), h, scenario.propagation))
