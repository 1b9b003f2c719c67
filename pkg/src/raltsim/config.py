"""Strict YAML scenario and change-descriptor files.

Every mapping is read through :class:`_Section`, which records which keys were
consumed and rejects anything left over, so a typo in a safety-relevant knob
fails loudly instead of silently falling back to a default. Errors carry the
file name and the 1-based line of the offending key.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional

import yaml

from .altimeter import ChirpConfig, ReceiverConfig
from .cert import MOC_KINDS, ChangeDescriptor, MOCMatrix, build_moc_matrix
from .compliance import (
    TSO_C87_TABLE,
    AccuracyRow,
    AccuracyTable,
    Scenario,
    default_altitude_grid,
    echo_referenced_tone,
)
from .constants import FOOT
from .errors import ConfigurationError, RaltsimError
from .interference import (
    FUNDAMENTAL,
    SPURIOUS,
    FixedDistance,
    FlatNoisePSD,
    GroundBelow,
    InterfererSpec,
    PropagationModel,
    SpurTone,
    SpurTones,
    baseband_for_altitude,
)
from .spectrum import BandPlan, FilterSpec, FrequencyBand

OUTPUT_FORMATS = ("json", "csv", "both")


class ConfigError(ConfigurationError):
    def __init__(self, message: str, source: str = "<config>", line: Optional[int] = None, key: str = ""):
        self.source = source
        self.line = line
        self.key = key
        where = f"{source}:{line}" if line else source
        label = f" {key}:" if key else ""
        super().__init__(f"{where}:{label} {message}")


class _Map(dict):
    line: int = 0

    def __init__(self):
        super().__init__()
        self.lines: dict[Any, int] = {}


class _Seq(list):
    line: int = 0

    def __init__(self):
        super().__init__()
        self.lines: list[int] = []


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader, node):
    loader.flatten_mapping(node)
    out = _Map()
    out.line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", str(loader.name), key_node.start_mark.line + 1)
        out[key] = loader.construct_object(value_node, deep=True)
        out.lines[key] = key_node.start_mark.line + 1
    return out


def _construct_seq(loader, node):
    out = _Seq()
    out.line = node.start_mark.line + 1
    for item in node.value:
        out.append(loader.construct_object(item, deep=True))
        out.lines.append(item.start_mark.line + 1)
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def load_yaml(text: str, source: str = "<config>"):
    loader = _Loader(text)
    loader.name = source
    try:
        return loader.get_single_data()
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML ({getattr(exc, 'problem', exc)})", source, mark.line + 1 if mark else None) from None
    finally:
        loader.dispose()


class _Section:
    """Consuming view over one mapping of the document."""

    def __init__(self, data, source: str, path: str, line: int = 0):
        if data is None:
            data = _Map()
        if not isinstance(data, dict):
            raise ConfigError("expected a mapping", source, getattr(data, "line", None) or line, path)
        self.data = data
        self.source = source
        self.path = path
        self.line = getattr(data, "line", 0) or line
        self.used: set = set()

    def key_path(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def line_of(self, key) -> int:
        return getattr(self.data, "lines", {}).get(key, self.line)

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, self.source, self.line_of(key), self.key_path(key))

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default=None):
        self.used.add(key)
        return self.data.get(key, default)

    def get(self, key: str, conv: Callable, default=dataclasses.MISSING):
        self.used.add(key)
        if key not in self.data:
            if default is dataclasses.MISSING:
                raise ConfigError("required key is missing", self.source, self.line, self.key_path(key))
            return default
        try:
            return conv(self.data[key])
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise self.error(key, str(exc)) from None

    def sub(self, key: str) -> "_Section":
        self.used.add(key)
        return _Section(self.data.get(key), self.source, self.key_path(key), self.line_of(key))

    def finish(self) -> None:
        for key in self.data:
            if key not in self.used:
                raise self.error(str(key), "unknown key")


def _float(value) -> float:
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value.strip())
        except ValueError:
            pass
    raise ValueError(f"expected a number, got {value!r}")


def _int(value) -> int:
    f = _float(value)
    if not f.is_integer():
        raise ValueError(f"expected an integer, got {value!r}")
    return int(f)


def _bool(value) -> bool:
    if not isinstance(value, bool):
        raise ValueError(f"expected true/false, got {value!r}")
    return value


def _str(value) -> str:
    if not isinstance(value, str):
        raise ValueError(f"expected text, got {value!r}")
    return value


def _seed(value) -> int:
    seed = _int(value)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {value!r}")
    return seed


def _band(plan: BandPlan):
    def conv(value) -> FrequencyBand:
        if isinstance(value, str):
            try:
                return plan[value]
            except KeyError:
                raise ValueError(f"unknown band name {value!r}; known: {', '.join(plan.names())}") from None
        if isinstance(value, list) and len(value) == 2:
            return FrequencyBand(_float(value[0]), _float(value[1]))
        raise ValueError(f"expected [low_hz, high_hz] or a band name, got {value!r}")

    return conv


def _validated(section: _Section, build: Callable):
    try:
        return build()
    except ConfigError:
        raise
    except RaltsimError as exc:
        raise ConfigError(str(exc), section.source, section.line, section.path) from None


def _band_plan(sec: _Section) -> BandPlan:
    defaults = BandPlan()
    conv = _band(defaults)
    values = {name: sec.get(name, conv, defaults[name]) for name in defaults.names()}
    sec.finish()
    return _validated(sec, lambda: BandPlan(**values))


def _filter(sec: _Section, plan: BandPlan) -> Optional[FilterSpec]:
    if not sec.get("enabled", _bool, True):
        sec.used.update(sec.data.keys())
        return None
    d = FilterSpec()
    kwargs = dict(
        passband=sec.get("passband", _band(plan), plan.filter_passband),
        lower_stopband_edge=sec.get("lower_stopband_edge_hz", _float, d.lower_stopband_edge),
        upper_stopband_edge=sec.get("upper_stopband_edge_hz", _float, d.upper_stopband_edge),
        stopband_attenuation=sec.get("stopband_attenuation_db", _float, d.stopband_attenuation),
        passband_ripple=sec.get("passband_ripple_db", _float, d.passband_ripple),
        insertion_loss=sec.get("insertion_loss_db", _float, d.insertion_loss),
        transition_shape=sec.get("transition_shape", _str, d.transition_shape),
        transition_order=sec.get("transition_order", _int, d.transition_order),
    )
    sec.finish()
    return _validated(sec, lambda: FilterSpec(**kwargs))


def _chirp(sec: _Section, plan: BandPlan) -> ChirpConfig:
    d = ChirpConfig()
    kwargs = dict(
        center_frequency=sec.get("center_frequency_hz", _float, d.center_frequency),
        sweep_bandwidth=sec.get("sweep_bandwidth_hz", _float, d.sweep_bandwidth),
        sweep_period=sec.get("sweep_period_s", _float, d.sweep_period),
        tx_power_dbm=sec.get("tx_power_dbm", _float, d.tx_power_dbm),
        sample_rate=sec.get("sample_rate_hz", _float, d.sample_rate),
        fft_length=sec.get("fft_length", _int, d.fft_length),
        altitude_ceiling_m=sec.get("altitude_ceiling_ft", _float, d.altitude_ceiling_m / FOOT) * FOOT,
        operating_band=plan.ralt,
    )
    sec.finish()
    return _validated(sec, lambda: ChirpConfig(**kwargs))


_RX_KEYS = {
    "noise_figure_db": "noise_figure_db",
    "thermal_noise_density_dbm_hz": "thermal_noise_density_dbm_hz",
    "blocking_threshold_dbm": "blocking_threshold_dbm",
    "desensitization_slope": "desensitization_slope",
    "detection_snr_threshold_db": "detection_snr_threshold_db",
    "gain_compensation_db": "gain_compensation_db",
}


def _receiver(sec: _Section, base: ReceiverConfig) -> ReceiverConfig:
    kwargs = {field: sec.get(key, _float, getattr(base, field)) for key, field in _RX_KEYS.items()}
    sec.finish()
    return _validated(sec, lambda: ReceiverConfig(**kwargs))


def _geometry(value):
    if value == "ground_below":
        return GroundBelow()
    if isinstance(value, dict) and set(value) == {"fixed_distance_m"}:
        return FixedDistance(_float(value["fixed_distance_m"]))
    raise ValueError("geometry must be 'ground_below' or {fixed_distance_m: <meters>}")


def _tone(sec: _Section, chirp: ChirpConfig) -> SpurTone:
    freq = sec.get("frequency_hz", _float)
    eirp = sec.get("eirp_dbm", _float)
    mode = sec.get("mode", _str, "spread")
    baseband = sec.get("baseband_hz", _float, None)
    false_alt = sec.get("false_altitude_ft", _float, None)
    sec.finish()
    if mode == "spread":
        if baseband is not None or false_alt is not None:
            raise ConfigError("baseband_hz / false_altitude_ft only apply to coherent tones", sec.source, sec.line, sec.path)
        return SpurTone(freq, eirp, None)
    if mode != "coherent":
        raise sec.error("mode", f"tone mode must be 'spread' or 'coherent', got {mode!r}")
    if (baseband is None) == (false_alt is None):
        raise ConfigError("coherent tone needs exactly one of baseband_hz or false_altitude_ft", sec.source, sec.line, sec.path)
    if false_alt is not None:
        baseband = baseband_for_altitude(false_alt * FOOT, chirp)
    return SpurTone(freq, eirp, baseband)


def _interferer(sec: _Section, plan: BandPlan, chirp: ChirpConfig, scenario_for_ref: Scenario) -> InterfererSpec:
    kind = sec.get("class", _str)
    common = dict(
        name=sec.get("name", _str, ""),
        emission_band=sec.get("emission_band", _band(plan)),
        duty_cycle=sec.get("duty_cycle", _float, 1.0),
        geometry=sec.get("geometry", _geometry, FixedDistance(300.0)),
        eirp_scale=sec.get("eirp_scale", _float, 1.0),
        victim_band=plan.ralt,
        front_end_band=plan.rx_front_end,
    )
    if kind == FUNDAMENTAL:
        eirp = sec.get("eirp_dbm", _float, 62.0)
        sec.finish()
        return _validated(sec, lambda: InterfererSpec(kind=FUNDAMENTAL, eirp_dbm=eirp, **common))
    if kind != SPURIOUS:
        raise sec.error("class", f"class must be 'fundamental' or 'spurious', got {kind!r}")

    if sec.has("echo_referenced"):
        ref = sec.sub("echo_referenced")
        spec = _validated(
            ref,
            lambda: echo_referenced_tone(
                scenario_for_ref,
                rf_hz=ref.get("frequency_hz", _float),
                ratio_db=ref.get("ratio_db", _float),
                reference_altitude_ft=ref.get("reference_altitude_ft", _float),
                false_altitude_ft=ref.get("false_altitude_ft", _float, None),
                geometry=common["geometry"],
                emission_band=common["emission_band"],
                name=common["name"] or "coherent-spur",
            ),
        )
        ref.finish()
        sec.finish()
        if common["duty_cycle"] != 1.0 or common["eirp_scale"] != 1.0:
            raise ConfigError("echo_referenced emitters take no duty_cycle/eirp_scale", sec.source, sec.line, sec.path)
        return dataclasses.replace(spec, victim_band=plan.ralt, front_end_band=plan.rx_front_end)

    shape = sec.sub("spurious")
    if shape.has("tones"):
        raw = shape.raw("tones")
        if not isinstance(raw, list) or not raw:
            raise shape.error("tones", "expected a non-empty list of tones")
        tones = []
        for i, item in enumerate(raw):
            line = raw.lines[i] if isinstance(raw, _Seq) else shape.line
            tones.append(_tone(_Section(item, sec.source, f"{shape.path}.tones[{i}]", line), chirp))
        spurious = SpurTones(tuple(tones))
    elif shape.has("noise_psd_dbm_hz"):
        spurious = FlatNoisePSD(shape.get("noise_psd_dbm_hz", _float), shape.get("band", _band(plan)))
    else:
        raise ConfigError("spurious shape needs 'tones' or 'noise_psd_dbm_hz'", sec.source, shape.line, shape.path)
    shape.finish()
    sec.finish()
    return _validated(sec, lambda: InterfererSpec(kind=SPURIOUS, spurious=spurious, **common))


def _interferers(sec: _Section, key: str, plan, chirp, ref_scenario) -> tuple[InterfererSpec, ...]:
    raw = sec.raw(key, [])
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise sec.error(key, "expected a list of interferers")
    out = []
    for i, item in enumerate(raw):
        line = raw.lines[i] if isinstance(raw, _Seq) else sec.line_of(key)
        out.append(_interferer(_Section(item, sec.source, f"{sec.key_path(key)}[{i}]", line), plan, chirp, ref_scenario))
    return tuple(out)


def _altitudes(value) -> tuple[float, ...]:
    if isinstance(value, list):
        return tuple(_float(v) for v in value)
    if isinstance(value, dict) and set(value) <= {"log_spaced"}:
        spec = value["log_spaced"]
        if not isinstance(spec, dict) or set(spec) != {"low_ft", "high_ft", "count"}:
            raise ValueError("log_spaced needs low_ft, high_ft and count")
        return default_altitude_grid(_int(spec["count"]), _float(spec["low_ft"]), _float(spec["high_ft"]))
    raise ValueError("altitudes_ft must be a list or {log_spaced: {low_ft, high_ft, count}}")


def _accuracy_table(sec: _Section, key: str) -> AccuracyTable:
    raw = sec.raw(key)
    if raw is None:
        return TSO_C87_TABLE
    if not isinstance(raw, list):
        raise sec.error(key, "expected a list of rows")
    rows = []
    for i, item in enumerate(raw):
        row = _Section(item, sec.source, f"{key}[{i}]", raw.lines[i] if isinstance(raw, _Seq) else sec.line)
        rows.append(
            AccuracyRow(
                row.get("low_ft", _float),
                row.get("high_ft", _float, math.inf),
                row.get("rule", _str),
                row.get("value", _float),
            )
        )
        row.finish()
    return _validated(sec, lambda: AccuracyTable(tuple(rows)))


@dataclass(frozen=True)
class ProfileSpec:
    ceiling_ft: float = 2500.0
    floor_ft: float = 3.0
    steps: int = 100
    shape: str = "linear"


@dataclass(frozen=True)
class CompareSpec:
    unit_a: Scenario
    unit_b: Scenario
    profile: ProfileSpec
    max_divergence_ft: Optional[float] = None
    max_divergence_pct: Optional[float] = None


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    band_plan: BandPlan
    table: AccuracyTable
    pass_rate: float
    compare: Optional[CompareSpec]
    output_dir: Optional[str]
    output_format: str
    source: str


def _unit(sec: _Section, plan: BandPlan, base: Scenario) -> Scenario:
    filt = base.filter
    if sec.has("filter"):
        f_raw = sec.raw("filter")
        filt = None if f_raw is None else _filter(sec.sub("filter"), plan)
    if sec.has("receiver"):
        rx = _receiver(sec.sub("receiver"), base.rx)
    elif filt is None:
        # legacy unit: no filter, so no insertion loss to make up
        rx = dataclasses.replace(base.rx, gain_compensation_db=0.0)
    else:
        rx = base.rx
    refl = base.reflectivity_loss_db
    if sec.has("channel"):
        ch = sec.sub("channel")
        refl = ch.get("reflectivity_loss_db", _float, refl)
        ch.finish()
    interferers = base.interferers
    if sec.has("interferers"):
        interferers = _interferers(sec, "interferers", plan, base.chirp, base)
    sec.finish()
    return _validated(sec, lambda: base.replace(filter=filt, rx=rx, reflectivity_loss_db=refl, interferers=interferers))


def parse_scenario(text: str, source: str = "<scenario>") -> ScenarioFile:
    doc = load_yaml(text, source)
    root = _Section(doc, source, "", 1)
    plan = _band_plan(root.sub("band_plan"))
    chirp = _chirp(root.sub("chirp"), plan)

    if root.has("filter") and root.raw("filter") is None:
        filt = None
    else:
        filt = _filter(root.sub("filter"), plan)
    rx_default = ReceiverConfig(gain_compensation_db=filt.insertion_loss if filt is not None else 0.0)
    rx = _receiver(root.sub("receiver"), rx_default)

    ch = root.sub("channel")
    refl = ch.get("reflectivity_loss_db", _float, 12.0)
    ch.finish()
    prop_sec = root.sub("propagation")
    prop = _validated(
        prop_sec,
        lambda: PropagationModel(
            prop_sec.get("model", _str, "free_space"), prop_sec.get("carrier_for_loss_hz", _float, None)
        ),
    )
    prop_sec.finish()

    sweep = root.sub("sweep")
    altitudes = sweep.get("altitudes_ft", _altitudes, default_altitude_grid())
    trials = sweep.get("trials_per_point", _int, 200)
    pass_rate = sweep.get("pass_rate", _float, 0.95)
    sweep.finish()
    if not 0.0 < pass_rate <= 1.0:
        raise ConfigError("pass_rate must lie in (0, 1]", source, sweep.line_of("pass_rate"), "sweep.pass_rate")
    seed = root.get("seed", _seed, 0)

    base = _validated(
        root,
        lambda: Scenario(
            chirp=chirp,
            rx=rx,
            filter=filt,
            interferers=(),
            altitudes_ft=altitudes,
            trials_per_point=trials,
            seed=seed,
            reflectivity_loss_db=refl,
            propagation=prop,
        ),
    )
    interferers = _interferers(root, "interferers", plan, chirp, base)
    scenario = base.replace(interferers=interferers)
    table = _accuracy_table(root, "accuracy_table")

    compare = None
    if root.has("compare"):
        cmp_sec = root.sub("compare")
        p = cmp_sec.sub("profile")
        profile = ProfileSpec(
            p.get("ceiling_ft", _float, 2500.0),
            p.get("floor_ft", _float, 3.0),
            p.get("steps", _int, 100),
            p.get("shape", _str, "linear"),
        )
        p.finish()
        max_ft = cmp_sec.get("max_divergence_ft", _float, None)
        max_pct = cmp_sec.get("max_divergence_pct", _float, None)
        units = cmp_sec.sub("units")
        unit_a = _unit(units.sub("a"), plan, scenario)
        unit_b = _unit(units.sub("b"), plan, scenario)
        units.finish()
        cmp_sec.finish()
        if max_ft is not None and max_pct is not None:
            raise ConfigError("give max_divergence_ft or max_divergence_pct, not both", source, cmp_sec.line, "compare")
        compare = CompareSpec(unit_a, unit_b, profile, max_ft, max_pct)

    out = root.sub("output")
    out_dir = out.get("dir", _str, None)
    out_fmt = out.get("format", _str, "both")
    out.finish()
    if out_fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"format must be one of {OUTPUT_FORMATS}", source, out.line_of("format"), "output.format")
    root.finish()
    return ScenarioFile(scenario, plan, table, pass_rate, compare, out_dir, out_fmt, source)


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file ({exc.strerror})", str(path)) from None
    return parse_scenario(text, str(path))


def _pairs(sec: _Section, key: str, names: tuple[str, str]) -> tuple[tuple[str, str], ...]:
    raw = sec.raw(key, [])
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise sec.error(key, "expected a list")
    out = []
    for i, item in enumerate(raw):
        if isinstance(item, list) and len(item) == 2:
            out.append((_str(item[0]), _str(item[1])))
            continue
        line = raw.lines[i] if isinstance(raw, _Seq) else sec.line
        row = _Section(item, sec.source, f"{key}[{i}]", line)
        out.append((row.get(names[0], _str), row.get(names[1], _str)))
        row.finish()
    return tuple(out)


def parse_change(text: str, source: str = "<change>") -> ChangeDescriptor:
    root = _Section(load_yaml(text, source), source, "", 1)
    kwargs = {
        "description": root.get("description", _str, ""),
        "hardware_change": root.get("hardware_change", _bool, False),
    }
    for name in (
        "affects_form",
        "affects_fit",
        "affects_intended_function",
        "requires_operator_training",
        "requires_full_mops_retest",
    ):
        kwargs[name] = root.get(name, _bool, False)
    kwargs["affected_part_numbers"] = _pairs(root, "affected_part_numbers", ("old", "new"))
    kwargs["open_problem_reports"] = _pairs(root, "open_problem_reports", ("id", "disposition"))
    root.finish()
    return _validated(root, lambda: ChangeDescriptor(**kwargs))


def load_change(path) -> ChangeDescriptor:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read change descriptor ({exc.strerror})", str(path)) from None
    return parse_change(text, str(path))


def parse_moc_matrix(text: str, source: str = "<matrix>") -> MOCMatrix:
    raw = load_yaml(text, source)
    if not isinstance(raw, list):
        raise ConfigError("MOC matrix file must be a list of rows", source, 1)
    entries = []
    for i, item in enumerate(raw):
        row = _Section(item, source, f"[{i}]", raw.lines[i] if isinstance(raw, _Seq) else 1)
        mocs = row.get("mocs", lambda v: tuple(_str(m) for m in v), ())
        for m in mocs:
            if m not in MOC_KINDS:
                raise row.error("mocs", f"unknown means {m!r}; expected one of {MOC_KINDS}")
        entries.append((row.get("standard", _str), row.get("requirement_source", _str, ""), mocs))
        row.finish()
    try:
        return build_moc_matrix(entries)
    except RaltsimError as exc:
        raise ConfigError(str(exc), source, 1) from None


def load_moc_matrix(path) -> MOCMatrix:
    path = Path(path)
    return parse_moc_matrix(path.read_text(encoding="utf-8"), str(path))
