import json

import pytest
import yaml
from hypothesis import given, settings

from conftest import ROOT, SCENARIOS
from raltsim.cert import FILTER_CHANGE, build_cia, build_moc_matrix, classify_change, emit_document
from raltsim.cli import main
from raltsim.config import ConfigError, parse_scenario
from test_cert import documents

jsonschema = pytest.importorskip("jsonschema")

SCENARIO_SCHEMA = json.loads((ROOT / "docs" / "scenario.schema.json").read_text())
CIA_SCHEMA = json.loads((ROOT / "docs" / "cia.schema.json").read_text())
SCENARIO_FILES = ["clean", "spurious_tone", "blocker", "compare_clean", "compare_interfered", "no_echo"]


def _errors(schema, doc):
    validator = jsonschema.Draft202012Validator(schema)
    return [f"{list(e.path)}: {e.message}" for e in validator.iter_errors(doc)]


def test_schemas_are_well_formed():
    jsonschema.Draft202012Validator.check_schema(SCENARIO_SCHEMA)
    jsonschema.Draft202012Validator.check_schema(CIA_SCHEMA)


@pytest.mark.parametrize("name", SCENARIO_FILES)
def test_shipped_scenarios_conform(name):
    text = (SCENARIOS / f"{name}.yaml").read_text()
    assert _errors(SCENARIO_SCHEMA, yaml.safe_load(text)) == []
    parse_scenario(text, name)


def test_malformed_scenario_rejected_by_both():
    text = (SCENARIOS / "malformed.yaml").read_text()
    assert _errors(SCENARIO_SCHEMA, yaml.safe_load(text))
    with pytest.raises(ConfigError):
        parse_scenario(text)


@pytest.mark.parametrize(
    "text",
    [
        "seed: 1\nbogus: 2\n",
        "chirp:\n  sweep_bandwith_hz: 1.0e8\n",
        "filter:\n  transition_shape: cubic\n",
        "sweep:\n  altitudes_ft: {log_spaced: {low_ft: 10, high_ft: 100}}\n",
        "interferers:\n  - {class: fundamental, emission_band: us_5g, geometry: overhead}\n",
        "compare:\n  max_divergence_ft: 1\n  max_divergence_pct: 1\n",
        "output:\n  format: xml\n",
    ],
)
def test_schema_and_loader_agree_on_rejections(text):
    assert _errors(SCENARIO_SCHEMA, yaml.safe_load(text))
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_cli_cia_output_conforms(tmp_path):
    change = SCENARIOS / "filter_change.yaml"
    rc = main(
        ["cia", "--change", str(change), "--evidence", "TSO-C87=aaaa1111", "--evidence", "Non-Regulatory=bbbb2222",
         "--out", str(tmp_path), "--format", "json"]
    )
    assert rc == 0
    assert _errors(CIA_SCHEMA, json.loads((tmp_path / "cia.json").read_text())) == []


def test_schema_rejects_inconsistent_declaration():
    doc = build_cia(FILTER_CHANGE, classify_change(FILTER_CHANGE), build_moc_matrix(),
                    {"TSO-C87": ["aa"], "Non-Regulatory": ["bb"]}).to_dict()
    doc["declaration"]["level"] = "major"
    assert _errors(CIA_SCHEMA, doc)
    doc["declaration"]["triggered_predicates"] = ["affects_colour"]
    assert _errors(CIA_SCHEMA, doc)


@settings(max_examples=100, deadline=None)
@given(documents())
def test_emitted_documents_conform(doc):
    assert _errors(CIA_SCHEMA, json.loads(emit_document(doc, "json"))) == []
