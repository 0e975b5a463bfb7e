import json

import pytest

jsonschema = pytest.importorskip("jsonschema")


def load(path):
    return json.loads(path.read_text())


def test_scenarios_validate(root):
    schema = load(root / "schema" / "scenario.schema.json")
    jsonschema.Draft202012Validator.check_schema(schema)
    files = sorted((root / "scenarios").glob("*.json"))
    assert len(files) >= 6
    for path in files:
        jsonschema.validate(load(path), schema)


def test_schema_rejects_unknown_keys(root):
    schema = load(root / "schema" / "scenario.schema.json")
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"kind": "bb84", "bb84": {"foo": 1}}, schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"kind": "warp"}, schema)


def test_module_schema_matches_file(root):
    qauto = pytest.importorskip("qauto")
    assert qauto.json_schema() == load(root / "schema" / "scenario.schema.json")
