import json

import numpy as np
import pytest

from kflat.cli import main
from kflat.covers import GoodCoverPair, torus_cover
from kflat.errors import ConfigInvalid
from kflat.scenarios import validate_config


def write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def strip_meta(path):
    d = json.loads(open(path).read())
    d.pop("meta")
    return json.dumps(d, sort_keys=True)


def test_malformed_config_exit_2(tmp_path, capsys):
    assert main(["run", write(tmp_path / "bad.json", "{not json")]) == 2
    assert "ConfigInvalid" in capsys.readouterr().err
    assert main(["run", write(tmp_path / "s.json", {"scenario": "nope"})]) == 2
    assert main(["run", write(tmp_path / "p.json", {"scenario": "property-suite"})]) == 2  # seed missing
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["frobnicate"]) == 2


def test_validate_config():
    cfg = validate_config({"scenario": "torus-clockshift", "params": {"n": 16}})
    assert cfg["params"]["n"] == [16] and cfg["params"]["N"] == 8
    with pytest.raises(ConfigInvalid):
        validate_config({"scenario": "torus-clockshift", "params": {"n": [0]}})
    with pytest.raises(ConfigInvalid):
        validate_config({"scenario": "sweep", "params": {"bogus": 1}})
    with pytest.raises(ConfigInvalid):
        validate_config({"scenario": "disk-relative", "params": {"control": "yes"}})


def test_torus_commuting_run_is_deterministic(tmp_path):
    cfg = write(tmp_path / "c.json", {"scenario": "torus-commuting", "params": {"n": [8], "N": 4}})
    outs = []
    for k in range(2):
        out = tmp_path / ("run%d" % k)
        assert main(["run", cfg, "--out", str(out)]) == 0
        outs.append(out / "torus-commuting.json")
    assert strip_meta(outs[0]) == strip_meta(outs[1])
    rep = json.loads(outs[0].read_text())
    res = rep["results"][0]
    assert res["lhs"] == res["rhs"] == res["oracles"]["bott"] == 0
    for key in ("scenario", "C1", "C2", "hypothesisSatisfied", "results", "assertions"):
        assert key in rep
    # an exact representation has eps = 0 < 1/(4 C1)
    assert rep["C1"] == 16200 and rep["hypothesisSatisfied"] is True
    assert "timestamp" in rep["meta"] and "runtimes" in rep["meta"]
    assert main(["report", str(tmp_path / "run0")]) == 0
    assert (tmp_path / "run0" / "summary.csv").read_text().startswith("scenario")


def test_overrides_and_property_suite(tmp_path):
    cfg = write(tmp_path / "c.json", {"scenario": "torus-commuting", "params": {"count": 2}})
    assert main(["run", cfg, "--out", str(tmp_path / "x")]) == 2  # count is not a torus parameter
    assert main(["run", cfg, "--scenario", "property-suite", "--seed", "3", "--out", str(tmp_path / "x")]) == 0
    assert json.loads((tmp_path / "x" / "property-suite.json").read_text())["params"]["seed"] == 3
    cfg = write(tmp_path / "p.json", {"scenario": "property-suite", "seed": 1, "params": {"count": 3}})
    assert main(["run", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "b")]) == 0
    assert strip_meta(tmp_path / "a" / "property-suite.json") == strip_meta(tmp_path / "b" / "property-suite.json")


def test_validate_cover(tmp_path):
    c = torus_cover(24)
    good = tmp_path / "good.json"
    c.dump(good)
    assert main(["validate-cover", str(good)]) == 0
    d = json.loads(good.read_text())
    d["eta"] = (np.asarray(d["eta"]) * 1.1).tolist()
    assert main(["validate-cover", write(tmp_path / "bad.json", d)]) == 1
    assert main(["validate-cover", write(tmp_path / "junk.json", "[1, 2")]) == 2
    assert GoodCoverPair.load(good).size == 9
