import json

import pytest
import yaml

from diocurve import cli
from diocurve import io as dio
from diocurve.config import DEFAULTS, load_config
from diocurve.errors import ConfigError


def write_cfg(path, **sections):
    data = {"schema_version": 1}
    data.update(sections)
    path.write_text(yaml.safe_dump(data))
    return str(path)


SMALL = {
    "shifts": [{"name": "zero"}, {"name": "power", "k": 3}],
    "ubiquity": {"t_range": [4, 6], "J_lengths": [0.1], "J_per_length": 2},
    "dimension": {"v_list": [3.0], "scales": [6, 9]},
    "count": {"H_list": [16, 32], "deltas": [0.5]},
    "construct": {"Q_list": [16], "xi_count": 5},
    "covers": {"t_list": [5], "classify_t_max": 5},
    "divergence": {"v_list": [3.0]},
}


@pytest.fixture
def small(tmp_path):
    return write_cfg(tmp_path / "small.yaml", **SMALL)


def test_defaults_load():
    cfg = load_config()
    assert cfg["curve"]["name"] == "parabola"
    assert len(cfg.hash) == 16
    assert cfg.shifts()[0][1].is_zero


def test_hash_ignores_workers():
    assert load_config(overrides={"workers": 4}).hash == load_config().hash
    assert load_config(overrides={"seed": 1}).hash != load_config().hash


@pytest.mark.parametrize("text", [
    "schema_version: 1\ncurve: [unclosed\n",
    "curve: {name: parabola}\n",
    "schema_version: 2\n",
    "schema_version: 1\nbogus: 3\n",
    "schema_version: 1\ncount: {convention: sideways}\n",
    "schema_version: 1\ndimension: {v_list: [1.5]}\n",
    "schema_version: 1\nshifts: [{name: nope}]\n",
    "- just\n- a list\n",
])
def test_malformed_config(tmp_path, text):
    p = tmp_path / "bad.yaml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(str(p))
    assert cli.main(["count", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["count", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) == 2


def test_empty_xi_list(tmp_path):
    p = write_cfg(tmp_path / "c.yaml", construct={"xi": []})
    assert cli.main(["construct", "--config", p, "--out", str(tmp_path / "o")]) == 2


def test_covers_parameter_error(tmp_path):
    p = write_cfg(tmp_path / "c.yaml", covers={"v": 2.1, "epsilon1": 0.05})
    assert cli.main(["covers", "--config", p, "--out", str(tmp_path / "o")]) == 2


def test_ubiquity_default_shape(tmp_path, small):
    out = tmp_path / "o"
    assert cli.main(["ubiquity", "--config", small, "--out", str(out)]) == 0
    for f in ("ubiquity.csv", "ubiquity_plot.csv", "ubiquity.jsonl", "ubiquity.svg"):
        assert (out / f).exists()
    lines = (out / "ubiquity.csv").read_text().splitlines()
    assert lines[0] == dio.header_line(load_config(small).hash)
    assert lines[1] == "shift,t,Q,kappa,radius,J_lo,J_hi,covered,ratio"


def test_impossible_k_min_still_writes(tmp_path):
    p = write_cfg(tmp_path / "c.yaml", **{**SMALL, "ubiquity": {**SMALL["ubiquity"], "k_min": 1.1}})
    out = tmp_path / "o"
    assert cli.main(["ubiquity", "--config", p, "--out", str(out)]) == 1
    recs = [json.loads(x) for x in (out / "ubiquity.jsonl").read_text().splitlines()]
    assert "_header" in recs[0]
    assert all(r["pass"] is False for r in recs[1:])


def test_budget_exhaustion_exit_3(tmp_path, small):
    out = tmp_path / "o"
    assert cli.main(["count", "--config", small, "--out", str(out), "--budget", "10"]) == 3
    recs = [json.loads(x) for x in (out / "count.jsonl").read_text().splitlines()]
    assert any(r.get("partial") for r in recs[1:])


def test_dimension_table(tmp_path, small):
    out = tmp_path / "o"
    cli.main(["dimension", "--config", small, "--out", str(out)])
    rows = (out / "dimension.csv").read_text().splitlines()[2:]
    assert rows and all(",0.75," in r for r in rows)


def test_divergence_command(tmp_path, small):
    out = tmp_path / "o"
    assert cli.main(["divergence", "--config", small, "--out", str(out)]) == 0
    recs = [json.loads(x) for x in (out / "divergence.jsonl").read_text().splitlines()[1:]]
    assert len(recs) == 4 and all(r["match"] for r in recs)
    boundary = [r for r in recs if r["s"] == pytest.approx(0.75)]
    assert boundary and boundary[0]["exact"] == "divergent"


def test_construct_and_count_outputs(tmp_path, small):
    out = tmp_path / "o"
    cli.main(["construct", "--config", small, "--out", str(out)])
    recs = (out / "construct.jsonl").read_text().splitlines()
    assert len(recs) == 1 + 2 * 5
    assert cli.main(["count", "--config", small, "--out", str(out)]) == 0
    assert "bounded" in (out / "count.csv").read_text().splitlines()[1]


def test_covers_outputs(tmp_path, small):
    out = tmp_path / "o"
    assert cli.main(["covers", "--config", small, "--out", str(out)]) == 0
    assert (out / "classes.csv").exists() and (out / "incidence.jsonl").exists()


@pytest.mark.parametrize("cmd", ["count", "construct", "covers", "divergence"])
def test_rerun_is_byte_identical(tmp_path, small, cmd):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main([cmd, "--config", small, "--out", str(a)])
    cli.main([cmd, "--config", small, "--out", str(b), "--workers", "2"])
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_out_from_environment(tmp_path, small, monkeypatch):
    monkeypatch.setenv("DIOCURVE_OUT", str(tmp_path / "env"))
    assert cli.main(["divergence", "--config", small]) == 0
    assert (tmp_path / "env" / "divergence.csv").exists()


def test_writers(tmp_path):
    assert dio.fmt6(1 / 3) == "0.333333"
    assert dio.fmt6(True) == "true" and dio.fmt6(None) == ""
    s = dio.dumps({"a": 0.1, "b": float("nan"), "c": [1, 2.5]})
    assert s == '{"a":0.10000000000000001,"b":null,"c":[1,2.5]}'
    assert json.loads(s)["a"] == 0.1
    p = dio.write_svg(tmp_path / "x.svg", [{"x": [1, 10], "y": [1, 100], "label": "a<b"}])
    text = p.read_text()
    assert text.startswith("<svg") and "a&lt;b" in text


def test_every_default_key_documented():
    # the example config in the README lists every section
    assert set(DEFAULTS) >= {"ubiquity", "dimension", "count", "construct", "covers", "divergence"}
