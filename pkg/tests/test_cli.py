import json

import numpy as np
import pytest

from degob import catalog, cli
from degob.grid import GridSpec, read_field, write_field


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"n": 64, "tol": 1e-8, "boundary": {"type": "catalog",
                                                                "catalog": {"family": "single_cone",
                                                                            "theta1": np.pi / 6}}}))
    return p


@pytest.fixture(scope="module")
def ustar_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("f") / "ustar.csv"
    write_field(str(p), catalog.sample_field(catalog.u_star(), GridSpec(128)))
    return p


def test_solve_ok(tmp_path, cfg_path):
    out, rep = tmp_path / "f.csv", tmp_path / "r.json"
    assert run("solve", "--config", cfg_path, "--out", out, "--report", rep) == cli.EXIT_OK
    fld = read_field(str(out))
    assert fld.spec.n == 64
    assert json.loads(rep.read_text())["status"] == "converged"


def test_solve_is_deterministic(tmp_path, cfg_path):
    outs = []
    for k in range(2):
        out, rep = tmp_path / f"f{k}.csv", tmp_path / f"r{k}.json"
        run("solve", "--config", cfg_path, "--out", out, "--report", rep)
        outs.append((out.read_bytes(), rep.read_bytes()))
    assert outs[0] == outs[1]


def test_solve_nonconvergence(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"n": 64, "max_iter": 3, "tol": 1e-14}))
    assert run("solve", "--config", p, "--out", tmp_path / "f.csv") == cli.EXIT_NONCONVERGENCE


@pytest.mark.parametrize(
    "cfg",
    [{"n": 100}, {"n": 64, "omega": 3.0}, {"n": 64, "boundary": {"type": "spline"}}, "not json"],
)
def test_solve_config_errors(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    assert run("solve", "--config", p, "--out", tmp_path / "f.csv") == cli.EXIT_CONFIG


def test_solve_unwritable_output(tmp_path, cfg_path):
    assert run("solve", "--config", cfg_path, "--out", tmp_path / "missing" / "f.csv") == cli.EXIT_CONFIG


def test_catalog_eval(capsys):
    assert run("catalog", "eval", "--family", "single_cone", "--theta1", np.pi / 6, "--x", 0, "--y", 1) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == pytest.approx(2 / 9)
    assert run("catalog", "eval", "--family", "full_support", "--a", 0.2, "--x", 0, "--y", 1) == cli.EXIT_CONFIG


def test_weiss(tmp_path, ustar_file):
    out = tmp_path / "w.csv"
    assert run("weiss", "--field", ustar_file, "--out", out) == cli.EXIT_OK
    assert out.read_text().startswith("r,phi,dphi_lhs,dphi_rhs,e")
    assert run("weiss", "--field", ustar_file, "--radii", "0.5,abc", "--out", out) == cli.EXIT_CONFIG
    assert run("weiss", "--field", tmp_path / "missing.csv", "--out", out) == cli.EXIT_CONFIG


def test_blowup(tmp_path, ustar_file):
    out = tmp_path / "b.json"
    assert run("blowup", "--field", ustar_file, "--out", out) == cli.EXIT_OK
    assert json.loads(out.read_text())["class"] == "regular"
    assert run("blowup", "--field", ustar_file, "--x0", "0.1,0", "--out", out) == cli.EXIT_CONFIG


def test_fb(tmp_path, ustar_file):
    curve, graph, pic = tmp_path / "c.csv", tmp_path / "g.csv", tmp_path / "p.svg"
    assert run("fb", "--field", ustar_file, "--out", curve, "--graph", graph, "--svg", pic) == cli.EXIT_OK
    assert curve.read_text().startswith("x1,x2,nx,ny,side")
    assert graph.read_text().startswith("x1,g,gprime,slope_err")
    assert pic.read_text().lstrip().startswith("<?xml")


def test_fb_empty_field_is_tolerance_failure(tmp_path):
    p = tmp_path / "zero.csv"
    from degob.grid import ScalarField

    write_field(str(p), ScalarField.zeros(GridSpec(64)))
    assert run("fb", "--field", p, "--out", tmp_path / "c.csv", "--svg", tmp_path / "z.svg") == cli.EXIT_TOLERANCE
    assert (tmp_path / "z.svg").exists()


def test_epi_deterministic(tmp_path):
    traces = tmp_path / "t.json"
    traces.write_text(json.dumps({"traces": [
        {"type": "catalog", "catalog": {"family": "single_cone", "theta1": 0.0}},
        {"type": "blend", "first": {"family": "single_cone", "theta1": 0.0},
         "second": {"family": "single_cone", "theta1": 0.1}},
        {"type": "perturbed", "catalog": {"family": "full_support"}, "delta": 2.0, "mode": "cos", "k": 1},
    ]}))
    outs = []
    for k in range(2):
        out = tmp_path / f"e{k}.csv"
        assert run("epi", "--traces", traces, "--n", 128, "--out", out) == cli.EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert "rejected" in text and "critical point" in text and "epiperimetric" in text


def test_epi_bad_traces(tmp_path):
    traces = tmp_path / "t.json"
    traces.write_text(json.dumps([{"type": "nope"}]))
    assert run("epi", "--traces", traces, "--out", tmp_path / "e.csv") == cli.EXIT_CONFIG


def test_reproduce_unknown_claim(tmp_path):
    assert run("reproduce", "bogus-id", "--out", tmp_path) == cli.EXIT_CONFIG


def test_reproduce_deterministic(tmp_path):
    for k in range(2):
        assert run("reproduce", "catalog-residual", "--out", tmp_path / str(k), "--seed", 3) == cli.EXIT_OK
    a = sorted(p.name for p in (tmp_path / "0").iterdir())
    assert a == sorted(p.name for p in (tmp_path / "1").iterdir())
    assert "catalog-residual.json" in a
    for name in a:
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()


def test_reproduce_seed_changes_output(tmp_path):
    run("reproduce", "catalog-residual", "--out", tmp_path / "a", "--seed", 1)
    run("reproduce", "catalog-residual", "--out", tmp_path / "b", "--seed", 2)
    csvs = [p.name for p in (tmp_path / "a").iterdir() if p.suffix == ".csv"]
    assert csvs
    assert any((tmp_path / "a" / n).read_bytes() != (tmp_path / "b" / n).read_bytes() for n in csvs)
