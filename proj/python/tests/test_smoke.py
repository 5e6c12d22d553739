import json
import math

import numpy as np
import pytest

import malab


def test_radial_solution_matches_the_paraboloid():
    f = malab.solve(33)
    u = f.values
    assert u.shape == (33, 33)
    xs = np.linspace(-1.0, 1.0, 33)
    X, Y = np.meshgrid(xs, xs)
    exact = 0.5 * (X**2 + Y**2 - 1.0)
    inside = ~np.isnan(u)
    assert np.max(np.abs(u[inside] - exact[inside])) < 1e-10
    rep = malab.solve_report(f)
    assert rep["residual"] <= 1e-8
    assert "wall_time" not in rep


def test_hessian_norm_is_one_for_the_paraboloid():
    h = malab.solve(33).hessian_norm()
    vals = h[~np.isnan(h)]
    assert vals.size > 0
    assert np.allclose(vals, 1.0, atol=1e-8)


def test_normalized_size_of_an_isotropic_section():
    alpha, sigma = malab.solve(65).normalized_size(0.0, 0.0, 0.05)
    assert alpha == pytest.approx(1.0, rel=0.05)
    assert 0.0 < sigma <= 1.0


def test_wang_exponent_and_tails():
    w = malab.wang(3.0)
    assert w["alpha"] == 3.0
    f = malab.wang_field(3.0, spacing=0.004)
    t = malab.tails(f, level=1.0 / 16)
    assert not t["trivial"]
    assert t["slope"] < -1.0


def test_invalid_exponent_raises():
    with pytest.raises(malab.MalabError, match="InvalidExponent"):
        malab.wang(0.5)


def test_doubling_fit_for_a_degenerate_weight():
    r = malab.doubling(1.0, nodes=33, seed=3)
    assert 1.0 <= r["beta"] <= 2.25
    assert r["gamma"] > 0.0


def test_config_errors_surface_as_exceptions():
    with pytest.raises(malab.MalabError, match="ConfigError"):
        malab.run("grids: [33]\n")


def test_run_is_reproducible(tmp_path):
    cfg = "grids: [17, 33]\nanalysis:\n  engulfing_pairs: 20\n"
    a = malab.run(cfg, output=str(tmp_path / "a"))
    b = malab.run(cfg, output=str(tmp_path / "b"))
    assert a["files"] == b["files"]
    assert a["config_hash"] == b["config_hash"]
    diff = malab.compare(str(tmp_path / "a"), str(tmp_path / "b"))
    assert diff["identical"]
    assert diff["max_relative_difference"] == 0.0
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["selector"] == "radial"
    assert math.isfinite(summary["delta"])


def test_template_lists_every_section():
    text = malab.config_template()
    for key in ("problem:", "grids:", "solver:", "wang:", "analysis:"):
        assert key in text
