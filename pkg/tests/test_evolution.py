import math
from pathlib import Path

import numpy as np
import pytest
import scipy.linalg as sla

from lidskii_lab import functions as F
from lidskii_lab import io
from lidskii_lab.evolution import (
    ExperimentError, initial_vector, load_config, phi_of_w_apply, run_experiment, solve_cauchy,
)
from lidskii_lab.zoo import build, jordan_model, sturm_liouville


def _write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


BASE = """
[experiment]
name = t
seed = 3

[model.a]
variant = jordan_model
blocks = 0.3:2,0.2:1
seed = 1

[model.b]
variant = sturm_liouville
N = 4

[phi]
name = power
alpha = 0.5

[time]
grid = 0.1, 0.5

[f]
kind = random
"""


def test_sturm_liouville_closed_form():
    m = sturm_liouville(3)
    f = np.array([1.0, -2.0, 0.5], dtype=complex)
    sol = solve_cauchy(m, F.identity(), f, [0.3, 1.0])
    for p in sol.points:
        exact = np.exp(-np.arange(1, 4) ** 2 * p.t) * f
        assert np.allclose(p.u, exact, rtol=1e-12, atol=1e-14)
        assert p.residual < 1e-6


def test_zero_time_returns_initial_vector():
    m = jordan_model([(0.3, 2)], seed=0)
    f = initial_vector(m, "random", seed=1)
    sol = solve_cauchy(m, F.power(0.5), f, [0.0, 0.2])
    assert np.array_equal(sol.points[0].u, f)
    assert sol.limit_error < 1e-6


def test_jordan_identity_against_expm():
    m = jordan_model([(0.4, 2), (0.25, 1)], seed=5)
    f = initial_vector(m, "random", seed=2)
    sol = solve_cauchy(m, F.identity(), f, [0.2, 1.0])
    w = np.linalg.inv(m.b)
    for p in sol.points:
        assert np.linalg.norm(p.u - sla.expm(-p.t * w) @ f) <= 1e-8 * np.linalg.norm(f)


def test_phi_of_w_apply_matches_inverse_for_identity():
    m = jordan_model([(0.5, 3)], seed=4)
    u = initial_vector(m, "random", seed=0)
    assert np.allclose(phi_of_w_apply(m, F.identity(), u), np.linalg.solve(m.b, u), rtol=1e-9)


def test_load_config_sections(tmp_path):
    cfg = load_config(_write(tmp_path, BASE + "\n[checks]\nmonitor = b\n"))
    assert [m.ident for m in cfg.models] == ["a", "b"]
    assert cfg.t_grid == (0.1, 0.5)
    assert cfg.seed == 3 and cfg.monitor == ("b",)
    assert cfg.models[1].params == {"N": "4"}


@pytest.mark.parametrize("patch,match", [
    (("grid = 0.1, 0.5", "grid = 0.5, 0.1"), "increasing"),
    (("grid = 0.1, 0.5", "grid = -1"), "non-negative"),
    (("kind = random", "kind = file\npath = missing.txt"), "does not exist"),
    (("kind = random", "kind = gaussian"), "unknown vector kind"),
])
def test_config_validation(tmp_path, patch, match):
    with pytest.raises(ExperimentError, match=match) as ei:
        load_config(_write(tmp_path, BASE.replace(*patch)))
    assert ei.value.stage == "config"


def test_missing_config_file(tmp_path):
    with pytest.raises(ExperimentError):
        load_config(tmp_path / "nope.ini")


def test_run_experiment_artifacts(tmp_path):
    cfg = load_config(_write(tmp_path, BASE))
    env = run_experiment(cfg, tmp_path / "out")
    assert env.passed
    out = tmp_path / "out"
    for name in ("trajectory.csv", "residuals.csv", "groups.csv", "contour.csv", "report.json",
                 "B_a.mtx", "root_system_b.json"):
        assert (out / name).is_file()
    rep = io.read_json(out / "report.json")
    assert rep["inputs_digest"] == cfg.digest()
    assert set(rep) >= {"op", "inputs_digest", "outputs", "margins"}
    assert np.allclose(io.read_matrix(out / "B_a.mtx"), build("jordan_model", blocks="0.3:2,0.2:1", seed="1").b)


def test_byte_identical_reruns_across_threads(tmp_path):
    cfg = load_config(_write(tmp_path, BASE))
    run_experiment(cfg, tmp_path / "one", threads=1)
    run_experiment(cfg, tmp_path / "two", threads=4)
    files = sorted(p.name for p in (tmp_path / "one").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "two").iterdir())
    for name in files:
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes(), name


def test_failed_stage_writes_partial_report(tmp_path):
    text = BASE.replace("N = 4", "N = 4\n\n[model.c]\nvariant = elliptic2d\na2 = -1\nN = 3")
    cfg = load_config(_write(tmp_path, text))
    with pytest.raises(ExperimentError) as ei:
        run_experiment(cfg, tmp_path / "out")
    assert ei.value.stage == "zoo build"
    rep = io.read_json(tmp_path / "out" / "report.json")
    assert rep["partial"] and rep["failed_stage"] == "zoo build"
    assert rep["completed_models"] == ["a", "b"]


def test_minimal_config_passes():
    root = Path(__file__).resolve().parents[1]
    cfg = load_config(root / "scripts" / "configs" / "minimal.ini")
    env = run_experiment(cfg, write=False)
    assert env.passed
    traj = env.outputs["models"]["main"]
    assert traj["limit_error"] < 1e-6
