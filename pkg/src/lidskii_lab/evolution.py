"""Cauchy-problem driver and experiment runner.

``u(t) = sum_nu A_nu(phi, t) f`` solves ``u' + phi(W) u = 0`` with ``u(0) = f``
for a finite truncation.  The runner checks that residual with a five-point
stencil against an independent matrix-function evaluation, checks the
``t -> 0`` limit by Richardson extrapolation, and writes deterministic tables
and a JSON envelope for a whole pipeline described by a config file.
"""

from __future__ import annotations

import cmath
import configparser
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io
from .contour import ContourSpec, contour_integral, s1_contour_sum
from .functions import OperatorFunctionSpec, from_config
from .jordan import RootSystem, jordan_decompose
from .operators import kyfan_suite, sector_angle, singular_values, SectorSpec
from .oracle import primary_function_structure, richardson, taylor_coefficients
from .summation import abel_lidskii_sum, bracketing_plan, s1_norm_monitor, series_context
from .zoo import ZooModel, build

TOOL_VERSION = "0.1.0"
RESIDUAL_TOL = 1e-6
LIMIT_TOL = 1e-6
CROSS_TOL = 1e-8


class ExperimentError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ----------------------------------------------------------------------------
# configuration

@dataclass
class ModelSpec:
    ident: str
    variant: str
    params: Dict[str, str]


@dataclass
class ExperimentConfig:
    name: str
    models: List[ModelSpec]
    phi_name: str
    phi_params: Dict[str, str]
    t_grid: Tuple[float, ...]
    f_kind: str = "random"
    f_index: int = 1
    f_path: str = ""
    plan_alpha: float = 0.5
    plan_K: Optional[float] = None
    contour: bool = True
    contour_r_factor: float = 0.5
    contour_epsilon: Optional[float] = None
    monitor: Tuple[str, ...] = ()
    monitor_skip: int = 3
    out_dir: str = "out"
    seed: int = 0

    def phi(self) -> OperatorFunctionSpec:
        return from_config(self.phi_name, **self.phi_params)

    def validate(self):
        ts = self.t_grid
        if not ts:
            raise ExperimentError("config", "t grid is empty")
        if any(t < 0 for t in ts) or any(b <= a for a, b in zip(ts[:-1], ts[1:])):
            raise ExperimentError("config", "t grid must be non-negative and strictly increasing")
        if self.f_kind == "file" and not Path(self.f_path).is_file():
            raise ExperimentError("config", f"vector file {self.f_path!r} does not exist")
        if self.f_kind not in ("random", "basis", "ones", "root_sum", "file"):
            raise ExperimentError("config", f"unknown vector kind {self.f_kind!r}")
        if not self.models:
            raise ExperimentError("config", "no [model] section")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["t_grid"] = list(self.t_grid)
        return d

    def digest(self) -> str:
        return io.digest(self.as_dict())


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read an INI-style config.

    Sections: ``[experiment]`` (name, seed, out_dir), one or more
    ``[model]`` / ``[model.<id>]`` (``variant`` plus constructor parameters),
    ``[phi]`` (``name`` plus parameters), ``[time]`` (``grid``), ``[f]``
    (``kind``, ``index``, ``path``), ``[plan]`` (``alpha``, ``K``),
    ``[contour]`` (``enabled``, ``r_factor``, ``epsilon``) and ``[checks]``
    (``monitor``: comma-separated model ids or ``all``, ``skip``).
    """
    path = Path(path)
    if not path.is_file():
        raise ExperimentError("config", f"config file {str(path)!r} does not exist")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read(path)

    def get(section, key, default=None):
        return cp.get(section, key, fallback=default) if cp.has_section(section) else default

    models = []
    for sec in sorted(s for s in cp.sections() if s == "model" or s.startswith("model.")):
        params = dict(cp.items(sec))
        variant = params.pop("variant", None)
        if variant is None:
            raise ExperimentError("config", f"section [{sec}] lacks a variant")
        ident = sec.split(".", 1)[1] if "." in sec else "main"
        models.append(ModelSpec(ident, variant, params))
    phi_params = dict(cp.items("phi")) if cp.has_section("phi") else {}
    phi_name = phi_params.pop("name", "power")
    f_path = get("f", "path", "")
    if f_path and not Path(f_path).is_absolute():
        f_path = str((path.parent / f_path).resolve())
    k_text = get("plan", "K", "")
    eps_text = get("contour", "epsilon", "")
    cfg = ExperimentConfig(
        name=get("experiment", "name", path.stem),
        models=models,
        phi_name=phi_name,
        phi_params=phi_params,
        t_grid=_floats(get("time", "grid", "1.0")),
        f_kind=get("f", "kind", "random"),
        f_index=int(get("f", "index", "1")),
        f_path=f_path,
        plan_alpha=float(get("plan", "alpha", "0.5")),
        plan_K=float(k_text) if k_text else None,
        contour=get("contour", "enabled", "true").lower() in ("1", "true", "yes", "on"),
        contour_r_factor=float(get("contour", "r_factor", "0.5")),
        contour_epsilon=float(eps_text) if eps_text else None,
        monitor=tuple(x.strip() for x in get("checks", "monitor", "").split(",") if x.strip()),
        monitor_skip=int(get("checks", "skip", "3")),
        out_dir=get("experiment", "out_dir", "out"),
        seed=int(get("experiment", "seed", "0")),
    )
    for k, v in (overrides or {}).items():
        if v is not None:
            setattr(cfg, k, v)
    cfg.validate()
    return cfg


# ----------------------------------------------------------------------------
# vectors and the matrix-function oracle

def initial_vector(model: ZooModel, kind: str, index: int = 1, seed: int = 0, path: str = "") -> np.ndarray:
    n = model.dim
    if kind == "ones":
        return np.ones(n, dtype=complex)
    if kind == "basis":
        if not 1 <= index <= n:
            raise ExperimentError("vector", f"basis index {index} outside 1..{n}")
        f = np.zeros(n, dtype=complex)
        f[index - 1] = 1.0
        return f
    if kind == "random":
        rng = np.random.default_rng(seed)
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if kind == "root_sum":
        rs = model_root_system(model)
        return rs.matrix() @ np.ones(n, dtype=complex)
    if kind == "file":
        f = np.loadtxt(path, dtype=complex, ndmin=1)
        if f.size != n:
            raise ExperimentError("vector", f"vector file has {f.size} entries, model has {n}")
        return f
    raise ExperimentError("vector", f"unknown vector kind {kind!r}")


def model_root_system(model: ZooModel) -> RootSystem:
    if model.root_system is None:
        model.root_system = jordan_decompose(model.b)
    return model.root_system


def phi_of_w_apply(model: ZooModel, phi: OperatorFunctionSpec, u) -> np.ndarray:
    """``phi(W) u`` as the primary function ``mu -> phi(1/mu)`` of ``B`` on its Jordan form.

    Taylor coefficients come from Cauchy-circle quadrature, so the result
    does not share code with the jet engine.
    """
    rs = model_root_system(model)
    blocks = [(c.eigenvalue, c.length) for c in rs.chains]

    def h_taylor(mu, k):
        return taylor_coefficients(lambda x: phi(1.0 / x), mu, k - 1, 0.25 * abs(mu))

    return primary_function_structure(blocks, rs.matrix(), h_taylor, u)


# ----------------------------------------------------------------------------
# Cauchy problem

@dataclass
class TrajectoryPoint:
    t: float
    u: np.ndarray
    residual: Optional[float]
    step: Optional[float]


@dataclass
class CauchySolution:
    points: List[TrajectoryPoint]
    limit_error: float
    limit_t0: float
    smallest_t: float
    phi_max: float
    notes: List[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        vals = [p.residual for p in self.points if p.residual is not None]
        return max(vals) if vals else 0.0


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def solve_cauchy(model: ZooModel, phi: OperatorFunctionSpec, f, t_grid: Sequence[float],
                 plan_alpha: float = 0.5, K: Optional[float] = None, threads: int = 1) -> CauchySolution:
    """Trajectory ``u(t)`` on ``t_grid`` with residuals and the ``t -> 0`` limit check.

    The stencil step is ``min(0.01 / max|phi(lambda)|, (t - 1e-4 t_min) / 2)``
    where ``t_min`` is the smallest positive grid time; points with a step
    below ``1e-12`` are reported without a residual.
    """
    f = np.asarray(f, dtype=complex)
    rs = model_root_system(model)
    ctx = series_context(model.b, f, rs)
    plan = bracketing_plan(ctx.lambda_abs, plan_alpha, K)
    phi_max = max(abs(phi(complex(x))) for x in ctx.lambdas)
    positive = [t for t in t_grid if t > 0]
    t_floor = 1e-4 * min(positive) if positive else 0.0
    notes = []

    def u_at(t):
        return abel_lidskii_sum(model.b, phi, t, f, plan=plan, rs=rs).value

    def point(t):
        if t == 0:
            return TrajectoryPoint(0.0, f.copy(), None, None)
        u = u_at(t)
        h = min(0.01 / phi_max, (t - t_floor) / 2)
        if h < 1e-12:
            return TrajectoryPoint(float(t), u, None, None)
        du = (-u_at(t + 2 * h) + 8 * u_at(t + h) - 8 * u_at(t - h) + u_at(t - 2 * h)) / (12 * h)
        r = du + phi_of_w_apply(model, phi, u)
        return TrajectoryPoint(float(t), u, float(np.linalg.norm(r) / max(np.linalg.norm(u), 1e-300)), h)

    points = _map(point, list(t_grid), threads)
    usable = [p.t - 2 * p.step for p in points if p.step is not None]
    skipped = [p.t for p in points if p.t > 0 and p.step is None]
    if skipped:
        notes.append(f"stencil underflow at t = {skipped}")
    t0 = 0.05 / phi_max
    samples = [u_at(t0 * 2.0 ** (-j)) for j in range(4)]
    limit = richardson(samples)
    err = float(np.linalg.norm(limit - f) / max(np.linalg.norm(f), 1e-300))
    return CauchySolution(points, err, t0, min(usable) if usable else math.nan, float(phi_max), notes)


# ----------------------------------------------------------------------------
# experiment pipeline

@dataclass
class Assertion:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass
class ModelReport:
    ident: str
    model: ZooModel
    theta: float
    solution: Optional[CauchySolution]
    group_rows: List[tuple]
    contour_rows: List[tuple]
    assertions: List[Assertion]
    diagnostics: dict


def _power_alpha(phi: OperatorFunctionSpec) -> Optional[float]:
    if phi.name == "power":
        return float(phi.params["alpha"])
    if phi.name == "identity":
        return 1.0
    return None


def _contour_spec(model_lams, theta, cfg: ExperimentConfig, alpha_phi) -> ContourSpec:
    r = cfg.contour_r_factor * float(np.min(np.abs(model_lams)))
    limit = math.pi / 2 if alpha_phi is None else min(math.pi / 2, math.pi / (2 * alpha_phi))
    eps = cfg.contour_epsilon
    if eps is None:
        eps = min(0.3, 0.5 * (limit - theta))
    return ContourSpec.symmetric(r, theta, eps)


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ExperimentError:
        raise
    except Exception as exc:  # any stage failure aborts with the stage name
        raise ExperimentError(name, f"{type(exc).__name__}: {exc}") from exc


def _diagnostics(model: ZooModel) -> Tuple[dict, List[Assertion]]:
    s = singular_values(model.b)
    theta = sector_angle(model.b)
    out = {"singular_values": s, "theta": theta, "dim": model.dim}
    checks = []
    if theta < math.pi / 2:
        rep = kyfan_suite(model.b, SectorSpec(min(theta + 1e-12, math.pi / 2 - 1e-12)), check_sector=False)
        out["kyfan_violations"] = len(rep.violations)
        checks.append(Assertion("kyfan", rep.ok, float(len(rep.violations)), 0.0))
    return out, checks


def run_model(spec: ModelSpec, cfg: ExperimentConfig, threads: int = 1) -> ModelReport:
    model = _stage("zoo build", build, spec.variant, **spec.params)
    diag, assertions = _stage("diagnostics", _diagnostics, model)
    theta = diag["theta"]
    phi = cfg.phi()
    f = _stage("vector", initial_vector, model, cfg.f_kind, cfg.f_index, cfg.seed, cfg.f_path)
    rs = _stage("jordan", model_root_system, model)
    ctx = _stage("plan", series_context, model.b, f, rs)
    plan = _stage("plan", bracketing_plan, ctx.lambda_abs, cfg.plan_alpha, cfg.plan_K)
    bad = plan.verify()
    assertions.append(Assertion("plan_algebra", not bad, float(len(bad)), 0.0))
    diag["groups"] = len(plan.boundaries)
    diag["plan_warning"] = plan.warning

    ts = [t for t in cfg.t_grid if t > 0]

    def series_at(t):
        return abel_lidskii_sum(model.b, phi, t, f, plan=plan, rs=rs)

    series = _stage("summation", _map, series_at, ts, threads)
    group_rows = []
    for t, res in zip(ts, series):
        for nu, norm in enumerate(res.group_norms):
            group_rows.append((t, nu, plan.boundaries[nu], float(norm)))
    if ts and (spec.ident in cfg.monitor or "all" in cfg.monitor):
        mon = _stage("summation", s1_norm_monitor, [r.group_norms for r in series], ts, 1e-3, cfg.monitor_skip)
        worst = max(mon.last_over_max)
        diag["monitor"] = {"last_over_max": mon.last_over_max, "monotone_from": mon.monotone_from}
        assertions.append(Assertion("s1_monitor", mon.summable, worst, 1e-3))

    contour_rows = []
    alpha_phi = _power_alpha(phi)
    if cfg.contour and ts and (alpha_phi is None or theta < math.pi / (2 * alpha_phi)) and theta < math.pi / 2:
        cspec = _contour_spec(ctx.lambdas, theta, cfg, alpha_phi)

        def cross(item):
            t, res = item
            if phi.name == "power":
                rep = s1_contour_sum(model.b, alpha_phi, t, f, cspec, plan=plan, theta=theta, rs=rs)
                return (t, rep.agreement, rep.reassembly, rep.ring_summable["J"], rep.ring_summable["J_plus"], rep.ring_summable["J_minus"])
            q = contour_integral(model.w if model.w is not None else np.linalg.inv(model.b),
                                 lambda lam: cmath.exp(-t * phi(lam)), f, cspec)
            err = float(np.linalg.norm(q.value - res.value) / max(np.linalg.norm(res.value), 1e-300))
            return (t, err, 0.0, "", "", "")

        contour_rows = _stage("contour", _map, cross, list(zip(ts, series)), threads)
        worst = max(r[1] for r in contour_rows)
        assertions.append(Assertion("contour_cross_check", worst <= CROSS_TOL, worst, CROSS_TOL))

    solution = _stage("solve", solve_cauchy, model, phi, f, cfg.t_grid, cfg.plan_alpha, cfg.plan_K, threads)
    if model.diagonalizable or rs.nu_total == len(rs.chains):
        worst = solution.max_residual
        assertions.append(Assertion("evolution_residual", worst <= RESIDUAL_TOL, worst, RESIDUAL_TOL))
    assertions.append(Assertion("limit_t0", solution.limit_error <= LIMIT_TOL, solution.limit_error, LIMIT_TOL))
    return ModelReport(spec.ident, model, theta, solution, group_rows, contour_rows, assertions, diag)


@dataclass
class ReportEnvelope:
    op: str
    inputs_digest: str
    outputs: dict
    margins: dict
    tool_version: str = TOOL_VERSION
    schema_version: str = io.SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(m["passed"] for m in self.margins.values())


TRAJECTORY_HEADER = ["config_digest", "model", "t", "index", "re", "im"]
RESIDUAL_HEADER = ["config_digest", "model", "t", "residual", "step"]
GROUP_HEADER = ["config_digest", "model", "t", "group", "last_index", "norm"]
CONTOUR_HEADER = ["config_digest", "model", "t", "relative_difference", "reassembly", "ring_J", "ring_J_plus", "ring_J_minus"]


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1, write: bool = True) -> ReportEnvelope:
    """Run every model of the config through the pipeline and persist the artifacts.

    Files: ``trajectory.csv``, ``residuals.csv``, ``groups.csv``,
    ``contour.csv``, ``report.json`` and per-model ``B_<id>.mtx`` and
    ``root_system_<id>.json``.  On failure a partial ``report.json`` names the
    failed stage and the exception is re-raised.
    """
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    dig = cfg.digest()
    reports = []
    try:
        for spec in cfg.models:
            reports.append(run_model(spec, cfg, threads))
    except ExperimentError as exc:
        if write:
            io.write_json(out / "report.json", {"op": "report", "inputs_digest": dig, "partial": True,
                                                "failed_stage": exc.stage, "error": str(exc),
                                                "completed_models": [r.ident for r in reports],
                                                "tool_version": TOOL_VERSION})
        raise
    traj, resid, groups, contour = [], [], [], []
    outputs, margins = {"models": {}}, {}
    for rep in reports:
        sol = rep.solution
        for p in sol.points:
            for i, v in enumerate(p.u):
                traj.append((dig, rep.ident, p.t, i + 1, float(v.real), float(v.imag)))
            resid.append((dig, rep.ident, p.t, "" if p.residual is None else p.residual,
                          "" if p.step is None else p.step))
        groups.extend((dig, rep.ident) + row for row in rep.group_rows)
        contour.extend((dig, rep.ident) + row for row in rep.contour_rows)
        d = dict(rep.diagnostics)
        d["singular_values"] = [float(x) for x in d["singular_values"]]
        outputs["models"][rep.ident] = {
            "variant": rep.model.variant, "diagnostics": d, "limit_error": sol.limit_error,
            "smallest_stencil_t": sol.smallest_t, "notes": sol.notes,
        }
        for a in rep.assertions:
            margins[f"{rep.ident}.{a.name}"] = {"passed": bool(a.passed), "value": a.value, "threshold": a.threshold}
    outputs["config"] = cfg.as_dict()
    outputs["csv_schema"] = {"trajectory": TRAJECTORY_HEADER, "residuals": RESIDUAL_HEADER,
                             "groups": GROUP_HEADER, "contour": CONTOUR_HEADER}
    env = ReportEnvelope("report", dig, outputs, margins)
    if write:
        io.write_csv(out / "trajectory.csv", TRAJECTORY_HEADER, traj)
        io.write_csv(out / "residuals.csv", RESIDUAL_HEADER, resid)
        io.write_csv(out / "groups.csv", GROUP_HEADER, groups)
        io.write_csv(out / "contour.csv", CONTOUR_HEADER, contour)
        for rep in reports:
            io.write_matrix(out / f"B_{rep.ident}.mtx", rep.model.b)
            io.write_json(out / f"root_system_{rep.ident}.json", io.read_json_text(rep.model.root_system.to_json()))
        io.write_json(out / "report.json", asdict(env))
    return env
