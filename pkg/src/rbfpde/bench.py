"""Experiment driver: geometry x scheme cells, error tables and rate fits.

A config is a JSON object::

    {
      "name": "table2",
      "seed": 0,
      "checkpoints": 364,
      "geometry": {"kind": "square_cutout", "params": {...},
                   "counts": [{"n_boundary": 26, "n_interior": 9}, ...]},
      "problem": {"tag": "helmholtz2d_inhomog", "gamma": 2.0},
      "schemes": [{"name": "BKM", "rcond": 1e-10}, {"name": "BPM", "M": 3, "rcond": 1e-10}],
      "output": {"csv": "table2.csv", "json": "table2.report.json"}
    }

Several studies can share one config under ``"studies": [{geometry,
problem, schemes}, ...]``.  ``problem`` may instead give ``operator`` (OperatorSpec fields) and an
``exact`` expression in x, y, z.  Every (study, count, scheme) triple is one cell.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import sympy as sp

from . import geometry as G
from . import kernels as K
from . import solvers as S
from .errors import ConfigError, FitError, RbfError
from .linalg import COLLOCATION_PIVOT_TOL, condition_estimate, lu_factor
from .problems import _X, named_problem, problem_from_expression, validate_problem

CSV_COLUMNS = ("cell", "scheme", "label", "n_boundary", "n_interior", "n_total",
               "l2_error", "condition", "status", "message")
SCHEMES = ("BKM", "BPM", "Kansa", "MKM", "LSRCM", "Interp")
GEOMETRIES = ("square_cutout", "cube_cavity", "grid_box", "circle", "sphere")


@dataclass
class Study:
    geometry: dict
    problem: dict
    schemes: list

    def check(self):
        kind = self.geometry.get("kind")
        if kind not in GEOMETRIES:
            raise ConfigError(f"geometry kind must be one of {GEOMETRIES}, got {kind!r}")
        if not self.geometry.get("counts"):
            raise ConfigError("geometry needs a non-empty 'counts' list")
        for s in self.schemes:
            if not isinstance(s, dict) or s.get("name") not in SCHEMES:
                raise ConfigError(f"scheme entries need a name in {SCHEMES}, got {s!r}")


@dataclass
class ExperimentConfig:
    """One or more studies (geometry + problem + schemes) sharing seed and outputs."""

    name: str
    studies: list
    checkpoints: int = 500
    seed: int = 0
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        study_keys = {"geometry", "problem", "schemes"}
        unknown = set(d) - study_keys - {"name", "studies", "checkpoints", "seed", "output"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw = d["studies"] if "studies" in d else [{k: d[k] for k in study_keys if k in d}]
        studies = []
        for st in raw:
            if not isinstance(st, dict):
                raise ConfigError("each study must be a JSON object")
            missing = sorted(study_keys - set(st))
            if missing:
                raise ConfigError(f"study is missing {', '.join(missing)}")
            studies.append(Study(dict(st["geometry"]), dict(st["problem"]), list(st["schemes"])))
        try:
            cfg = cls(
                name=str(d.get("name", "experiment")),
                studies=studies,
                checkpoints=int(d.get("checkpoints", 500)),
                seed=int(d.get("seed", 0)),
                output=dict(d.get("output", {})),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path):
        path = resolve_config_path(path)
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)

    def check(self):
        for st in self.studies:
            st.check()
        if self.checkpoints <= 0:
            raise ConfigError("checkpoints must be positive")

    def to_dict(self):
        return asdict(self)

    def with_seed(self, seed):
        return ExperimentConfig(self.name, self.studies, self.checkpoints, int(seed), self.output)


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    fits: dict = field(default_factory=dict)

    @property
    def failed(self):
        return [r for r in self.rows if r["status"] != "ok"]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"config": self.config, "rows": self.rows, "fits": self.fits},
                          indent=2, default=_json_default)

    def write(self, out_dir=None):
        out = self.config.get("output", {})
        name = self.config.get("name", "experiment")
        base = Path(out_dir) if out_dir is not None else Path(".")
        base.mkdir(parents=True, exist_ok=True)
        csv_path = base / out.get("csv", f"{name}.csv")
        json_path = base / out.get("json", f"{name}.report.json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return "" if x is None else str(x)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x)}")


def resolve_config_path(path):
    """A filesystem path, or the name of a bundled config (``table2``)."""
    p = Path(path)
    if p.exists():
        return p
    bundled = Path(__file__).parent / "configs" / (p.name if p.suffix else p.name + ".json")
    if bundled.exists():
        return bundled
    raise ConfigError(f"config {path} not found")


def bundled_configs():
    return sorted(p.stem for p in (Path(__file__).parent / "configs").glob("*.json"))


# ---------------------------------------------------------------------------
# Building blocks
# ---------------------------------------------------------------------------


def build_cloud(geometry, count):
    kind = geometry["kind"]
    kw = dict(geometry.get("params", {}))
    kw.update(count)
    try:
        if kind == "square_cutout":
            if "cutout" in kw:
                kw["cutout"] = G.Cutout(**kw["cutout"])
            return G.sample_square_with_cutout(**kw)
        if kind == "cube_cavity":
            if "neumann_face" in kw and kw["neumann_face"] is not None:
                kw["neumann_face"] = tuple(kw["neumann_face"])
            return G.sample_cube_with_two_ball_cavity(**kw)
        if kind == "grid_box":
            kw["neumann"] = [tuple(f) for f in kw.get("neumann", [])]
            return G.sample_grid_box(**kw)
        if kind == "circle":
            return G.sample_circle(**kw)
        return G.sample_sphere(**kw)
    except TypeError as exc:
        raise ConfigError(f"bad geometry parameters for {kind}: {exc}") from exc


def build_problem(problem):
    p = dict(problem)
    try:
        if "tag" in p:
            return named_problem(p.pop("tag"), **p)
        op = K.OperatorSpec(**{k: (tuple(v) if k == "v" else v) for k, v in p["operator"].items()})
        exact = sp.sympify(p["exact"], locals=dict(zip("xyz", _X)))
        return problem_from_expression(op, exact)
    except (KeyError, TypeError, sp.SympifyError) as exc:
        raise ConfigError(f"bad problem spec: {exc}") from exc
    except RbfError as exc:
        raise ConfigError(str(exc)) from exc


def _rbf(spec, cloud):
    c = spec.get("c")
    if c is None:
        # a few node spacings
        c = 2.0 * cloud.diameter() / math.sqrt(len(cloud))
    return K.multiquadric(float(c))


def mq_interpolate(values_at, cloud, rbf):
    """Plain MQ interpolation of a field at every node; returns (evaluator, cond)."""
    X = cloud.positions
    prof = rbf.profile if isinstance(rbf, K.KernelRbf) else rbf
    A = prof.evaluate(np.linalg.norm(X[:, None] - X[None], axis=-1))
    fac = lu_factor(A, COLLOCATION_PIVOT_TOL)
    coef = fac.solve(values_at(X))

    def evaluate(P):
        P = np.atleast_2d(P)
        return prof.evaluate(np.linalg.norm(P[:, None] - X[None], axis=-1)) @ coef

    return evaluate, condition_estimate(fac)


def _run_scheme(spec, bvp, cloud, geometry, count):
    name = spec["name"]
    if name == "BKM":
        return S.bkm_solve(bvp, cloud, m=spec.get("m", 0), rcond=spec.get("rcond"))
    if name == "BPM":
        return S.bpm_solve(bvp, cloud, M=spec.get("M", S.DEFAULT_BPM_ORDER), rcond=spec.get("rcond"))
    rbf = _rbf(spec, cloud)
    if name == "Kansa":
        return S.kansa_solve(bvp, cloud, rbf)
    if name == "MKM":
        return S.mkm_solve(bvp, cloud, rbf)
    if name == "LSRCM":
        src = spec.get("sources")
        if src is None:
            sources = cloud.positions[:: int(spec.get("stride", 2))]
        else:
            sources = build_cloud(geometry, {**count, **src}).positions
        return S.lsrcm_solve(bvp, cloud, sources, rbf)
    evaluate, cond = mq_interpolate(bvp.exact, cloud, rbf)
    return S.Solution("Interp", {}, cloud, rbf, None, evaluate, cond, 1, None)


def _label(name, nb, ni):
    return f"{name} ({nb}+{ni})" if ni else f"{name} ({nb})"


def _run_cell(index, spec, count, study, bvp, checkpoints):
    row = dict(cell=index, scheme=spec["name"], label=spec.get("label"), n_boundary=None,
               n_interior=None, n_total=None, l2_error=None, condition=None, status="ok",
               message="", wall_time=None)
    t0 = time.perf_counter()
    try:
        cloud = build_cloud(study.geometry, count)
        nd, nn, ni = cloud.counts
        row.update(n_boundary=nd + nn, n_interior=ni, n_total=len(cloud))
        if row["label"] is None:
            # BPM is boundary-only and ignores interior nodes
            row["label"] = _label(spec["name"], nd + nn, 0 if spec["name"] == "BPM" else ni)
        pts = checkpoints(cloud)
        sol = _run_scheme(spec, bvp, cloud, study.geometry, count)
        row["l2_error"] = S.l2_relative_error(sol, bvp.exact, pts)
        row["condition"] = float(sol.condition)
    except Exception as exc:  # noqa: BLE001 - a failing cell is reported, not raised
        row["status"] = "failed"
        row["message"] = f"{type(exc).__name__}: {exc}"
        if row["label"] is None:
            row["label"] = spec["name"]
    row["wall_time"] = time.perf_counter() - t0
    return row


def run_experiment(config, jobs=1, seed=None) -> ExperimentReport:
    """Run every (study, count, scheme) cell; solver failures become tagged rows.

    Problems are validated against their exact solutions before any solve.
    """
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_dict(config)
    if seed is not None:
        config = config.with_seed(seed)
    cells = []
    for st in config.studies:
        if not st.schemes:
            continue
        bvp = build_problem(st.problem)
        first = build_cloud(st.geometry, st.geometry["counts"][0])
        validate_problem(bvp, first.region, seed=config.seed)
        # checkpoints depend on the region and seed only, never on the nodes
        pts = G.sample_checkpoints(first.region, config.checkpoints, config.seed)
        cells += [(spec, count, st, bvp, pts) for spec in st.schemes for count in st.geometry["counts"]]
    args = [(i, spec, count, st, bvp, (lambda cloud, p=pts: p))
            for i, (spec, count, st, bvp, pts) in enumerate(cells)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(lambda a: _run_cell(*a), args))
    else:
        rows = [_run_cell(*a) for a in args]
    return ExperimentReport(config.to_dict(), rows)


def fit_convergence(rows, scheme=None, loglog=False):
    """Least-squares slope p of log(err) against log(N).

    ``rows`` is a report or a list of rows with ``n_total`` and ``l2_error``.
    With ``loglog`` a log(log N) column is added.  Returns (p, rms residual).
    """
    if isinstance(rows, ExperimentReport):
        rows = rows.rows
    rows = [r for r in rows if r.get("status", "ok") == "ok"
            and (scheme is None or r["scheme"] == scheme)]
    n = np.array([float(r["n_total"]) for r in rows])
    e = np.array([float(r["l2_error"]) for r in rows])
    good = np.isfinite(e) & (e > 0) & (n > 1)
    n, e = n[good], e[good]
    need = 4 if loglog else 3
    if len(np.unique(n)) < need:
        raise FitError(f"need at least {need} successful rows with distinct node counts")
    cols = [np.ones_like(n), np.log(n)]
    if loglog:
        cols.append(np.log(np.log(n)))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, np.log(e), rcond=None)
    resid = np.log(e) - A @ coef
    return float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def monotone_until_floor(rows, floor=1e14):
    """Errors non-increasing in node count until the condition estimate passes ``floor``."""
    rows = sorted((r for r in rows if r["status"] == "ok"), key=lambda r: r["n_total"])
    for a, b in zip(rows, rows[1:]):
        if a["condition"] > floor:
            return True
        if b["l2_error"] > a["l2_error"]:
            return False
    return True


def dump_clouds(config, out_dir):
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_dict(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for j, st in enumerate(config.studies):
        for i, count in enumerate(st.geometry["counts"]):
            path = out / f"{config.name}_study{j}_cloud{i}.csv"
            build_cloud(st.geometry, count).to_csv(path)
            paths.append(path)
    return paths
