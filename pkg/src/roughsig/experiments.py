"""Config-driven Monte Carlo harness: signature functionals of process
replicas against the same functionals of the Gaussian rough-path limit,
distribution distances per time scale N, and fitted decay slopes.

The two sides are compared as independent sample sets (a distributional
comparison); replicas are the unit of parallelism, each owning the random
stream keyed by (seed, replica id), and every reduction is indexed by
replica id, so results are byte-identical for any worker count.
"""

from __future__ import annotations

import hashlib
import json
import platform
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import load_process_spec, parse_flat
from .distances import METRICS, distance_with_se
from .limits import (
    GaussianRoughPath,
    LimitModel,
    brownian_increments_batch,
    estimate_limit_model,
    exact_chain_limit_model,
    exact_suspension_limit_model,
    _euler_prefix,
)
from .norms import MatrixIncrements, VectorIncrements, p_variation
from .processes import ProcessSpec, RngStream, SuspensionSpec, sample_paths, sample_suspension
from .signature import batch_prefix_levels
from .tensor import chen_concat_arrays, chen_inverse_arrays, word_to_offset

_GAUSS_SEED_OFFSET = 2_000_000_011
_MODEL_SEED_OFFSET = 1_000_000_007
_CONT_SUBSTEPS = 10  # grid cells per unit of unscaled time for continuous variants


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one Monte Carlo run; see README for the schema."""

    spec_path: str
    N_values: tuple[int, ...]
    replicas: int
    functionals: tuple[str, ...]
    metrics: tuple[str, ...]
    seed: int
    out_dir: str
    variant: str = "discrete"
    T: float = 1.0
    depth: int = 2
    p: float = 2.5
    lag_cap: int = 50
    gauss_steps: int = 4096
    functional_grid: int = 64
    bootstrap: int = 200
    model: str = "estimate"
    model_replicas: int = 16
    model_length: int = 20000

    def __post_init__(self):
        if len(self.N_values) < 3 or any(
            b <= a for a, b in zip(self.N_values, self.N_values[1:])
        ):
            raise ValueError("need at least 3 strictly increasing N values")
        if self.replicas < 100:
            raise ValueError("need at least 100 replicas")
        if not 2 < self.p < 3:
            raise ValueError("p must lie in (2, 3)")
        if self.variant not in ("discrete", "continuous", "suspension"):
            raise ValueError(f"unknown variant {self.variant!r}")
        for metric in self.metrics:
            if metric not in METRICS:
                raise ValueError(f"unknown metric {metric!r}")
        for fid in self.functionals:
            _parse_functional(fid)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        table = parse_flat(Path(path).read_text())
        def get(key, default=None):
            if key not in table and default is None:
                raise ValueError(f"experiment config misses key {key!r}")
            return table.get(key, default)

        return cls(
            spec_path=get("spec"),
            variant=get("variant", "discrete"),
            N_values=tuple(int(tok) for tok in get("N").split()),
            T=float(get("T", "1.0")),
            depth=int(get("depth", "2")),
            p=float(get("p", "2.5")),
            replicas=int(get("replicas")),
            functionals=tuple(get("functionals").split()),
            metrics=tuple(get("metrics").split()),
            seed=int(get("seed")),
            lag_cap=int(get("lag_cap", "50")),
            out_dir=get("out", "."),
            gauss_steps=int(get("gauss_steps", "4096")),
            functional_grid=int(get("functional_grid", "64")),
            bootstrap=int(get("bootstrap", "200")),
            model=get("model", "estimate"),
            model_replicas=int(get("model_replicas", "16")),
            model_length=int(get("model_length", "20000")),
        )

    def canonical_text(self) -> str:
        pairs = sorted(self.__dict__.items())
        return "\n".join(f"{k} = {v}" for k, v in pairs)


def _parse_functional(fid: str):
    parts = fid.split(":")
    if parts[0] == "terminal" and len(parts) == 3:
        nu = int(parts[1])
        word = tuple(int(c) for c in parts[2])
        if len(word) != nu or nu < 1:
            raise ValueError(f"terminal functional {fid!r}: word length must equal the level")
        return ("terminal", nu, word)
    if parts[0] == "supnorm" and len(parts) == 2:
        return ("supnorm", int(parts[1]), None)
    if parts[0] == "pvar" and len(parts) == 2:
        return ("pvar", int(parts[1]), None)
    raise ValueError(f"cannot parse functional {fid!r}")


def _needs_grid(functionals) -> bool:
    return any(_parse_functional(f)[0] != "terminal" for f in functionals)


# -- functional extraction ----------------------------------------------------


def _functionals_from_levels(
    levels: list[np.ndarray],
    times: np.ndarray,
    functionals: tuple[str, ...],
    dim: int,
    p: float,
    grid_cap: int,
) -> dict[str, np.ndarray]:
    """Evaluate scalar functionals on prefix level arrays (R, m+1, d**nu)."""
    out: dict[str, np.ndarray] = {}
    R = levels[0].shape[0]
    for fid in functionals:
        kind, nu, word = _parse_functional(fid)
        if nu >= len(levels):
            raise ValueError(f"functional {fid!r} needs depth >= {nu}")
        lvl = levels[nu]
        if kind == "terminal":
            out[fid] = lvl[:, -1, word_to_offset(word, dim)].copy()
        elif kind == "supnorm":
            out[fid] = np.linalg.norm(lvl, axis=2).max(axis=1)
        else:  # pvar at exponent p/nu on a bounded subgrid
            m = lvl.shape[1] - 1
            grid = np.unique(np.linspace(0, m, min(grid_cap, m + 1)).round().astype(int))
            vals = np.empty(R)
            for r in range(R):
                if nu == 1:
                    f = VectorIncrements(times[grid], lvl[r][grid])
                else:
                    f = _level_increment_table(
                        [levels[k][r] for k in range(len(levels))], grid, times, nu, dim
                    )
                vals[r] = p_variation(f, p / nu)
            out[fid] = vals
    return out


def _level_increment_table(prefix_arrays, grid, times, nu, dim) -> MatrixIncrements:
    m = grid.size
    mat = np.zeros((m, m))
    for a in range(m - 1):
        pref_a = [arr[grid[a]] for arr in prefix_arrays[: nu + 1]]
        inv = chen_inverse_arrays(pref_a, dim)
        for bi in range(a + 1, m):
            pref_b = [arr[grid[bi]] for arr in prefix_arrays[: nu + 1]]
            inc = chen_concat_arrays(inv, pref_b, dim)
            mat[a, bi] = float(np.linalg.norm(inc[nu]))
    return MatrixIncrements(times[grid], mat)


def _chunk_size(cells: int, dim: int, depth: int) -> int:
    per_replica = max(1, (cells + 1) * dim**depth)
    return max(4, min(512, 4_000_000 // per_replica))


def _process_chunk(args) -> tuple[int, dict[str, np.ndarray]]:
    (spec, variant, N, T, depth, p, functionals, grid_cap, seed, lo, hi) = args
    n = int(round(N * T))
    if isinstance(spec, SuspensionSpec):
        steps = _suspension_steps_batch(spec, N, T, seed, lo, hi)
    elif variant == "continuous":
        values = sample_paths(spec, n, hi - lo, seed, first_stream=lo)
        dt = 1.0 / _CONT_SUBSTEPS
        steps = np.repeat(values, _CONT_SUBSTEPS, axis=1) * dt
    else:
        steps = sample_paths(spec, n, hi - lo, seed, first_stream=lo)
    levels = batch_prefix_levels(steps, depth)
    scale = [N ** (-nu / 2.0) for nu in range(depth + 1)]
    levels = [lvl * scale[nu] for nu, lvl in enumerate(levels)]
    times = np.linspace(0.0, T, steps.shape[1] + 1)
    return lo, _functionals_from_levels(levels, times, functionals, spec.dim, p, grid_cap)


def _suspension_steps_batch(spec: SuspensionSpec, N, T, seed, lo, hi) -> np.ndarray:
    horizon = N * T * spec.tau_bar
    dt = min(1.0, float(spec.roof.min())) / _CONT_SUBSTEPS
    cells = int(np.floor(horizon / dt + 1e-9))
    out = np.empty((hi - lo, cells, spec.dim))
    for r in range(lo, hi):
        samp = sample_suspension(
            spec, horizon + 2 * float(spec.roof.max()), RngStream(seed, r), fiber_dt=dt
        )
        out[r - lo] = samp.fiber.values[:cells]
    return out * dt


def _gauss_chunk(args) -> tuple[int, dict[str, np.ndarray]]:
    (model, T, steps, depth, p, functionals, grid_cap, seed, lo, hi) = args
    inc = brownian_increments_batch(model, T, steps, hi - lo, seed, first_stream=lo)
    levels = _euler_prefix(inc, model.gamma, T / steps, depth)
    times = np.linspace(0.0, T, steps + 1)
    return lo, _functionals_from_levels(levels, times, functionals, model.dim, p, grid_cap)


def _run_jobs(worker, jobs, workers: int):
    if workers <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(worker, jobs))


def _collect(results, replicas, functionals) -> dict[str, np.ndarray]:
    out = {fid: np.empty(replicas) for fid in functionals}
    for lo, chunk in results:
        for fid, vals in chunk.items():
            out[fid][lo : lo + vals.size] = vals
    return out


# -- decay fitting ------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    slope_se: float
    n_used: int
    flag: str


def fit_decay(points) -> DecayFit:
    """Weighted least squares of log(distance) on log(N).

    Weights are 1/(se/distance)^2 (the delta-method variance of the log);
    points with nonpositive distance are dropped, and fewer than 3 surviving
    points is an error.  A slope within 2 standard errors of zero is flagged
    noise-limited.
    """
    kept = [(N, d, se) for (N, d, se) in points if d > 0]
    if len(kept) < len(list(points)):
        pass  # dropped nonpositive distances
    if len(kept) < 3:
        raise ValueError("need at least 3 positive distances to fit a slope")
    Ns = np.array([k[0] for k in kept], dtype=float)
    ds = np.array([k[1] for k in kept], dtype=float)
    ses = np.array([k[2] for k in kept], dtype=float)
    w = np.ones_like(ds) if np.any(ses <= 0) else (ds / ses) ** 2
    X = np.column_stack([np.ones_like(Ns), np.log(Ns)])
    y = np.log(ds)
    XtW = X.T * w
    cov = np.linalg.inv(XtW @ X)
    beta = cov @ (XtW @ y)
    slope_se = float(np.sqrt(cov[1, 1]))
    flag = "noise-limited" if abs(beta[1]) <= 2.0 * slope_se else "ok"
    return DecayFit(
        slope=float(beta[1]),
        intercept=float(beta[0]),
        slope_se=slope_se,
        n_used=len(kept),
        flag=flag,
    )


# -- the harness --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    distances: list[dict]
    slopes: list[dict]
    manifest: dict
    out_dir: Path


def _metric_seed(seed: int, N, fid: str, metric: str) -> int:
    return seed + zlib.crc32(f"{N}|{fid}|{metric}".encode())


def _resolve_model(cfg: ExperimentConfig, spec) -> LimitModel:
    if cfg.model == "exact":
        if isinstance(spec, SuspensionSpec):
            return exact_suspension_limit_model(spec)
        if spec.is_chain:
            return exact_chain_limit_model(spec)
        raise ValueError("exact limit models exist for chains and suspensions only")
    variant = None if isinstance(spec, SuspensionSpec) else cfg.variant
    return estimate_limit_model(
        spec,
        cfg.lag_cap,
        cfg.model_replicas,
        cfg.model_length,
        cfg.seed + _MODEL_SEED_OFFSET,
        variant=variant,
    )


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run the full comparison and write distances.csv / slopes.csv / manifest.json."""
    t_start = time.time()
    timings: dict[str, float] = {}
    spec = load_process_spec(cfg.spec_path)
    if isinstance(spec, SuspensionSpec) and cfg.variant != "suspension":
        raise ValueError("suspension spec files require variant = suspension")

    t0 = time.time()
    model = _resolve_model(cfg, spec)
    timings["limit_model"] = time.time() - t0

    chunk_jobs = []
    grid_cap = cfg.functional_grid
    # Gaussian side: the limit law does not depend on N, one sample set serves all N
    t0 = time.time()
    gauss_chunk = _chunk_size(cfg.gauss_steps, model.dim, cfg.depth)
    jobs = [
        (model, cfg.T, cfg.gauss_steps, cfg.depth, cfg.p, cfg.functionals, grid_cap,
         cfg.seed + _GAUSS_SEED_OFFSET, lo, min(lo + gauss_chunk, cfg.replicas))
        for lo in range(0, cfg.replicas, gauss_chunk)
    ]
    gauss_vals = _collect(_run_jobs(_gauss_chunk, jobs, workers), cfg.replicas, cfg.functionals)
    timings["gauss_side"] = time.time() - t0

    distances: list[dict] = []
    for N in cfg.N_values:
        t0 = time.time()
        n_cells = int(round(N * cfg.T)) * (_CONT_SUBSTEPS if cfg.variant != "discrete" else 1)
        chunk = _chunk_size(n_cells, spec.dim, cfg.depth)
        jobs = [
            (spec, cfg.variant, N, cfg.T, cfg.depth, cfg.p, cfg.functionals, grid_cap,
             cfg.seed, lo, min(lo + chunk, cfg.replicas))
            for lo in range(0, cfg.replicas, chunk)
        ]
        proc_vals = _collect(_run_jobs(_process_chunk, jobs, workers), cfg.replicas, cfg.functionals)
        for fid in cfg.functionals:
            for metric in cfg.metrics:
                value, se = distance_with_se(
                    metric,
                    proc_vals[fid],
                    gauss_vals[fid],
                    n_boot=cfg.bootstrap,
                    seed=_metric_seed(cfg.seed, N, fid, metric),
                )
                distances.append(
                    {"N": N, "functional": fid, "metric": metric, "distance": value, "se": se}
                )
        timings[f"N={N}"] = time.time() - t0

    slopes: list[dict] = []
    for fid in cfg.functionals:
        for metric in cfg.metrics:
            pts = [
                (row["N"], row["distance"], row["se"])
                for row in distances
                if row["functional"] == fid and row["metric"] == metric
            ]
            try:
                fit = fit_decay(pts)
                slopes.append(
                    {"functional": fid, "metric": metric, "slope": fit.slope,
                     "se": fit.slope_se, "flag": fit.flag}
                )
            except ValueError:
                slopes.append(
                    {"functional": fid, "metric": metric, "slope": float("nan"),
                     "se": float("nan"), "flag": "degenerate"}
                )

    timings["total"] = time.time() - t_start
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dist_path = out_dir / "distances.csv"
    slope_path = out_dir / "slopes.csv"
    _write_csv(
        dist_path,
        ["N", "functional", "metric", "distance", "se"],
        sorted(distances, key=lambda r: (r["N"], r["functional"], r["metric"])),
    )
    _write_csv(
        slope_path,
        ["functional", "metric", "slope", "se", "flag"],
        sorted(slopes, key=lambda r: (r["functional"], r["metric"])),
    )
    manifest = {
        "config_hash": hashlib.sha256(cfg.canonical_text().encode()).hexdigest(),
        "seed": cfg.seed,
        "timings": timings,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "roughsig": __version__,
        },
        "outputs": [dist_path.name, slope_path.name],
        "model": model.to_json_dict(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return ExperimentResult(distances=distances, slopes=slopes, manifest=manifest, out_dir=out_dir)


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write_csv(path: Path, header: list[str], rows: list[dict]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in header))
    path.write_text("\n".join(lines) + "\n")


# -- Chen audit ---------------------------------------------------------------


@dataclass(frozen=True)
class AuditRow:
    kind: str
    detail: str
    residual: float
    tolerance: float
    passed: bool


def _split_residual(increment_fn, a: int, b: int, c: int, dim: int) -> float:
    left = increment_fn(a, b)
    right = increment_fn(b, c)
    whole = increment_fn(a, c)
    combined = chen_concat_arrays(left, right, dim)
    num = max(float(np.linalg.norm(x - y)) for x, y in zip(combined, whole))
    den = max(1.0, max(float(np.linalg.norm(x)) for x in whole))
    return num / den


def chen_audit(
    spec: ProcessSpec | None = None,
    model: LimitModel | None = None,
    *,
    N: int = 256,
    T: float = 1.0,
    depth: int = 3,
    n_splits: int = 100,
    seed: int = 2024,
    delta: float = 1e-2,
    refine: int = 4,
    replicas: int = 256,
) -> list[AuditRow]:
    """Chen-identity residuals at random splits plus the Euler rate check.

    Discrete signatures and grid-split Gaussian rough paths must satisfy the
    identity to 1e-12 relative; the Euler lift's strong discretization error
    must shrink by at least 1.5x when the step is refined ``refine``-fold.
    """
    rows: list[AuditRow] = []
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if spec is not None:
        from .signature import PrefixTable

        n = int(round(N * T))
        values = sample_paths(spec, n, 1, seed)[0]
        table = PrefixTable(values, depth, spec.dim)
        worst = 0.0
        for _ in range(n_splits):
            a, b, c = sorted(gen.integers(0, n + 1, size=3))
            worst = max(worst, _split_residual(table.increment_arrays, a, b, c, spec.dim))
        rows.append(AuditRow("chen-discrete", f"N={N}", worst, 1e-12, worst <= 1e-12))
    if model is not None:
        steps = int(round(T / delta))
        from .limits import sample_brownian

        times, w = sample_brownian(model, T, steps, RngStream(seed, 1))
        grp = GaussianRoughPath(times, w, model, depth)

        def inc(a, b):
            return [lvl.coeffs for lvl in grp.increment(a, b).levels]

        worst = 0.0
        for _ in range(n_splits):
            a, b, c = sorted(gen.integers(0, steps + 1, size=3))
            worst = max(worst, _split_residual(inc, a, b, c, model.dim))
        rows.append(AuditRow("chen-gauss-grid", f"delta={delta}", worst, 1e-12, worst <= 1e-12))

        # strong Euler rate: coupled coarse/fine lifts of one Brownian batch
        fine_steps = steps * refine * refine
        inc_fine = brownian_increments_batch(
            model, T, fine_steps, replicas, seed + _GAUSS_SEED_OFFSET
        )
        e = {}
        lv_fine = [lvl[:, -1] for lvl in _euler_prefix(inc_fine, model.gamma, T / fine_steps, depth)]
        for factor, label in ((refine * refine, "coarse"), (refine, "mid")):
            m = fine_steps // factor
            agg = inc_fine.reshape(replicas, m, factor, model.dim).sum(axis=2)
            lv = [lvl[:, -1] for lvl in _euler_prefix(agg, model.gamma, T / m, depth)]
            err = np.zeros(replicas)
            for nu in range(2, depth + 1):
                err += np.linalg.norm(lv[nu] - lv_fine[nu], axis=1)
            e[label] = float(err.mean())
        ratio = e["coarse"] / max(e["mid"], 1e-300)
        rows.append(
            AuditRow("euler-refinement", f"delta={delta} refine={refine}", ratio, 1.5, ratio >= 1.5)
        )
    return rows
