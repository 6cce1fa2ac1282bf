"""Command-line front end: sig, simulate, limit-model, lyons, pvar, charfn,
experiment subcommands over the library."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .blocks import block_sums, build_scheme, charfn_gap, default_w_grid
from .config import load_process_spec
from .distances import METRICS
from .experiments import ExperimentConfig, run_experiment
from .limits import LimitModel, estimate_limit_model, lyons_extension, sample_brownian
from .norms import VectorIncrements, p_variation, signature_level_increments
from .processes import RngStream, SuspensionSpec, sample_path, sample_paths
from .signature import PathSample, PrefixTable, brute_force_signature, signature_increment


def _read_path_csv(path: str, continuous: bool, dt: float | None) -> PathSample:
    rows = [line.strip() for line in Path(path).read_text().splitlines() if line.strip()]
    if not rows:
        raise SystemExit("empty path file")
    header = rows[0].split(",")
    has_header = not _is_float(header[0])
    data = np.array(
        [[float(tok) for tok in line.split(",")] for line in rows[1 if has_header else 0 :]]
    )
    if has_header and header[0].strip().lower() == "t":
        times = data[:, 0]
        values = data[:, 1:]
        if continuous and dt is None and len(times) > 1:
            dt = float(times[1] - times[0])
    else:
        values = data if not has_header else data
    kind = "continuous" if continuous else "discrete"
    return PathSample(dim=values.shape[1], values=values, kind=kind, dt=dt if continuous else None)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_sig(args) -> None:
    xs = _read_path_csv(args.input, args.continuous, args.dt)
    if args.oracle:
        lo = 0 if args.window is None else int(args.window[0] * args.scale_N)
        hi = len(xs) if args.window is None else int(args.window[1] * args.scale_N)
        tensor = brute_force_signature(xs, (lo, hi), args.depth)
    else:
        s, t = (0.0, xs.horizon / args.scale_N) if args.window is None else args.window
        tensor = signature_increment(xs, s, t, args.depth, scale=args.scale_N).tensor
    _write_out(tensor.to_json(), args.out)


def _cmd_simulate(args) -> None:
    spec = load_process_spec(args.spec)
    if isinstance(spec, SuspensionSpec):
        raise SystemExit("simulate emits discrete series; use the experiment pipeline for suspensions")
    path = sample_path(spec, args.n, RngStream(args.seed, args.stream))
    lines = [",".join(f"x{i+1}" for i in range(spec.dim))]
    lines += [",".join(repr(float(v)) for v in row) for row in path.values]
    _write_out("\n".join(lines), args.out)


def _cmd_limit_model(args) -> None:
    spec = load_process_spec(args.spec)
    model = estimate_limit_model(
        spec, args.lag_cap, args.replicas, args.length, args.seed,
        variant=args.variant,
    )
    _write_out(json.dumps(model.to_json_dict(), indent=2), args.out)


def _cmd_lyons(args) -> None:
    model = LimitModel.from_json(Path(args.model).read_text())
    times, w = sample_brownian(model, args.T, args.steps, RngStream(args.seed))
    path = lyons_extension(times, w, model, args.depth)
    payload = {
        "times": times.tolist(),
        "w": w.tolist(),
        "terminal": path.prefix(path.grid_size - 1).to_json_dict(),
    }
    _write_out(json.dumps(payload), args.out)


def _cmd_pvar(args) -> None:
    xs = _read_path_csv(args.input, False, None)
    times = np.arange(len(xs) + 1, dtype=float)
    if args.level == 1:
        cum = np.vstack([np.zeros((1, xs.dim)), np.cumsum(xs.values, axis=0)])
        value = p_variation(VectorIncrements(times, cum * args.scale_N**-0.5), args.p)
    else:
        table = PrefixTable(xs.values, args.depth, xs.dim)
        grid = np.arange(len(xs) + 1)
        inc = signature_level_increments(table, grid, args.scale_N, args.level)
        value = p_variation(inc, args.p / args.level)
    _write_out(repr(value), args.out)


def _cmd_charfn(args) -> None:
    spec = load_process_spec(args.spec)
    if isinstance(spec, SuspensionSpec):
        raise SystemExit("charfn works on discrete series")
    scheme = build_scheme(args.N, args.T)
    n = int(round(args.N * args.T))
    paths = sample_paths(spec, n, args.replicas, args.seed)
    V = np.concatenate([block_sums(p, scheme) for p in paths], axis=0)
    model = estimate_limit_model(spec, args.lag_cap, 8, max(4 * n, 4096), args.seed + 1)
    W = default_w_grid(spec.dim, scheme.block_length)
    tab = charfn_gap(V, model.sigma, W)
    lines = [",".join([f"w{i+1}" for i in range(spec.dim)] + ["re_f", "im_f", "g", "gap", "se"])]
    for i in range(W.shape[0]):
        cells = [repr(float(x)) for x in W[i]]
        cells += [repr(float(tab.f_hat[i].real)), repr(float(tab.f_hat[i].imag)),
                  repr(float(tab.g[i])), repr(float(tab.gap[i])), repr(float(tab.se[i]))]
        lines.append(",".join(cells))
    _write_out("\n".join(lines), args.out)


def _cmd_experiment(args) -> None:
    cfg = ExperimentConfig.from_file(args.config)
    result = run_experiment(cfg, workers=args.workers)
    sys.stdout.write(f"wrote {result.out_dir}/distances.csv, slopes.csv, manifest.json\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roughsig", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sig", help="signature of a CSV path")
    p.add_argument("--input", required=True)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--scale-N", dest="scale_N", type=float, default=1.0)
    p.add_argument("--window", nargs=2, type=float, default=None, metavar=("S", "T"))
    p.add_argument("--oracle", action="store_true", help="force brute-force enumeration")
    p.add_argument("--continuous", action="store_true")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sig)

    p = sub.add_parser("simulate", help="sample a stationary series to CSV")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("limit-model", help="estimate (sigma, gamma)")
    p.add_argument("--spec", required=True)
    p.add_argument("--lag-cap", dest="lag_cap", type=int, default=50)
    p.add_argument("--replicas", type=int, default=16)
    p.add_argument("--length", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", default=None, choices=[None, "discrete", "continuous"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_limit_model)

    p = sub.add_parser("lyons", help="simulate the Gaussian rough path")
    p.add_argument("--model", required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_lyons)

    p = sub.add_parser("pvar", help="p-variation of a CSV path's signature level")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--scale-N", dest="scale_N", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pvar)

    p = sub.add_parser("charfn", help="characteristic-function gap of block sums")
    p.add_argument("--spec", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lag-cap", dest="lag_cap", type=int, default=50)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_charfn)

    p = sub.add_parser("experiment", help="run a config-driven comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_experiment)

    return ap


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
