"""Command-line driver.

One subcommand per experiment family; every run lands in a sealed result
directory keyed by the configuration fingerprint. Exit codes: 0 success,
1 invalid configuration, 2 tolerance failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import traceback

import numpy as np

from . import bounds, clarkocone, gaussian, localtime
from .config import OUTPUT_ROOT_ENV, ExperimentConfig
from .kernel import FbmKernel
from .params import (MollifierConfig, ToleranceError, ValidationError,
                     merge_partials)
from .store import CHECKPOINT_EVERY, ResultStore, record_from_dict

_OVERRIDES = {
    "H": float, "d": int, "T": float, "n_steps": int, "m_nodes": int,
    "epsilon": float, "n_levels": int, "ratio": float, "n_paths": int,
    "seed": int, "n_max": int, "n_samples": int,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI configuration file")
    sub.add_argument("--out", help="output root directory "
                     f"(default: ${OUTPUT_ROOT_ENV} or ./runs)")
    sub.add_argument("--force", action="store_true",
                     help="redo an already sealed run")
    for name, typ in _OVERRIDES.items():
        sub.add_argument(f"--{name.replace('_', '-')}", type=typ,
                         dest=name, default=None)
    sub.add_argument("--n-list", dest="n_list", default=None,
                     type=lambda s: tuple(int(v) for v in s.split(",")),
                     help="comma-separated step counts for refinement runs")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config \
        else ExperimentConfig()
    changes = {k: getattr(args, k) for k in (*_OVERRIDES, "n_list")
               if getattr(args, k, None) is not None}
    if getattr(args, "out", None):
        changes["output_dir"] = args.out
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _open_store(cfg: ExperimentConfig, name: str, args) -> ResultStore:
    return ResultStore(cfg.resolved_output_dir(), name, cfg.fingerprint,
                       resume=getattr(args, "resume", False),
                       force=args.force)


def _finish(store: ResultStore, cfg: ExperimentConfig, summary: dict) -> int:
    store.write_json("config.json", dataclasses.asdict(cfg))
    store.write_json("summary.json", summary)
    store.seal()
    print(f"run {store.run_id} sealed at {store.path}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    store = _open_store(cfg, "simulate", args)
    kernel = FbmKernel(cfg.model)
    grid = gaussian.uniform_grid(cfg.model, cfg.n_steps)
    header = ["path", "t"] + [f"b{i + 1}" for i in range(cfg.d)]
    rows = []
    terminal = np.empty((cfg.n_paths, cfg.d))
    for p in range(cfg.n_paths):
        path, _ = gaussian.simulate_volterra(kernel, grid, cfg.seed,
                                             path_index=p)
        terminal[p] = path.values[-1]
        for t, v in zip(grid, path.values):
            rows.append([p, t, *v])
    store.write_table("paths.csv", header, rows)
    return _finish(store, cfg, {
        "n_paths": cfg.n_paths,
        "terminal_variance": terminal.var(axis=0, ddof=1),
        "terminal_variance_exact": cfg.T ** (2.0 * cfg.H),
    })


def cmd_estimate_localtime(args) -> int:
    cfg = _load_config(args)
    store = _open_store(cfg, "localtime", args)
    kernel = FbmKernel(cfg.model)
    mollifier = cfg.mollifier
    records = {}
    done = 0
    ckpt = store.load_checkpoint()
    if ckpt is not None:
        done = ckpt["paths_done"]
        records = {float(k): record_from_dict(v)
                   for k, v in ckpt["state"]["records"].items()}
    chunk = done // CHECKPOINT_EVERY
    while done < cfg.n_paths:
        take = min(CHECKPOINT_EVERY - done % CHECKPOINT_EVERY,
                   cfg.n_paths - done)
        part = localtime.ensemble_l_eps(
            cfg.model, mollifier, cfg.n_steps, take, cfg.seed,
            kernel=kernel, path_offset=done, chunk_index=chunk)
        for eps, rec in part.items():
            records[eps] = merge_partials([records[eps], rec]) \
                if eps in records else rec
        done += take
        chunk += 1
        if done % CHECKPOINT_EVERY == 0 and done < cfg.n_paths:
            store.checkpoint(done, {"records": records})
    levels = sorted(records, reverse=True)
    rows = []
    for eps in levels:
        rec = records[eps]
        exact = localtime.mean_l_eps(cfg.model, eps)
        z = (rec.value - exact) / rec.std_error
        rows.append([eps, rec.value, rec.std_error, rec.n_samples, exact, z])
    store.write_table(
        "estimates.csv",
        ["eps", "mean", "std_error", "n_samples", "mean_exact", "z"], rows)
    summary = {
        "records": {repr(eps): records[eps] for eps in levels},
        "max_abs_z": max(abs(r[5]) for r in rows),
        "subcritical": cfg.model.subcritical,
    }
    if cfg.model.subcritical:
        summary["mean_limit"] = localtime.mean_l_eps_limit(cfg.model)
    return _finish(store, cfg, summary)


def cmd_verify_representation(args) -> int:
    cfg = _load_config(args)
    store = _open_store(cfg, "representation", args)
    study = clarkocone.convergence_study(
        cfg.model, cfg.epsilon, cfg.n_list, cfg.n_paths, cfg.seed,
        m_nodes=cfg.m_nodes)
    store.write_table(
        "convergence.csv", ["n_steps", "l2_residual", "l2_lhs", "ratio"],
        [[r["n_steps"], r["l2_residual"], r["l2_lhs"], r["ratio"]]
         for r in study["table"]])
    code = _finish(store, cfg, {
        "monotone": study["monotone"],
        "final_ratio": study["final_ratio"],
    })
    if not study["monotone"] or study["final_ratio"] >= 0.25:
        raise ToleranceError(
            f"representation residual did not converge: final ratio "
            f"{study['final_ratio']:.3g}, monotone={study['monotone']}",
            residual=study["final_ratio"])
    return code


def cmd_check_bounds(args) -> int:
    cfg = _load_config(args)
    store = _open_store(cfg, "bounds", args)
    params = cfg.model
    summary = {}
    try:
        scan = bounds.lemma1_scan(FbmKernel(params))
        summary["lemma1"] = scan
        store.write_table("lemma1.csv",
                          ["r", "integral", "envelope", "ratio"],
                          [[r["r"], r["integral"], r["envelope"], r["ratio"]]
                           for r in scan["rows"]])
    except ValidationError as exc:
        summary["lemma1"] = {"skipped": str(exc)}
    rows = []
    violation = 0.0
    for a in (0.1, 0.3, 0.5, 0.7, 0.9):
        for n in range(1, 7):
            spec = bounds.SimplexIntegralSpec(a=a, n=n, T=params.T)
            exact, bound = bounds.simplex_integral(spec)
            rows.append([a, n, exact, bound, exact / bound])
            violation = max(violation, exact / bound - 1.0)
    store.write_table("simplex.csv",
                      ["a", "n", "exact", "bound", "ratio"], rows)
    summary["simplex_max_violation"] = violation
    try:
        summary["moment_exponent"] = bounds.moment_bound_exponent(params)
    except ValidationError as exc:
        summary["moment_exponent"] = {"skipped": str(exc)}
    code = _finish(store, cfg, summary)
    if violation > 1e-12:
        raise ToleranceError(
            f"simplex integral exceeds its bound by {violation:.3e}",
            residual=violation)
    return code


def cmd_certify_lnd(args) -> int:
    cfg = _load_config(args)
    store = _open_store(cfg, "lnd", args)
    grid = gaussian.uniform_grid(cfg.model, cfg.n_steps)
    cert = gaussian.lnd_certificate(cfg.model, grid)
    code = _finish(store, cfg, cert)
    if cert["k2_hat"] <= 0.0:
        raise ToleranceError(
            f"local nondeterminism certificate failed: k2_hat = "
            f"{cert['k2_hat']:.3e}", residual=cert["k2_hat"])
    return code


def cmd_moments(args) -> int:
    cfg = _load_config(args)
    store = _open_store(cfg, "moments", args)
    rows = []
    records = {}
    for n in range(1, cfg.n_max + 1):
        rec = localtime.alpha_n_oracle(cfg.model, n, eps=cfg.epsilon,
                                       n_samples=cfg.n_samples,
                                       seed=cfg.seed)
        records[n] = rec
        rows.append([n, rec.value, rec.std_error, rec.n_samples])
    store.write_table("alpha.csv", ["n", "value", "std_error", "n_samples"],
                      rows)
    summary = {"records": {str(n): records[n] for n in records},
               "eps": cfg.epsilon}
    if cfg.epsilon > 0.0:
        summary["alpha1_exact"] = localtime.mean_l_eps(cfg.model, cfg.epsilon)
    elif cfg.model.subcritical:
        summary["alpha1_exact"] = localtime.mean_l_eps_limit(cfg.model)
    return _finish(store, cfg, summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmsilt",
        description="Fractional Brownian self-intersection local time "
                    "toolkit")
    subs = parser.add_subparsers(dest="command", required=True)
    table = [
        ("simulate", cmd_simulate,
         "sample fractional paths and write them to CSV"),
        ("estimate-localtime", cmd_estimate_localtime,
         "Monte Carlo local-time estimates over the epsilon schedule"),
        ("verify-representation", cmd_verify_representation,
         "L2 convergence check of the martingale representation"),
        ("check-bounds", cmd_check_bounds,
         "numeric conformance of the analytic bounds"),
        ("certify-lnd", cmd_certify_lnd,
         "grid certificate of two-point local nondeterminism"),
        ("moments", cmd_moments,
         "Monte Carlo moment coefficients alpha_n"),
    ]
    for name, func, help_text in table:
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
        if name == "estimate-localtime":
            sub.add_argument("--resume", action="store_true",
                             help="continue from the last checkpoint")
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ToleranceError as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
