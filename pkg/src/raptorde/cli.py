"""Command-line entry point wiring all analysis and simulation paths.

Every invocation that writes files also drops a ``.manifest.json`` next to
them recording the subcommand, the full parameter set, the seed and grid, the
tool version, and the wall-clock time, so results can be regenerated.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .channel import ChannelSpec, capacity
from .codec import Incremental, MessageReset, TransmissionConfig, run_transmission, sample_graph
from .density import Grid
from .devol import (
    IncrementalTandem,
    Joint,
    RaptorCodeFamily,
    ScaledEnsembleFamily,
    Tandem,
    de_incremental_attempt,
    de_joint,
    de_tandem,
)
from .ensemble import (
    TABLE_TOL,
    MetEnsemble,
    average_input_degree,
    extract_lt,
    extract_precode,
    from_json_dict,
    load as load_ensemble,
    to_json_dict,
    validate,
)
from .errors import RaptordeError
from .fixtures import export_fixture, fixture_text, list_fixtures, load_fixture
from .optimizer import (
    FixedPrecode,
    FullEnsemble,
    OptimizationProblem,
    SearchBudget,
    optimize,
)
from .stability import joint_stability, ldpc_stability, tandem_lt_stability


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="output prefix (writes <out>.json etc.)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-points", type=int, default=3000)
    p.add_argument("--grid-spacing", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=1, help="parallel trials where applicable")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _grid(args) -> Grid:
    return Grid(args.grid_points, args.grid_spacing)


def _manifest(args, subcommand: str, outputs: list[Path], t0: float) -> None:
    if not outputs:
        return
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    doc = {
        "subcommand": subcommand,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "grid": {"points": args.grid_points, "spacing": args.grid_spacing},
        "version": __version__,
        "wall_clock_s": round(time.time() - t0, 3),
        "outputs": [str(p) for p in outputs],
    }
    path = outputs[0].with_suffix("").with_suffix("")  # strip e.g. .json
    manifest_path = Path(str(outputs[0].with_suffix("")) + ".manifest.json")
    manifest_path.write_text(json.dumps(doc, indent=2) + "\n")


def _emit_json(doc: dict, args, name: str, outputs: list[Path]) -> None:
    text = json.dumps(doc, indent=2)
    if args.out is not None:
        path = args.out.with_suffix(".json") if args.out.suffix != ".json" else args.out
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
        outputs.append(path)
    else:
        print(text)


def _emit_csv(rows: list[dict], args, suffix: str, outputs: list[Path]) -> None:
    if not rows:
        return
    if args.out is not None:
        path = Path(str(args.out.with_suffix("")) + suffix)
        fh = path.open("w", newline="")
    else:
        path, fh = None, sys.stdout
    writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    if path is not None:
        fh.close()
        outputs.append(path)


def _load_ensemble_arg(path: Path) -> MetEnsemble:
    doc = json.loads(Path(path).read_text())
    if "ensemble" in doc and "variable_terms" not in doc:
        doc = doc["ensemble"]
    return from_json_dict(doc)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    t0 = time.time()
    e = _load_ensemble_arg(args.ensemble)
    rep = validate(e, tol=args.tol)
    doc = {
        "ok": rep.ok,
        "violations": [
            {"constraint": v.constraint, "residual": v.residual, "detail": v.detail}
            for v in rep.violations
        ],
    }
    outputs: list[Path] = []
    _emit_json(doc, args, "validate", outputs)
    _manifest(args, "validate", outputs, t0)
    return 0


def _cmd_capacity(args) -> int:
    t0 = time.time()
    rows = []
    for db in args.snr_db:
        ch = ChannelSpec.from_db(db)
        rows.append({"snr_db": db, "gamma": ch.gamma, "capacity": capacity(ch)})
    outputs: list[Path] = []
    _emit_csv(rows, args, ".csv", outputs)
    _manifest(args, "capacity", outputs, t0)
    return 0


def _cmd_analyze(args) -> int:
    t0 = time.time()
    e = _load_ensemble_arg(args.ensemble)
    ch = ChannelSpec.from_db(args.snr_db)
    grid = _grid(args)
    if args.schedule == "joint":
        res = de_joint(e, ch, Joint(max_iter=args.max_iter), args.p_star, grid)
    elif args.schedule == "tandem":
        mu0 = args.mu0 if args.mu0 is not None else 30.0
        res = de_tandem(
            e, ch, Tandem(mu0=mu0, max_iter_lt=args.max_iter, max_iter_ldpc=args.max_iter),
            args.p_star, grid,
        )
    else:
        sched = IncrementalTandem(
            T=args.max_iter,
            x=args.x,
            mu0=args.mu0 if args.mu0 is not None else math.inf,
        )
        res = de_incremental_attempt(e, None, ch, sched, args.p_star, grid)
    doc = {
        "converged": res.converged,
        "iterations_used": res.iterations_used,
        "stalled": res.stalled,
        "stage_one_stalled": res.stage_one_stalled,
        "stage_one_iterations": res.stage_one_iterations,
        "decoded_mean": res.decoded_mean,
        "final_ber": float(res.ber_trajectory[-1]) if res.ber_trajectory.size else None,
        "ber_trajectory": [float(x) for x in res.ber_trajectory],
    }
    outputs: list[Path] = []
    _emit_json(doc, args, "analyze", outputs)
    rows = [
        {"iteration": i + 1, "max_ber": float(x)} for i, x in enumerate(res.ber_trajectory)
    ]
    if args.out is not None:
        _emit_csv(rows, args, ".csv", outputs)
    _manifest(args, "analyze", outputs, t0)
    return 0


def _cmd_stability(args) -> int:
    t0 = time.time()
    e = _load_ensemble_arg(args.ensemble)
    ch = ChannelSpec.from_db(args.snr_db)
    grid = _grid(args)
    if args.which == "joint":
        rep = joint_stability(e, ch, grid)
    elif args.which == "tandem-lt":
        rep = tandem_lt_stability(extract_lt(e), average_input_degree(e), ch, grid)
    else:
        mu0 = args.mu0 if args.mu0 is not None else 30.0
        res = de_tandem(e, ch, Tandem(mu0=mu0), grid=grid, track_ber=False)
        handoff = None
        precode = extract_precode(e)
        # decoded density of the degree-two input bits, falling back to the
        # aggregate when the precode has no degree-two classes
        from .channel import llr_density
        from .devol import _MetDe
        from .ensemble import EDGE_CHANNEL, EDGE_LT, EDGE_PRECODE

        engine = _MetDe(e, llr_density(ch, grid), active=(EDGE_LT, EDGE_CHANNEL))
        b = res.final_densities.check_to_var
        posts = engine.posteriors(b) if b else []
        picks = [
            d for (w, d), (idx, term) in zip(posts, engine.punctured)
            if term.degrees[EDGE_PRECODE] == 2
        ] or [d for _w, d in posts]
        if not picks:
            raise RaptordeError("no punctured classes to measure the decoded density on")
        handoff = picks[0]
        rep = ldpc_stability(precode, handoff)
    doc = {
        "condition": rep.condition,
        "condition_value": rep.condition_value,
        "threshold": rep.threshold,
        "satisfied": rep.satisfied,
        "inputs_summary": {
            k: (v if not isinstance(v, dict) else {str(kk): vv for kk, vv in v.items()})
            for k, v in rep.inputs_summary.items()
        },
    }
    outputs: list[Path] = []
    _emit_json(doc, args, "stability", outputs)
    _manifest(args, "stability", outputs, t0)
    return 0


def _cmd_optimize(args) -> int:
    t0 = time.time()
    if args.mode == "fixed-precode":
        if args.precode is None:
            raise RaptordeError("fixed-precode mode needs --precode")
        pdoc = json.loads(Path(args.precode).read_text())
        from .fixtures import _parse_precode

        precode = _parse_precode(pdoc)
        mode = FixedPrecode(j_c_max=args.jcmax, precode=precode)
    else:
        mode = FullEnsemble(i_c_max=args.icmax, j_c_max=args.jcmax)
    seeds = None
    if args.seed_fixture:
        fx = load_fixture(args.seed_fixture)
        seeds = [fx.omega]
    problem = OptimizationProblem(
        mode=mode,
        gamma=ChannelSpec.from_db(args.snr_db).gamma,
        p_star=args.p_star,
        budget=SearchBudget(population=args.pop, generations=args.gens),
        final_grid=_grid(args),
    )
    outcome = optimize(problem, rng_seed=args.seed, seed_omegas=seeds)
    outputs: list[Path] = []
    doc = to_json_dict(outcome.best)
    doc["achieved_rate"] = outcome.best_rate
    doc["achieved_eta"] = outcome.best_eta
    _emit_json(doc, args, "optimize", outputs)
    rows = [
        {"generation": g, "best_fitness": f} for g, f in enumerate(outcome.history)
    ]
    if args.out is not None:
        _emit_csv(rows, args, ".csv", outputs)
    _manifest(args, "optimize", outputs, t0)
    return 0


def _one_trial(params) -> dict:
    (name_or_doc, snr_db, k, mf, dm, strategy, T, x, seed, trial, ldpc_iters) = params
    e = from_json_dict(name_or_doc)
    omega, precode = extract_lt(e), extract_precode(e)
    ch = ChannelSpec.from_db(snr_db)
    graph = sample_graph((omega, precode), k, rng_seed=seed + 7919 * trial)
    rng = np.random.default_rng(seed + 104729 * trial + 1)
    message = rng.integers(0, 2, size=graph.k).astype(np.uint8)
    strat = MessageReset(T) if strategy == "reset" else Incremental(T, x)
    cfg = TransmissionConfig(
        m_f=mf, delta_m=dm, strategy=strat, gamma=ch.gamma,
        ldpc_iters=ldpc_iters, lt_stall_exit=True,
    )
    res = run_transmission(graph, message, cfg, rng)
    return {
        "trial": trial,
        "attempts": res.attempts_used,
        "bits": res.bits_consumed,
        "realized_rate": res.realized_rate,
        "var_ops": res.total_ops.variable_ops,
        "check_ops": res.total_ops.check_ops,
        "success": res.success,
    }


def _cmd_simulate(args) -> int:
    t0 = time.time()
    doc = json.loads(Path(args.ensemble).read_text())
    if "ensemble" in doc and "variable_terms" not in doc:
        doc = doc["ensemble"]
    params = [
        (doc, args.snr_db, args.k, args.mf, args.dm, args.strategy, args.T, args.x,
         args.seed, t, args.ldpc_iters)
        for t in range(args.trials)
    ]
    if args.threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.threads) as ex:
            rows = list(ex.map(_one_trial, params))
    else:
        rows = [_one_trial(p) for p in params]
    rows.sort(key=lambda r: r["trial"])
    ch = ChannelSpec.from_db(args.snr_db)
    cap = capacity(ch)
    rates = np.array([r["realized_rate"] for r in rows if r["success"]])
    summary = {
        "trials": args.trials,
        "successes": int(sum(r["success"] for r in rows)),
        "mean_realized_rate": float(rates.mean()) if rates.size else None,
        "std_realized_rate": float(rates.std(ddof=1)) if rates.size > 1 else None,
        "capacity": cap,
        "mean_eta": float(rates.mean() / cap) if rates.size else None,
    }
    outputs: list[Path] = []
    csv_rows = [{k: v for k, v in r.items() if k != "success"} for r in rows]
    _emit_csv(csv_rows, args, ".csv", outputs)
    _emit_json(summary, args, "simulate", outputs)
    _manifest(args, "simulate", outputs, t0)
    return 0


def _cmd_fixtures(args) -> int:
    if args.action == "list":
        for name in list_fixtures():
            print(name)
        return 0
    if args.action == "path":
        print(fixture_text(args.name))
        return 0
    dest = args.out if args.out is not None else Path(".")
    path = export_fixture(args.name, dest)
    print(path)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raptorde",
        description="Rateless-code analysis over the binary-input AWGN channel: "
        "multi-edge density evolution, stability checks, degree optimization, "
        "and finite-length simulation.",
    )
    parser.add_argument("--version", action="version", version=f"raptorde {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an ensemble file's structural constraints")
    p.add_argument("--ensemble", type=Path, required=True)
    p.add_argument("--tol", type=float, default=TABLE_TOL)
    _add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("capacity", help="channel capacity table")
    p.add_argument("--snr-db", type=float, action="append", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_capacity)

    p = sub.add_parser("analyze", help="density evolution on one ensemble")
    p.add_argument("--ensemble", type=Path, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--schedule", choices=["joint", "tandem", "incremental"], required=True)
    p.add_argument("--mu0", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--p-star", type=float, default=1e-6)
    p.add_argument("--x", type=float, default=1.0, help="reuse fraction (incremental)")
    _add_common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("stability", help="closed-form stability checks")
    p.add_argument("--ensemble", type=Path, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--which", choices=["joint", "tandem-lt", "tandem-ldpc"], required=True)
    p.add_argument("--mu0", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("optimize", help="degree-distribution search")
    p.add_argument("--mode", choices=["full", "fixed-precode"], required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--precode", type=Path, default=None)
    p.add_argument("--icmax", type=int, default=300)
    p.add_argument("--jcmax", type=int, default=50)
    p.add_argument("--pop", type=int, default=10)
    p.add_argument("--gens", type=int, default=6)
    p.add_argument("--p-star", type=float, default=1e-6)
    p.add_argument("--seed-fixture", type=str, default=None,
                   help="bundled code name whose output distribution seeds the population")
    _add_common(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("simulate", help="finite-length transmission trials")
    p.add_argument("--ensemble", type=Path, required=True)
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mf", type=int, required=True)
    p.add_argument("--dm", type=int, required=True)
    p.add_argument("--strategy", choices=["reset", "incremental"], default="reset")
    p.add_argument("--T", type=int, default=200)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--ldpc-iters", type=int, default=200)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fixtures", help="bundled degree-distribution catalog")
    p.add_argument("action", choices=["list", "export", "path"])
    p.add_argument("name", nargs="?", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "verbose", 0):
        import logging

        logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO)
    try:
        return args.func(args)
    except (RaptordeError, ValueError, OSError, KeyError) as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
