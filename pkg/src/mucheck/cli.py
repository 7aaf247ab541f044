"""Command line front end.

    mucheck check MODEL FORMULA [--state S] [--engine local|lazy|game]
    mucheck gen FAMILY --size N [--lift L] [--lazy] --out DIR
    mucheck bench --family F --sizes 1-5 [--lift ...] [--engine ...] --out CSV
    mucheck export-pg MODEL FORMULA [--state S] --out FILE
    mucheck import-pg FILE

``check`` exits with 0 when the formula holds, 1 when it fails and 2 on
any error.
"""
from __future__ import annotations

import argparse
import csv
import json
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import benchgen
from .formula import FormulaSyntaxError, closure, format_formula, parse_formula
from .games import PGSolverFormatError, export_pgsolver, import_pgsolver, solve_zielonka
from .local import SolverTimeout, check_local
from .model import FunctorMismatch, ModelFormatError, parse_model, serialize_model
from .reduction import build_mc_game, check_game

ENGINES = ("local", "lazy", "game")
CSV_FIELDS = ("family", "lift", "size", "engine", "verdict", "mean", "std", "runs",
              "timeout", "explored", "total", "quotient", "game_positions")


class UsageError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load(model_path, formula_path, state):
    model = parse_model(_read(model_path))
    phi = parse_formula(_read(formula_path))
    c = model.initial if state is None else _state(model, state)
    return model, phi, c


def _state(model, state):
    try:
        return model.state_id(state)
    except KeyError:
        if state.isdigit():
            return model.state_id(int(state))
        raise UsageError(f"unknown state {state!r}") from None


def run_engine(engine, model, c, phi, cl=None, deadline=None, sanity=True):
    """Run one engine; returns (holds, stats dict)."""
    if engine == "game":
        res = check_game(model, c, phi, deadline, cl)
        return res.holds, {"game_positions": res.positions}
    res = check_local(model, c, phi, lazy=(engine == "lazy"), deadline=deadline,
                      sanity=sanity, cl=cl)
    return res.holds, {"explored": res.explored, "total": res.total,
                       "quotient": float(res.quotient)}


def cmd_check(args) -> int:
    model, phi, c = _load(args.model, args.formula, args.state)
    deadline = time.monotonic() + args.timeout if args.timeout else None
    holds, stats = run_engine(args.engine, model, c, phi, deadline=deadline)
    print(f"state: {model.states[c]}")
    print(f"verdict: {'holds' if holds else 'fails'}")
    for key, value in stats.items():
        print(f"{key}: {value}")
    return 0 if holds else 1


def _write_instance(inst, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    stem = inst.stem
    files = []
    path = out / f"{stem}.model"
    path.write_text(serialize_model(inst.model))
    files.append(path.name)
    for name, phi in inst.formulas:
        path = out / (f"{stem}.mu" if len(inst.formulas) == 1 else f"{stem}-{name}.mu")
        path.write_text(format_formula(phi) + "\n")
        files.append(path.name)
    manifest = {"family": inst.family, "lift": inst.lift, "size": inst.size,
                "lazy": inst.lazy, "worlds": len(inst.model.states),
                "initial": inst.model.states[inst.model.initial], "files": files}
    if inst.game is not None:
        path = out / f"{stem}.gm"
        path.write_text(export_pgsolver(inst.game))
        files.append(path.name)
        manifest["positions"] = len(inst.game)
    if inst.model.functor == "multiset":
        manifest["min_total_multiplicity"] = min(sum(w for _, w in row) for row in inst.model.rows)
    manifest.update(inst.notes)
    return manifest


def cmd_gen(args) -> int:
    inst = benchgen.make_instance(args.family, args.size, args.lift, args.lazy,
                                  agents=args.agents, castles=args.castles)
    manifest = _write_instance(inst, Path(args.out))
    print(json.dumps(manifest, sort_keys=True))
    return 0


def _sizes(text):
    out = []
    for part in text.split(","):
        if "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def bench_cell(family, lift, size, engine, reps=5, timeout=60.0, lazy=False,
               formula=None, agents=2, castles=2) -> dict:
    """Time one matrix cell; generation is not timed."""
    row = {"family": family, "lift": lift, "size": size, "engine": engine,
           "verdict": "", "mean": "", "std": "", "runs": 0, "timeout": False,
           "explored": "", "total": "", "quotient": "", "game_positions": ""}
    try:
        inst = benchgen.make_instance(family, size, lift, lazy, agents=agents, castles=castles)
        names = [n for n, _ in inst.formulas]
        phi = inst.formulas[names.index(formula) if formula else 0][1]
        c = inst.initial[0]
    except (ValueError, KeyError) as exc:
        row["verdict"] = f"error: {exc}"
        return row
    times = []
    for _ in range(max(1, reps)):
        start = time.monotonic()
        try:
            cl = closure(phi)
            holds, stats = run_engine(engine, inst.model, c, phi, cl,
                                      deadline=start + timeout, sanity=False)
        except SolverTimeout:
            row["timeout"] = True
            break
        times.append(time.monotonic() - start)
        row["verdict"] = "holds" if holds else "fails"
        row.update(stats)
    if times:
        row["runs"] = len(times)
        row["mean"] = f"{statistics.fmean(times):.6f}"
        row["std"] = f"{statistics.pstdev(times):.6f}"
    return row


def cmd_bench(args) -> int:
    cells = [(args.family, lift, size, engine)
             for lift in args.lift.split(",")
             for size in _sizes(args.sizes)
             for engine in args.engine.split(",")]
    for _, lift, _, engine in cells:
        if engine not in ENGINES or lift not in benchgen.LIFTS:
            raise UsageError(f"bad engine or lift: {engine}, {lift}")

    def run(cell):
        family, lift, size, engine = cell
        return bench_cell(family, lift, size, engine, args.reps, args.timeout, args.lazy,
                          args.formula, args.agents, args.castles)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        rows = list(pool.map(run, cells))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_export_pg(args) -> int:
    model, phi, c = _load(args.model, args.formula, args.state)
    game, roots = build_mc_game(model, closure(phi), [c])
    text = export_pgsolver(game)
    if args.out:
        Path(args.out).write_text(text)
        print(f"positions: {len(game)}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_import_pg(args) -> int:
    game = import_pgsolver(_read(args.file))
    sol = solve_zielonka(game)
    winner = "exists" if game.init in sol.win_e else "forall"
    print(f"positions: {len(game)}")
    print(f"won by exists: {len(sol.win_e)}")
    print(f"won by forall: {len(sol.win_a)}")
    print(f"initial position {game.init}: won by {winner}")
    return 0 if winner == "exists" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mucheck", description="Coalgebraic mu-calculus model checker.",
        epilog="MUCHECK_SEED is reserved; no component is randomized at present.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check a formula at a state")
    p.add_argument("model")
    p.add_argument("formula")
    p.add_argument("--state", help="state name or index (default: the model's initial state)")
    p.add_argument("--engine", choices=ENGINES, default="local")
    p.add_argument("--timeout", type=float, default=None, help="seconds")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="write a benchmark instance")
    p.add_argument("family", choices=benchgen.FAMILIES)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--lift", choices=benchgen.LIFTS, default="none")
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--agents", type=int, default=2, help="modulo only")
    p.add_argument("--castles", type=int, default=2, help="castle only")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="timed sweep, CSV output")
    p.add_argument("--family", choices=benchgen.FAMILIES, required=True)
    p.add_argument("--sizes", required=True, help="e.g. 1-5 or 1,2,4")
    p.add_argument("--lift", default="none", help="comma separated")
    p.add_argument("--engine", default="local,lazy,game", help="comma separated")
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--formula", help="formula name for multi-formula families")
    p.add_argument("--agents", type=int, default=2)
    p.add_argument("--castles", type=int, default=2)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-pg", help="write the model checking game in PGSolver format")
    p.add_argument("model")
    p.add_argument("formula")
    p.add_argument("--state")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_pg)

    p = sub.add_parser("import-pg", help="solve a PGSolver game")
    p.add_argument("file")
    p.set_defaults(func=cmd_import_pg)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverTimeout:
        print("error: timeout", file=sys.stderr)
    except (UsageError, FormulaSyntaxError, ModelFormatError, FunctorMismatch,
            PGSolverFormatError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
