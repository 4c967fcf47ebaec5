"""Command-line entry points.

Exit codes: 0 success, 2 invalid input, 3 memory budget exceeded,
4 path enumeration truncated without ``--allow-truncate``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path as FilePath

from .auxgraph import build_aux
from .dp import SolverConfig, min_seed_set
from .dynamics import simulate
from .errors import CapExceeded, MemoryBudgetExceeded, NetworkValidationError, PaceFormatError, TruncatedError
from .generator import (
    STATS_FIELDS, RandomModelConfig, fit_alpha, generate, stats_protocol, treewidth_experiment, worst_case,
)
from .ingest import DEFAULT_PATH_CAP, ingest, read_raw_csv, read_raw_json
from .network import CostMode, SupplyChainNetwork, rescale_integral, validate_network
from .oracle import brute_force_min_seed, solve_k_le_2
from .treedec import decompose, read_gr, read_td, to_nice, validate_decomposition, write_td

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_TRUNCATED = 0, 2, 3, 4


def _emit(text: str, out: str | None):
    """Write to ``out`` atomically, or to stdout."""
    if not out:
        sys.stdout.write(text)
        return
    target = FilePath(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(rows, fields) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
    return buf.getvalue()


def _read(path) -> str:
    return sys.stdin.read() if path == "-" else FilePath(path).read_text()


def _load_net(path) -> SupplyChainNetwork:
    try:
        return SupplyChainNetwork.from_json(_read(path))
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise ValueError(f"cannot read network from {path}: {e}") from None


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _bytes(text) -> int:
    units = {"k": 1 << 10, "m": 1 << 20, "g": 1 << 30, "t": 1 << 40}
    t = text.strip().lower().rstrip("b")
    if t and t[-1] in units:
        return int(float(t[:-1]) * units[t[-1]])
    return int(t)


# Commands --------------------------------------------------------------------


def cmd_ingest(a):
    if a.nodes:
        if not a.edges:
            raise ValueError("--nodes needs --edges")
        dag = read_raw_csv(_read(a.nodes), _read(a.edges), _read(a.paths) if a.paths else None)
    elif a.input:
        dag = read_raw_json(_read(a.input))
    else:
        raise ValueError("give a JSON input or --nodes/--edges CSV files")
    net, rep = ingest(dag, a.cap)
    if a.report:
        _emit(_json(rep.to_dict()), a.report)
    if rep.truncated and not a.allow_truncate:
        raise TruncatedError(f"path enumeration stopped at {a.cap} paths; pass --allow-truncate to keep them")
    _emit(net.to_json(indent=2) + "\n", a.output)


def cmd_simulate(a):
    net = _load_net(a.network)
    seed = set(_ints(a.seed)) if a.seed else set()
    if a.with_dummies:
        seed |= net.dummies
    final, traj = simulate(net, seed, a.mode)
    out = {
        "seed": sorted(seed),
        "trajectory": [sorted(s) for s in traj],
        "final": sorted(final),
        "rounds": len(traj) - 1,
        "activates_all": len(final) == net.n,
    }
    _emit(_json(out), a.output)


def _config(a):
    return SolverConfig(mode=a.mode, heuristic=a.heuristic, mem_budget=_bytes(a.mem_budget),
                        orders=a.orders, parallel=a.parallel)


def cmd_solve(a):
    net = _load_net(a.network)
    td = None
    if a.td:
        td, _ = read_td(_read(a.td))
    res = min_seed_set(net, _config(a), td=td)
    out = res.to_dict()
    if a.diagnostics:
        out["diagnostics"] = res.diagnostics
    _emit(_json(out), a.output)


def cmd_oracle(a):
    net = _load_net(a.network)
    rep = validate_network(net, a.mode)
    if not rep.ok:
        raise NetworkValidationError(rep)
    size, seed = brute_force_min_seed(net, a.mode, a.cap)
    out = {"opt_size": size, "seed": sorted(seed)}
    if net.k <= 2:
        out["closed_form"] = solve_k_le_2(net, a.mode)
    _emit(_json(out), a.output)


def cmd_auxgraph(a):
    net = _load_net(a.network)
    mode = CostMode.parse(a.mode)
    aux = build_aux(rescale_integral(net) if mode is CostMode.GENERAL else net, mode)
    _emit(aux.to_gr() if a.format == "gr" else aux.to_json(indent=2) + "\n", a.output)


def cmd_treedec(a):
    n, edges = read_gr(_read(a.graph))
    if a.action == "compute":
        td = decompose(range(n), edges, a.heuristic)
        _emit(write_td(td, n), a.output)
        return
    if not a.td:
        raise ValueError(f"treedec {a.action} needs a .td file")
    td, n_td = read_td(_read(a.td))
    if n_td != n:
        raise PaceFormatError(f"decomposition is over {n_td} vertices, graph has {n}")
    rep = validate_decomposition(range(n), edges, td)
    if a.action == "validate":
        _emit(_json({"valid": rep.ok, "width": rep.width, "issues": [str(i.message) for i in rep.errors]}), a.output)
        return EXIT_OK if rep.ok else EXIT_INVALID
    if not rep.ok:
        raise ValueError(f"decomposition is invalid:\n{rep}")
    _emit(to_nice(td).to_json(indent=2) + "\n", a.output)


def _model_config(a, m=None):
    if a.m is None and a.alpha is None:
        raise ValueError("give --m or --alpha")
    return RandomModelConfig(a.n, a.k, m=a.m if m is None else m, alpha=None if a.m is not None else a.alpha,
                             seed=a.seed)


def cmd_generate(a):
    inst = generate(_model_config(a))
    _emit(inst.network.to_json(indent=2) + "\n", a.output)


def cmd_worstcase(a):
    positions = generate(RandomModelConfig(a.n, a.k, m=1, seed=a.seed)).positions
    wc = worst_case(positions)
    rows = []
    for (lo, hi), p in zip(wc.intervals, wc.interval_paths):
        rows.append({"lo": f"{lo:.12g}", "hi": f"{hi:.12g}", "path": " ".join(map(str, p))})
    _emit(_csv(rows, ("lo", "hi", "path")), a.output)
    print(f"distinct paths: {len(wc.paths)} (switch point collisions: {wc.collisions})", file=sys.stderr)


def cmd_stats(a):
    rows = stats_protocol(_ints(a.ns), _ints(a.ks), _floats(a.p_remove), _floats(a.alphas), a.reps, a.seed,
                          with_modularity=not a.no_modularity)
    _emit(_csv(rows, STATS_FIELDS), a.output)


def cmd_fit_alpha(a):
    net = _load_net(a.network)
    grid = _floats(a.grid)
    ain, aout, din, dout = fit_alpha(net, grid, a.reps, a.seed)
    rows = [{"alpha": g, "w_in": x, "w_out": y} for g, x, y in zip(grid, din, dout)]
    _emit(_csv(rows, ("alpha", "w_in", "w_out")), a.output)
    print(f"alpha_in={ain} alpha_out={aout}", file=sys.stderr)


def cmd_tw_experiment(a):
    grid = [(n, k, al) for n in _ints(a.ns) for k in _ints(a.ks) for al in _floats(a.alphas)]
    rows = treewidth_experiment(grid, a.reps, a.seed, a.heuristic)
    _emit(_csv(rows, ("n", "k", "alpha", "m", "rep", "width", "bound")), a.output)


# Parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sctm", description="Minimum seed sets for tiered supply chain networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        sp.add_argument("-o", "--output", help="output file (default stdout)")
        return sp

    def mode(sp, default="eps"):
        sp.add_argument("--mode", choices=("eps", "general"), default=default)

    sp = add("ingest", cmd_ingest, "raw graph (JSON or CSV) to canonical network JSON")
    sp.add_argument("input", nargs="?", help="JSON graph or canonical network")
    sp.add_argument("--nodes", help="nodes.csv (id[,cost])")
    sp.add_argument("--edges", help="edges.csv (src,dst)")
    sp.add_argument("--paths", help="paths.csv (path_id,rank,node_id,flow)")
    sp.add_argument("--report", help="write the ingest report JSON here")
    sp.add_argument("--cap", type=int, default=DEFAULT_PATH_CAP, help="path enumeration cap")
    sp.add_argument("--allow-truncate", action="store_true")

    sp = add("simulate", cmd_simulate, "run the adoption cascade from a seed")
    sp.add_argument("network")
    sp.add_argument("--seed", default="", help="comma-separated node ids")
    sp.add_argument("--with-dummies", action="store_true", help="add dummy nodes to the seed")
    mode(sp, "general")

    sp = add("solve", cmd_solve, "exact minimum seed set")
    sp.add_argument("network")
    mode(sp)
    sp.add_argument("--heuristic", choices=("min-fill", "min-degree"), default="min-fill")
    sp.add_argument("--td", help="PACE .td decomposition of the auxiliary graph")
    sp.add_argument("--mem-budget", default="4G", help="bytes, or with a k/M/G suffix")
    sp.add_argument("--orders", choices=("strict", "weak"), default="strict")
    sp.add_argument("--parallel", action="store_true")
    sp.add_argument("--diagnostics", action="store_true")

    sp = add("oracle", cmd_oracle, "brute-force minimum seed set for small networks")
    sp.add_argument("network")
    mode(sp)
    sp.add_argument("--cap", type=int, default=None, help="largest seed size to try")

    sp = add("auxgraph", cmd_auxgraph, "auxiliary graph as JSON or PACE .gr")
    sp.add_argument("network")
    mode(sp)
    sp.add_argument("--format", choices=("json", "gr"), default="json")

    sp = add("treedec", cmd_treedec, "compute, validate or convert tree decompositions")
    sp.add_argument("action", choices=("compute", "validate", "convert"))
    sp.add_argument("graph", help="PACE .gr file")
    sp.add_argument("td", nargs="?", help="PACE .td file (validate/convert)")
    sp.add_argument("--heuristic", choices=("min-fill", "min-degree"), default="min-fill")

    def model(sp):
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--k", type=int, required=True)
        sp.add_argument("--m", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--seed", type=int, default=0)

    sp = add("generate", cmd_generate, "random network from the specialisation model")
    model(sp)

    sp = add("worstcase", cmd_worstcase, "worst-case network over random firm positions (CSV)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("stats", cmd_stats, "realism statistics over a grid of structures (CSV)")
    sp.add_argument("--ns", default="50,150")
    sp.add_argument("--ks", default="3,6")
    sp.add_argument("--p-remove", default="0,0.25")
    sp.add_argument("--alphas", default="0.8,1.2,1.6,2.0")
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--no-modularity", action="store_true")

    sp = add("fit-alpha", cmd_fit_alpha, "fit the path exponent to a network's degrees (CSV)")
    sp.add_argument("network")
    sp.add_argument("--grid", default="0.8,1.0,1.2,1.4,1.6")
    sp.add_argument("--reps", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("tw-experiment", cmd_tw_experiment, "aux-graph width against the growth bound (CSV)")
    sp.add_argument("--ns", default="60,120,240")
    sp.add_argument("--ks", default="3")
    sp.add_argument("--alphas", default="1.2")
    sp.add_argument("--reps", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--heuristic", choices=("min-fill", "min-degree"), default="min-fill")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except MemoryBudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except TruncatedError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TRUNCATED
    except (NetworkValidationError, PaceFormatError, CapExceeded, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
