"""``nodal-moduli``: command-line runner for the numerical experiments.

Exit status: 0 on success, 1 on usage errors, 2 when the report records a
numerical failure (non-convergence, ambiguous rank, failed oracle).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from nodal_moduli import __version__
from nodal_moduli.alcove import (
    AlcovePoint,
    MultiplicityPattern,
    enumerate_faces,
    face_is_attainable,
    random_alcove_point,
    reversal,
    reversal_on_patterns,
    stabilizer_pattern,
    torsion_shift,
)
from nodal_moduli.errors import ModuliError, NoConvergence, RankAmbiguous
from nodal_moduli.lie_core import commutator_subgroup_dim, stabilizer_dim
from nodal_moduli.serialize import dumps, matrix_to_json, write_atomic

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

# defaults live here rather than in argparse so that config values can fill unset flags
DEFAULTS = {
    "common": {"seed": 0, "output": None, "format": "json", "config": None},
    "holonomy": {"n": 2, "alpha": None, "t": 0.5, "path": "gamma", "gauge": "unitary", "steps": 4096},
    "dimension": {"g": 2, "n": 2, "trials": 5, "t": 0.5, "split": None},
    "solve": {"g": 2, "n": 2, "alpha": None, "t": 0.5, "split": None},
    "strata": {"n": 3, "samples": 0},
    "implode-check": {"inputs": None, "budget": 50},
    "verlinde": {"genus": 2, "level": 1, "graph": None, "method": "auto"},
    "residues": {"n": 2, "alpha": None, "gauge": "blowup1", "radius": 0.5},
    "betas": {"input": None, "pattern": None, "k": 0, "random": False},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nodal-moduli", description="Numerical experiments on moduli of flat SU(n) connections under nodal degeneration.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--output", "-o")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--config", help="JSON file of parameters; explicit flags take precedence")

    p = sub.add_parser("holonomy", help="transport around gamma_t / x-loop / y-loop vs the closed form")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=_floats)
    p.add_argument("--t", type=complex)
    p.add_argument("--path", choices=("gamma", "x-loop", "y-loop"))
    p.add_argument("--gauge", choices=("unitary", "holomorphic", "blowup1", "blowup2"))
    p.add_argument("--steps", type=int)
    common(p)

    p = sub.add_parser("dimension", help="tangent dimension of the quotient at solved points")
    p.add_argument("--g", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--t", type=complex)
    p.add_argument("--split", type=int, help="solve the disconnected presentation with h handles on the first component")
    common(p)

    p = sub.add_parser("solve", help="solve the group relation for fixed alpha")
    p.add_argument("--g", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=_floats)
    p.add_argument("--t", type=complex)
    p.add_argument("--split", type=int)
    common(p)

    p = sub.add_parser("strata", help="faces of the weight simplex, reversal pairs, torsion shifts")
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int, help="also classify this many random alpha")
    common(p)

    p = sub.add_parser("implode-check", help="search for an implosion equivalence between two points")
    p.add_argument("--in", dest="inputs", action="append", metavar="POINT.json")
    p.add_argument("--budget", type=int)
    common(p)

    p = sub.add_parser("verlinde", help="rank-2 lattice-point counts vs the closed form")
    p.add_argument("--genus", type=int)
    p.add_argument("--level", type=int)
    p.add_argument("--graph", metavar="GRAPH.json")
    p.add_argument("--method", choices=("auto", "brute", "contract"))
    common(p)

    p = sub.add_parser("residues", help="residues of the connection in a chart or on a branch")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=_floats)
    p.add_argument("--gauge", choices=("unitary", "holomorphic", "blowup1", "blowup2"))
    p.add_argument("--radius", type=float)
    common(p)

    p = sub.add_parser("betas", help="stratum, flags and pairings of framed parabolic data")
    p.add_argument("--in", dest="input", metavar="BETAS.json")
    p.add_argument("--pattern", type=_ints, help="cumulative indices I (generates standard or random data)")
    p.add_argument("--k", type=int, choices=(0, 1))
    p.add_argument("--random", action="store_true", default=None)
    common(p)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
    defaults = dict(DEFAULTS["common"], **DEFAULTS[args.command])
    unknown = set(config) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        out[key] = value if value is not None else config.get(key, default)
    for key in ("t",):
        if key in out and out[key] is not None:
            out[key] = complex(out[key]) if not isinstance(out[key], list) else complex(*out[key])
    out["command"] = args.command
    return out


def _workers(tasks: int) -> int:
    cap = os.environ.get("MODULI_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError as exc:
            raise UsageError(f"MODULI_THREADS must be an integer, got {cap!r}") from exc
    return max(1, min(tasks, limit))


def _alpha_or_random(cfg, rng) -> AlcovePoint:
    if cfg["alpha"] is not None:
        try:
            return AlcovePoint(cfg["alpha"], tol=1e-10)
        except ModuliError as exc:
            raise UsageError(f"alpha is not in the weight simplex: {exc}") from exc
    return random_alcove_point(rng, cfg["n"])


def _t_json(t: complex):
    return [t.real, t.imag]


# -- commands -------------------------------------------------------------------


def cmd_holonomy(cfg):
    from nodal_moduli.lie_core import GroupElement, project_to_alcove
    from nodal_moduli.local_model import ModelConnection, standard_path, transport

    rng = np.random.default_rng(cfg["seed"])
    alpha = _alpha_or_random(cfg, rng)
    conn = ModelConnection(alpha, cfg["gauge"])
    power = {"gamma": 1.0, "x-loop": 0.5, "y-loop": -0.5}[cfg["path"]]
    path = standard_path(cfg["path"], cfg["t"])
    hol = transport(conn, path, cfg["steps"])
    closed = conn.holonomy_closed_form(power)
    err = float(np.max(np.abs(hol - closed)))
    projection = None
    if np.linalg.norm(hol.conj().T @ hol - np.eye(alpha.n)) < 1e-8:
        proj_alpha, _ = project_to_alcove(GroupElement.project(hol))
        projection = proj_alpha.tolist()
    report = {
        "alpha": alpha.tolist(),
        "t": _t_json(cfg["t"]),
        "path": cfg["path"],
        "gauge": cfg["gauge"],
        "steps": cfg["steps"],
        "holonomy": matrix_to_json(hol),
        "closed_form": matrix_to_json(closed),
        "max_error": err,
        "alcove_projection": projection,
        "status": "ok",
    }
    return report, [{"path": cfg["path"], "gauge": cfg["gauge"], "max_error": err}]


def _dimension_trial(g, n, t, split, seed_seq):
    from nodal_moduli.rep_variety import build_disconnected, relation_residual, solve_relation, tangent_analysis

    rng = np.random.default_rng(seed_seq)
    alpha = random_alcove_point(rng, n)
    try:
        if split is None:
            p = solve_relation(rng, g, n, alpha, t)
        else:
            p = build_disconnected(rng, split, g, n, alpha, t)
        rep = tangent_analysis(p)
    except (NoConvergence, RankAmbiguous) as exc:
        return {"alpha": alpha.tolist(), "dimension": None, "error": f"{type(exc).__name__}: {exc}"}
    return {
        "alpha": alpha.tolist(),
        "dimension": rep.quotient_dim,
        "kernel": rep.kernel_dim,
        "orbit": rep.orbit_dim,
        "residual": relation_residual(p),
    }


def cmd_dimension(cfg):
    from nodal_moduli.rep_variety import expected_dimension

    g, n, trials = cfg["g"], cfg["n"], cfg["trials"]
    if g < 2 or n < 2 or trials < 1:
        raise UsageError("need g >= 2, n >= 2 and trials >= 1")
    split = cfg["split"]
    if split is not None and not 1 <= split <= g - 1:
        raise UsageError("split must lie in [1, g-1]")
    seeds = np.random.SeedSequence(cfg["seed"]).spawn(trials)
    with ThreadPoolExecutor(_workers(trials)) as pool:
        entries = list(pool.map(lambda s: _dimension_trial(g, n, cfg["t"], split, s), seeds))
    expected = expected_dimension(g, n)
    for i, e in enumerate(entries):
        e["trial"] = i
    failed = any(e["dimension"] is None for e in entries)
    report = {
        "g": g,
        "n": n,
        "t": _t_json(cfg["t"]),
        "connected": split is None,
        "expected": expected,
        "entries": entries,
        "all_equal": not failed and all(e["dimension"] == expected for e in entries),
        "status": "numerical_failure" if failed else "ok",
    }
    rows = [{"trial": e["trial"], "dimension": e["dimension"], "expected": expected} for e in entries]
    return report, rows


def cmd_solve(cfg):
    from nodal_moduli.rep_variety import build_disconnected, relation_residual, solve_relation

    rng = np.random.default_rng(cfg["seed"])
    alpha = _alpha_or_random(cfg, rng)
    try:
        if cfg["split"] is None:
            p = solve_relation(rng, cfg["g"], alpha.n, alpha, cfg["t"])
        else:
            p = build_disconnected(rng, cfg["split"], cfg["g"], alpha.n, alpha, cfg["t"])
    except NoConvergence as exc:
        report = {"status": "numerical_failure", "error": str(exc), "starts": exc.starts, "best_residual": exc.best_residual}
        return report, [{"status": "numerical_failure", "residual": exc.best_residual}]
    res = relation_residual(p)
    report = {"status": "ok", "residual": res, "point": p.to_json()}
    return report, [{"status": "ok", "residual": res}]


def cmd_strata(cfg):
    n = cfg["n"]
    if n < 2:
        raise UsageError("n must be at least 2")
    faces = []
    for pat in enumerate_faces(n):
        entry = {
            "I": list(pat.I),
            "k": pat.k,
            "attainable": face_is_attainable(pat),
            "reversal": reversal_on_patterns(pat).to_json(),
            "merged_blocks": list(pat.merged_blocks()),
            "stabilizer_dim": stabilizer_dim(pat),
            "commutator_dim": commutator_subgroup_dim(pat),
        }
        if pat.k == 1 and pat.length >= 2:
            sh = torsion_shift(pat)
            entry["torsion"] = {"t1": sh.t1, "t2": sh.t2, "shifted_degree": sh.shifted_degree, "flag_dims_x1": list(sh.flag_dims_x1), "flag_dims_x2": list(sh.flag_dims_x2)}
        faces.append(entry)
    report = {"n": n, "faces": faces, "status": "ok"}
    if cfg["samples"]:
        rng = np.random.default_rng(cfg["seed"])
        counts: dict[str, int] = {}
        for _ in range(cfg["samples"]):
            a = random_alcove_point(rng, n, face_prob=0.3)
            pat = stabilizer_pattern(a)
            if stabilizer_pattern(reversal(a)) != reversal_on_patterns(pat):
                report["status"] = "numerical_failure"
            counts[str(pat)] = counts.get(str(pat), 0) + 1
        report["sample_counts"] = dict(sorted(counts.items()))
    rows = [{"I": " ".join(map(str, f["I"])), "k": f["k"], "attainable": f["attainable"], "stabilizer_dim": f["stabilizer_dim"]} for f in faces]
    return report, rows


def cmd_implode(cfg):
    from nodal_moduli.rep_variety import RepPoint, implode_equivalent

    paths = cfg["inputs"]
    if not paths or len(paths) != 2:
        raise UsageError("implode-check needs exactly two --in files")
    points = []
    for path in paths:
        try:
            with open(path) as fh:
                data = json.load(fh)
            points.append(RepPoint.from_json(data.get("point", data)))
        except (OSError, json.JSONDecodeError, KeyError, ModuliError, ValueError) as exc:
            raise UsageError(f"cannot read point {path}: {exc}") from exc
    res = implode_equivalent(points[0], points[1], cfg["budget"], seed=cfg["seed"])
    report = {"equivalent": res.equivalent, "distance": res.distance, "starts": res.starts, "confidence": res.confidence, "status": "ok"}
    return report, [dict(report)]


def cmd_verlinde(cfg):
    from nodal_moduli.trinion import TrinionGraph, verlinde_crosscheck

    g, k = cfg["genus"], cfg["level"]
    if g < 2 or k < 0:
        raise UsageError("need genus >= 2 and level >= 0")
    graphs = None
    if cfg["graph"]:
        try:
            with open(cfg["graph"]) as fh:
                graph = TrinionGraph.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, ModuliError, ValueError) as exc:
            raise UsageError(f"cannot read graph {cfg['graph']}: {exc}") from exc
        if graph.genus != g:
            raise UsageError(f"graph has genus {graph.genus}, expected {g}")
        graphs = [graph]
    chk = verlinde_crosscheck(g, k, graphs, method=cfg["method"])
    report = {
        "genus": g,
        "level": k,
        "count": chk.count,
        "counts": chk.counts,
        "closed_form": chk.closed_form,
        "agree": chk.agree,
        "graph_independent": chk.graph_independent,
        "status": "ok" if chk.agree else "numerical_failure",
    }
    return report, [{"graph": name, "count": c, "closed_form": chk.closed_form} for name, c in chk.counts.items()]


def cmd_residues(cfg):
    from nodal_moduli.local_model import ModelConnection, residue

    rng = np.random.default_rng(cfg["seed"])
    alpha = _alpha_or_random(cfg, rng)
    conn = ModelConnection(alpha, cfg["gauge"])
    out = {}
    if cfg["gauge"] in ("blowup1", "blowup2"):
        centers = [None]
    else:
        centers = ["x", "y"]
    worst = 0.0
    for c in centers:
        r = residue(conn, cfg["radius"], center=c)
        key = c or ("y~" if cfg["gauge"] == "blowup1" else "x^")
        # -alpha/2 along y~ = 0 and on the y-branch, +alpha/2 along x^ = 0 and on the x-branch
        sign = -1 if (cfg["gauge"] == "blowup1" or c == "y") else 1
        expected = sign * 0.5 * alpha.alpha
        diag = np.diag(r)
        err = float(np.max(np.abs(diag - expected)))
        worst = max(worst, err)
        out[key] = {"residue": [[z.real, z.imag] for z in diag], "expected": expected.tolist(), "error": err}
    report = {"alpha": alpha.tolist(), "gauge": cfg["gauge"], "residues": out, "max_error": worst, "status": "ok" if worst < 1e-8 else "numerical_failure"}
    return report, [{"divisor": k, "error": v["error"]} for k, v in out.items()]


def cmd_betas(cfg):
    from nodal_moduli.plucker import (
        BetaData,
        antidiagonal_identify,
        compatibility_quotients,
        flag_from_betas,
        random_betas,
        standard_betas,
        stratum_of_betas,
    )

    if cfg["input"]:
        try:
            with open(cfg["input"]) as fh:
                b = BetaData.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, ModuliError, ValueError) as exc:
            raise UsageError(f"cannot read beta data {cfg['input']}: {exc}") from exc
    elif cfg["pattern"]:
        try:
            pat = MultiplicityPattern.from_I(cfg["pattern"], cfg["k"])
        except ModuliError as exc:
            raise UsageError(str(exc)) from exc
        rng = np.random.default_rng(cfg["seed"])
        b = random_betas(rng, pat) if cfg["random"] else standard_betas(pat)
    else:
        raise UsageError("betas needs --in or --pattern")
    try:
        p1, p2 = stratum_of_betas(b, 1), stratum_of_betas(b, 2)
        f1, f2 = flag_from_betas(b)
        gam = {f"x{i}": [{"j": j, "j'": jp, "scale": [g.scale.real, g.scale.imag]} for j, jp, g in compatibility_quotients(b, i).steps] for i in (1, 2)}
        pairings = [{"block": q.block, "size": q.size, "value": [q.value.real, q.value.imag]} for q in antidiagonal_identify(b)] if p1 == p2 else None
    except ModuliError as exc:
        return {"status": "numerical_failure", "error": f"{type(exc).__name__}: {exc}"}, [{"status": "numerical_failure"}]
    report = {
        "stratum_x1": p1.to_json(),
        "stratum_x2": p2.to_json(),
        "flag_dims_x1": [s.shape[1] for s in f1],
        "flag_dims_x2": [s.shape[1] for s in f2],
        "gammas": gam,
        "pairings": pairings,
        "data": b.to_json(),
        "status": "ok",
    }
    return report, [{"point": 1, "I": " ".join(map(str, p1.I)), "k": p1.k}, {"point": 2, "I": " ".join(map(str, p2.I)), "k": p2.k}]


COMMANDS = {
    "holonomy": cmd_holonomy,
    "dimension": cmd_dimension,
    "solve": cmd_solve,
    "strata": cmd_strata,
    "implode-check": cmd_implode,
    "verlinde": cmd_verlinde,
    "residues": cmd_residues,
    "betas": cmd_betas,
}


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    fields = list(rows[0])
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: format(v, ".17g") if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def run(cfg: dict) -> tuple[int, str]:
    """Execute one resolved configuration; returns the exit status and the rendered output."""
    report, rows = COMMANDS[cfg["command"]](cfg)
    report = {"command": cfg["command"], "seed": cfg["seed"], **report}
    text = dumps(report) + "\n" if cfg["format"] == "json" else to_csv(rows)
    status = EXIT_NUMERICAL if report.get("status") == "numerical_failure" else EXIT_OK
    return status, text


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        status, text = run(cfg)
    except UsageError as exc:
        print(f"nodal-moduli: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModuliError as exc:
        print(f"nodal-moduli: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg["output"]:
        write_atomic(cfg["output"], text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
