"""Command line interface: ``cisdag <command> [options]``.

All user-facing indices (orderings, edges, SEM JSON orderings) are 1-based.
Exit status is 0 for a successful or affirmative result, 1 for a negative or
non-existence result, and 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dag import Dag, cis_markov_class, markov_class
from .exceptions import CisDagError, MleDoesNotExist, NoCandidate
from .matrix import Tolerance, as_ordering
from .mle import RowConstraint, constraints_from_dag, fit
from .model import CovariancePair, SemParams
from .positivity import enumerate_cis_orderings, positivity_report
from .recovery import RecoveryConfig, TieBreak, find_cis_ordering_population, noisy_recovery_steps
from .simulate import SimSpec, random_cis_model, sample_sem

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


# ---------------------------------------------------------------- file formats


def read_matrix(path: str | Path) -> np.ndarray:
    """Dense numeric grid; comma or whitespace separated; ``#`` starts a comment line."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in re.split(r"[,\s]+", line) if tok])
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if not rows:
        raise InputError(f"{path}: no matrix rows")
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows have different lengths")
    return np.array(rows)


def read_dag(path: str | Path) -> Dag:
    """``m <count>`` header followed by one 1-based ``i j`` edge (``i -> j``) per line."""
    lines = [
        ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        raise InputError(f"{path}: empty DAG file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "m" or not head[1].isdigit():
        raise InputError(f"{path}: first line must be 'm <count>'")
    m = int(head[1])
    edges = []
    for ln in lines[1:]:
        parts = re.split(r"[,\s]+", ln)
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise InputError(f"{path}: bad edge line {ln!r}")
        edges.append((int(parts[0]) - 1, int(parts[1]) - 1))
    return Dag(m, tuple(edges))


def read_csv(path: str | Path) -> np.ndarray:
    """Numeric CSV; a first row containing any non-numeric field is taken as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(f.strip() for f in r)]
    if not rows:
        raise InputError(f"{path}: no data")

    def numeric(row):
        try:
            return [float(f) for f in row]
        except ValueError:
            return None

    if numeric(rows[0]) is None:
        rows = rows[1:]
    data = []
    for k, row in enumerate(rows):
        vals = numeric(row)
        if vals is None:
            raise InputError(f"{path}: non-numeric data on row {k + 1}")
        data.append(vals)
    if not data or len({len(r) for r in data}) != 1:
        raise InputError(f"{path}: data rows missing or ragged")
    return np.array(data)


def format_csv(X: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(",".join(f"x{j + 1}" for j in range(X.shape[1])) + "\n")
    for row in X:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def read_sem_json(path: str | Path) -> SemParams:
    """SEM JSON: ``{"ordering": [...1-based], "lambda": [[...]], "noise_var": [...], "mean": [...]}``."""
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(spec, dict) or not {"lambda", "noise_var"} <= spec.keys():
        raise InputError(f"{path}: SEM JSON needs 'lambda' and 'noise_var'")
    lam = np.array(spec["lambda"], dtype=float)
    m = lam.shape[0]
    ordering = [int(v) - 1 for v in spec.get("ordering", range(1, m + 1))]
    return SemParams(tuple(ordering), lam, spec["noise_var"], spec.get("mean"))


def parse_ordering(text: str | None, m: int) -> tuple[int, ...]:
    if text is None:
        return tuple(range(m))
    try:
        perm = [int(tok) - 1 for tok in re.split(r"[,\s]+", text.strip()) if tok]
    except ValueError:
        raise InputError(f"bad ordering {text!r}") from None
    return as_ordering(perm, m)


def one_based(seq) -> list[int]:
    return [int(v) + 1 for v in seq]


def fmt_ordering(seq) -> str:
    return ",".join(str(v) for v in one_based(seq))


def fmt_edges(g: Dag) -> str:
    return " ".join(f"{i + 1}->{j + 1}" for i, j in g.edges) or "(no edges)"


def _g6(x: float) -> str:
    return f"{x:.6g}"


def _emit_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _tolerance(args) -> Tolerance:
    return Tolerance(abs=args.tol, rel=args.rtol)


def _load_pair(args) -> CovariancePair:
    if args.sigma:
        return CovariancePair.from_sigma(read_matrix(args.sigma), _tolerance(args))
    return CovariancePair.from_precision(read_matrix(args.precision), _tolerance(args))


# -------------------------------------------------------------------- commands


def cmd_check(args) -> int:
    cp = _load_pair(args)
    order = parse_ordering(args.ordering, cp.dim)
    report = positivity_report(cp, order, _tolerance(args))
    if args.json:
        _emit_json({"dim": cp.dim, **report.to_dict()})
    else:
        print(f"ordering                  {fmt_ordering(order)}")
        print(f"CIS under ordering        {report.is_cis_under_given_ordering}")
        print(f"MTP2 (M-matrix precision) {report.is_mtp2}")
        print(f"positively associated     {report.is_positively_associated}")
        for i, j, v in report.violating_entries:
            kind = "boundary" if v == 0.0 else "violation"
            print(f"  {kind:9s} {i + 1} -> {j + 1}: {_g6(v)}")
    return EXIT_OK if report.is_cis_under_given_ordering else EXIT_NEGATIVE


def cmd_orderings(args) -> int:
    cp = _load_pair(args)
    tol = _tolerance(args)
    if args.one:
        found = find_cis_ordering_population(cp, RecoveryConfig(tol=tol, tie_break=TieBreak(args.tie_break)))
        orderings = [] if found is None else [found]
    else:
        orderings = enumerate_cis_orderings(cp, tol, max_dim=args.max_dim)
    if args.json:
        _emit_json({"dim": cp.dim, "count": len(orderings), "orderings": [one_based(o) for o in orderings]})
    elif orderings:
        for o in orderings:
            print(fmt_ordering(o))
    else:
        print("NONE")
    return EXIT_OK if orderings else EXIT_NEGATIVE


def cmd_recover(args) -> int:
    X = read_csv(args.data)
    cfg = RecoveryConfig.with_scale(args.epsilon_scale, tol=_tolerance(args), tie_break=TieBreak(args.tie_break))
    n = X.shape[0]
    try:
        ordering, steps = noisy_recovery_steps(X, cfg)
    except NoCandidate as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.json:
            _emit_json(
                {
                    "ordering": None,
                    "error": "no_candidate",
                    "step": exc.step,
                    "best_min_coefficient": exc.best_margin,
                    "threshold": exc.threshold,
                    "active": one_based(exc.active),
                }
            )
        else:
            print("NONE")
        return EXIT_NEGATIVE
    if args.json:
        _emit_json(
            {
                "ordering": one_based(ordering),
                "n": n,
                "epsilon": cfg.epsilon(n),
                "steps": [
                    {
                        "step": s.step,
                        "chosen": s.chosen + 1,
                        "min_coefficient": s.min_coefficient,
                        "threshold": s.threshold,
                        "margin": s.margin,
                    }
                    for s in steps
                ],
            }
        )
    else:
        print(fmt_ordering(ordering))
        for s in steps:
            print(
                f"step {s.step}: x{s.chosen + 1} placed at position {len(ordering) - s.step + 1}, "
                f"min coefficient {_g6(s.min_coefficient)}, margin {_g6(s.margin)}"
            )
    return EXIT_OK


def cmd_fit(args) -> int:
    X = read_csv(args.data)
    m = X.shape[1]
    order = parse_ordering(args.ordering, m)
    if args.dag:
        g = read_dag(args.dag)
        if g.m != m:
            raise InputError(f"DAG has {g.m} nodes but data has {m} columns")
        if args.ordering is None:
            order = g.topological_order()
        if not g.is_topological(order):
            raise InputError(f"ordering {fmt_ordering(order)} is not topological for the DAG")
        constraints = constraints_from_dag(g, order, nonnegative=args.nonneg)
    else:
        row = RowConstraint.nonneg() if args.nonneg else RowConstraint.free()
        constraints = [row] * (m - 1)
    try:
        result = fit(X, order, constraints)
    except MleDoesNotExist as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.json:
            _emit_json({"exists": False, "ordering": one_based(order), "exact_fit_variable": exc.row + 1})
        else:
            print("MLE does not exist")
        return EXIT_NEGATIVE
    D = result.precision_diag
    if args.json:
        _emit_json(
            {
                "exists": True,
                "n": result.n,
                "ordering": one_based(order),
                "lambda": result.lam.tolist(),
                "D": D.tolist(),
                "noise_var": result.sem.noise_var.tolist(),
                "intercept": result.sem.mean.tolist(),
                "loglik": result.loglik,
                "residual_norms": result.residual_norms.tolist(),
            }
        )
    else:
        print(f"ordering  {fmt_ordering(order)}")
        print(f"n         {result.n}")
        print(f"loglik    {_g6(result.loglik)}")
        print("lambda")
        for row in result.lam:
            print("  " + " ".join(f"{_g6(v):>12s}" for v in row))
        print("D         " + " ".join(_g6(v) for v in D))
        print("residual  " + " ".join(_g6(v) for v in result.residual_norms))
        print("exists    True")
    return EXIT_OK


def cmd_equiv(args) -> int:
    g = read_dag(args.dag)
    markov = markov_class(g, max_dim=args.max_dim)
    cis = cis_markov_class(g, max_dim=args.max_dim)
    members = sorted(markov if args.cls == "markov" else cis, key=lambda h: h.edges)
    if args.json:
        _emit_json(
            {
                "class": args.cls,
                "size": len(members),
                "markov_class_size": len(markov),
                "cis_markov_class_size": len(cis),
                "members": [[[i + 1, j + 1] for i, j in h.edges] for h in members],
            }
        )
    else:
        print(f"{args.cls} class size {len(members)} (markov {len(markov)}, cis-markov {len(cis)})")
        for h in members:
            print(fmt_edges(h))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise InputError("--n must be positive")
    if args.seed < 0 or args.seed >= 1 << 64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    if args.sem:
        sem = read_sem_json(args.sem)
    else:
        try:
            m, p, lo, hi = (t.strip() for t in args.random.split(","))
            sem = random_cis_model(int(m), float(p), (float(lo), float(hi)), seed=args.seed)
        except ValueError as exc:
            raise InputError(f"--random expects m,edge_prob,lo,hi ({exc})") from None
    X = sample_sem(SimSpec(sem, args.n, args.seed), threads=args.threads)
    text = format_csv(X)
    if args.out:
        Path(args.out).write_text(text)
        if args.json:
            _emit_json({"out": str(args.out), "n": X.shape[0], "m": X.shape[1], "seed": args.seed})
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cisdag", description="Positive DAG dependence tools for Gaussian models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tol=True):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if tol:
            p.add_argument("--tol", type=float, default=1e-12, help="absolute sign tolerance")
            p.add_argument("--rtol", type=float, default=1e-9, help="relative sign tolerance")

    def matrix_source(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--sigma", metavar="FILE", help="covariance matrix file")
        src.add_argument("--precision", metavar="FILE", help="precision matrix file")

    p = sub.add_parser("check", help="CIS / MTP2 / positive association report")
    matrix_source(p)
    p.add_argument("--ordering", help="1-based ordering such as 1,4,3,2 (default identity)")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("orderings", help="list CIS orderings")
    matrix_source(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--all", action="store_true", help="enumerate every CIS ordering (default)")
    mode.add_argument("--one", action="store_true", help="find one ordering with the population algorithm")
    p.add_argument("--tie-break", choices=["first", "maxmin"], default="first")
    p.add_argument("--max-dim", type=int, default=10)
    common(p)
    p.set_defaults(func=cmd_orderings)

    p = sub.add_parser("recover", help="estimate a CIS ordering from data")
    p.add_argument("--data", required=True, metavar="FILE.csv")
    p.add_argument("--epsilon-scale", type=float, default=0.5, help="threshold is scale * n^(-1/4)")
    p.add_argument("--tie-break", choices=["first", "maxmin"], default="first")
    p.add_argument("--seedless", action="store_true", help="accepted for compatibility; recovery is deterministic")
    common(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("fit", help="maximum likelihood fit of a Cholesky factor model")
    p.add_argument("--data", required=True, metavar="FILE.csv")
    p.add_argument("--ordering", help="1-based working ordering (default identity, or topological for --dag)")
    p.add_argument("--dag", metavar="FILE", help="restrict coefficients to the parents in this DAG")
    p.add_argument("--nonneg", action="store_true", help="constrain coefficients to be nonnegative")
    common(p, tol=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("equiv", help="Markov or CIS-Markov equivalence class of a DAG")
    p.add_argument("--dag", required=True, metavar="FILE")
    p.add_argument("--class", dest="cls", choices=["markov", "cis-markov"], default="markov")
    p.add_argument("--max-dim", type=int, default=10)
    common(p, tol=False)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("simulate", help="sample a CSV dataset from an SEM")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sem", metavar="FILE.json")
    src.add_argument("--random", metavar="m,edge_prob,lo,hi")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="FILE.csv", help="output path (default stdout)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default CISDAG_THREADS)")
    common(p, tol=False)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, CisDagError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
