"""Command-line interface: check, gen, pc, bench.

Exit codes: 0 consistent / success, 1 inconsistent, 2 error, 3 checker abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .bayesnet import Dataset, forward_sample, load_network, sample_cpts, save_network
from .bench import STAGE_CONFIGS, build_corpus, load_corpus, run_bench, write_corpus
from .citests import (Chi2Backend, InjectingBackend, OracleBackend, QueryLog, flip_indices_for_rate)
from .core import Domain, ValidationError, Verdict, parse_statements
from .encoding import AXIOMS
from .engine import CirInstance, EngineConfig, decide
from .graphs import DAG, load_graph, sample_er_dag, shd
from .pc import PcConfig, run_pc
from .solver import SolverConfigError, SolverProtocolError

EXIT_OK, EXIT_INCONSISTENT, EXIT_ERROR, EXIT_ABORT = 0, 1, 2, 3

log = logging.getLogger("cicheck")


@dataclass
class RunSpec:
    """Everything that determines a run; embedded in every report."""

    subcommand: str
    seed: int | None = None
    paths: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    solver: str | None = None
    timeout_ms: int = 60_000
    axioms: str = "standard"
    checker: str | None = None
    inject: str | None = None
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)


def _engine_config(args) -> EngineConfig:
    return EngineConfig(o1=not args.no_o1, o2=not args.no_o2, o3=not args.no_o3, smt=not args.no_smt,
                        timeout_ms=args.timeout_ms, solver=args.solver, axioms=AXIOMS,
                        style=args.axioms, jobs=args.jobs)


def _spec(args, **kw) -> RunSpec:
    return RunSpec(
        subcommand=args.command,
        seed=getattr(args, "seed", None),
        stages={"o1": not args.no_o1, "o2": not args.no_o2, "o3": not args.no_o3, "smt": not args.no_smt},
        solver=args.solver,
        timeout_ms=args.timeout_ms,
        axioms=args.axioms,
        **kw,
    )


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def parse_inject(text: str | None):
    """``rate=R`` -> ("rate", R); ``indices=1,5,9`` -> ("indices", [1, 5, 9])."""
    if text is None:
        return None
    key, _, value = text.partition("=")
    if key == "rate":
        rate = float(value)
        if not 0 <= rate <= 100:
            raise ValueError("injection rate must lie in [0, 100]")
        return "rate", rate
    if key == "indices":
        idx = sorted({int(v) for v in value.split(",") if v.strip()})
        if any(i < 1 for i in idx):
            raise ValueError("injection indices are 1-based")
        return "indices", idx
    raise ValueError(f"--inject expects rate=R or indices=i,j,..., got {text!r}")


# -- subcommands ---------------------------------------------------------------

def cmd_check(args) -> int:
    text = Path(args.statements).read_text()
    domain, stmts = parse_statements(text)
    inst = CirInstance(len(domain), stmts)
    verdict, trace = decide(inst, None, _engine_config(args))
    _emit({
        "verdict": verdict.value,
        "stage": trace.concluded_by,
        "timings_ms": {k: round(v, 3) for k, v in trace.timings_ms.items()},
        "subproblems": trace.subproblems,
        "trace": trace.to_json(),
        "spec": _spec(args, paths={"statements": args.statements}).to_json(),
    }, args.out)
    return EXIT_INCONSISTENT if verdict is Verdict.INCONSISTENT else EXIT_OK


def cmd_gen(args) -> int:
    if args.m < 1:
        raise ValueError("m must be >= 1")
    if args.n < 1:
        raise ValueError("n must be >= 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dag = sample_er_dag(args.n, args.p, args.seed)
    bn = sample_cpts(dag, [args.card] * args.n, args.alpha, args.seed + 1)
    data = forward_sample(bn, args.m, args.seed + 2)
    save_network(bn, out / "network.json")
    (out / "data.csv").write_text(data.to_csv())
    (out / "dag.json").write_text(json.dumps(dag.to_json(), indent=1) + "\n")
    return EXIT_OK


def _pc_backend(args):
    if args.backend == "oracle":
        if not args.network and not args.dag:
            raise ValueError("the oracle backend needs --network or --dag")
        dag = load_network(args.network).dag if args.network else load_graph(args.dag)
        if not isinstance(dag, DAG):
            raise ValueError("--dag must hold a DAG")
        return Domain(dag.names), OracleBackend(dag), dag
    if not args.data:
        raise ValueError("the chi2 backend needs --data")
    data = Dataset.from_csv(Path(args.data).read_text())
    truth = None
    if args.network:
        truth = load_network(args.network).dag
    elif args.dag:
        truth = load_graph(args.dag)
    return Domain(data.names), Chi2Backend(data, args.alpha), truth


def cmd_pc(args) -> int:
    inject = parse_inject(args.inject)
    domain, backend, truth = _pc_backend(args)
    config = PcConfig(max_order=args.max_order, checker=args.checker, engine=_engine_config(args),
                      on_inconsistent=args.on_inconsistent, threshold=args.threshold,
                      commit_entailed=not args.no_commit_entailed, meek_r4=args.meek_r4)
    flips: list[int] = []
    clean_tests = None
    if inject is not None:
        if inject[0] == "rate":
            # size the injection against a clean run of the same backend
            clean_tests = run_pc(domain, backend, PcConfig(max_order=args.max_order)).tests
            flips = flip_indices_for_rate(clean_tests, inject[1], args.seed)
        else:
            flips = inject[1]
        backend = InjectingBackend(backend, flips)
    qlog = QueryLog(domain)
    report = run_pc(domain, backend, config, qlog)
    body = report.to_json(timings=args.timings)
    body["injected"] = flips
    if clean_tests is not None:
        body["clean_tests"] = clean_tests
    if flips and report.first_alarm_test is not None:
        total = clean_tests or report.tests
        body["detection_position"] = round((report.first_alarm_test - flips[0]) / total, 6)
    if truth is not None and not report.aborted:
        body["shd"] = shd(report.pdag, truth)
    body["spec"] = _spec(args, checker=args.checker, inject=args.inject,
                         paths={k: getattr(args, k) for k in ("network", "data", "dag") if getattr(args, k)},
                         params={"backend": args.backend, "alpha": args.alpha, "max_order": args.max_order,
                                 "meek_r4": args.meek_r4}).to_json()
    if args.log:
        Path(args.log).write_text(qlog.dumps())
    _emit(body, args.out)
    return EXIT_ABORT if report.aborted else EXIT_OK


def cmd_bench(args) -> int:
    configs = [c.strip() for c in args.configs.split(",") if c.strip()]
    if args.corpus:
        corpus = load_corpus(Path(args.corpus))
    else:
        corpus = build_corpus(args.nodes, args.instances, args.rate, args.seed, args.edge_prob)
        if args.write_corpus:
            write_corpus(corpus, Path(args.write_corpus))
    spec = _spec(args, paths={"corpus": args.corpus} if args.corpus else {},
                 params={"configs": configs, "nodes": args.nodes, "instances": args.instances,
                         "rate": args.rate, "edge_prob": args.edge_prob})
    report = run_bench(corpus, configs, _engine_config(args), args.workers, spec.to_json())
    _emit(report.to_json(), args.out)
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_engine_flags(p: argparse.ArgumentParser):
    p.add_argument("--solver", help="SMT solver executable (default: $CICHECK_SOLVER, then z3)")
    p.add_argument("--timeout-ms", type=int, default=60_000, help="per-solver-call timeout")
    p.add_argument("--no-o1", action="store_true", help="disable marginality analysis")
    p.add_argument("--no-o2", action="store_true", help="disable graphoid saturation")
    p.add_argument("--no-o3", action="store_true", help="disable per-axiom subproblems")
    p.add_argument("--no-smt", action="store_true", help="disable the full SMT instance")
    p.add_argument("--axioms", choices=("standard", "appendix-verbatim"), default="standard")
    p.add_argument("--jobs", type=int, default=None, help="parallel solver processes per decision")
    p.add_argument("--out", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cicheck", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide consistency of a JSONL statement file")
    p.add_argument("statements")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate an ER network, a dataset and the ground-truth DAG")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.3, help="edge probability")
    p.add_argument("--alpha", type=float, default=1.0, help="Dirichlet concentration")
    p.add_argument("--card", type=int, default=2, help="categories per variable")
    p.add_argument("--m", type=int, default=10_000, help="number of samples")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pc", help="run the PC algorithm")
    p.add_argument("--network", help="network JSON (oracle backend, or ground truth for SHD)")
    p.add_argument("--data", help="dataset CSV (chi2 backend)")
    p.add_argument("--dag", help="ground-truth DAG JSON")
    p.add_argument("--backend", choices=("oracle", "chi2"), default="oracle")
    p.add_argument("--alpha", type=float, default=0.05, help="chi2 significance level")
    p.add_argument("--checker", choices=("off", "ed", "p"), default="off")
    p.add_argument("--on-inconsistent", choices=("abort", "alert"), default="abort")
    p.add_argument("--threshold", type=int, default=10, help="P-Check rollbacks before fallback")
    p.add_argument("--no-commit-entailed", action="store_true",
                   help="do not add entailed answers to the knowledge base")
    p.add_argument("--inject", help="rate=R (percent of tests) or indices=i,j,... (1-based)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--meek-r4", action="store_true")
    p.add_argument("--log", help="write the per-query JSONL log here")
    p.add_argument("--timings", action="store_true", help="include wall time in the report")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_pc)

    p = sub.add_parser("bench", help="stage ablation over corrupted knowledge bases")
    p.add_argument("--corpus", help="directory of JSONL instances (default: generate)")
    p.add_argument("--nodes", type=int, default=8)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--rate", type=float, default=5.0, help="percent of statements flipped")
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--configs", default=",".join(STAGE_CONFIGS))
    p.add_argument("--workers", type=int, default=1, help="instances decided in parallel")
    p.add_argument("--write-corpus", help="also save the generated corpus here")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not hasattr(args, "no_o1"):
        args.no_o1 = args.no_o2 = args.no_o3 = args.no_smt = False
        args.solver, args.timeout_ms, args.axioms, args.jobs = None, 60_000, "standard", None
    try:
        return args.func(args)
    except (ValidationError, ValueError, OSError, SolverConfigError, SolverProtocolError) as exc:
        print(f"cicheck: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
