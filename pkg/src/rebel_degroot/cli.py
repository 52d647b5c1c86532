"""Command-line front end.

Exit codes:
  0  success (simulate: run converged)
  1  verify found a prediction contradicted by simulation
  2  invalid input (topology, flags, parameters)
  3  confidence vector not uniform where a prediction is needed
  4  simulate: period-two oscillation
  5  simulate: iteration cap reached
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dynamics, spectral, topology
from .errors import (
    InvalidDegree,
    InvalidInitial,
    LambdaOutOfRange,
    NonUniformLambda,
    TooSmall,
    TopologyError,
)
from .topology import AgentTypes, Topology

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INVALID = 2
EXIT_NONUNIFORM = 3
EXIT_OSCILLATION = 4
EXIT_MAX_ITER = 5

MEAN_TOL = 1e-6
DEFAULT_LAMBDA_POOL = tuple(round(0.1 * i, 1) for i in range(10))


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    topology_path: str | None = None
    generator: tuple[int, int, int, bool] | None = None
    rebels: str = "none"
    lam: list[float] = field(default_factory=lambda: [0.5])
    x0: str = "ones"
    tol: float = 1e-10
    window: int = 5
    max_iter: int = 100_000
    out: str | None = None

    def load_topology(self) -> Topology:
        if (self.topology_path is None) == (self.generator is None):
            raise UsageError("give exactly one of --topology or --generate")
        if self.topology_path is not None:
            return topology.load_topology(self.topology_path)
        n, d, seed, sc = self.generator
        return topology.generate_random(n, d, seed, sc)

    def agent_types(self, n: int) -> AgentTypes:
        return parse_rebels(self.rebels, n)

    def confidence(self, n: int) -> dynamics.Confidence:
        lam = self.lam * n if len(self.lam) == 1 else self.lam
        if len(lam) != n:
            raise UsageError(f"--lambda lists {len(lam)} values for {n} agents")
        return dynamics.Confidence(lam)

    def initial(self, n: int) -> np.ndarray:
        return parse_x0(self.x0, n)


# --- flag parsing ----------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def parse_generator(text: str) -> tuple[int, int, int, bool]:
    parts = [p.strip() for p in text.split(",")]
    sc = False
    if len(parts) == 4:
        if parts[3] not in ("sc", "nosc"):
            raise UsageError(f"fourth --generate field must be 'sc' or 'nosc', got {parts[3]!r}")
        sc = parts[3] == "sc"
        parts = parts[:3]
    if len(parts) != 3:
        raise UsageError("--generate expects n,d,seed[,sc]")
    try:
        n, d, seed = (int(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"--generate fields must be integers: {text!r}") from exc
    return n, d, seed, sc


def parse_rebels(spec: str, n: int) -> AgentTypes:
    if spec == "all":
        return AgentTypes.all_rebels(n)
    if spec == "none":
        return AgentTypes.all_conformists(n)
    try:
        idx = [int(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"--rebels expects all, none, or indices: {spec!r}") from exc
    try:
        return AgentTypes.from_rebels(n, idx)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_x0(spec: str, n: int) -> np.ndarray:
    if spec == "ones":
        return np.ones(n)
    if spec.startswith("rand:"):
        try:
            seed = int(spec[5:])
        except ValueError as exc:
            raise UsageError(f"bad seed in --x0 {spec!r}") from exc
        return np.random.default_rng(seed).uniform(0.0, 1.0, n)
    x = _floats(spec)
    if len(x) != n:
        raise UsageError(f"--x0 lists {len(x)} values for {n} agents")
    return np.array(x)


def config_from_args(args) -> RunConfig:
    return RunConfig(
        topology_path=args.topology,
        generator=parse_generator(args.generate) if args.generate else None,
        rebels=args.rebels,
        lam=_floats(args.lam) if args.lam is not None else [0.5],
        x0=getattr(args, "x0", "ones"),
        tol=args.tol,
        window=args.window,
        max_iter=args.max_iter,
        out=args.out,
    )


# --- reports ---------------------------------------------------------------

def _relabel(value, nodes):
    if value is None:
        return None
    if isinstance(value, list):
        return [_relabel(v, nodes) for v in value]
    return nodes[value]


def analyze_instance(t: Topology, types: AgentTypes, lam: float) -> dict:
    """Structure, spectrum and prediction for a strongly connected instance."""
    return {
        "structure": topology.structure_report(t, types).to_dict(),
        "spectral": spectral.spectral_report(t, types, lam).to_dict(),
        "prediction": spectral.predict(t, types, lam).to_dict(),
    }


def build_report(t: Topology, types: AgentTypes, lam: float) -> dict:
    structure = topology.structure_report(t, types)
    report = {
        "n": t.n,
        "lambda": lam,
        "rebels": types.rebel_indices,
        "structure": structure.to_dict(),
        "spectral": None,
        "prediction": None,
        "closed_group_reports": [],
    }
    if structure.strongly_connected:
        report["spectral"] = spectral.spectral_report(t, types, lam).to_dict()
        report["prediction"] = spectral.predict(t, types, lam).to_dict()
        return report
    for group in structure.closed_groups:
        sub = analyze_instance(t.subtopology(group), types.subset(group), lam)
        st = sub["structure"]
        for key in ("cyclic_classes", "witness_cycle", "closed_groups"):
            st[key] = _relabel(st[key], group)
        report["closed_group_reports"].append({"nodes": group, **sub})
    return report


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(doc: dict, out_dir: str | None, name: str) -> None:
    text = _dump(doc)
    sys.stdout.write(text)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / name).write_text(text)


# --- commands --------------------------------------------------------------

def cmd_analyze(cfg: RunConfig) -> int:
    t = cfg.load_topology()
    types = cfg.agent_types(t.n)
    lam = spectral.uniform_lambda(cfg.confidence(t.n))
    _emit(build_report(t, types, lam), cfg.out, "report.json")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, thin: int = 1) -> int:
    t = cfg.load_topology()
    types = cfg.agent_types(t.n)
    c = cfg.confidence(t.n)
    x0 = cfg.initial(t.n)
    traj = dynamics.run(x0, t, types, c, tol_step=cfg.tol, window=cfg.window, max_iter=cfg.max_iter)
    doc = traj.verdict_dict()
    doc["frozen"] = bool(np.all(c.values == 1.0))
    out = Path(cfg.out if cfg.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    dynamics.write_trajectory_csv(traj, out / "trajectory.csv", thin=thin)
    (out / "verdict.json").write_text(_dump(doc))
    sys.stdout.write(_dump(doc))
    return {
        dynamics.Outcome.CONVERGED: EXIT_OK,
        dynamics.Outcome.OSCILLATION: EXIT_OSCILLATION,
        dynamics.Outcome.MAX_ITERATIONS: EXIT_MAX_ITER,
    }[traj.outcome]


OUTCOMES = ("ConvergedToMean", "ConvergedElsewhere", "PeriodTwoOscillation", "MaxIterations")


def classify(traj: dynamics.Trajectory) -> str:
    if traj.outcome is dynamics.Outcome.CONVERGED:
        if np.max(np.abs(traj.final - 0.5)) < MEAN_TOL:
            return "ConvergedToMean"
        return "ConvergedElsewhere"
    return traj.outcome.value


@dataclass(frozen=True)
class VerifyParams:
    seed: int
    lambda_pool: tuple[float, ...] = DEFAULT_LAMBDA_POOL
    n_min: int = 3
    n_max: int = 10
    topology_text: str | None = None
    rebels: str | None = None
    tol: float = 1e-10
    window: int = 5
    max_iter: int = 100_000


def run_trial(params: VerifyParams, index: int) -> dict:
    """One randomized instance, seeded from (seed, index) only."""
    rng = np.random.default_rng([params.seed, index])
    if params.topology_text is not None:
        t = topology.loads_topology(params.topology_text)
        degree = None
    else:
        n = int(rng.integers(params.n_min, params.n_max + 1))
        degree = int(rng.integers(1, n))
        t = topology.generate_random(n, degree, int(rng.integers(2**32)), True)
    n = t.n
    if params.rebels is not None:
        types = parse_rebels(params.rebels, n)
    else:
        k = int(rng.integers(0, n + 1))
        types = AgentTypes.from_rebels(n, (int(j) for j in rng.choice(n, size=k, replace=False)))
    lam = float(params.lambda_pool[int(rng.integers(len(params.lambda_pool)))])
    x0 = rng.uniform(0.0, 1.0, n)
    pred = spectral.predict(t, types, lam)
    traj = dynamics.run(x0, t, types, lam, tol_step=params.tol, window=params.window,
                        max_iter=params.max_iter)
    outcome = classify(traj)
    return {
        "trial": index,
        "n": n,
        "out_degree": degree,
        "rebels": types.rebel_indices,
        "lambda": lam,
        "verdict": pred.verdict.value,
        "basis": [b.value for b in pred.basis],
        "outcome": outcome,
        "iterations": traj.iterations_used,
        "failure": pred.verdict is spectral.Verdict.CONVERGES_TO_MEAN and outcome != "ConvergedToMean",
    }


def verify(params: VerifyParams, trials: int, jobs: int = 1) -> dict:
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    indices = range(trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_trial, [params] * trials, indices))
    else:
        records = [run_trial(params, i) for i in indices]
    table = {v.value: {o: 0 for o in OUTCOMES} for v in spectral.Verdict}
    for r in records:
        table[r["verdict"]][r["outcome"]] += 1
    return {
        "trials": trials,
        "seed": params.seed,
        "lambda_pool": list(params.lambda_pool),
        "table": table,
        "failures": [r["trial"] for r in records if r["failure"]],
        "instances": records,
    }


def cmd_verify(cfg: RunConfig, trials: int, seed: int, jobs: int = 1,
               lambda_pool=None, n_range=(3, 10)) -> int:
    topo_text = None
    if cfg.topology_path is not None or cfg.generator is not None:
        topo_text = topology.dumps_topology(cfg.load_topology())
    n_min, n_max = n_range
    if not 2 <= n_min <= n_max:
        raise UsageError("need 2 <= n-min <= n-max")
    pool = tuple(lambda_pool) if lambda_pool else DEFAULT_LAMBDA_POOL
    for lam in pool:
        if not 0.0 <= lam <= 1.0:
            raise LambdaOutOfRange(f"confidence must lie in [0, 1], got {lam}")
    params = VerifyParams(seed, pool, n_min, n_max, topo_text, cfg.rebels, cfg.tol,
                          cfg.window, cfg.max_iter)
    summary = verify(params, trials, jobs)
    _emit(summary, cfg.out, "verify.json")
    return EXIT_VERIFY_FAILED if summary["failures"] else EXIT_OK


def cmd_generate(n: int, d: int, seed: int, sc: bool, out: str | None) -> int:
    text = topology.dumps_topology(topology.generate_random(n, d, seed, sc))
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "topology.json").write_text(text)
    return EXIT_OK


# --- entry point -----------------------------------------------------------

def _common(p: argparse.ArgumentParser, source_required: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=source_required)
    src.add_argument("--topology", metavar="PATH", help="topology JSON file")
    src.add_argument("--generate", metavar="n,d,seed[,sc]", help="random topology")
    p.add_argument("--tol", type=float, default=1e-10, help="step tolerance")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--out", metavar="DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rebel-degroot",
        description="DeGroot opinion dynamics with conformists and rebels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structure, spectrum and convergence prediction")
    _common(p)
    p.add_argument("--rebels", default="none", metavar="LIST|all|none")
    p.add_argument("--lambda", dest="lam", metavar="REAL|LIST")

    p = sub.add_parser("simulate", help="run the dynamic and export the trajectory")
    _common(p)
    p.add_argument("--rebels", default="none", metavar="LIST|all|none")
    p.add_argument("--lambda", dest="lam", metavar="REAL|LIST")
    p.add_argument("--x0", default="ones", metavar="LIST|ones|rand:SEED")
    p.add_argument("--thin", type=int, default=1, help="keep every k-th CSV row")

    p = sub.add_parser("verify", help="randomized prediction-vs-simulation audit")
    _common(p, source_required=False)
    p.add_argument("--rebels", default=None, metavar="LIST|all|none",
                   help="fix the types (default: random rebel set per trial)")
    p.add_argument("--lambda", dest="lam", metavar="LIST",
                   help="confidence values to sample from (default 0,0.1,...,0.9)")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=10)

    p = sub.add_parser("generate", help="write a random topology")
    p.add_argument("--generate", metavar="n,d,seed[,sc]", required=True)
    p.add_argument("--out", metavar="DIR")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        if args.command == "generate":
            n, d, seed, sc = parse_generator(args.generate)
            return cmd_generate(n, d, seed, sc, args.out)
        cfg = config_from_args(args)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, thin=args.thin)
        pool = _floats(args.lam) if args.lam is not None else None
        return cmd_verify(cfg, args.trials, args.seed, args.jobs, pool, (args.n_min, args.n_max))
    except NonUniformLambda as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONUNIFORM
    except TopologyError as exc:
        print(f"error: invalid topology ({exc.invariant}): {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, InvalidDegree, InvalidInitial, LambdaOutOfRange, TooSmall, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
