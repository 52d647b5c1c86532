"""Synchronous opinion updates for conformists and rebels, the iteration
harness that classifies where a run ends up, and trajectory export."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import linalg
from .errors import (
    BoxViolation,
    DimensionMismatch,
    InvalidInitial,
    LambdaOne,
    LambdaOutOfRange,
    Singular,
)
from .spectral import iteration_matrix, uniform_lambda
from .topology import AgentTypes, Topology

OSCILLATION_FLOOR = 1e-3
BOX_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class OpinionState:
    x: np.ndarray
    t: int = 1


@dataclass(frozen=True, eq=False)
class Confidence:
    """Per-agent weight on one's own previous opinion."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise LambdaOutOfRange(f"confidence must lie in [0, 1], got {v.tolist()}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, lam: float, n: int) -> "Confidence":
        return cls(np.full(n, float(lam)))

    @property
    def uniform(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    @property
    def n(self) -> int:
        return self.values.shape[0]


class Outcome(str, enum.Enum):
    CONVERGED = "ConvergedTo"
    OSCILLATION = "PeriodTwoOscillation"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded run. ``xs[i]`` is the state at step ``t0 + i``.

    ``limit`` holds the limit vector for ConvergedTo, the two alternating
    states for PeriodTwoOscillation, and nothing for MaxIterations.
    """

    xs: np.ndarray
    outcome: Outcome
    limit: tuple[np.ndarray, ...]
    iterations_used: int
    t0: int = 1

    @property
    def states(self) -> list[OpinionState]:
        return [OpinionState(x, self.t0 + i) for i, x in enumerate(self.xs)]

    @property
    def final(self) -> np.ndarray:
        return self.xs[-1]

    def verdict_dict(self) -> dict:
        return {
            "verdict": self.outcome.value,
            "limit": [v.tolist() for v in self.limit],
            "iterations_used": self.iterations_used,
        }


def _confidence(c, n: int) -> np.ndarray:
    values = getattr(c, "values", c)
    lam = np.asarray(values, dtype=float)
    if lam.ndim == 0:
        lam = np.full(n, float(lam))
    if lam.shape != (n,):
        raise DimensionMismatch(f"confidence vector of length {lam.shape} for {n} agents")
    return lam


def _step_array(x: np.ndarray, a: np.ndarray, rebel: np.ndarray, lam: np.ndarray) -> np.ndarray:
    avg = a @ x
    target = np.where(rebel, 1.0 - avg, avg)
    return lam * x + (1.0 - lam) * target


def _check_dims(t: Topology, types: AgentTypes, n: int) -> None:
    if types.n != t.n or n != t.n:
        raise DimensionMismatch(f"topology n={t.n}, types n={types.n}, state n={n}")


def step(s: OpinionState, t: Topology, types: AgentTypes, c) -> OpinionState:
    """One simultaneous update of every agent, all reading state ``s``."""
    x = np.asarray(s.x, dtype=float)
    _check_dims(t, types, x.shape[0])
    lam = _confidence(c, t.n)
    return OpinionState(_step_array(x, t.weights, types.rebel, lam), s.t + 1)


def run(
    x0: Sequence[float],
    t: Topology,
    types: AgentTypes,
    c,
    tol_step: float = 1e-10,
    window: int = 5,
    max_iter: int = 100_000,
) -> Trajectory:
    """Iterate from ``x0`` until convergence, period-two oscillation, or ``max_iter`` steps.

    ConvergedTo: ``|x(t+1) - x(t)|_inf < tol_step`` for ``window`` consecutive steps.
    PeriodTwoOscillation: ``|x(t+2) - x(t)|_inf < tol_step`` while
    ``|x(t+1) - x(t)|_inf >= 1e-3``, for ``window`` consecutive steps.
    """
    x = np.array(x0, dtype=float).reshape(-1)
    _check_dims(t, types, x.shape[0])
    if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x > 1):
        raise InvalidInitial("initial opinions must lie in [0, 1]")
    if tol_step <= 0 or window < 1 or max_iter < 0:
        raise ValueError("need tol_step > 0, window >= 1, max_iter >= 0")
    lam = _confidence(c, t.n)
    a, rebel = t.weights, types.rebel

    xs = [x]
    still = 0
    flips = 0
    outcome, limit = Outcome.MAX_ITERATIONS, ()
    it = 0
    for it in range(1, max_iter + 1):
        nxt = _step_array(xs[-1], a, rebel, lam)
        if nxt.min() < -BOX_SLACK or nxt.max() > 1.0 + BOX_SLACK:
            raise BoxViolation(f"state left [0, 1] at step {it}")
        xs.append(nxt)
        delta = np.max(np.abs(nxt - xs[-2]))
        still = still + 1 if delta < tol_step else 0
        if still >= window:
            outcome, limit = Outcome.CONVERGED, (nxt,)
            break
        if len(xs) >= 3:
            back = xs[-3]
            if (np.max(np.abs(nxt - back)) < tol_step
                    and np.max(np.abs(xs[-2] - back)) >= OSCILLATION_FLOOR):
                flips += 1
            else:
                flips = 0
            if flips >= window:
                # report the pair in the phase of x0: even offsets first
                i = len(xs) - 1
                pair = (xs[i], xs[i - 1]) if i % 2 == 0 else (xs[i - 1], xs[i])
                outcome, limit = Outcome.OSCILLATION, pair
                break
    return Trajectory(np.array(xs), outcome, limit, it)


def fixed_point_direct(t: Topology, types: AgentTypes, lam) -> np.ndarray:
    """Solve (I - B) x = (1 - lam)(I - U) 1 with partial-pivoting LU.

    With at least one rebel and I - B nonsingular the answer is the all-0.5
    vector. With no rebels the system is singular.
    """
    lam = uniform_lambda(lam)
    if lam == 1.0:
        raise LambdaOne("confidence 1 makes I - B the zero matrix")
    b = iteration_matrix(t, types, lam)
    rhs = (1.0 - lam) * (1.0 - types.conformist_indicator)
    try:
        return linalg.solve(np.eye(t.n) - b, rhs)
    except Singular as exc:
        raise Singular(f"1 is an eigenvalue of the iteration matrix ({exc})") from exc


def replay_check(traj: Trajectory, t: Topology, types: AgentTypes, c) -> bool:
    """True iff each recorded state is exactly step() of its predecessor."""
    lam = _confidence(c, t.n)
    xs = traj.xs
    for prev, nxt in zip(xs[:-1], xs[1:]):
        if not np.array_equal(_step_array(prev, t.weights, types.rebel, lam), nxt):
            return False
    return True


def write_trajectory_csv(traj: Trajectory, path, thin: int = 1) -> None:
    """CSV with header ``t,x_0,...,x_{n-1}``; every ``thin``-th row plus the last."""
    if thin < 1:
        raise ValueError("thin must be >= 1")
    n = traj.xs.shape[1]
    rows = list(range(0, len(traj.xs), thin))
    if rows[-1] != len(traj.xs) - 1:
        rows.append(len(traj.xs) - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x_{j}" for j in range(n)])
        for i in rows:
            w.writerow([traj.t0 + i] + [repr(float(v)) for v in traj.xs[i]])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_trajectory_csv`: (steps, states)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    steps = np.array([int(r[0]) for r in body])
    states = np.array([[float(v) for v in r[1:]] for r in body])
    return steps, states


def write_verdict_json(traj: Trajectory, path, extra: dict | None = None) -> None:
    doc = traj.verdict_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
