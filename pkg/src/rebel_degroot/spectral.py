"""Spectra of the update matrices and the convergence prediction built on them.

Membership of a specific point (-1 in the spectrum of A, +1 in the spectrum
of the signed matrix) is decided from an LU determinant, never from a
computed eigenvalue list; the lists are reported for cross-checking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import (
    DimensionMismatch,
    LambdaOutOfRange,
    NoConvergence,
    NonUniformLambda,
    NotConvergent,
    TooLarge,
)
from .topology import AgentTypes, Topology, _require_sc, period, rebel_bipartite

MAX_DENSE_N = 64
RADIUS_TOL = 1e-9


class Verdict(str, enum.Enum):
    CONVERGES_TO_MEAN = "ConvergesToMean"
    DIVERGENT = "Divergent"
    FROZEN = "Frozen"
    UNKNOWN = "Unknown"


class Basis(str, enum.Enum):
    """Why a verdict was reached."""

    LAMBDA_ONE = "lambda-one-identity"
    # all rebels, zero confidence, -1 in spec(A): period-two oscillation
    ALL_REBEL_ZERO_CONFIDENCE = "all-rebel-zero-confidence"
    # all rebels, 0 < lambda < 1, -1 not in spec(A)
    ALL_REBEL_NO_MINUS_ONE = "all-rebel-no-minus-one"
    # aperiodic support: primitive A, so -1 cannot be an eigenvalue
    APERIODIC = "aperiodic-support"
    # mixed types, zero confidence, rho((2U-I)A) < 1
    SIGNED_RADIUS_BELOW_ONE = "signed-radius-below-one"
    # mixed types, 0 < lambda < 1, 1 not in spec((2U-I)A)
    ONE_NOT_IN_SIGNED_SPECTRUM = "one-not-in-signed-spectrum"
    # a cycle with an odd number of rebels rules out non-convergence
    ODD_REBEL_CYCLE = "odd-rebel-cycle"


@dataclass(frozen=True)
class Prediction:
    verdict: Verdict
    basis: tuple[Basis, ...] = ()
    rebel_bipartite_note: bool = False
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "basis": [b.value for b in self.basis],
            "rebel_bipartite_note": self.rebel_bipartite_note,
            "note": self.note,
        }


@dataclass(frozen=True)
class SpectralReport:
    eigenvalues: list[complex]
    spectral_radius: float
    has_minus_one: bool
    has_one_in_signed: bool
    signed_radius: float
    rate: float | None = field(default=None)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "spectral_radius": self.spectral_radius,
            "has_minus_one": self.has_minus_one,
            "has_one_in_signed": self.has_one_in_signed,
            "signed_radius": self.signed_radius,
            "rate": self.rate,
        }


def eigenvalues(m, max_n: int = MAX_DENSE_N) -> list[complex]:
    """All eigenvalues with multiplicity, sorted by (-|z|, re, im)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"need a square matrix, got shape {m.shape}")
    if m.shape[0] > max_n:
        raise TooLarge(f"dense eigen solver limited to n <= {max_n}")
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return sorted((complex(z) for z in vals), key=lambda z: (-abs(z), z.real, z.imag))


def spectral_radius(m) -> float:
    return max(abs(z) for z in eigenvalues(m))


def contains_eigenvalue(m, r: float) -> bool:
    """Whether ``r`` is an eigenvalue of ``m``, via |det(r I - m)|."""
    m = np.asarray(m, dtype=float)
    return linalg.is_singular(r * np.eye(m.shape[0]) - m)


def has_minus_one_eigenvalue(t: Topology) -> bool:
    return linalg.is_singular(np.eye(t.n) + t.weights)


def _check_dims(t: Topology, types: AgentTypes) -> None:
    if types.n != t.n:
        raise DimensionMismatch(f"{types.n} agent types for {t.n} agents")


def signed_update_matrix(t: Topology, types: AgentTypes) -> np.ndarray:
    """(2U - I) A: rows of rebels negated."""
    _check_dims(t, types)
    return types.signs[:, None] * t.weights


def uniform_lambda(lam) -> float:
    """Reduce a confidence spec (scalar, sequence or Confidence) to one value."""
    values = np.atleast_1d(np.asarray(getattr(lam, "values", lam), dtype=float))
    if values.size == 0:
        raise LambdaOutOfRange("empty confidence vector")
    if np.any(~np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
        raise LambdaOutOfRange(f"confidence must lie in [0, 1], got {values.tolist()}")
    if np.any(values != values[0]):
        raise NonUniformLambda("prediction needs identical confidence for every agent")
    return float(values[0])


def iteration_matrix(t: Topology, types: AgentTypes, lam) -> np.ndarray:
    """B = lam I + (1 - lam)(2U - I) A."""
    lam = uniform_lambda(lam)
    return lam * np.eye(t.n) + (1.0 - lam) * signed_update_matrix(t, types)


def predict(t: Topology, types: AgentTypes, lam) -> Prediction:
    """Convergence verdict for the uniform-confidence dynamic on a strongly
    connected topology.

    ``Unknown`` means no sufficient condition applies; it is not a claim of
    divergence.
    """
    lam = uniform_lambda(lam)
    _check_dims(t, types)
    _require_sc(t)
    if lam == 1.0:
        return Prediction(Verdict.FROZEN, (Basis.LAMBDA_ONE,), note="update is the identity")

    if types.rebel.all():
        minus_one = has_minus_one_eigenvalue(t)
        if lam == 0.0:
            if minus_one:
                return Prediction(Verdict.DIVERGENT, (Basis.ALL_REBEL_ZERO_CONFIDENCE,))
            return Prediction(
                Verdict.UNKNOWN,
                note="signed radius rho(-A) = 1; -1 not in spec(A), oscillation not certified",
            )
        if not minus_one:
            basis = (Basis.ALL_REBEL_NO_MINUS_ONE,)
            if period(t) == 1:
                basis += (Basis.APERIODIC,)
            return Prediction(Verdict.CONVERGES_TO_MEAN, basis)
        return Prediction(Verdict.UNKNOWN, note="-1 in spec(A): iteration matrix has eigenvalue 1")

    signed = signed_update_matrix(t, types)
    if lam == 0.0:
        radius = spectral_radius(signed)
        if radius < 1.0 - RADIUS_TOL:
            return Prediction(Verdict.CONVERGES_TO_MEAN, (Basis.SIGNED_RADIUS_BELOW_ONE,))
        return Prediction(Verdict.UNKNOWN, note=f"signed radius {radius:.12g} not below 1")

    if not contains_eigenvalue(signed, 1.0):
        return Prediction(Verdict.CONVERGES_TO_MEAN, (Basis.ONE_NOT_IN_SIGNED_SPECTRUM,))
    bipartite, _ = rebel_bipartite(t, types)
    if not bipartite:
        return Prediction(
            Verdict.CONVERGES_TO_MEAN,
            (Basis.ODD_REBEL_CYCLE,),
            note="determinant test flagged 1 in spec((2U-I)A) but an odd-rebel cycle exists",
        )
    return Prediction(
        Verdict.UNKNOWN,
        rebel_bipartite_note=True,
        note="1 in spec((2U-I)A) and every cycle carries an even number of rebels",
    )


def predicted_rate(t: Topology, types: AgentTypes, lam) -> float:
    """Asymptotic per-step contraction of the distance to the all-0.5 state.

    The error obeys e(t+1) = B e(t), so this is the largest eigenvalue
    modulus of B. Raises NotConvergent unless the prediction is
    ConvergesToMean.
    """
    p = predict(t, types, lam)
    if p.verdict is not Verdict.CONVERGES_TO_MEAN:
        raise NotConvergent(f"prediction is {p.verdict.value}")
    return spectral_radius(iteration_matrix(t, types, lam))


def spectral_report(t: Topology, types: AgentTypes, lam) -> SpectralReport:
    signed = signed_update_matrix(t, types)
    eigs = eigenvalues(t.weights)
    try:
        rate = predicted_rate(t, types, lam)
    except NotConvergent:
        rate = None
    return SpectralReport(
        eigenvalues=eigs,
        spectral_radius=max(abs(z) for z in eigs),
        has_minus_one=has_minus_one_eigenvalue(t),
        has_one_in_signed=contains_eigenvalue(signed, 1.0),
        signed_radius=spectral_radius(signed),
        rate=rate,
    )
