"""Cost observables built from a target unitary's output distribution.

A target V on n qubits fixes the single-qubit marginal p(V, x) of
V|0...0>.  Linear cross-entropy and cross-entropy costs are expectation
values of the diagonal observables

    O_xeb  = sum_x (2 p(V,x) - 1) |x><x|
    O_xent = -sum_x ln[p(V,x)] |x><x|

on the first site.  epsilon(O) = Tr(O^2) - Tr(O)^2 / d is the scale that
controls every gradient variance downstream.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import HermitianObservable, _mat, haar_state
from .mc import EstimateResult, estimate

P_FLOOR = 1e-30


class ClampWarning(RuntimeWarning):
    """A probability hit the log floor; the value involving it is suspect."""


class CostKind(enum.Enum):
    GENERIC = "generic"
    CROSS_ENTROPY = "xent"
    LINEAR_XEB = "xeb"


@dataclass(frozen=True)
class OutputDistribution:
    probs: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.probs)
        if len(p) != 2 or any(x < -1e-12 or x > 1 + 1e-12 for x in p):
            raise ValueError("need two probabilities in [0, 1]")
        if abs(p[0] + p[1] - 1.0) > 1e-10:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True, eq=False)
class CostObservable:
    kind: CostKind
    matrix: HermitianObservable
    meta: Optional[OutputDistribution] = None
    clamped: bool = False

    def __post_init__(self):
        if self.kind is not CostKind.GENERIC and self.meta is None:
            raise ValueError("target-derived observables carry their distribution")


def _state_of(v, n: int) -> np.ndarray:
    """Accept a target unitary (column 0 is used) or the state V|0...0> itself."""
    dim = 2**n
    arr = _mat(v)
    vec = arr[:, 0] if arr.ndim == 2 else np.asarray(arr, dtype=complex).ravel()
    if vec.shape != (dim,):
        raise ValueError(f"target must act on {dim} dimensions (n = {n} qubits)")
    return vec


def p_first_qubit(v, n: int) -> OutputDistribution:
    """Marginal of the first qubit of V|0...0>."""
    amps = np.abs(_state_of(v, n).reshape(2, -1)) ** 2
    p0 = float(amps[0].sum())
    tot = float(amps.sum())
    return OutputDistribution((p0 / tot, 1.0 - p0 / tot))


def epsilon(o, d: int) -> float:
    """Squared HS distance of O from its trace part, Tr(O²) − Tr(O)²/d."""
    o = _mat(o)
    if o.shape != (d, d):
        raise ValueError(f"observable must be {d}x{d}")
    t1 = np.trace(o).real
    t2 = np.trace(o @ o).real
    return max(float(t2 - t1 * t1 / d), 0.0)


def _clamp(p: float, context: str) -> tuple[float, bool]:
    if p < P_FLOOR:
        warnings.warn(f"{context}: probability clamped to {P_FLOOR:g}", ClampWarning)
        return P_FLOOR, True
    return p, False


def cross_entropy(q: OutputDistribution, p: OutputDistribution) -> float:
    """-sum_x q(x) ln p(x), with p clamped away from zero."""
    total = 0.0
    for x in range(2):
        px, _ = _clamp(p.probs[x], "cross_entropy")
        total -= q.probs[x] * np.log(px)
    return total


def linear_xeb(p: OutputDistribution, q: OutputDistribution) -> float:
    """2 sum_x p(x) q(x) - 1."""
    return 2.0 * (p.probs[0] * q.probs[0] + p.probs[1] * q.probs[1]) - 1.0


def observable_xeb(v, n: int) -> CostObservable:
    p = p_first_qubit(v, n)
    mat = np.diag([2.0 * p.probs[0] - 1.0, 2.0 * p.probs[1] - 1.0])
    return CostObservable(CostKind.LINEAR_XEB, HermitianObservable(mat), p)


def observable_xent(v, n: int) -> CostObservable:
    p = p_first_qubit(v, n)
    clamped = False
    diag = []
    for x in range(2):
        px, hit = _clamp(p.probs[x], "observable_xent")
        clamped = clamped or hit
        diag.append(-np.log(px))
    return CostObservable(CostKind.CROSS_ENTROPY, HermitianObservable(np.diag(diag)), p, clamped)


def trace_oe_sq(v, n: int) -> float:
    """Tr(O_xent²) = sum_x ln[p(V,x)]² (clamped)."""
    p = p_first_qubit(v, n)
    total = 0.0
    for x in range(2):
        px, _ = _clamp(p.probs[x], "trace_oe_sq")
        total += np.log(px) ** 2
    return total


def haar_avg_epsilon_xeb_closed(n: int) -> float:
    """Haar average of epsilon(O_xeb) over targets on n qubits: 2/(2^n + 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 / (2**n + 1)


def _kind_of(kind) -> CostKind:
    if isinstance(kind, CostKind):
        return kind
    return CostKind(str(kind))


def haar_avg_epsilon_mc(kind, n: int, samples: int, seed: int, workers: int = 1) -> EstimateResult:
    """Sample mean of epsilon(O_kind(V)) over Haar targets.

    Only the state V|0...0> enters, so targets are drawn as Haar states.
    Samples whose distribution hits the log floor are excluded (xent only;
    the exclusion count lands in the result's ``excluded`` field).
    """
    kind = _kind_of(kind)
    if kind is CostKind.GENERIC:
        raise ValueError("only target-derived kinds have a Haar average")

    def sampler(index: int, rng: np.random.Generator) -> float:
        vec = haar_state(2**n, rng)
        if kind is CostKind.LINEAR_XEB:
            return epsilon(observable_xeb(vec, n).matrix, 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampWarning)
            obs = observable_xent(vec, n)
        return np.nan if obs.clamped else epsilon(obs.matrix, 2)

    return estimate(sampler, samples, seed, workers)


def trace_oe_sq_mc(n: int, samples: int, seed: int, workers: int = 1) -> EstimateResult:
    """Sample mean of Tr(O_xent²) over Haar targets, clamped draws excluded.

    Shares the per-index streams of ``haar_avg_epsilon_mc``, so the same
    seed sees the same targets.
    """

    def sampler(index: int, rng: np.random.Generator) -> float:
        vec = haar_state(2**n, rng)
        p = p_first_qubit(vec, n)
        if min(p.probs) < P_FLOOR:
            return np.nan
        return np.log(p.probs[0]) ** 2 + np.log(p.probs[1]) ** 2

    return estimate(sampler, samples, seed, workers)
