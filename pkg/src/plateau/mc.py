"""Reproducible Monte-Carlo estimation harness.

Every sample is computed from its own random stream derived from
(master seed, sample index), so the set of sampled values is a pure
function of (seed, samples) and worker scheduling cannot change it.
The reduction is always performed serially in index order with exact
summation, which makes results bitwise identical across worker counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .linalg import HermitianObservable, UnitaryGate, _mat, haar_unitary
from .ansatz import MpsAnsatz, SiteDecomposition, grad_site

JACKKNIFE_BLOCKS = 100

# matching §-free names for the six sampling geometries; module analytic
# attaches the closed forms to the same strings
CASE_NAMES = (
    "offsite-minus",
    "offsite-plus",
    "offsite-both",
    "onsite-minus",
    "onsite-plus",
    "onsite-both",
)


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """How to draw one unitary: haar, a fixed gate, or a random phase-space
    displacement (the cyclic shift/clock group, an exact 1-design)."""

    kind: str
    dim: int
    gate: Optional[UnitaryGate] = None

    def __post_init__(self):
        if self.kind not in ("haar", "fixed", "pauli_group"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("ensemble dim must be >= 1")
        if self.kind == "fixed":
            if self.gate is None or _mat(self.gate).shape != (self.dim, self.dim):
                raise ValueError("fixed ensemble needs a gate of matching dim")
        elif self.gate is not None:
            raise ValueError("only the fixed ensemble carries a gate")

    @classmethod
    def haar(cls, dim: int) -> "EnsembleSpec":
        return cls("haar", dim)

    @classmethod
    def fixed(cls, gate: UnitaryGate) -> "EnsembleSpec":
        return cls("fixed", _mat(gate).shape[0], gate if isinstance(gate, UnitaryGate) else UnitaryGate(gate))

    @classmethod
    def pauli_group(cls, dim: int) -> "EnsembleSpec":
        return cls("pauli_group", dim)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "haar":
            return haar_unitary(self.dim, rng).matrix
        if self.kind == "fixed":
            return _mat(self.gate)
        n = self.dim
        omega = np.exp(2j * np.pi / n)
        a, b, c = (int(x) for x in rng.integers(0, n, size=3))
        shift = np.roll(np.eye(n, dtype=complex), a, axis=0)
        clock = omega ** (b * np.arange(n))
        return (omega**c) * (shift * clock)


@dataclass(frozen=True)
class EstimateResult:
    mean: float
    variance: float
    stderr_mean: float
    stderr_variance: float
    samples: int
    seed: int
    excluded: int = 0

    def __post_init__(self):
        if self.variance < 0 or self.stderr_mean < 0 or self.stderr_variance < 0:
            raise ValueError("variance and stderr fields must be nonnegative")


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def estimate(
    sampler: Callable[[int, np.random.Generator], float],
    samples: int,
    seed: int,
    workers: int = 1,
) -> EstimateResult:
    """Mean/variance of sampler over its per-index random streams.

    sampler(index, rng) must be pure given (index, seed): rng is derived
    from (seed, index) only.  A NaN return excludes that sample (counted
    in ``excluded``).  Variance is the unbiased estimator; its standard
    error comes from a delete-one-block jackknife over up to 100 blocks.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    values = np.empty(samples)

    def run_range(lo: int, hi: int) -> None:
        for k in range(lo, hi):
            values[k] = sampler(k, _sample_rng(seed, k))

    if workers > 1:
        bounds = np.linspace(0, samples, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda p: run_range(p[0], p[1]), zip(bounds[:-1], bounds[1:])))
    else:
        run_range(0, samples)

    keep = ~np.isnan(values)
    excluded = int(samples - keep.sum())
    n = int(keep.sum())
    if n < 2:
        raise ValueError("fewer than two retained samples")

    # shift by the first retained value so the exact block sums stay small
    pivot = float(values[keep][0])
    blocks = np.array_split(np.arange(samples), min(JACKKNIFE_BLOCKS, samples))
    counts, sums, sqsums = [], [], []
    for idx in blocks:
        kept = [float(values[k]) - pivot for k in idx if keep[k]]
        counts.append(len(kept))
        sums.append(math.fsum(kept))
        sqsums.append(math.fsum(v * v for v in kept))
    total = math.fsum(sums)
    sqtotal = math.fsum(sqsums)

    mean = pivot + total / n
    variance = max((sqtotal - total * total / n) / (n - 1), 0.0)
    stderr_mean = math.sqrt(variance / n)

    thetas = []
    for ck, sk, qk in zip(counts, sums, sqsums):
        m = n - ck
        if m < 2:
            thetas = None
            break
        s, q = total - sk, sqtotal - qk
        thetas.append(max((q - s * s / m) / (m - 1), 0.0))
    if thetas is None:
        stderr_variance = math.inf
    else:
        b = len(thetas)
        tbar = math.fsum(thetas) / b
        stderr_variance = math.sqrt((b - 1) / b * math.fsum((t - tbar) ** 2 for t in thetas))

    return EstimateResult(
        mean=mean,
        variance=variance,
        stderr_mean=stderr_mean,
        stderr_variance=stderr_variance,
        samples=samples,
        seed=seed,
        excluded=excluded,
    )


def _case_name(case) -> str:
    name = str(getattr(case, "value", case))
    if name not in CASE_NAMES:
        raise ValueError(f"unknown variance case {name!r}")
    return name


def grad_variance_mps(
    case,
    n: int,
    D: int,
    d: int,
    delta: Optional[int],
    o_builder,
    g: HermitianObservable,
    ensembles: Optional[Mapping[str, EnsembleSpec]] = None,
    samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> EstimateResult:
    """Empirical gradient statistics for one of the six sampling geometries.

    Per sample: build the observable (o_builder is a fixed d x d matrix or
    a callable rng -> matrix, e.g. one deriving O from a fresh Haar target),
    draw the derivative site's (u_minus, u_plus) per the case, draw every
    other site gate from ensembles["sites"], and evaluate the exact
    gradient along g.  The derivative acts on site 0; off-site cases place
    O delta sites away on the ring.

    In the minus/plus cases only that factor is Haar (the 2-design side);
    its partner comes from ensembles["partner"], default haar.
    """
    name = _case_name(case)
    onsite = name.startswith("onsite")
    if onsite:
        site_m = 0
    else:
        if delta is None or not 1 <= delta <= n - 1:
            raise ValueError("off-site cases need 1 <= delta <= n-1")
        site_m = delta
    dim = D * d
    if _mat(g).shape != (dim, dim):
        raise ValueError(f"generator must be {dim}x{dim}")
    ensembles = dict(ensembles or {})
    sites = ensembles.pop("sites", EnsembleSpec.haar(dim))
    partner = ensembles.pop("partner", EnsembleSpec.haar(dim))
    if ensembles:
        raise ValueError(f"unknown ensemble keys {sorted(ensembles)}")
    for spec in (sites, partner):
        if spec.dim != dim:
            raise ValueError("ensemble dim must equal D*d")
    g_obs = g if isinstance(g, HermitianObservable) else HermitianObservable(g)
    fixed_o = None if callable(o_builder) else _mat(o_builder)

    def draw_split(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if name.endswith("minus"):
            return haar_unitary(dim, rng).matrix, partner.draw(rng)
        if name.endswith("plus"):
            return partner.draw(rng), haar_unitary(dim, rng).matrix
        return haar_unitary(dim, rng).matrix, haar_unitary(dim, rng).matrix

    def sampler(index: int, rng: np.random.Generator) -> float:
        o = fixed_o if fixed_o is not None else o_builder(rng)
        u_minus, u_plus = draw_split(rng)
        gates = [UnitaryGate(u_minus @ u_plus)]
        gates += [UnitaryGate(sites.draw(rng)) for _ in range(n - 1)]
        m = MpsAnsatz(n, D, d, tuple(gates))
        dec = SiteDecomposition(0, UnitaryGate(u_minus), g_obs, UnitaryGate(u_plus))
        return grad_site(m, dec, o, site_m)

    return estimate(sampler, samples, seed, workers)
