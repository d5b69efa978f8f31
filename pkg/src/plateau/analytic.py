"""Closed-form gradient variances for the six sampling geometries.

Which of the derivative site's two factors (u_minus, the late one, and
u_plus, the early one) is averaged exactly picks the case; the distance
delta between derivative and observable sites picks on-site vs off-site.
Each closed form combines the design constants (q, xi, eta), a geometric
chain factor Gamma_L, and one or two generator constants C1..C6.  C4 is
fully closed-form; the others are Haar integrals over the non-averaged
factor, estimated by Monte Carlo with reported standard errors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .costs import epsilon
from .linalg import HermitianObservable, _mat, partial_trace
from .mc import EnsembleSpec, estimate
from .twirl import DesignConstants


class VarianceCase(enum.Enum):
    OFFSITE_MINUS = "offsite-minus"
    OFFSITE_PLUS = "offsite-plus"
    OFFSITE_BOTH = "offsite-both"
    ONSITE_MINUS = "onsite-minus"
    ONSITE_PLUS = "onsite-plus"
    ONSITE_BOTH = "onsite-both"

    @property
    def onsite(self) -> bool:
        return self.value.startswith("onsite")


# constants entering each closed form (c4 is computed in every query)
CASE_CONSTANTS = {
    VarianceCase.OFFSITE_MINUS: ("c1",),
    VarianceCase.OFFSITE_PLUS: ("c2", "c3"),
    VarianceCase.OFFSITE_BOTH: ("c4",),
    VarianceCase.ONSITE_MINUS: ("c5", "c6"),
    VarianceCase.ONSITE_PLUS: ("c2", "c3"),
    VarianceCase.ONSITE_BOTH: ("c4",),
}


@dataclass(frozen=True, eq=False)
class VarianceQuery:
    case: VarianceCase
    n: int
    D: int
    d: int
    g: HermitianObservable
    o: HermitianObservable
    delta: Optional[int] = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least two sites")
        if self.D < 1 or self.d < 2:
            raise ValueError("need bond dim >= 1 and physical dim >= 2")
        if _mat(self.g).shape != (self.D * self.d,) * 2:
            raise ValueError("generator must act on the full site (D*d)")
        if _mat(self.o).shape != (self.d, self.d):
            raise ValueError("observable must act on the physical space (d)")
        if not self.case.onsite:
            if self.delta is None or not 1 <= self.delta <= self.n - 1:
                raise ValueError("off-site cases need 1 <= delta <= n-1")


@dataclass(frozen=True)
class ConstantEstimate:
    value: float
    stderr: float
    samples: int
    provenance: str

    def __post_init__(self):
        if self.provenance not in ("closed_form", "monte_carlo"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.provenance == "closed_form" and self.stderr != 0.0:
            raise ValueError("closed-form constants carry no error bar")


@dataclass(frozen=True)
class CConstants:
    c1: Optional[ConstantEstimate] = None
    c2: Optional[ConstantEstimate] = None
    c3: Optional[ConstantEstimate] = None
    c4: Optional[ConstantEstimate] = None
    c5: Optional[ConstantEstimate] = None
    c6: Optional[ConstantEstimate] = None

    def __post_init__(self):
        if self.c4 is not None and self.c4.provenance != "closed_form":
            raise ValueError("c4 is always closed-form")

    def value(self, name: str, case: VarianceCase) -> float:
        entry = getattr(self, name)
        if entry is None:
            raise ValueError(f"case {case.value} needs constant {name}")
        return entry.value


def design_constants(D: int, d: int) -> DesignConstants:
    return DesignConstants.from_dims(D, d)


def gamma(L: int, dc: DesignConstants) -> float:
    """Geometric partial sum (1 - eta^L)/(1 - eta)."""
    if L < 0:
        raise ValueError("L must be >= 0")
    if dc.eta >= 1:
        raise ValueError("gamma diverges for eta >= 1")
    return (1.0 - dc.eta**L) / (1.0 - dc.eta)


def c4_closed(g, D: int, d: int) -> float:
    """C4 = 2[-Tr(G)^2 + Dd Tr(G^2)], exact for any generator."""
    g = _mat(g)
    if g.shape != (D * d, D * d):
        raise ValueError(f"generator must be {D * d}x{D * d}")
    t1 = np.trace(g).real
    t2 = np.trace(g @ g).real
    return 2.0 * (-t1 * t1 + D * d * t2)


def _rho_of(u_minus: np.ndarray, D: int, d: int) -> np.ndarray:
    p0 = np.zeros((d, d), dtype=complex)
    p0[0, 0] = 1.0
    return u_minus.conj().T @ np.kron(np.eye(D), p0) @ u_minus


def _sigma_of(u_plus: np.ndarray, o: np.ndarray, D: int) -> np.ndarray:
    return u_plus @ np.kron(np.eye(D), o) @ u_plus.conj().T


def _integrand(name: str, u: np.ndarray, g: np.ndarray, o, D: int, d: int) -> float:
    """Per-draw value whose 2x ensemble mean is the named constant."""
    if name == "c1":
        m = partial_trace(u.conj().T @ g @ u, [D, d], {1})
        val = -np.trace(m @ m) + D * np.trace(g @ g)
    elif name == "c2":
        rho = _rho_of(u, D, d)
        val = -np.trace(rho @ g @ rho @ g) + np.trace(g @ g @ rho @ rho)
    elif name == "c3":
        rho = _rho_of(u, D, d)
        val = -np.trace(rho @ g) ** 2 + D * np.trace(rho @ g @ g)
    elif name == "c5":
        sigma = _sigma_of(u, _mat(o), D)
        val = np.trace(sigma @ g @ (g @ sigma - sigma @ g))
    elif name == "c6":
        om = _mat(o)
        m1 = partial_trace(u.conj().T @ g @ u, [D, d], {1})
        m2 = partial_trace(u.conj().T @ g @ g @ u, [D, d], {1})
        val = -np.trace(m1 @ om @ m1 @ om) + D * np.trace(m2 @ om @ om)
    else:
        raise ValueError(f"unknown constant {name!r}")
    return float(val.real)


def c_constants_mc(
    case: VarianceCase,
    g,
    o,
    D: int,
    d: int,
    ensemble: Optional[EnsembleSpec] = None,
    samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> CConstants:
    """Estimate the constants the case needs; c4 is always filled exactly.

    The minus cases integrate over u_plus draws, the plus cases over
    u_minus draws; ``ensemble`` is that unitary's distribution (default
    haar).  Each constant is twice the ensemble mean of its integrand.
    """
    g = _mat(g)
    need = [c for c in CASE_CONSTANTS[case] if c != "c4"]
    if any(c in ("c5", "c6") for c in need) and o is None:
        raise ValueError("on-site minus constants depend on the observable")
    if samples < 2:
        raise ValueError("samples must be >= 2")
    ensemble = ensemble or EnsembleSpec.haar(D * d)
    if ensemble.dim != D * d:
        raise ValueError("ensemble dim must equal D*d")

    out = {"c4": ConstantEstimate(c4_closed(g, D, d), 0.0, 0, "closed_form")}
    for name in need:
        def sampler(index: int, rng: np.random.Generator, _name=name) -> float:
            return _integrand(_name, ensemble.draw(rng), g, o, D, d)

        r = estimate(sampler, samples, seed, workers)
        out[name] = ConstantEstimate(2.0 * r.mean, 2.0 * r.stderr_mean, samples, "monte_carlo")
    return CConstants(**out)


def _terms(vq: VarianceQuery) -> tuple[DesignConstants, float, float]:
    o = _mat(vq.o)
    return (
        DesignConstants.from_dims(vq.D, vq.d),
        epsilon(o, vq.d),
        float(np.trace(o).real) ** 2,
    )


def variance_formula(vq: VarianceQuery, cc: CConstants) -> float:
    """Exact finite-n variance for the query's case."""
    dc, eps, tr2 = _terms(vq)
    D, d, q, xi, eta = vq.D, vq.d, dc.q, dc.xi, dc.eta
    n, case = vq.n, vq.case

    if case is VarianceCase.OFFSITE_MINUS:
        c1 = cc.value("c1", case)
        L = n - vq.delta - 1
        return (c1 * eta ** (vq.delta - 1) / q**2) * (
            eps * (-1.0 / d + D * xi * gamma(L, dc) + D**2 * eta**L)
            + tr2 * (D**2 - 1) * eta**L / d
        )
    if case is VarianceCase.OFFSITE_PLUS:
        if vq.delta > n - 2:
            raise ValueError("offsite-plus needs 1 <= delta <= n-2")
        c2, c3 = cc.value("c2", case), cc.value("c3", case)
        L = n - vq.delta - 2
        return (eta**vq.delta / q**2) * (
            eps
            * (
                c2 * D * d**2
                - c3
                + (-c2 * d / D + c3 * d) * (D * xi * gamma(L, dc) + D**2 * eta**L)
            )
            + tr2 * (-c2 / D + c3) * (D**2 - 1) * eta**L
        )
    if case is VarianceCase.OFFSITE_BOTH:
        c4 = cc.value("c4", case)
        L = n - vq.delta - 1
        return (c4 * eta**vq.delta / q**2) * (
            eps * (-1.0 / d + D * xi * gamma(L, dc) + D**2 * eta**L)
            + tr2 * (D**2 - 1) * eta**L / d
        )
    if case is VarianceCase.ONSITE_MINUS:
        c5, c6 = cc.value("c5", case), cc.value("c6", case)
        return (1.0 / q) * (
            c5 * (-1.0 / (D * d) + xi * gamma(n - 1, dc)) + c6 * eta ** (n - 1)
        )
    if case is VarianceCase.ONSITE_PLUS:
        c2, c3 = cc.value("c2", case), cc.value("c3", case)
        return (1.0 / q**2) * (
            eps
            * (
                D * d**2 * c2
                - c3
                + (-c2 * d / D + c3 * d) * (xi * gamma(n - 2, dc) * D + eta ** (n - 2) * D**2)
            )
            + tr2 * (D**2 - 1) * eta ** (n - 2) * (-c2 / D + c3)
        )
    c4 = cc.value("c4", case)
    return (c4 / q**2) * (
        eps * (-1.0 / d + D * xi * gamma(n - 1, dc) + D**2 * eta ** (n - 1))
        + tr2 * (D**2 - 1) / d * eta ** (n - 1)
    )


def variance_large_n(vq: VarianceQuery, cc: CConstants) -> float:
    """n -> infinity limit of variance_formula for the query's case."""
    dc, eps, _ = _terms(vq)
    D, d, q, xi, eta = vq.D, vq.d, dc.q, dc.xi, dc.eta
    case = vq.case
    tail = -1.0 / d + D * xi / (1.0 - eta)

    if case is VarianceCase.OFFSITE_MINUS:
        return eps * cc.value("c1", case) * eta ** (vq.delta - 1) / q**2 * tail
    if case is VarianceCase.OFFSITE_PLUS:
        c2, c3 = cc.value("c2", case), cc.value("c3", case)
        return (
            eps
            * eta**vq.delta
            / q**2
            * (c2 * D * d**2 - c3 + d * (-c2 / D + c3) * D * xi / (1.0 - eta))
        )
    if case is VarianceCase.OFFSITE_BOTH:
        return eps * cc.value("c4", case) * eta**vq.delta / q**2 * tail
    if case is VarianceCase.ONSITE_MINUS:
        return cc.value("c5", case) / q * (-1.0 / (D * d) + xi / (1.0 - eta))
    if case is VarianceCase.ONSITE_PLUS:
        c2, c3 = cc.value("c2", case), cc.value("c3", case)
        return (
            eps
            / q**2
            * (D * d**2 * c2 - c3 + (-c2 / D + c3) * xi * D * d / (1.0 - eta))
        )
    return eps * cc.value("c4", case) / q**2 * tail


def variance_bound_onsite_minus(vq: VarianceQuery, g=None) -> float:
    """Upper bound epsilon(O) 4||G||_inf^2 / q (1 + Dd xi/(1-eta))."""
    if not vq.case.onsite:
        raise ValueError("the bound applies to on-site cases")
    dc, eps, _ = _terms(vq)
    gm = _mat(vq.g if g is None else g)
    gnorm = float(np.max(np.abs(np.linalg.eigvalsh(gm))))
    return eps * 4.0 * gnorm**2 / dc.q * (1.0 + vq.D * vq.d * dc.xi / (1.0 - dc.eta))
