"""Second-moment Haar averaging and the tree identities it produces.

The exact two-copy twirl of any operator x is a combination of the
two-copy identity and swap,

    E_U[(U (x) U) x (U (x) U)^dag] = c_I * II + c_S * SS,

and chaining twirled sites yields scalar tree values parameterized by
which pairing (straight or crossed) sits on each side.  ``diagram_*``
contract those networks directly; ``tree_chain`` and ``o_tree`` are the
closed forms they must reproduce.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import _mat, haar_unitary


class PermLabel(enum.Enum):
    """Pairing of the two copies at a cut: S is straight, A is crossed."""

    S = "S"
    A = "A"


@dataclass(frozen=True, eq=False)
class TwoCopyOperator:
    """Operator on two copies of an N-dimensional space (an N² x N² matrix)."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n2 = self.dim * self.dim
        if self.dim < 1 or m.shape != (n2, n2):
            raise ValueError(f"two-copy operator on dim {self.dim} must be {n2}x{n2}")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class DesignConstants:
    """The scalars q, xi, eta attached to a (bond, physical) dimension pair."""

    D: int
    d: int
    q: float
    xi: float
    eta: float

    def __post_init__(self):
        q = (self.D * self.d) ** 2 - 1
        if not (
            self.D >= 1
            and self.d >= 1
            and self.q == q
            and np.isclose(self.xi, self.D * (self.d**2 - 1) / q)
            and np.isclose(self.eta, self.d * (self.D**2 - 1) / q)
        ):
            raise ValueError("inconsistent design constants")

    @classmethod
    def from_dims(cls, D: int, d: int) -> "DesignConstants":
        if D < 1 or d < 1 or D * d < 2:
            raise ValueError("need D, d >= 1 with D*d >= 2")
        q = (D * d) ** 2 - 1
        return cls(D=D, d=d, q=float(q), xi=D * (d**2 - 1) / q, eta=d * (D**2 - 1) / q)


def perm_ops(n_dim: int) -> tuple[TwoCopyOperator, TwoCopyOperator]:
    """Two-copy identity and swap on an n_dim-dimensional single-copy space."""
    if n_dim < 1:
        raise ValueError("n_dim must be >= 1")
    n2 = n_dim * n_dim
    ident = np.eye(n2, dtype=complex)
    # swap (v (x) w) = w (x) v
    swap = np.eye(n2, dtype=complex).reshape(n_dim, n_dim, n_dim, n_dim)
    swap = swap.transpose(1, 0, 2, 3).reshape(n2, n2)
    return TwoCopyOperator(n_dim, ident), TwoCopyOperator(n_dim, swap)


def second_moment(x, n_dim: int) -> np.ndarray:
    """Exact Haar average of (U (x) U) x (U (x) U)^dag on two copies.

    No sampling: the output is c_I * II + c_S * SS with the coefficients
    fixed by Tr[x] and Tr[x SS].  Valid for any n_dim >= 2 (the rank-one
    n_dim = 1 case is excluded since the channel denominator vanishes).
    """
    x = _mat(x)
    n = int(n_dim)
    if n < 2:
        raise ValueError("second moment channel needs n_dim >= 2")
    if x.shape != (n * n, n * n):
        raise ValueError(f"expected a {n * n}x{n * n} matrix, got {x.shape}")
    ident, swap = perm_ops(n)
    tr_x = np.trace(x)
    tr_xs = np.trace(x @ swap.matrix)
    qp = n * n - 1.0
    c_i = (tr_x - tr_xs / n) / qp
    c_s = (tr_xs - tr_x / n) / qp
    return c_i * ident.matrix + c_s * swap.matrix


_BATCH = 4096


def _haar_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    # stacked QR with the usual phase fix; same distribution as haar_unitary
    g = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(g)
    diag = np.einsum("bii->bi", r)
    mags = np.abs(diag)
    bad = np.nonzero(np.min(mags, axis=1) <= 1e-12)[0]
    for k in bad:
        q[k] = haar_unitary(n, rng).matrix
        diag[k] = 1.0
        mags[k] = 1.0
    return q * (diag / mags)[:, None, :]


def _two_copy_batch(u: np.ndarray) -> np.ndarray:
    # per-slice kron(u, u) for a stack of unitaries
    b, n, _ = u.shape
    return np.einsum("bij,bkl->bikjl", u, u).reshape(b, n * n, n * n)


def mc_twirl(x, n_dim: int, samples: int, seed: int) -> np.ndarray:
    """Sample average of (U (x) U) x (U (x) U)^dag over Haar draws.

    Draws run in fixed-size batches in index order, so a given seed yields
    a bitwise reproducible matrix.  Empirical counterpart of ``second_moment``.
    """
    x = _mat(x)
    n = int(n_dim)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if x.shape != (n * n, n * n):
        raise ValueError(f"expected a {n * n}x{n * n} matrix, got {x.shape}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    acc = np.zeros((n * n, n * n), dtype=complex)
    done = 0
    while done < samples:
        count = min(_BATCH, samples - done)
        w = _two_copy_batch(_haar_batch(n, count, rng))
        y = w @ x @ w.conj().transpose(0, 2, 1)
        acc += y.sum(axis=0)
        done += count
    return acc / samples


def _gamma(eta: float, length: int) -> float:
    # partial geometric sum 1 + eta + ... + eta^(L-1); eta == 1 only at d == 1
    if eta == 1.0:
        return float(length)
    return (1.0 - eta**length) / (1.0 - eta)


def tree_chain(left: PermLabel, right: PermLabel, chain_len: int, dc: DesignConstants) -> float:
    """Scalar value of a chain of L twirled sites between two pairings.

    chain_len = 0 denotes the single-vertex diagram, which coincides with
    the L = 1 chain: (S,S) -> 1, (S,A) -> xi, (A,S) -> 0, (A,A) -> eta.
    For longer chains the crossed-crossed entry decays as eta^L and the
    straight-crossed entry grows as xi * (1 - eta^L)/(1 - eta).
    """
    if chain_len < 0:
        raise ValueError("chain_len must be >= 0")
    length = max(int(chain_len), 1)
    if left is PermLabel.S:
        return 1.0 if right is PermLabel.S else dc.xi * _gamma(dc.eta, length)
    return 0.0 if right is PermLabel.S else dc.eta**length


def o_tree(left: PermLabel, right: PermLabel, o, dc: DesignConstants) -> float:
    """Single-vertex tree value with the observable inserted on the right cut.

    With t1 = Tr(O) and t2 = Tr(O²) the four values are

        (S,S): (D² t1² − t2/d) / q        (A,S): D (−t1²/d + t2) / q
        (S,A): D (t1² − t2/d) / q         (A,A): (−t1²/d + D² t2) / q

    and O = I_d reduces every entry to the plain ``tree_chain`` value.
    """
    o = _mat(o)
    if o.shape != (dc.d, dc.d):
        raise ValueError(f"observable must be {dc.d}x{dc.d}")
    t1 = float(np.trace(o).real)
    t2 = float(np.trace(o @ o).real)
    big_d, small_d, q = dc.D, dc.d, dc.q
    if left is PermLabel.S and right is PermLabel.S:
        return (big_d**2 * t1**2 - t2 / small_d) / q
    if left is PermLabel.S and right is PermLabel.A:
        return big_d * (t1**2 - t2 / small_d) / q
    if left is PermLabel.A and right is PermLabel.S:
        return big_d * (-(t1**2) / small_d + t2) / q
    return (-(t1**2) / small_d + big_d**2 * t2) / q


# ---------------------------------------------------------------------------
# direct diagram contraction
#
# The tree diagrams are contracted literally: the left pairing becomes a
# two-copy input operator with the physical legs fixed to |0><0|, the site
# box becomes the two-copy twirl channel, and the right pairing becomes a
# readout functional tracing the bond legs straight or crossed with one
# copy of O on each physical leg.  Left pairings enter through the dual
# basis of the bond Gram matrix [[D², D], [D, D²]]; that normalization is
# what lets chained vertices compose as plain products over {S, A}.


def _pair_input(label: PermLabel, D: int, d: int) -> np.ndarray:
    p0 = np.zeros((d, d), dtype=complex)
    p0[0, 0] = 1.0
    block = np.kron(np.eye(D, dtype=complex), p0)
    if label is PermLabel.S:
        return np.kron(block, block)
    n = D * d
    x = np.zeros((n * n, n * n), dtype=complex)
    for a in range(D):
        for b in range(D):
            ket_a, ket_b = np.zeros(n, dtype=complex), np.zeros(n, dtype=complex)
            ket_a[a * d] = 1.0
            ket_b[b * d] = 1.0
            x += np.kron(np.outer(ket_a, ket_b), np.outer(ket_b, ket_a))
    return x


def _dual_input(label: PermLabel, D: int, d: int) -> np.ndarray:
    if D < 2:
        raise ValueError("the two bond pairings are degenerate below D = 2")
    xs = _pair_input(PermLabel.S, D, d)
    xa = _pair_input(PermLabel.A, D, d)
    det = D * D - 1.0
    if label is PermLabel.S:
        return (xs - xa / D) / det
    return (xa - xs / D) / det


def _pair_readout(label: PermLabel, o, D: int, d: int) -> np.ndarray:
    block = np.kron(np.eye(D, dtype=complex), _mat(o))
    r = np.kron(block, block)
    if label is PermLabel.A:
        # cross the two bond legs, leave both physical legs in place
        n = D * d
        w = np.eye(n * n, dtype=complex).reshape(D, d, D, d, D, d, D, d)
        w = w.transpose(2, 1, 0, 3, 4, 5, 6, 7).reshape(n * n, n * n)
        r = w @ r
    return r


def diagram_exact(left: PermLabel, right: PermLabel, dc: DesignConstants, o=None) -> float:
    """Contract the single-vertex tree diagram through the exact channel.

    Independent of the closed forms: equals tree_chain(left, right, 0)
    when o is None and o_tree(left, right, o) otherwise.
    """
    o = np.eye(dc.d) if o is None else _mat(o)
    x = _dual_input(left, dc.D, dc.d)
    y = second_moment(x, dc.D * dc.d)
    r = _pair_readout(right, o, dc.D, dc.d)
    val = np.trace(y @ r)
    assert abs(val.imag) < 1e-10
    return float(val.real)


def diagram_mc(
    left: PermLabel,
    right: PermLabel,
    dc: DesignConstants,
    samples: int,
    seed: int,
    o=None,
) -> tuple[float, float]:
    """Monte-Carlo contraction of the same diagram; returns (mean, stderr)."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    o = np.eye(dc.d) if o is None else _mat(o)
    n = dc.D * dc.d
    x = _dual_input(left, dc.D, dc.d)
    r = _pair_readout(right, o, dc.D, dc.d)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    vals = np.empty(samples)
    done = 0
    while done < samples:
        count = min(_BATCH, samples - done)
        w = _two_copy_batch(_haar_batch(n, count, rng))
        y = w @ x @ w.conj().transpose(0, 2, 1)
        vals[done : done + count] = np.einsum("bij,ji->b", y, r).real
        done += count
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(samples))
    return mean, stderr
