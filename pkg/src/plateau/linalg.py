"""Dense complex linear algebra and random-matrix sampling.

Conventions used throughout the package:

* matrices are ``numpy`` arrays of dtype complex128, row-major;
* composite spaces are ordered bond-first, so a site gate acts on
  C^D (x) C^d and the basis index is ``i = alpha * d + s``;
* every random draw consumes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-10


def _mat(x) -> np.ndarray:
    """Return the underlying complex ndarray of ``x`` (array or wrapper)."""
    return np.asarray(getattr(x, "matrix", x), dtype=complex)


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    """A dim x dim unitary matrix.

    Construction fails unless ``max|U U^dag - I| <= 1e-10``, so a
    ``UnitaryGate`` can be trusted downstream without re-checking.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("unitary must be a square matrix")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise ValueError("unitary has non-finite entries")
        err = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0])))
        if err > UNITARY_TOL:
            raise ValueError(f"matrix is not unitary (max deviation {err:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    """A dim x dim Hermitian matrix, checked at construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable must be a square matrix")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise ValueError("observable has non-finite entries")
        scale = 1.0 + (np.max(np.abs(m)) if m.size else 0.0)
        err = np.max(np.abs(m - m.conj().T))
        if err > HERMITIAN_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (max deviation {err:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def kron(a, b) -> np.ndarray:
    """Kronecker product, with the left factor on the coarse index."""
    return np.kron(_mat(a), _mat(b))


def partial_trace(m, dims, keep) -> np.ndarray:
    """Trace out every subsystem of ``m`` not listed in ``keep``.

    Parameters
    ----------
    m : array_like
        Square matrix on the tensor product of the given subsystems.
    dims : sequence of int
        Dimension of each subsystem, in tensor order.
    keep : iterable of int
        Indices of the subsystems to retain; their relative order is
        preserved in the output.
    """
    m = _mat(m)
    dims = [int(x) for x in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError("keep indices out of range")
    t = m.reshape(dims + dims)
    ncur = len(dims)
    for ax in reversed(range(len(dims))):
        if ax not in keep:
            t = np.trace(t, axis1=ax, axis2=ax + ncur)
            ncur -= 1
    kd = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(kd, kd)


def haar_unitary(dim: int, rng: np.random.Generator) -> UnitaryGate:
    """Draw a Haar-distributed random unitary of the given dimension.

    QR decomposition of a complex Ginibre matrix, with the diagonal of R
    divided out by its phases.  Without that phase correction the QR
    output is unitary but not Haar distributed; with it the distribution
    is exactly the Haar measure on U(dim).

    A numerically rank-deficient Ginibre draw (probability zero) is
    redrawn.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r)
        if np.all(np.abs(diag) > 1e-12):
            break
    q = q * (diag / np.abs(diag))
    return UnitaryGate(q)


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a Haar-random pure state vector.

    Distributed exactly as the first column of a Haar unitary (a
    normalized complex Gaussian vector), which is all that is needed
    when only U|0...0> enters the computation.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    while True:
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        nrm = np.linalg.norm(v)
        if nrm > 1e-12:
            return v / nrm


def gue_hermitian(dim: int, rng: np.random.Generator) -> HermitianObservable:
    """Hermitian matrix (M + M^dag)/2, rescaled to unit operator norm."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (m + m.conj().T) / 2.0
    h = (h + h.conj().T) / 2.0  # exact Hermiticity under floating point
    nrm = np.max(np.abs(np.linalg.eigvalsh(h)))
    return HermitianObservable(h / nrm)


def hs_norm_sq(m) -> float:
    """Squared Hilbert-Schmidt norm Tr(M^dag M)."""
    m = _mat(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("hs_norm_sq expects a square matrix")
    return float(np.vdot(m, m).real)


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(s: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"ZI"`` -> Z (x) I."""
    if not s or any(c not in _PAULI for c in s):
        raise ValueError(f"invalid Pauli string {s!r}")
    out = _PAULI[s[0]]
    for c in s[1:]:
        out = np.kron(out, _PAULI[c])
    return out
