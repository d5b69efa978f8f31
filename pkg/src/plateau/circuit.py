"""Layered qubit circuits: exact costs, gradients, and gradient statistics.

Gates act on ordered qubit subsets of a statevector (cap 2^12); the
derivative inserts -i V_k inside one layer's (u_minus, u_plus) split,
exactly as in the MPS case but without any ring structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linalg import HermitianObservable, UnitaryGate, _mat, haar_unitary
from .mc import EstimateResult, estimate

QUBIT_CAP = 12


@dataclass(frozen=True, eq=False)
class LayeredCircuit:
    n_qubits: int
    gates: tuple  # ((unitary, support), ...) in application order
    observable_layer: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= QUBIT_CAP:
            raise ValueError(f"need 1 <= n_qubits <= {QUBIT_CAP}")
        gates = tuple((g, tuple(int(q) for q in s)) for g, s in self.gates)
        for g, s in gates:
            if len(set(s)) != len(s) or any(q < 0 or q >= self.n_qubits for q in s):
                raise ValueError(f"bad support {s}")
            if _mat(g).shape != (2 ** len(s),) * 2:
                raise ValueError(f"gate on support {s} must be {2 ** len(s)}-dimensional")
        if not 0 <= self.observable_layer < len(gates):
            raise IndexError("observable_layer out of range")
        object.__setattr__(self, "gates", gates)

    @property
    def supports(self) -> tuple:
        return tuple(s for _, s in self.gates)


@dataclass(frozen=True, eq=False)
class CircuitDerivative:
    layer: int
    u_minus: UnitaryGate
    v_k: HermitianObservable
    u_plus: UnitaryGate

    def __post_init__(self):
        dims = {_mat(x).shape for x in (self.u_minus, self.v_k, self.u_plus)}
        if len(dims) != 1:
            raise ValueError("u_minus, v_k, u_plus must share one dimension")


def brick_supports(n_qubits: int, n_layers: int) -> tuple:
    """Alternating nearest-neighbour pairs; odd layers wrap around."""
    if n_qubits < 2:
        raise ValueError("brick layout needs at least two qubits")
    out = []
    for layer in range(n_layers):
        start = layer % 2
        for q in range(start, n_qubits - 1 + start, 2):
            out.append((q, (q + 1) % n_qubits))
    return tuple(out)


def apply_gate(state: np.ndarray, gate, support: Sequence[int], n_qubits: int) -> np.ndarray:
    """Apply a 2^k-dimensional matrix to the given qubits of a statevector."""
    k = len(support)
    g = _mat(gate).reshape((2,) * (2 * k))
    psi = state.reshape((2,) * n_qubits)
    out = np.tensordot(g, psi, axes=(range(k, 2 * k), support))
    return np.moveaxis(out, range(k), support).reshape(-1)


def _run(c: LayeredCircuit, override: Optional[tuple] = None) -> np.ndarray:
    psi = np.zeros(2**c.n_qubits, dtype=complex)
    psi[0] = 1.0
    for i, (g, s) in enumerate(c.gates):
        if override is not None and i == override[0]:
            g = override[1]
        psi = apply_gate(psi, g, s, c.n_qubits)
    return psi


def _check_obs(c: LayeredCircuit, o_a, a: Sequence[int]) -> tuple:
    a = tuple(int(q) for q in a)
    if len(set(a)) != len(a) or any(q < 0 or q >= c.n_qubits for q in a):
        raise ValueError(f"bad observable support {a}")
    if _mat(o_a).shape != (2 ** len(a),) * 2:
        raise ValueError("observable dim must match its support")
    if not set(a) <= set(c.gates[c.observable_layer][1]):
        raise ValueError("observable support must sit inside the observable layer's support")
    return a


def expectation(psi: np.ndarray, o_a, a: Sequence[int], n_qubits: int,
                phi: Optional[np.ndarray] = None) -> complex:
    opsi = apply_gate(psi, o_a, a, n_qubits)
    return complex(np.vdot(phi if phi is not None else psi, opsi))


def circuit_cost(c: LayeredCircuit, o_a, a: Sequence[int]) -> float:
    """<0...0| U^dag (O_A (x) I) U |0...0> by statevector simulation."""
    a = _check_obs(c, o_a, a)
    val = expectation(_run(c), o_a, a, c.n_qubits)
    assert abs(val.imag) < 1e-10 * (1.0 + abs(val.real))
    return val.real


def circuit_grad(c: LayeredCircuit, dcv: CircuitDerivative, o_a, a: Sequence[int]) -> float:
    """Exact dC along v_k; the gate at dcv.layer is replaced by u_minus u_plus."""
    a = _check_obs(c, o_a, a)
    if not 0 <= dcv.layer < len(c.gates):
        raise IndexError("derivative layer out of range")
    um, up = _mat(dcv.u_minus), _mat(dcv.u_plus)
    if um.shape != (2 ** len(c.gates[dcv.layer][1]),) * 2:
        raise ValueError("derivative split dim must match its layer")
    psi = _run(c, override=(dcv.layer, um @ up))
    dpsi = _run(c, override=(dcv.layer, um @ (-1j * _mat(dcv.v_k)) @ up))
    return 2.0 * expectation(dpsi, o_a, a, c.n_qubits, phi=psi).real


def circuit_grad_fd(c: LayeredCircuit, dcv: CircuitDerivative, o_a, a: Sequence[int],
                    h: float = 1e-5) -> float:
    w, v = np.linalg.eigh(_mat(dcv.v_k))
    um, up = _mat(dcv.u_minus), _mat(dcv.u_plus)

    def at(theta: float) -> float:
        gate = um @ (v * np.exp(-1j * theta * w)) @ v.conj().T @ up
        return circuit_cost(
            LayeredCircuit(
                c.n_qubits,
                tuple((gate if i == dcv.layer else g, s) for i, (g, s) in enumerate(c.gates)),
                c.observable_layer,
            ),
            o_a,
            a,
        )

    return (at(h) - at(-h)) / (2.0 * h)


def circuit_variance_mc(
    c_template: LayeredCircuit,
    layer: int,
    v_k: HermitianObservable,
    o_a,
    a: Sequence[int],
    ensemble: str = "haar",
    samples: int = 10_000,
    seed: int = 0,
    workers: int = 1,
) -> EstimateResult:
    """Gradient statistics with every layer redrawn per sample.

    The template fixes the layout (supports and observable layer) only;
    each sample draws fresh unitaries on every support.  The derivative
    layer's gate is the product of two independent draws, between which
    -i v_k is inserted.
    """
    if ensemble != "haar":
        raise ValueError("layer gates are 2-designs; only haar is supported")
    a = _check_obs(c_template, o_a, a)
    if not 0 <= layer < len(c_template.gates):
        raise IndexError("derivative layer out of range")
    supports = c_template.supports
    dim_k = 2 ** len(supports[layer])
    if _mat(v_k).shape != (dim_k, dim_k):
        raise ValueError("v_k dim must match the derivative layer")
    v_obs = v_k if isinstance(v_k, HermitianObservable) else HermitianObservable(v_k)

    def sampler(index: int, rng: np.random.Generator) -> float:
        gates = []
        split = None
        for i, s in enumerate(supports):
            if i == layer:
                um = haar_unitary(dim_k, rng)
                up = haar_unitary(dim_k, rng)
                split = (um, up)
                gates.append((UnitaryGate(_mat(um) @ _mat(up)), s))
            else:
                gates.append((haar_unitary(2 ** len(s), rng), s))
        c = LayeredCircuit(c_template.n_qubits, tuple(gates), c_template.observable_layer)
        dcv = CircuitDerivative(layer, split[0], v_obs, split[1])
        return circuit_grad(c, dcv, o_a, a)

    return estimate(sampler, samples, seed, workers)
