"""Shared glue between package objects and the dense matrix reference."""

import numpy as np

import reference as ref
from twirlkit.paulis import PauliOp
from twirlkit.tableau import GateSpec

_ONE_QUBIT = {
    "H": ref.HM,
    "S": ref.SM,
    "X": ref.XM,
    "Y": ref.YM,
    "Z": ref.ZM,
}


def gate_to_dense(g: GateSpec, n: int) -> np.ndarray:
    if g.kind in _ONE_QUBIT:
        return ref.embed(_ONE_QUBIT[g.kind], [g.qubits[0]], n)
    if g.kind == "CNOT":
        return ref.cnot_matrix(g.qubits[0], g.qubits[1], n)
    if g.kind == "CZ":
        return ref.cz_matrix(g.qubits[0], g.qubits[1], n)
    if g.kind == "SWAP":
        return ref.swap_matrix(g.qubits[0], g.qubits[1], n)
    if g.kind == "MULTICNOT":
        control, *targets = g.qubits
        out = np.eye(2**n, dtype=complex)
        for t in targets:
            out = ref.cnot_matrix(control, t, n) @ out
        return out
    raise ValueError(g.kind)


def gates_to_dense(gates, n: int) -> np.ndarray:
    """Dense unitary of a gate list applied left to right."""
    out = np.eye(2**n, dtype=complex)
    for g in gates:
        out = gate_to_dense(g, n) @ out
    return out


def pauli_label(p: PauliOp) -> str:
    return "".join(p.letter_at(q) for q in range(p.n))


def pauli_dense(p: PauliOp) -> np.ndarray:
    return ref.pauli_matrix(pauli_label(p), p.phase)
