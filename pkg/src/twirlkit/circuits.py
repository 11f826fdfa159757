"""Logical-circuit model, Trotter builders, and bias/overhead metrics.

A circuit alternates Clifford layers with noisy Pauli-axis rotations.  Each
rotation ``exp(i·θ·Q)`` is realized as ``V† · Rz(θ on qubit 0) · V`` where the
Clifford frame ``V`` maps the axis ``Q`` onto ``Z`` on qubit 0, and its noise
is a single-qubit Pauli channel attached at frame qubit 0.  The engine
back-propagates observables through the circuit in the Heisenberg picture on
packed bit arrays, multiplying per-layer Pauli fidelities, which keeps the
cost polynomial in the qubit count for Clifford-angle circuits.

Twirl modes per rotation layer:

* ``none`` — the bare noise channel.
* ``full`` / ``ksparse`` — Monte-Carlo over scrambling-gadget draws, with
  optional local depolarizing noise on the gadget's support.
* ``analytic_full`` / ``analytic_ksparse`` — the exact gadget average in
  closed form (noiseless gadgets), deterministic and fast.

Also provided: first-order Trotter circuit builders for a few lattice models,
the rescaling coefficient that turns white-noise-like decay back into the
ideal expectation, and closed-form sampling-overhead and bias bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .channels import (
    FullGroupMinusIdentityFactor,
    PauliChannel,
    WeightAtMostFactor,
    avg_noise_strength,
    make_single_qubit_pauli_noise,
    pauli_fidelity,
    unitarity,
)
from .paulis import PauliOp, identity, random_pauli, weight
from .tableau import CliffordOp, GateSpec, clifford_mapping_z0_to, conjugate, inverse
from .twirl import SymmetrySpec, sample_full_twirl_gate, sample_ksparse_twirl_gate, twirl_channel, twirl_channel_ksparse

__all__ = [
    "RotationLayer",
    "CliffordLayer",
    "NoiseLayer",
    "LogicalCircuit",
    "HamiltonianModel",
    "heisenberg_2d",
    "tfim_2d",
    "fermi_hubbard_2d",
    "heisenberg_1d",
    "build_trotter_circuit",
    "rz_axis_noise",
    "effective_fidelity",
    "effective_fidelity_batch",
    "average_bias",
    "optimal_rescale_coefficient",
    "overhead_rescaling",
    "overhead_pec",
    "overhead_lower_bound",
    "whitenoise_bias_bound",
    "corollary_bound",
]

TWIRL_MODES = ("none", "full", "ksparse", "analytic_full", "analytic_ksparse")
_SAMPLED_MODES = ("full", "ksparse")
_ANGLE_TOL = 1e-9


# ---------------------------------------------------------------------------
# layer types
# ---------------------------------------------------------------------------


def rz_axis_noise(px: float, py: float, pz: float) -> PauliChannel:
    """Single-qubit Pauli channel attached at a rotation layer's frame qubit."""
    return make_single_qubit_pauli_noise(1, 0, px, py, pz)


def _point_rates(ch: PauliChannel) -> tuple[float, float, float]:
    """Extract (px, py, pz) from a 1-qubit channel of point atoms."""
    if ch.n != 1:
        raise ValueError("rotation-layer noise must be a single-qubit channel")
    rates = {"X": 0.0, "Y": 0.0, "Z": 0.0}
    for prob, ensemble in ch.atoms:
        if ensemble.cardinality != 1:
            raise ValueError("rotation-layer noise must consist of point atoms")
        member = next(ensemble.members())
        letter = member.letter_at(0)
        if letter == "I":
            raise ValueError("rotation-layer noise atoms must be nonidentity")
        rates[letter] += prob
    return rates["X"], rates["Y"], rates["Z"]


@dataclass(frozen=True)
class RotationLayer:
    """One noisy Pauli-axis rotation ``exp(i·angle·axis)``.

    Args:
        axis: Unsigned nonidentity Pauli generator of the rotation.
        angle: Rotation parameter in radians; π/4 makes the layer Clifford.
        base_noise: Single-qubit Pauli channel acting at frame qubit 0,
            i.e. on the ``Z`` axis the rotation is conjugated into.
        twirl_mode: One of ``none``, ``full``, ``ksparse``, ``analytic_full``,
            ``analytic_ksparse``.
        k: Support cap for the sparse modes (required there, else None).
        gadget_noise_rate: Local depolarizing rate applied per supported
            qubit after each of the two scrambling-gadget placements
            (sampled modes only).
    """

    axis: PauliOp
    angle: float
    base_noise: PauliChannel
    twirl_mode: str = "none"
    k: int | None = None
    gadget_noise_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.axis.phase != 0:
            raise ValueError("rotation axis must carry a +1 sign")
        if self.axis.x == 0 and self.axis.z == 0:
            raise ValueError("rotation axis must be nonidentity")
        if self.twirl_mode not in TWIRL_MODES:
            raise ValueError(f"unknown twirl mode {self.twirl_mode!r}")
        needs_k = self.twirl_mode in ("ksparse", "analytic_ksparse")
        if needs_k and (self.k is None or not 1 <= self.k <= self.axis.n):
            raise ValueError("sparse twirl modes need 1 <= k <= n")
        if not needs_k and self.k is not None:
            raise ValueError("k is only meaningful for the sparse twirl modes")
        if not 0.0 <= self.gadget_noise_rate <= 1.0:
            raise ValueError("gadget noise rate must lie in [0, 1]")
        if self.gadget_noise_rate > 0 and self.twirl_mode.startswith("analytic"):
            raise ValueError("analytic twirl modes assume noiseless gadgets")
        _point_rates(self.base_noise)  # validates shape

    @property
    def n(self) -> int:
        return self.axis.n

    @cached_property
    def frame_gates(self) -> tuple[GateSpec, ...]:
        """Gate list for the frame V with V·axis·V† = Z on qubit 0."""
        _, gates = clifford_mapping_z0_to(self.axis)
        return tuple(gates)

    @cached_property
    def rates(self) -> tuple[float, float, float]:
        return _point_rates(self.base_noise)

    @property
    def p_err(self) -> float:
        return sum(self.rates)

    @cached_property
    def rotation_kind(self) -> str:
        """How conjugation by the rotation acts on Paulis.

        ``noop`` — the rotation is a Pauli up to phase (angle ≡ 0 mod π/2),
        ``quarter`` — an S-type Clifford (angle ≡ π/4 mod π/2), swapping
        X and Y on the frame qubit, or ``generic`` — non-Clifford; such a
        layer only supports observables that commute with the axis.
        """
        t = self.angle % (math.pi / 2)
        if min(t, math.pi / 2 - t) < _ANGLE_TOL:
            return "noop"
        if abs(t - math.pi / 4) < _ANGLE_TOL:
            return "quarter"
        return "generic"

    @cached_property
    def _letter_fidelity(self) -> np.ndarray:
        """Pauli fidelity of the bare noise, indexed by x0 + 2·z0."""
        px, py, pz = self.rates
        return np.array(
            [1.0, 1.0 - 2 * (py + pz), 1.0 - 2 * (px + py), 1.0 - 2 * (px + pz)]
        )

    @cached_property
    def _ksparse_table(self) -> np.ndarray:
        """Mean commutation sign of the sparse coset vs. rest-weight."""
        m = self.n - 1
        if m == 0:
            return np.ones(1)
        factor = WeightAtMostFactor(tuple(range(m)), min(self.k - 1, m))
        table = np.empty(m + 1)
        for t in range(m + 1):
            probe = PauliOp(m, (1 << t) - 1, 0)
            table[t] = float(factor.mean_chi_local(probe))
        return table


@dataclass(frozen=True)
class CliffordLayer:
    """A noiseless Clifford operation between rotation layers.

    When the generating gate list is known it should be supplied: observables
    then propagate through it with vectorized bit updates instead of
    per-observable tableau conjugation.
    """

    op: CliffordOp
    gates: tuple[GateSpec, ...] | None = None

    @property
    def n(self) -> int:
        return self.op.n

    @cached_property
    def inv_op(self) -> CliffordOp:
        return inverse(self.op)


@dataclass(frozen=True)
class NoiseLayer:
    """A bare noise insertion with no accompanying unitary."""

    channel: PauliChannel

    @property
    def n(self) -> int:
        return self.channel.n


Layer = RotationLayer | CliffordLayer | NoiseLayer


@dataclass(frozen=True)
class LogicalCircuit:
    """A time-ordered sequence of Clifford, rotation, and noise layers."""

    n: int
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            if layer.n != self.n:
                raise ValueError("all layers must act on the circuit's qubit count")

    @property
    def num_rotation_layers(self) -> int:
        return sum(1 for layer in self.layers if isinstance(layer, RotationLayer))

    def rotation_layers(self) -> list[RotationLayer]:
        return [layer for layer in self.layers if isinstance(layer, RotationLayer)]


# ---------------------------------------------------------------------------
# Hamiltonian models and Trotter circuits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianModel:
    """A lattice Hamiltonian with open boundaries on an Lx×Ly grid.

    ``couplings`` holds the model parameters: exchange ``j``, transverse
    field ``h``, hopping ``t_hop``, and on-site repulsion ``u_int``; unused
    entries stay zero.  Use the factory helpers rather than the constructor.
    """

    kind: str
    lx: int
    ly: int
    j: float = 0.0
    h: float = 0.0
    t_hop: float = 0.0
    u_int: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("heisenberg_2d", "tfim_2d", "fermi_hubbard_2d", "heisenberg_1d"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.lx < 1 or self.ly < 1:
            raise ValueError("grid dimensions must be positive")

    @property
    def n_qubits(self) -> int:
        sites = self.lx * self.ly
        return 2 * sites if self.kind == "fermi_hubbard_2d" else sites

    def terms(self) -> list[tuple[PauliOp, float]]:
        """(axis, coupling) pairs in the canonical per-step order."""
        if self.kind in ("heisenberg_2d", "heisenberg_1d"):
            return _heisenberg_terms(self.lx, self.ly, self.j)
        if self.kind == "tfim_2d":
            return _tfim_terms(self.lx, self.ly, self.j, self.h)
        return _fermi_hubbard_terms(self.lx, self.ly, self.t_hop, self.u_int)


def heisenberg_2d(lx: int, ly: int, j: float = 1.0) -> HamiltonianModel:
    """Nearest-neighbour XX+YY+ZZ exchange on an open Lx×Ly grid."""
    return HamiltonianModel("heisenberg_2d", lx, ly, j=j)


def heisenberg_1d(length: int, j: float = 1.0) -> HamiltonianModel:
    """Nearest-neighbour XX+YY+ZZ exchange on an open chain."""
    return HamiltonianModel("heisenberg_1d", length, 1, j=j)


def tfim_2d(lx: int, ly: int, h: float = 1.0, j: float = 1.0) -> HamiltonianModel:
    """ZZ bonds plus a transverse X field on an open Lx×Ly grid."""
    return HamiltonianModel("tfim_2d", lx, ly, j=j, h=h)


def fermi_hubbard_2d(lx: int, ly: int, t_hop: float = 1.0, u_int: float = 1.0) -> HamiltonianModel:
    """Spinful Fermi–Hubbard on an open grid, fermions mapped to qubits.

    Modes are ordered along a row-major snake with the two spin species of a
    site adjacent, so on-site interactions stay weight-2 and hopping becomes
    X/Y strings with a Z-filled interior.
    """
    return HamiltonianModel("fermi_hubbard_2d", lx, ly, t_hop=t_hop, u_int=u_int)


def _grid_bonds(lx: int, ly: int) -> list[tuple[int, int]]:
    """Nearest-neighbour bonds of an open grid, row-major site indices."""
    bonds = []
    for y in range(ly):
        for x in range(lx - 1):
            s = y * lx + x
            bonds.append((s, s + 1))
    for y in range(ly - 1):
        for x in range(lx):
            s = y * lx + x
            bonds.append((s, s + lx))
    return bonds


def _two_site_axis(n: int, a: int, b: int, letter: str) -> PauliOp:
    x = z = 0
    for q in (a, b):
        if letter != "Z":
            x |= 1 << q
        if letter != "X":
            z |= 1 << q
    return PauliOp(n, x, z)


def _heisenberg_terms(lx: int, ly: int, j: float) -> list[tuple[PauliOp, float]]:
    # Bond-major order: each bond contributes its XX, YY, ZZ rotations
    # consecutively, i.e. the step Trotterizes exp(-i dt(XX+YY+ZZ)) bond by
    # bond.  The grouping matters: it sets how per-layer fidelity
    # fluctuations accumulate over a step, and with it the bias-vs-n scaling.
    n = lx * ly
    bonds = _grid_bonds(lx, ly)
    return [(_two_site_axis(n, a, b, letter), j) for a, b in bonds for letter in "XYZ"]


def _tfim_terms(lx: int, ly: int, j: float, h: float) -> list[tuple[PauliOp, float]]:
    n = lx * ly
    terms = [(_two_site_axis(n, a, b, "Z"), j) for a, b in _grid_bonds(lx, ly)]
    terms += [(PauliOp(n, 1 << q, 0), h) for q in range(n)]
    return terms


def _hopping_axis(n: int, i: int, j: int, letter: str) -> PauliOp:
    """X/Y endpoints at modes i < j with a Z string in between."""
    lo, hi = min(i, j), max(i, j)
    x = z = 0
    for q in (lo, hi):
        x |= 1 << q
        if letter == "Y":
            z |= 1 << q
    for q in range(lo + 1, hi):
        z |= 1 << q
    return PauliOp(n, x, z)


def _fermi_hubbard_terms(lx: int, ly: int, t_hop: float, u_int: float) -> list[tuple[PauliOp, float]]:
    sites = lx * ly
    n = 2 * sites

    def snake(x: int, y: int) -> int:
        return y * lx + (x if y % 2 == 0 else lx - 1 - x)

    site_bonds = []
    for y in range(ly):
        for x in range(lx - 1):
            site_bonds.append((snake(x, y), snake(x + 1, y)))
    for y in range(ly - 1):
        for x in range(lx):
            site_bonds.append((snake(x, y), snake(x, y + 1)))

    hops = [(2 * a + spin, 2 * b + spin) for a, b in site_bonds for spin in (0, 1)]
    terms: list[tuple[PauliOp, float]] = []
    for letter in "XY":
        terms += [(_hopping_axis(n, i, j, letter), -t_hop / 2) for i, j in hops]
    for s in range(sites):
        terms.append((_two_site_axis(n, 2 * s, 2 * s + 1, "Z"), u_int / 4))
    for q in range(n):
        terms.append((PauliOp(n, 0, 1 << q), -u_int / 4))
    return terms


def build_trotter_circuit(
    model: HamiltonianModel,
    steps: int,
    dt: float,
    clifford_sim: bool = False,
    *,
    base_noise: PauliChannel | None = None,
    twirl_mode: str = "none",
    k: int | None = None,
    gadget_noise_rate: float = 0.0,
) -> LogicalCircuit:
    """First-order Trotter circuit: one rotation layer per term per step.

    With ``clifford_sim`` every angle is fixed to π/4, which keeps the whole
    circuit Clifford and lets the engine propagate any observable exactly.
    The noise and twirl settings are applied uniformly to all layers.
    """
    if steps < 1:
        raise ValueError("need at least one Trotter step")
    noise = base_noise if base_noise is not None else rz_axis_noise(0.0, 0.0, 0.0)
    terms = model.terms()
    layers = []
    for _ in range(steps):
        for axis, coupling in terms:
            angle = math.pi / 4 if clifford_sim else coupling * dt
            layers.append(
                RotationLayer(axis, angle, noise, twirl_mode, k, gadget_noise_rate)
            )
    return LogicalCircuit(model.n_qubits, tuple(layers))


# ---------------------------------------------------------------------------
# packed observable batches
# ---------------------------------------------------------------------------

_WORD_BITS = 64


def _num_words(n: int) -> int:
    return (n + _WORD_BITS - 1) // _WORD_BITS


def _bits_from_paulis(paulis: list[PauliOp], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pack unsigned X/Z bit masks into (batch, words) uint64 arrays."""
    words = _num_words(n)
    xb = np.zeros((len(paulis), words), dtype=np.uint64)
    zb = np.zeros((len(paulis), words), dtype=np.uint64)
    mask = (1 << _WORD_BITS) - 1
    for i, p in enumerate(paulis):
        for w in range(words):
            xb[i, w] = (p.x >> (w * _WORD_BITS)) & mask
            zb[i, w] = (p.z >> (w * _WORD_BITS)) & mask
    return xb, zb


def _pauli_from_bits(xb: np.ndarray, zb: np.ndarray, i: int, n: int) -> PauliOp:
    x = z = 0
    for w in range(xb.shape[1]):
        x |= int(xb[i, w]) << (w * _WORD_BITS)
        z |= int(zb[i, w]) << (w * _WORD_BITS)
    return PauliOp(n, x, z)


def _get_bit(arr: np.ndarray, q: int) -> np.ndarray:
    return (arr[:, q // _WORD_BITS] >> np.uint64(q % _WORD_BITS)) & np.uint64(1)


def _xor_bit(arr: np.ndarray, q: int, bits: np.ndarray) -> None:
    arr[:, q // _WORD_BITS] ^= bits << np.uint64(q % _WORD_BITS)


def _apply_gate_bits(xb: np.ndarray, zb: np.ndarray, g: GateSpec) -> None:
    """Unsigned conjugation of a whole batch by one Clifford gate.

    Every rule below is an involution on the sign-stripped bits (S and S†
    act identically there), so propagating through an inverted gate list is
    just replaying the reversed list.
    """
    kind = g.kind
    if kind in ("X", "Y", "Z"):
        return
    if kind == "H":
        q = g.qubits[0]
        w, m = q // _WORD_BITS, np.uint64(1 << (q % _WORD_BITS))
        diff = (xb[:, w] ^ zb[:, w]) & m
        xb[:, w] ^= diff
        zb[:, w] ^= diff
        return
    if kind == "S":
        q = g.qubits[0]
        w, m = q // _WORD_BITS, np.uint64(1 << (q % _WORD_BITS))
        zb[:, w] ^= xb[:, w] & m
        return
    if kind == "CNOT":
        c, t = g.qubits
        _xor_bit(xb, t, _get_bit(xb, c))
        _xor_bit(zb, c, _get_bit(zb, t))
        return
    if kind == "CZ":
        a, b = g.qubits
        xa, xc = _get_bit(xb, a), _get_bit(xb, b)
        _xor_bit(zb, b, xa)
        _xor_bit(zb, a, xc)
        return
    if kind == "SWAP":
        a, b = g.qubits
        for arr in (xb, zb):
            ba, bb = _get_bit(arr, a), _get_bit(arr, b)
            diff = ba ^ bb
            _xor_bit(arr, a, diff)
            _xor_bit(arr, b, diff)
        return
    if kind == "MULTICNOT":
        c = g.qubits[0]
        xc = _get_bit(xb, c)
        zc_acc = np.zeros_like(xc)
        for t in g.qubits[1:]:
            _xor_bit(xb, t, xc)
            zc_acc ^= _get_bit(zb, t)
        _xor_bit(zb, c, zc_acc)
        return
    raise ValueError(f"unsupported gate kind {kind!r}")


def _support_masks(n: int, support: tuple[int, ...]) -> np.ndarray:
    masks = np.zeros(_num_words(n), dtype=np.uint64)
    for q in support:
        masks[q // _WORD_BITS] |= np.uint64(1 << (q % _WORD_BITS))
    return masks


def _count_on_support(xb: np.ndarray, zb: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Number of support qubits where the observable is non-identity."""
    total = np.zeros(xb.shape[0], dtype=np.int64)
    for w in range(masks.shape[0]):
        if masks[w]:
            total += np.bitwise_count((xb[:, w] | zb[:, w]) & masks[w]).astype(np.int64)
    return total


# ---------------------------------------------------------------------------
# the Heisenberg back-propagation walk
# ---------------------------------------------------------------------------


def _uniform_nonidentity_fidelity(ch: PauliChannel) -> float | None:
    """Pauli fidelity if it is the same for every nonidentity Pauli.

    Detects the global-white-noise shape: a single atom whose ensemble is
    the uniform distribution over all nonidentity Paulis.
    """
    if not ch.atoms:
        return 1.0
    if len(ch.atoms) != 1:
        return None
    prob, ensemble = ch.atoms[0]
    if ensemble.frame_gates or len(ensemble.factors) != 1:
        return None
    factor = ensemble.factors[0]
    if not isinstance(factor, FullGroupMinusIdentityFactor):
        return None
    if len(factor.register) != ch.n:
        return None
    return 1.0 - prob * 4**ch.n / (4**ch.n - 1)


def _rotation_step(
    layer: RotationLayer,
    xb: np.ndarray,
    zb: np.ndarray,
    lam: np.ndarray,
    rng: np.random.Generator | None,
) -> None:
    """Back-propagate the batch through one rotation layer, updating lam."""
    for g in layer.frame_gates:
        _apply_gate_bits(xb, zb, g)

    mode = layer.twirl_mode
    gadget = None
    if mode in _SAMPLED_MODES:
        if rng is None:
            raise ValueError("sampled twirl modes need an rng")
        if mode == "full":
            gadget = sample_full_twirl_gate(layer.n, rng)
        else:
            gadget = sample_ksparse_twirl_gate(layer.n, layer.k, rng)
        p_d = layer.gadget_noise_rate
        masks = _support_masks(layer.n, gadget.support) if (p_d > 0 and gadget.support) else None
        if masks is not None:
            lam *= (1 - 4 * p_d / 3) ** _count_on_support(xb, zb, masks)
        for g in reversed(gadget.gates):
            _apply_gate_bits(xb, zb, g)

    x0 = _get_bit(xb, 0)
    z0 = _get_bit(zb, 0)
    if mode in ("none", "full", "ksparse"):
        lam *= layer._letter_fidelity[(x0 + 2 * z0).astype(np.intp)]
    else:
        px, py, pz = layer.rates
        p = px + py + pz
        xf = x0.astype(np.float64)
        zf = z0.astype(np.float64)
        xy_sign = (1.0 - xf) * (1.0 - 2.0 * zf)
        rest_x = xb.copy()
        rest_z = zb.copy()
        rest_x[:, 0] &= ~np.uint64(1)
        rest_z[:, 0] &= ~np.uint64(1)
        if mode == "analytic_full":
            rest_any = (rest_x | rest_z).any(axis=1)
            lam *= (1 - p) + pz * (1 - 2 * xf) + (px + py) * xy_sign * (~rest_any)
        else:
            rest_w = np.zeros(xb.shape[0], dtype=np.int64)
            for w in range(xb.shape[1]):
                rest_w += np.bitwise_count(rest_x[:, w] | rest_z[:, w]).astype(np.int64)
            lam *= (1 - p) + pz * (1 - 2 * xf) + (px + py) * xy_sign * layer._ksparse_table[rest_w]

    kind = layer.rotation_kind
    if kind == "quarter":
        zb[:, 0] ^= x0
    elif kind == "generic" and x0.any():
        raise ValueError(
            "non-Clifford rotation angle: deterministic propagation only supports "
            "observables that commute with the axis (use the dense oracle instead)"
        )

    if gadget is not None:
        p_d = layer.gadget_noise_rate
        if p_d > 0 and gadget.support:
            masks = _support_masks(layer.n, gadget.support)
            lam *= (1 - 4 * p_d / 3) ** _count_on_support(xb, zb, masks)
        for g in gadget.gates:
            _apply_gate_bits(xb, zb, g)

    for g in reversed(layer.frame_gates):
        _apply_gate_bits(xb, zb, g)


def _walk(
    c: LogicalCircuit,
    xb: np.ndarray,
    zb: np.ndarray,
    rng: np.random.Generator | None,
) -> np.ndarray:
    """One full back-propagation pass; returns per-observable fidelities."""
    lam = np.ones(xb.shape[0])
    for layer in reversed(c.layers):
        if isinstance(layer, RotationLayer):
            _rotation_step(layer, xb, zb, lam, rng)
        elif isinstance(layer, CliffordLayer):
            if layer.gates is not None:
                for g in reversed(layer.gates):
                    _apply_gate_bits(xb, zb, g)
            else:
                inv = layer.inv_op
                for i in range(xb.shape[0]):
                    p = _pauli_from_bits(xb, zb, i, c.n)
                    q = conjugate(inv, p).unsigned()
                    for w in range(xb.shape[1]):
                        xb[i, w] = (q.x >> (w * _WORD_BITS)) & ((1 << _WORD_BITS) - 1)
                        zb[i, w] = (q.z >> (w * _WORD_BITS)) & ((1 << _WORD_BITS) - 1)
        else:
            flat = _uniform_nonidentity_fidelity(layer.channel)
            if flat is not None:
                lam *= flat
            else:
                for i in range(xb.shape[0]):
                    lam[i] *= pauli_fidelity(layer.channel, _pauli_from_bits(xb, zb, i, c.n))
    return lam


def _has_sampled_layers(c: LogicalCircuit) -> bool:
    return any(
        isinstance(layer, RotationLayer) and layer.twirl_mode in _SAMPLED_MODES
        for layer in c.layers
    )


def effective_fidelity_batch(
    c: LogicalCircuit,
    paulis: list[PauliOp],
    shots: int = 1000,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Effective Pauli fidelities for a batch of observables.

    Returns the per-observable mean and standard error of
    2^{-n}·tr[N_eff(P)·P], where N_eff is the circuit's noise commuted past
    the ideal unitary.  Deterministic circuits need a single pass and report
    zero error; sampled twirl modes Monte-Carlo average over gadget draws,
    sharing draws across the batch (common random numbers — each
    per-observable mean stays unbiased).
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    for p in paulis:
        if p.n != c.n:
            raise ValueError("observable dimension mismatch")
        if p.x == 0 and p.z == 0:
            raise ValueError("observables must be nonidentity")
    if not _has_sampled_layers(c):
        xb, zb = _bits_from_paulis(paulis, c.n)
        return _walk(c, xb, zb, rng), np.zeros(len(paulis))
    if rng is None:
        raise ValueError("sampled twirl modes need an rng")
    samples = np.empty((shots, len(paulis)))
    for s in range(shots):
        xb, zb = _bits_from_paulis(paulis, c.n)
        samples[s] = _walk(c, xb, zb, rng)
    mean = samples.mean(axis=0)
    if shots == 1:
        return mean, np.zeros(len(paulis))
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(shots)
    return mean, stderr


def effective_fidelity(
    c: LogicalCircuit,
    p: PauliOp,
    shots: int = 1000,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Effective Pauli fidelity of one observable (see the batch variant)."""
    mean, stderr = effective_fidelity_batch(c, [p], shots, rng)
    return float(mean[0]), float(stderr[0])


# ---------------------------------------------------------------------------
# rescaling and the bias metric
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _frame_channel(n: int, rates: tuple[float, float, float], mode: str, k: int | None) -> PauliChannel:
    """The rotation layer's noise channel on n qubits, in the axis frame."""
    base = make_single_qubit_pauli_noise(n, 0, *rates)
    if mode == "none":
        return base
    if mode in ("full", "analytic_full"):
        return twirl_channel(base, SymmetrySpec.rz_first_qubit(n))
    return twirl_channel_ksparse(base, k)


def layer_noise_channel(layer: RotationLayer) -> PauliChannel:
    """Full n-qubit channel the layer's noise averages to under its twirl.

    Sampled modes use the same averaged channel as their analytic twins;
    gadget depolarizing noise is not included.
    """
    return _frame_channel(layer.n, layer.rates, layer.twirl_mode, layer.k)


def optimal_rescale_coefficient(c: LogicalCircuit) -> float:
    """Product over noisy layers of s/u — the rescaling that undoes decay.

    For L identical layers this is (s/u)^L, with s the mean and u the mean
    square of the channel's Pauli fidelities over nonidentity Paulis.
    """
    result = 1.0
    seen: dict[Layer, float] = {}
    for layer in c.layers:
        if isinstance(layer, CliffordLayer):
            continue
        if layer not in seen:
            ch = layer_noise_channel(layer) if isinstance(layer, RotationLayer) else layer.channel
            u = unitarity(ch)
            if u <= 0:
                raise ValueError("layer channel has nonpositive unitarity")
            seen[layer] = avg_noise_strength(ch) / u
        result *= seen[layer]
    return result


def average_bias(
    c: LogicalCircuit,
    num_paulis: int = 1000,
    shots: int = 1000,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Mean over random nonidentity P of |R·|fidelity(P)| − 1|.

    R is the rescaling coefficient of the circuit, so a channel that acts as
    global white noise scores exactly zero.  The reported error is the
    standard error over the observable sample.
    """
    if num_paulis < 1:
        raise ValueError("need at least one observable")
    if rng is None:
        raise ValueError("an explicit seeded rng is required")
    paulis = [random_pauli(c.n, exclude_identity=True, rng=rng) for _ in range(num_paulis)]
    means, _ = effective_fidelity_batch(c, paulis, shots, rng)
    r = optimal_rescale_coefficient(c)
    biases = np.abs(r * np.abs(means) - 1.0)
    if num_paulis == 1:
        return float(biases[0]), 0.0
    return float(biases.mean()), float(biases.std(ddof=1) / math.sqrt(num_paulis))


# ---------------------------------------------------------------------------
# overhead and bias bounds
# ---------------------------------------------------------------------------


def _goodness(n: int) -> float:
    return 4**n / (4**n - 1)


def overhead_rescaling(p_err: float, num_layers: int, n: int) -> float:
    """Sampling overhead of rescaled estimation under white-noise decay."""
    if not 0 <= p_err < 1:
        raise ValueError("error probability must lie in [0, 1)")
    return (1 - _goodness(n) * p_err) ** (-2 * num_layers)


def overhead_pec(p_err: float, num_layers: int) -> float:
    """Sampling overhead of probabilistic error cancellation."""
    if not 0 <= p_err < 1:
        raise ValueError("error probability must lie in [0, 1)")
    return (1 + 2 * p_err) ** (2 * num_layers)


def overhead_lower_bound(p_err: float, num_layers: int, n: int) -> float:
    """Fundamental lower bound on mitigation overhead, first order in p."""
    if not 0 <= p_err < 1:
        raise ValueError("error probability must lie in [0, 1)")
    return (1 + 2 * _goodness(n) * p_err) ** num_layers - (2**n - 2) / (4**n - 1)


def whitenoise_bias_bound(s: float, u: float, num_layers: int, n: int) -> float:
    """Worst-case bias of rescaled estimation vs. exact white noise."""
    if not 0 < u <= 1:
        raise ValueError("unitarity must lie in (0, 1]")
    if not 0 <= s <= 1:
        raise ValueError("noise strength parameter must lie in [0, 1]")
    ratio = min(s * s / u, 1.0)
    return math.sqrt((2**n - 1) / (2**n + 1) * (1 - ratio**num_layers))


def corollary_bound(v: float, p_tot: float, num_layers: int) -> float:
    """Large-L simplification of the white-noise bias bound: v·p_tot/√L."""
    if num_layers < 1:
        raise ValueError("need at least one layer")
    return v * p_tot / math.sqrt(num_layers)
