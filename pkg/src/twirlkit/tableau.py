"""Clifford operators as symplectic tableaus acting on Paulis by conjugation.

A Clifford C is stored by the signed images C X_i C† and C Z_i C† of the 2n
Pauli generators.  Global phases are quotiented out: two unitaries equal up to
phase have the same tableau, and only the conjugation action is ever used.

Conjugation of an arbitrary Pauli decomposes it through the generator images::

    P = i**k * i**(x.z) * prod_i X_i^{x_i} Z_i^{z_i}

so C P C† is the ordered product of the stored images with the same prefactor.

Elementary gates act on a Pauli through closed-form bit/phase update rules
(verified exhaustively against a dense-matrix reference in the test suite).
Uniform random sampling uses the exact canonical-form construction over the
binary symplectic group (transvection-based, rejection-free), plus uniform
sign bits — every tableau is produced with equal probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .paulis import PauliOp, commutes, identity, pauli_mul, random_bits, single

_ONE_QUBIT_KINDS = ("H", "S", "X", "Y", "Z")
_TWO_QUBIT_KINDS = ("CNOT", "CZ", "SWAP")


@dataclass(frozen=True)
class GateSpec:
    """An elementary Clifford gate: kind plus ordered qubit indices.

    Kinds: H, S, X, Y, Z (one qubit); CNOT (control, target), CZ, SWAP
    (two qubits); MULTICNOT (control, then any number of distinct targets).
    """

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind in _ONE_QUBIT_KINDS:
            if len(self.qubits) != 1:
                raise ValueError(f"{kind} takes one qubit, got {self.qubits}")
        elif kind in _TWO_QUBIT_KINDS:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{kind} takes two distinct qubits, got {self.qubits}")
        elif kind == "MULTICNOT":
            control, *targets = self.qubits
            if not targets:
                raise ValueError("MULTICNOT needs at least one target")
            if len(set(targets)) != len(targets) or control in targets:
                raise ValueError("MULTICNOT targets must be distinct and exclude the control")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "qubits": list(self.qubits)}

    @staticmethod
    def from_dict(d: dict) -> "GateSpec":
        return GateSpec(d["kind"], tuple(d["qubits"]))


def gate(kind: str, *qubits: int) -> GateSpec:
    return GateSpec(kind, tuple(qubits))


def _apply_gate(p: PauliOp, g: GateSpec) -> PauliOp:
    """g p g† for an elementary gate, via closed-form bit/phase rules."""
    x, z, phase = p.x, p.z, p.phase
    kind = g.kind
    if kind == "H":
        (q,) = g.qubits
        b = 1 << q
        xb, zb = x & b, z & b
        if xb and zb:
            phase += 2
        x = (x & ~b) | (b if zb else 0)
        z = (z & ~b) | (b if xb else 0)
    elif kind == "S":
        (q,) = g.qubits
        b = 1 << q
        if x & z & b:
            phase += 2
        z ^= x & b
    elif kind == "X":
        (q,) = g.qubits
        if z >> q & 1:
            phase += 2
    elif kind == "Y":
        (q,) = g.qubits
        if (x ^ z) >> q & 1:
            phase += 2
    elif kind == "Z":
        (q,) = g.qubits
        if x >> q & 1:
            phase += 2
    elif kind == "CNOT":
        c, t = g.qubits
        xc, zc = x >> c & 1, z >> c & 1
        xt, zt = x >> t & 1, z >> t & 1
        if xc & zt & (xt ^ zc ^ 1):
            phase += 2
        x ^= xc << t
        z ^= zt << c
    elif kind == "CZ":
        a, b = g.qubits
        xa, za = x >> a & 1, z >> a & 1
        xb, zb = x >> b & 1, z >> b & 1
        if xa & xb & (za ^ zb):
            phase += 2
        z ^= (xa << b) | (xb << a)
    elif kind == "SWAP":
        a, b = g.qubits
        xa, xb = x >> a & 1, x >> b & 1
        za, zb = z >> a & 1, z >> b & 1
        x ^= ((xa ^ xb) << a) | ((xa ^ xb) << b)
        z ^= ((za ^ zb) << a) | ((za ^ zb) << b)
    else:  # MULTICNOT: a fan of CNOTs sharing one control (they all commute)
        control, *targets = g.qubits
        out = p
        for t in targets:
            out = _apply_gate(out, GateSpec("CNOT", (control, t)))
        return out
    return PauliOp(p.n, x, z, phase % 4)


@dataclass(frozen=True)
class CliffordOp:
    """Clifford conjugation action: signed images of the X_i and Z_i generators."""

    n: int
    image_x: tuple[PauliOp, ...]
    image_z: tuple[PauliOp, ...]

    def is_valid(self) -> bool:
        """Symplectic tableau conditions (pairwise commutation pattern)."""
        for i in range(self.n):
            if commutes(self.image_x[i], self.image_z[i]):
                return False
            for j in range(i + 1, self.n):
                if not commutes(self.image_x[i], self.image_x[j]):
                    return False
                if not commutes(self.image_z[i], self.image_z[j]):
                    return False
                if not commutes(self.image_x[i], self.image_z[j]):
                    return False
                if not commutes(self.image_z[i], self.image_x[j]):
                    return False
        return True

    def is_identity(self) -> bool:
        return all(
            self.image_x[i] == single(self.n, i, "X") and self.image_z[i] == single(self.n, i, "Z")
            for i in range(self.n)
        )


def identity_clifford(n: int) -> CliffordOp:
    return CliffordOp(
        n,
        tuple(single(n, i, "X") for i in range(n)),
        tuple(single(n, i, "Z") for i in range(n)),
    )


def conjugate(c: CliffordOp, p: PauliOp) -> PauliOp:
    """C p C† with exact sign."""
    if c.n != p.n:
        raise ValueError(f"dimension mismatch: Clifford on {c.n}, Pauli on {p.n} qubits")
    acc = PauliOp(p.n, 0, 0, (p.phase + (p.x & p.z).bit_count()) % 4)
    support = p.x | p.z
    q = 0
    while support >> q:
        if p.x >> q & 1:
            acc = pauli_mul(acc, c.image_x[q])
        if p.z >> q & 1:
            acc = pauli_mul(acc, c.image_z[q])
        q += 1
    return acc


def compose(a: CliffordOp, b: CliffordOp) -> CliffordOp:
    """Tableau of "apply b, then a" (the operator product a·b)."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    return CliffordOp(
        a.n,
        tuple(conjugate(a, p) for p in b.image_x),
        tuple(conjugate(a, p) for p in b.image_z),
    )


def inverse(c: CliffordOp) -> CliffordOp:
    """Tableau of C†.

    The bit action of C is a binary symplectic matrix M; the inverse bit
    action is Λ Mᵀ Λ with Λ the symplectic form.  Signs are then fixed by
    requiring conjugate(C, candidate) == generator exactly.
    """
    n = c.n
    m = np.zeros((2 * n, 2 * n), dtype=np.uint8)
    for j in range(n):
        for half, img in ((0, c.image_x[j]), (1, c.image_z[j])):
            col = j + half * n
            for q in range(n):
                m[q, col] = img.x >> q & 1
                m[q + n, col] = img.z >> q & 1
    lam = np.zeros_like(m)
    lam[:n, n:] = np.eye(n, dtype=np.uint8)
    lam[n:, :n] = np.eye(n, dtype=np.uint8)
    minv = (lam @ m.T @ lam) % 2

    def build(col: int, target: PauliOp) -> PauliOp:
        x = z = 0
        for q in range(n):
            x |= int(minv[q, col]) << q
            z |= int(minv[q + n, col]) << q
        cand = PauliOp(n, x, z)
        back = conjugate(c, cand)
        # Hermitian images differ from the target by at most a sign
        return cand.with_phase(target.phase - back.phase)

    return CliffordOp(
        n,
        tuple(build(j, single(n, j, "X")) for j in range(n)),
        tuple(build(j + n, single(n, j, "Z")) for j in range(n)),
    )


def from_gates(n: int, gates: list[GateSpec] | tuple[GateSpec, ...]) -> CliffordOp:
    """Tableau of a gate sequence applied left to right."""
    for g in gates:
        if max(g.qubits) >= n:
            raise ValueError(f"gate {g} addresses qubit >= n={n}")
    image_x = list(identity_clifford(n).image_x)
    image_z = list(identity_clifford(n).image_z)
    for g in gates:
        image_x = [_apply_gate(p, g) for p in image_x]
        image_z = [_apply_gate(p, g) for p in image_z]
    return CliffordOp(n, tuple(image_x), tuple(image_z))


def apply_gates(p: PauliOp, gates: list[GateSpec] | tuple[GateSpec, ...]) -> PauliOp:
    """(g_m ... g_1) p (g_m ... g_1)† without building a tableau."""
    for g in gates:
        p = _apply_gate(p, g)
    return p


def invert_gates(gates: list[GateSpec] | tuple[GateSpec, ...]) -> list[GateSpec]:
    """Gate sequence of the inverse operator (S† expands to three S gates)."""
    out: list[GateSpec] = []
    for g in reversed(gates):
        if g.kind == "S":
            out.extend([g, g, g])
        elif g.kind == "MULTICNOT":
            out.append(g)
        else:
            out.append(g)
    return out


# ---------------------------------------------------------------------------
# single-qubit Clifford group (24 tableau-distinct elements)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=1)
def single_qubit_clifford_words() -> tuple[tuple[str, ...], ...]:
    """Shortest {H,S} words for all 24 single-qubit Clifford tableaus (BFS)."""
    start = identity_clifford(1)
    seen: dict[tuple, tuple[str, ...]] = {(start.image_x[0], start.image_z[0]): ()}
    frontier = [(start, ())]
    while frontier:
        nxt = []
        for tab, word in frontier:
            for kind in ("H", "S"):
                g = GateSpec(kind, (0,))
                tab2 = CliffordOp(
                    1,
                    (_apply_gate(tab.image_x[0], g),),
                    (_apply_gate(tab.image_z[0], g),),
                )
                key = (tab2.image_x[0], tab2.image_z[0])
                if key not in seen:
                    seen[key] = word + (kind,)
                    nxt.append((tab2, word + (kind,)))
        frontier = nxt
    assert len(seen) == 24
    return tuple(sorted(seen.values()))


def single_qubit_clifford_gates(index: int, qubit: int) -> list[GateSpec]:
    """Gate sequence of the index-th single-qubit Clifford, placed on ``qubit``."""
    word = single_qubit_clifford_words()[index]
    return [GateSpec(kind, (qubit,)) for kind in word]


def random_single_qubit_clifford(rng: np.random.Generator) -> CliffordOp:
    """Uniform over the 24 single-qubit Clifford tableaus."""
    idx = int(rng.integers(24))
    return from_gates(1, single_qubit_clifford_gates(idx, 0))


# ---------------------------------------------------------------------------
# uniform n-qubit Clifford sampling (exact, rejection-free)
# ---------------------------------------------------------------------------
#
# Binary symplectic vectors use the interleaved component order
# (x_0, z_0, x_1, z_1, ...); the inner product pairs components (2i, 2i+1).
# A transvection Z_h maps v -> v + <v,h> h and is symplectic for every h.
# The sampler draws the canonical-form data of a uniformly random symplectic
# matrix level by level: a uniform nonzero image f1 of the first basis vector,
# mapped there by at most two transvections, plus 2j-1 free bits per level.


def _sympl_inner(u: np.ndarray, v: np.ndarray) -> int:
    t = 0
    for i in range(0, len(u), 2):
        t ^= (u[i] & v[i + 1]) ^ (u[i + 1] & v[i])
    return int(t)


def _transvect(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    if _sympl_inner(v, h):
        return (v + h) % 2
    return v.copy()


def _find_transvections(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two vectors (h_first, h_second) with Z_{h_second} Z_{h_first} x = y."""
    dim = len(x)
    zero = np.zeros(dim, dtype=np.uint8)
    if np.array_equal(x, y):
        return zero, zero
    if _sympl_inner(x, y):
        return (x + y) % 2, zero
    z = np.zeros(dim, dtype=np.uint8)
    # try a pair position where both x and y are nonzero
    for i in range(0, dim, 2):
        if (x[i] or x[i + 1]) and (y[i] or y[i + 1]):
            z[i] = (x[i] + y[i]) % 2
            z[i + 1] = (x[i + 1] + y[i + 1]) % 2
            if z[i] == 0 and z[i + 1] == 0:
                z[i + 1] = 1
                if x[i] != x[i + 1]:
                    z[i] = 1
            return (x + z) % 2, (z + y) % 2
    # otherwise build z from one x-only pair and one y-only pair
    for i in range(0, dim, 2):
        if (x[i] or x[i + 1]) and not (y[i] or y[i + 1]):
            if x[i] == x[i + 1]:
                z[i + 1] = x[i]
            else:
                z[i + 1] = x[i]
                z[i] = x[i + 1]
            break
    for i in range(0, dim, 2):
        if (y[i] or y[i + 1]) and not (x[i] or x[i + 1]):
            if y[i] == y[i + 1]:
                z[i + 1] = y[i]
            else:
                z[i + 1] = y[i]
                z[i] = y[i + 1]
            break
    return (x + z) % 2, (z + y) % 2


def _random_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform 2n x 2n binary symplectic matrix, rows = images of basis vectors."""
    dim = 2 * n
    # uniform nonzero first image
    while True:
        k = random_bits(dim, rng)
        if k:
            break
    f1 = np.array([(k >> b) & 1 for b in range(dim)], dtype=np.uint8)
    e1 = np.zeros(dim, dtype=np.uint8)
    e1[0] = 1
    t_first, t_second = _find_transvections(e1, f1)
    bits = random_bits(dim - 1, rng)
    eprime = e1.copy()
    for j in range(2, dim):
        eprime[j] = (bits >> (j - 1)) & 1
    h0 = _transvect(t_second, _transvect(t_first, eprime))
    if bits & 1:
        f1 = np.zeros(dim, dtype=np.uint8)
    if n == 1:
        g = np.eye(2, dtype=np.uint8)
    else:
        g = np.zeros((dim, dim), dtype=np.uint8)
        g[0, 0] = 1
        g[1, 1] = 1
        g[2:, 2:] = _random_symplectic(n - 1, rng)
    for j in range(dim):
        row = _transvect(t_first, g[j])
        row = _transvect(t_second, row)
        row = _transvect(h0, row)
        row = _transvect(f1, row)
        g[j] = row
    return g


def random_clifford(n: int, rng: np.random.Generator) -> CliffordOp:
    """Uniform over all n-qubit Clifford tableaus (symplectic part x signs)."""
    m = _random_symplectic(n, rng)
    signs = random_bits(2 * n, rng)

    def row_to_pauli(row: np.ndarray, sign_bit: int) -> PauliOp:
        x = z = 0
        for q in range(n):
            if row[2 * q]:
                x |= 1 << q
            if row[2 * q + 1]:
                z |= 1 << q
        return PauliOp(n, x, z, 2 * sign_bit)

    image_x = tuple(row_to_pauli(m[2 * i], signs >> (2 * i) & 1) for i in range(n))
    image_z = tuple(row_to_pauli(m[2 * i + 1], signs >> (2 * i + 1) & 1) for i in range(n))
    out = CliffordOp(n, image_x, image_z)
    assert out.is_valid()
    return out


# ---------------------------------------------------------------------------
# synthesis: tableau -> elementary gate sequence
# ---------------------------------------------------------------------------


def decompose_gates(c: CliffordOp) -> list[GateSpec]:
    """Elementary gate sequence whose from_gates tableau equals ``c``.

    Column-elimination: conjugating the tableau by prepended gates reduces it
    to the identity; the answer is the reversed, inverted gate list.
    """
    n = c.n
    image_x = list(c.image_x)
    image_z = list(c.image_z)
    applied: list[GateSpec] = []

    def apply(g: GateSpec) -> None:
        applied.append(g)
        for arr in (image_x, image_z):
            for i in range(n):
                arr[i] = _apply_gate(arr[i], g)

    for i in range(n):
        row = image_x[i]
        # pivot: an X component at some qubit >= i
        pivot = next((q for q in range(i, n) if row.x >> q & 1), None)
        if pivot is None:
            pivot = next(q for q in range(i, n) if row.z >> q & 1)
            apply(gate("H", pivot))
        if pivot != i:
            apply(gate("SWAP", i, pivot))
        row = image_x[i]
        for q in range(n):
            if q != i and row.x >> q & 1:
                apply(gate("CNOT", i, q))
        row = image_x[i]
        for q in range(n):
            if q != i and row.z >> q & 1:
                apply(gate("CZ", i, q))
        if image_x[i].z >> i & 1:
            apply(gate("S", i))
        # image_x[i] is now +-X_i; bring image_z[i] to +-Z_i with gates fixing X_i
        for q in range(n):
            if q == i:
                continue
            if image_z[i].x >> q & 1 and image_z[i].z >> q & 1:
                apply(gate("S", q))
            if image_z[i].x >> q & 1:
                apply(gate("H", q))
            if image_z[i].z >> q & 1:
                apply(gate("CNOT", q, i))
        if image_z[i].x >> i & 1:  # letter Y at the pivot: sqrt(X) fixes X_i
            apply(gate("H", i))
            apply(gate("S", i))
            apply(gate("H", i))
    for i in range(n):
        if image_x[i].phase:
            apply(gate("Z", i))
        if image_z[i].phase:
            apply(gate("X", i))
    assert CliffordOp(n, tuple(image_x), tuple(image_z)).is_identity()
    return invert_gates(applied)


def clifford_mapping_z0_to(axis: PauliOp) -> tuple[CliffordOp, list[GateSpec]]:
    """Deterministic V (with gates) such that conjugate(V, axis) == +Z on qubit 0.

    Construction: per-support-qubit letter rotations to Z, a CNOT fan folding
    the Z string onto the first support qubit, then a SWAP to qubit 0.
    Requires a non-identity axis with sign +1.
    """
    if axis.is_identity:
        raise ValueError("rotation axis must be a non-identity Pauli")
    if axis.phase != 0:
        raise ValueError("rotation axis must carry sign +1 (fold signs into the angle)")
    n = axis.n
    support = [q for q in range(n) if (axis.x | axis.z) >> q & 1]
    gates: list[GateSpec] = []
    for q in support:
        letter = axis.letter_at(q)
        if letter == "Y":
            gates.extend([gate("S", q)] * 3)
            gates.append(gate("H", q))
        elif letter == "X":
            gates.append(gate("H", q))
    head = support[0]
    for q in support[1:]:
        gates.append(gate("CNOT", q, head))
    if head != 0:
        gates.append(gate("SWAP", head, 0))
    v = from_gates(n, gates)
    check = conjugate(v, axis)
    assert check == single(n, 0, "Z"), f"axis frame construction failed: {check}"
    return v, gates
