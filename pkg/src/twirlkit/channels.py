"""Pauli noise channels as mixtures over structured Pauli ensembles.

A channel is `identity_prob * id + sum_a prob_a * (uniform over ensemble_a)`.
Each ensemble is a tensor product of primitive factors over disjoint qubit
registers (point Pauli, full Pauli group, full group minus identity, the
diagonal {I,Z}^m strings, the single-qubit {X,Y} pair, or all Paulis of
bounded weight), optionally conjugated member-by-member through a Clifford
frame.  Cardinalities are exact big integers and every statistical query
(mean commutation sign, fidelities, distances, unitarity) has a closed form
in those cardinalities, so channels stay tractable at hundreds of qubits.

Members are unsigned (Hermitian, sign +1) Paulis: conjugation `E rho E†`
is insensitive to the sign of E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .paulis import PauliOp, commutes, format_pauli, identity, parse_pauli, random_bits, random_pauli, weight
from .tableau import CliffordOp, GateSpec, conjugate, from_gates, inverse

_PROB_TOL = 1e-12
_ENUM_CAP = 1 << 16  # largest ensemble we will materialize when merging overlaps


def _check_register(register: tuple[int, ...]) -> tuple[int, ...]:
    register = tuple(int(q) for q in register)
    if not register or len(set(register)) != len(register) or sorted(register) != list(register):
        raise ValueError(f"register must be a sorted tuple of distinct qubits, got {register}")
    return register


def _place(n: int, register: tuple[int, ...], local: PauliOp) -> tuple[int, int]:
    """Scatter a local Pauli's bits onto global qubit positions."""
    x = z = 0
    for i, q in enumerate(register):
        x |= ((local.x >> i) & 1) << q
        z |= ((local.z >> i) & 1) << q
    return x, z


# ---------------------------------------------------------------------------
# primitive factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointFactor:
    """A single fixed Pauli on its register."""

    register: tuple[int, ...]
    pauli: PauliOp

    def __post_init__(self) -> None:
        object.__setattr__(self, "register", _check_register(self.register))
        if self.pauli.n != len(self.register):
            raise ValueError("point Pauli size must match register size")
        if self.pauli.phase != 0:
            raise ValueError("ensemble members are unsigned; point Pauli must have sign +1")

    @property
    def cardinality(self) -> int:
        return 1

    @property
    def can_be_identity(self) -> bool:
        return self.pauli.is_identity

    def mean_chi_local(self, q: PauliOp) -> Fraction:
        return Fraction(1) if commutes(self.pauli, q) else Fraction(-1)

    def contains_local(self, q: PauliOp) -> bool:
        return q == self.pauli

    def sample_local(self, rng: np.random.Generator) -> PauliOp:
        return self.pauli

    def members_local(self):
        yield self.pauli

    def to_dict(self) -> dict:
        return {"kind": "point", "register": list(self.register), "pauli": format_pauli(self.pauli)}


@dataclass(frozen=True)
class FullGroupFactor:
    """All 4^m unsigned Paulis on the register."""

    register: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "register", _check_register(self.register))

    @property
    def cardinality(self) -> int:
        return 4 ** len(self.register)

    @property
    def can_be_identity(self) -> bool:
        return True

    def mean_chi_local(self, q: PauliOp) -> Fraction:
        return Fraction(1) if q.is_identity else Fraction(0)

    def contains_local(self, q: PauliOp) -> bool:
        return True

    def sample_local(self, rng: np.random.Generator) -> PauliOp:
        return random_pauli(len(self.register), rng=rng)

    def members_local(self):
        m = len(self.register)
        for x in range(1 << m):
            for z in range(1 << m):
                yield PauliOp(m, x, z)

    def to_dict(self) -> dict:
        return {"kind": "full_group", "register": list(self.register)}


@dataclass(frozen=True)
class FullGroupMinusIdentityFactor:
    """All 4^m − 1 nonidentity unsigned Paulis on the register."""

    register: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "register", _check_register(self.register))

    @property
    def cardinality(self) -> int:
        return 4 ** len(self.register) - 1

    @property
    def can_be_identity(self) -> bool:
        return False

    def mean_chi_local(self, q: PauliOp) -> Fraction:
        if q.is_identity:
            return Fraction(1)
        # the full group averages to zero; removing the identity leaves -1
        return Fraction(-1, self.cardinality)

    def contains_local(self, q: PauliOp) -> bool:
        return not q.is_identity

    def sample_local(self, rng: np.random.Generator) -> PauliOp:
        return random_pauli(len(self.register), exclude_identity=True, rng=rng)

    def members_local(self):
        m = len(self.register)
        for x in range(1 << m):
            for z in range(1 << m):
                if x or z:
                    yield PauliOp(m, x, z)

    def to_dict(self) -> dict:
        return {"kind": "full_group_minus_identity", "register": list(self.register)}


@dataclass(frozen=True)
class DiagonalIZFactor:
    """All 2^m strings over {I, Z} on the register."""

    register: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "register", _check_register(self.register))

    @property
    def cardinality(self) -> int:
        return 2 ** len(self.register)

    @property
    def can_be_identity(self) -> bool:
        return True

    def mean_chi_local(self, q: PauliOp) -> Fraction:
        # each qubit where q has an X or Y letter averages (+1 - 1)/2 = 0
        return Fraction(1) if q.x == 0 else Fraction(0)

    def contains_local(self, q: PauliOp) -> bool:
        return q.x == 0

    def sample_local(self, rng: np.random.Generator) -> PauliOp:
        m = len(self.register)
        return PauliOp(m, 0, random_bits(m, rng))

    def members_local(self):
        m = len(self.register)
        for z in range(1 << m):
            yield PauliOp(m, 0, z)

    def to_dict(self) -> dict:
        return {"kind": "diagonal_iz", "register": list(self.register)}


@dataclass(frozen=True)
class XYSetFactor:
    """The pair {X, Y} on a single qubit."""

    register: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "register", _check_register(self.register))
        if len(self.register) != 1:
            raise ValueError("XY factor lives on exactly one qubit")

    @property
    def cardinality(self) -> int:
        return 2

    @property
    def can_be_identity(self) -> bool:
        return False

    def mean_chi_local(self, q: PauliOp) -> Fraction:
        letter = q.letter_at(0)
        if letter == "I":
            return Fraction(1)
        if letter == "Z":
            return Fraction(-1)
        return Fraction(0)  # X or Y: one partner commutes, the other does not

    def contains_local(self, q: PauliOp) -> bool:
        return q.letter_at(0) in ("X", "Y")

    def sample_local(self, rng: np.random.Generator) -> PauliOp:
        return PauliOp(1, 1, int(rng.integers(2)))

    def members_local(self):
        yield PauliOp(1, 1, 0)
        yield PauliOp(1, 1, 1)

    def to_dict(self) -> dict:
        return {"kind": "xy_pair", "register": list(self.register)}


@dataclass(frozen=True)
class WeightAtMostFactor:
    """All unsigned Paulis of weight ≤ max_weight on the register."""

    register: tuple[int, ...]
    max_weight: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "register", _check_register(self.register))
        if not 0 <= self.max_weight <= len(self.register):
            raise ValueError("max weight must lie in [0, register size]")

    @property
    def cardinality(self) -> int:
        m = len(self.register)
        return sum(3**j * math.comb(m, j) for j in range(self.max_weight + 1))

    @property
    def can_be_identity(self) -> bool:
        return True

    def mean_chi_local(self, q: PauliOp) -> Fraction:
        """Average commutation sign against all members, in closed form.

        Members of weight j with `a` of their letters on q's support
        contribute (−1)^a on average over letter choices at supported sites
        (one of three letters commutes) and a factor 3 per unsupported site.
        """
        m = len(self.register)
        t = weight(q)
        total = 0
        for j in range(self.max_weight + 1):
            for a in range(min(j, t) + 1):
                total += (-1) ** a * math.comb(t, a) * math.comb(m - t, j - a) * 3 ** (j - a)
        return Fraction(total, self.cardinality)

    def contains_local(self, q: PauliOp) -> bool:
        return weight(q) <= self.max_weight

    def sample_local(self, rng: np.random.Generator) -> PauliOp:
        m = len(self.register)
        card = self.cardinality
        # draw the weight class with its exact probability, then a uniform member
        r = _random_below(card, rng)
        j = 0
        acc = 0
        for j in range(self.max_weight + 1):
            acc += 3**j * math.comb(m, j)
            if r < acc:
                break
        support = rng.choice(m, size=j, replace=False) if j else np.array([], dtype=int)
        x = z = 0
        for q in support:
            letter = int(rng.integers(3))  # 0: X, 1: Y, 2: Z
            if letter != 2:
                x |= 1 << int(q)
            if letter != 0:
                z |= 1 << int(q)
        return PauliOp(m, x, z)

    def members_local(self):
        from itertools import combinations, product

        m = len(self.register)
        for j in range(self.max_weight + 1):
            for support in combinations(range(m), j):
                for letters in product("XYZ", repeat=j):
                    x = z = 0
                    for q, letter in zip(support, letters):
                        if letter != "Z":
                            x |= 1 << q
                        if letter != "X":
                            z |= 1 << q
                    yield PauliOp(m, x, z)

    def to_dict(self) -> dict:
        return {"kind": "weight_at_most", "register": list(self.register), "max_weight": self.max_weight}


Factor = (
    PointFactor
    | FullGroupFactor
    | FullGroupMinusIdentityFactor
    | DiagonalIZFactor
    | XYSetFactor
    | WeightAtMostFactor
)

_FACTOR_KINDS = {
    "point": PointFactor,
    "full_group": FullGroupFactor,
    "full_group_minus_identity": FullGroupMinusIdentityFactor,
    "diagonal_iz": DiagonalIZFactor,
    "xy_pair": XYSetFactor,
    "weight_at_most": WeightAtMostFactor,
}


def _random_below(bound: int, rng: np.random.Generator) -> int:
    """Uniform integer in [0, bound) for arbitrarily large bounds."""
    bits = bound.bit_length()
    while True:
        r = random_bits(bits, rng)
        if r < bound:
            return r


def factor_from_dict(d: dict) -> Factor:
    kind = d["kind"]
    register = tuple(d["register"])
    if kind == "point":
        return PointFactor(register, parse_pauli(d["pauli"]))
    if kind == "weight_at_most":
        return WeightAtMostFactor(register, d["max_weight"])
    if kind in _FACTOR_KINDS:
        return _FACTOR_KINDS[kind](register)
    raise ValueError(f"unknown factor kind {kind!r}")


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliEnsemble:
    """Uniform distribution over a structured set of unsigned n-qubit Paulis.

    The factors' registers must partition {0, …, n−1}.  An optional Clifford
    frame (as a gate sequence) conjugates every member; statistical queries
    conjugate the query Pauli by the inverse frame instead of materializing
    the conjugated set.
    """

    n: int
    factors: tuple[Factor, ...]
    frame_gates: tuple[GateSpec, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.frame_gates is not None:
            object.__setattr__(self, "frame_gates", tuple(self.frame_gates))
        covered: set[int] = set()
        for f in self.factors:
            if covered & set(f.register):
                raise ValueError("factor registers overlap")
            covered |= set(f.register)
        if covered != set(range(self.n)):
            raise ValueError(f"factor registers must partition 0..{self.n - 1}")

    @cached_property
    def _frame(self) -> CliffordOp | None:
        if self.frame_gates is None:
            return None
        return from_gates(self.n, list(self.frame_gates))

    @cached_property
    def _frame_inv(self) -> CliffordOp | None:
        return None if self._frame is None else inverse(self._frame)

    @property
    def cardinality(self) -> int:
        out = 1
        for f in self.factors:
            out *= f.cardinality
        return out

    @property
    def contains_identity(self) -> bool:
        return all(f.can_be_identity for f in self.factors)

    def mean_chi_exact(self, p: PauliOp) -> Fraction:
        if p.n != self.n:
            raise ValueError("dimension mismatch")
        q = p if self._frame_inv is None else conjugate(self._frame_inv, p)
        out = Fraction(1)
        for f in self.factors:
            out *= f.mean_chi_local(q.restrict(f.register))
            if out == 0:
                return out
        return out

    def contains(self, p: PauliOp) -> bool:
        if p.phase != 0:
            return False
        q = p if self._frame_inv is None else conjugate(self._frame_inv, p).unsigned()
        return all(f.contains_local(q.restrict(f.register)) for f in self.factors)

    def sample(self, rng: np.random.Generator) -> PauliOp:
        x = z = 0
        for f in self.factors:
            dx, dz = _place(self.n, f.register, f.sample_local(rng))
            x |= dx
            z |= dz
        member = PauliOp(self.n, x, z)
        if self._frame is not None:
            member = conjugate(self._frame, member).unsigned()
        return member

    def members(self):
        """Iterate all members; only sensible for small cardinalities."""
        from itertools import product as iproduct

        locals_per_factor = [list(f.members_local()) for f in self.factors]
        for choice in iproduct(*locals_per_factor):
            x = z = 0
            for f, local in zip(self.factors, choice):
                dx, dz = _place(self.n, f.register, local)
                x |= dx
                z |= dz
            member = PauliOp(self.n, x, z)
            if self._frame is not None:
                member = conjugate(self._frame, member).unsigned()
            yield member

    def to_dict(self) -> dict:
        return {
            "factors": [f.to_dict() for f in self.factors],
            "frame": None if self.frame_gates is None else [g.to_dict() for g in self.frame_gates],
        }

    @staticmethod
    def from_dict(n: int, d: dict) -> "PauliEnsemble":
        frame = d.get("frame")
        return PauliEnsemble(
            n,
            tuple(factor_from_dict(fd) for fd in d["factors"]),
            None if frame is None else tuple(GateSpec.from_dict(g) for g in frame),
        )


def point_ensemble(p: PauliOp) -> PauliEnsemble:
    """The one-element ensemble {p} (p unsigned, covering all qubits)."""
    return PauliEnsemble(p.n, (PointFactor(tuple(range(p.n)), p),))


def ensemble_mean_chi(e: PauliEnsemble, p: PauliOp) -> float:
    """E over members E of χ(E, p), where χ = +1 if they commute, else −1."""
    return float(e.mean_chi_exact(p))


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PauliChannel:
    """Probabilistic Pauli channel: identity with the leftover probability,
    otherwise a uniform member of one of the atom ensembles."""

    n: int
    atoms: tuple[tuple[float, PauliEnsemble], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple((float(p), e) for p, e in self.atoms))
        total = 0.0
        for prob, ensemble in self.atoms:
            if not 0.0 < prob <= 1.0:
                raise ValueError(f"atom probability {prob} outside (0, 1]")
            if ensemble.n != self.n:
                raise ValueError("atom ensemble dimension mismatch")
            if ensemble.contains_identity:
                raise ValueError("atom ensembles must not contain the identity Pauli")
            total += prob
        if total > 1.0 + _PROB_TOL:
            raise ValueError(f"atom probabilities sum to {total} > 1")

    @property
    def p_err(self) -> float:
        return min(1.0, sum(p for p, _ in self.atoms))

    @property
    def identity_prob(self) -> float:
        return max(0.0, 1.0 - sum(p for p, _ in self.atoms))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "identity_prob": self.identity_prob,
            "atoms": [{"prob": p, "ensemble": e.to_dict()} for p, e in self.atoms],
        }

    @staticmethod
    def from_dict(d: dict) -> "PauliChannel":
        n = d["n"]
        return PauliChannel(
            n, tuple((a["prob"], PauliEnsemble.from_dict(n, a["ensemble"])) for a in d["atoms"])
        )


def make_single_qubit_pauli_noise(n: int, target_qubit: int, px: float, py: float, pz: float) -> PauliChannel:
    """X/Y/Z noise on one qubit of an n-qubit register (zero rates omitted)."""
    if min(px, py, pz) < 0 or px + py + pz > 1 + _PROB_TOL:
        raise ValueError("rates must be nonnegative and sum to at most 1")
    if not 0 <= target_qubit < n:
        raise ValueError("target qubit out of range")
    from .paulis import single

    atoms = []
    for letter, rate in (("X", px), ("Y", py), ("Z", pz)):
        if rate > 0:
            atoms.append((rate, point_ensemble(single(n, target_qubit, letter))))
    return PauliChannel(n, tuple(atoms))


def make_white_noise(n: int, p_err: float) -> PauliChannel:
    """Uniform noise over all nonidentity n-qubit Paulis with total weight p_err."""
    if not 0 <= p_err <= 1:
        raise ValueError("p_err must lie in [0, 1]")
    if p_err == 0:
        return PauliChannel(n, ())
    ensemble = PauliEnsemble(n, (FullGroupMinusIdentityFactor(tuple(range(n))),))
    return PauliChannel(n, ((p_err, ensemble),))


def pauli_fidelity(ch: PauliChannel, p: PauliOp) -> float:
    """tr[N(P) P] / 2^n: the eigenvalue of the channel on the Pauli P."""
    if p.n != ch.n:
        raise ValueError("dimension mismatch")
    acc = 0.0
    for prob, ensemble in ch.atoms:
        acc += prob * float(ensemble.mean_chi_exact(p))
    return ch.identity_prob + acc


# ---------------------------------------------------------------------------
# disjointness handling for distance/unitarity closed forms
# ---------------------------------------------------------------------------


def _registers_aligned(a: PauliEnsemble, b: PauliEnsemble) -> bool:
    return [f.register for f in a.factors] == [f.register for f in b.factors]


def _factor_intersection_empty(fa: Factor, fb: Factor) -> bool:
    """Whether two same-register factors share no member (exact, closed form)."""
    if isinstance(fa, PointFactor):
        return not fb.contains_local(fa.pauli)
    if isinstance(fb, PointFactor):
        return not fa.contains_local(fb.pauli)
    pairs = {type(fa), type(fb)}
    if pairs == {DiagonalIZFactor, XYSetFactor}:
        return True
    if pairs == {FullGroupMinusIdentityFactor, WeightAtMostFactor}:
        wam = fa if isinstance(fa, WeightAtMostFactor) else fb
        return wam.cardinality == 1  # only the identity has weight ≤ 0
    # every other non-point combination shares at least one member
    return False


def _ensembles_disjoint(a: PauliEnsemble, b: PauliEnsemble) -> bool | None:
    """True/False when decidable in closed form or by small enumeration; None otherwise."""
    if a.frame_gates == b.frame_gates and _registers_aligned(a, b):
        return any(_factor_intersection_empty(fa, fb) for fa, fb in zip(a.factors, b.factors))
    small, big = (a, b) if a.cardinality <= b.cardinality else (b, a)
    if small.cardinality <= _ENUM_CAP:
        return not any(big.contains(m) for m in small.members())
    return None


def _disjoint_pieces(ch: PauliChannel) -> list[tuple[int, float]]:
    """(cardinality, probability) pieces with pairwise-disjoint supports.

    Atoms with the same ensemble merge by adding probabilities.  Distinct
    atoms proven disjoint stay closed-form; overlapping (or undecidable)
    clusters are expanded member-by-member and re-aggregated, which requires
    them to be enumerable.
    """
    combined: dict[PauliEnsemble, float] = {}
    for prob, ensemble in ch.atoms:
        combined[ensemble] = combined.get(ensemble, 0.0) + prob
    atoms = [(prob, ensemble) for ensemble, prob in combined.items()]
    k = len(atoms)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            disjoint = _ensembles_disjoint(atoms[i][1], atoms[j][1])
            if disjoint is not True:
                parent[find(i)] = find(j)
    clusters: dict[int, list[int]] = {}
    for i in range(k):
        clusters.setdefault(find(i), []).append(i)

    pieces: list[tuple[int, float]] = []
    for members in clusters.values():
        if len(members) == 1:
            prob, ensemble = atoms[members[0]]
            pieces.append((ensemble.cardinality, prob))
            continue
        masses: dict[tuple[int, int], float] = {}
        for i in members:
            prob, ensemble = atoms[i]
            if ensemble.cardinality > _ENUM_CAP:
                raise ValueError(
                    "overlapping atoms are too large to merge exactly; "
                    "restructure the channel into disjoint ensembles"
                )
            share = prob / ensemble.cardinality
            for m in ensemble.members():
                masses[(m.x, m.z)] = masses.get((m.x, m.z), 0.0) + share
        pieces.extend((1, mass) for mass in masses.values())
    return pieces


def distance_v(ch: PauliChannel) -> float:
    """2-norm distance of the normalized error distribution from white noise."""
    if ch.p_err <= 0:
        raise ValueError("distance is undefined for a noiseless channel")
    big_n = 4**ch.n
    uniform = 1.0 / (big_n - 1)
    total = 0.0
    covered = 0
    for card, prob in _disjoint_pieces(ch):
        total += card * (prob / ch.p_err / card - uniform) ** 2
        covered += card
    total += (big_n - 1 - covered) * uniform**2
    return math.sqrt(total)


def diamond_distance_normalized(ch: PauliChannel) -> float:
    """1-norm analogue of distance_v (diamond-norm distance scaled by p_err)."""
    if ch.p_err <= 0:
        raise ValueError("distance is undefined for a noiseless channel")
    big_n = 4**ch.n
    uniform = 1.0 / (big_n - 1)
    total = 0.0
    covered = 0
    for card, prob in _disjoint_pieces(ch):
        total += card * abs(prob / ch.p_err / card - uniform)
        covered += card
    total += (big_n - 1 - covered) * uniform
    return total


def unitarity(ch: PauliChannel) -> float:
    """Expected output purity parameter u of the Pauli channel."""
    g = 4**ch.n / (4**ch.n - 1)
    p = sum(prob for prob, _ in ch.atoms)
    sum_sq = sum(prob**2 / card for card, prob in _disjoint_pieces(ch)) if ch.atoms else 0.0
    return 1 - 2 * g * p + g * (p**2 + sum_sq)


def avg_noise_strength(ch: PauliChannel) -> float:
    """The parameter s = 1 − p_err·4^n/(4^n−1) (uniform Pauli-fidelity mean)."""
    g = 4**ch.n / (4**ch.n - 1)
    return 1 - g * sum(prob for prob, _ in ch.atoms)


def sample_error(ch: PauliChannel, rng: np.random.Generator) -> PauliOp | None:
    """Draw one error: None for the identity branch, else an ensemble member."""
    r = float(rng.random())
    acc = 0.0
    for prob, ensemble in ch.atoms:
        acc += prob
        if r < acc:
            return ensemble.sample(rng)
    return None


def expand(ch: PauliChannel, max_qubits: int = 6) -> dict[PauliOp, float]:
    """Explicit Pauli→probability map; refuses beyond max_qubits."""
    if ch.n > max_qubits:
        raise ValueError(f"refusing to expand a {ch.n}-qubit channel (cap {max_qubits})")
    out: dict[PauliOp, float] = {}
    ident = identity(ch.n)
    if ch.identity_prob > 0:
        out[ident] = ch.identity_prob
    for prob, ensemble in ch.atoms:
        share = prob / ensemble.cardinality
        for m in ensemble.members():
            out[m] = out.get(m, 0.0) + share
    return out
