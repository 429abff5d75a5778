"""Admissible polynomials in the formal boundary variables and their invariants.

The formal variables are L~_{ab} (symmetric), g~_{ab/cd} (symmetric inside
each pair, the two pairs not interchangeable) and an output factor
e^u o e^v. A monomial is *admissible* when each index 1..m appears exactly
twice; then ord_L + ord_g = m - 1 where ord_g counts two per g~ factor.

Invariance under the identity component of the orthogonal group is the
kernel of the infinitesimal generators X_ab, computed with exact rationals.
Sign changes of a single frame vector act trivially on admissible monomials
(every index has even degree), so the invariant space lies in the span of
orbit sums under the index permutations that preserve the signature. The
default kernel computation uses that reduction; ``invariant_subspace(...,
method="full")`` stacks every X_ab on the raw monomial space instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Mapping

from . import rational
from .errors import DomainError, PreconditionError
from .tensor_core import Signature, as_signature, permutation_sign

Pair = tuple[int, int]
RawMonomial = tuple[tuple[Pair, ...], tuple[tuple[Pair, Pair], ...], Pair]


def _pair(a: int, b: int) -> Pair:
    return (a, b) if a <= b else (b, a)


def _canon(flat: list[int] | tuple[int, ...], k: int) -> RawMonomial:
    """Canonical monomial from a flat index list: k L-pairs, then g-quads, then the output pair."""
    end = 2 * k
    lf = tuple(sorted([(x, y) if x <= y else (y, x) for x, y in zip(flat[0:end:2], flat[1:end:2])]))
    stop = len(flat) - 2
    gf = tuple(
        sorted(
            [
                ((a, b) if a <= b else (b, a), (c, d) if c <= d else (d, c))
                for a, b, c, d in zip(flat[end:stop:4], flat[end + 1 : stop : 4], flat[end + 2 : stop : 4], flat[end + 3 : stop : 4])
            ]
        )
    )
    u, v = flat[-2], flat[-1]
    return (lf, gf, (u, v) if u <= v else (v, u))


def _flatten(raw: RawMonomial) -> list[int]:
    lf, gf, out = raw
    flat: list[int] = []
    for a, b in lf:
        flat += (a, b)
    for (a, b), (c, d) in gf:
        flat += (a, b, c, d)
    flat += out
    return flat


def _sort_key(raw: RawMonomial):
    return (len(raw[0]), raw[0], raw[1], raw[2])


@dataclass(frozen=True)
class FormalMonomial:
    """A monomial L~...L~ g~...g~ e^u o e^v, stored canonically (indices 1-based)."""

    dim: int
    l_factors: tuple[Pair, ...] = ()
    g_factors: tuple[tuple[Pair, Pair], ...] = ()
    output: Pair = (1, 1)

    def __post_init__(self):
        flat = _flatten((tuple(self.l_factors), tuple(self.g_factors), tuple(self.output)))
        if any(not 1 <= i <= self.dim for i in flat):
            raise DomainError(f"monomial index out of range 1..{self.dim}")
        raw = _canon(flat, len(self.l_factors))
        object.__setattr__(self, "l_factors", raw[0])
        object.__setattr__(self, "g_factors", raw[1])
        object.__setattr__(self, "output", raw[2])

    @classmethod
    def _from_raw(cls, dim: int, raw: RawMonomial) -> "FormalMonomial":
        obj = object.__new__(cls)
        object.__setattr__(obj, "dim", dim)
        object.__setattr__(obj, "l_factors", raw[0])
        object.__setattr__(obj, "g_factors", raw[1])
        object.__setattr__(obj, "output", raw[2])
        return obj

    @property
    def raw(self) -> RawMonomial:
        return (self.l_factors, self.g_factors, self.output)

    @property
    def ord_l(self) -> int:
        return len(self.l_factors)

    @property
    def ord_g(self) -> int:
        return 2 * len(self.g_factors)

    def degree(self, w: int) -> int:
        return _flatten(self.raw).count(w)

    def is_admissible(self) -> bool:
        flat = _flatten(self.raw)
        return all(flat.count(w) == 2 for w in range(1, self.dim + 1))

    def touches_itself(self, a: int) -> bool:
        if (a, a) in self.l_factors or self.output == (a, a):
            return True
        return any(p == (a, a) or q == (a, a) for p, q in self.g_factors)

    def sort_key(self):
        return _sort_key(self.raw)

    def __lt__(self, other: "FormalMonomial"):
        return self.sort_key() < other.sort_key()

    def __str__(self):
        parts = [f"L{a}{b}" for a, b in self.l_factors]
        parts += [f"g{a}{b}/{c}{d}" for (a, b), (c, d) in self.g_factors]
        parts.append(f"e{self.output[0]}.e{self.output[1]}")
        return "*".join(parts)


@dataclass(frozen=True)
class FormalPolynomial:
    """Rational linear combination of canonical monomials; zero coefficients are never stored."""

    dim: int
    terms: Mapping[FormalMonomial, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for mono, c in self.terms.items():
            if mono.dim != self.dim:
                raise DomainError("monomial dimension differs from polynomial dimension")
            c = Fraction(c)
            if c:
                clean[mono] = clean.get(mono, 0) + c
        clean = {m: c for m, c in sorted(clean.items(), key=lambda kv: kv[0].sort_key()) if c}
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_raw(cls, dim: int, terms: Mapping[RawMonomial, Fraction]) -> "FormalPolynomial":
        return cls(dim, {FormalMonomial._from_raw(dim, r): c for r, c in terms.items() if c})

    @classmethod
    def zero(cls, dim: int) -> "FormalPolynomial":
        return cls(dim, {})

    def raw_terms(self) -> dict[RawMonomial, Fraction]:
        return {m.raw: c for m, c in self.terms.items()}

    def coefficient(self, mono: FormalMonomial) -> Fraction:
        return self.terms.get(mono, Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def component(self, k: int) -> "FormalPolynomial":
        """The homogeneous part P_k of L-order k."""
        return FormalPolynomial(self.dim, {m: c for m, c in self.terms.items() if m.ord_l == k})

    def __add__(self, other: "FormalPolynomial") -> "FormalPolynomial":
        merged = dict(self.terms)
        for m, c in other.terms.items():
            merged[m] = merged.get(m, 0) + c
        return FormalPolynomial(self.dim, merged)

    def __neg__(self):
        return FormalPolynomial(self.dim, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "FormalPolynomial":
        f = Fraction(factor)
        return FormalPolynomial(self.dim, {m: c * f for m, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, FormalPolynomial):
            return NotImplemented
        return self.dim == other.dim and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.dim, tuple(self.terms.items())))

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        return " ".join(f"{'+' if c > 0 else '-'} {abs(c)}*{m}" for m, c in self.terms.items()).lstrip("+ ")


# --------------------------------------------------------------------------
# Enumeration
# --------------------------------------------------------------------------


def _l_orders(m: int) -> list[int]:
    return [k for k in range(m) if (k - (m - 1)) % 2 == 0]


def _pair_sequences(counts: list[int], n: int, start: Pair, m: int):
    """Non-decreasing sequences of n index pairs drawn from the remaining degrees."""
    if n == 0:
        yield ()
        return
    for a in range(1, m + 1):
        if counts[a] == 0 or (a, m) < start:
            continue
        for b in range(a, m + 1):
            if (a, b) < start:
                continue
            if counts[b] < (2 if a == b else 1):
                continue
            counts[a] -= 1
            counts[b] -= 1
            for rest in _pair_sequences(counts, n - 1, (a, b), m):
                yield ((a, b),) + rest
            counts[a] += 1
            counts[b] += 1


def _quad_sequences(counts: list[int], n: int, start, m: int):
    """Non-decreasing sequences of n g-factors ((a,b),(c,d))."""
    if n == 0:
        yield ()
        return
    # _pair_sequences holds the degrees of the pair it yields while suspended
    for (p,) in _pair_sequences(counts, 1, (0, 0), m):
        if (p, (m, m)) < start:
            continue
        for (q,) in _pair_sequences(counts, 1, (0, 0), m):
            if (p, q) < start:
                continue
            for rest in _quad_sequences(counts, n - 1, (p, q), m):
                yield ((p, q),) + rest


@lru_cache(maxsize=None)
def _admissible_raw(m: int, k: int) -> tuple[RawMonomial, ...]:
    ell = (m - 1 - k) // 2
    out: list[RawMonomial] = []
    counts = [0] + [2] * m
    for u in range(1, m + 1):
        for v in range(u, m + 1):
            counts[u] -= 1
            counts[v] -= 1
            if counts[u] >= 0 and counts[v] >= 0:
                for lf in _pair_sequences(counts, k, (0, 0), m):
                    for gf in _quad_sequences(counts, ell, ((0, 0), (0, 0)), m):
                        out.append((lf, gf, (u, v)))
            counts[u] += 1
            counts[v] += 1
    out.sort(key=_sort_key)
    return tuple(out)


def enumerate_admissible(dim: int, signs=None, k: int | None = None) -> list[FormalMonomial]:
    """All admissible monomials in dimension ``dim`` (optionally of L-order k), deterministic order.

    The signature does not affect which monomials are admissible; it is
    accepted for symmetry with the other operations and validated.
    """
    if dim < 1:
        raise DomainError("dimension must be at least 1")
    if signs is not None and as_signature(signs).dim != dim:
        raise DomainError("signature length does not match dimension")
    orders = _l_orders(dim) if k is None else ([k] if k in _l_orders(dim) else [])
    return [FormalMonomial._from_raw(dim, r) for kk in orders for r in _admissible_raw(dim, kk)]


def enumerate_admissible_bruteforce(dim: int) -> list[FormalMonomial]:
    """Independent generator: place the index multiset {1,1,...,m,m} in every slot order, canonicalize, dedupe."""
    seen: set[RawMonomial] = set()
    base = [i for i in range(1, dim + 1) for _ in range(2)]
    for k in _l_orders(dim):
        for arrangement in set(permutations(base)):
            seen.add(_canon(arrangement, k))
    return [FormalMonomial._from_raw(dim, r) for r in sorted(seen, key=_sort_key)]


# --------------------------------------------------------------------------
# Group actions
# --------------------------------------------------------------------------


def _is_boost(sig: Signature, a: int, b: int) -> bool:
    return sig.signs[a - 1] != sig.signs[b - 1]


def _check_plane(sig: Signature, a: int, b: int):
    if a == b:
        raise DomainError("the generator X_ab needs distinct indices")
    for i in (a, b):
        if not 1 <= i <= sig.dim:
            raise DomainError(f"index {i} out of range 1..{sig.dim}")


def _act_raw(raw: RawMonomial, a: int, b: int, b_to_a: int) -> list[tuple[RawMonomial, int]]:
    flat = _flatten(raw)
    k = len(raw[0])
    out = []
    for pos, idx in enumerate(flat):
        if idx == a:
            new = list(flat)
            new[pos] = b
            out.append((_canon(new, k), 1))
        elif idx == b:
            new = list(flat)
            new[pos] = a
            out.append((_canon(new, k), b_to_a))
    return out


def infinitesimal_action(a: int, b: int, signs, poly: FormalPolynomial) -> FormalPolynomial:
    """X_ab P: the theta-derivative at 0 of T_ab(theta) P.

    Each occurrence of a becomes b; each occurrence of b becomes -a for a
    rotation plane (equal signs) or +a for a boost plane.
    """
    sig = as_signature(signs)
    _check_plane(sig, a, b)
    if sig.dim != poly.dim:
        raise DomainError("signature length does not match polynomial dimension")
    b_to_a = 1 if _is_boost(sig, a, b) else -1
    acc: dict[RawMonomial, Fraction] = {}
    for mono, c in poly.terms.items():
        for image, w in _act_raw(mono.raw, a, b, b_to_a):
            acc[image] = acc.get(image, 0) + c * w
    return FormalPolynomial.from_raw(poly.dim, acc)


def finite_action(a: int, b: int, signs, theta: float, poly: FormalPolynomial) -> dict[FormalMonomial, float]:
    """T_ab(theta) P with floating point coefficients, by multilinear expansion."""
    sig = as_signature(signs)
    _check_plane(sig, a, b)
    if _is_boost(sig, a, b):
        c, s = math.cosh(theta), math.sinh(theta)
        sub = {a: ((a, c), (b, s)), b: ((a, s), (b, c))}
    else:
        c, s = math.cos(theta), math.sin(theta)
        sub = {a: ((a, c), (b, s)), b: ((a, -s), (b, c))}
    acc: dict[RawMonomial, float] = {}
    for mono, coeff in poly.terms.items():
        flat = _flatten(mono.raw)
        k = mono.ord_l
        partial = [([], float(coeff))]
        for idx in flat:
            options = sub.get(idx, ((idx, 1.0),))
            partial = [(f + [j], w * x) for f, w in partial for j, x in options if x != 0.0]
        for f, w in partial:
            key = _canon(f, k)
            acc[key] = acc.get(key, 0.0) + w
    return {FormalMonomial._from_raw(poly.dim, r): v for r, v in acc.items()}


def reflect(a: int, poly: FormalPolynomial) -> FormalPolynomial:
    """Action of e_a -> -e_a: each monomial picks up (-1)^deg_a."""
    return FormalPolynomial(poly.dim, {m: c * (-1) ** m.degree(a) for m, c in poly.terms.items()})


def relabel(poly: FormalPolynomial, perm: Mapping[int, int]) -> FormalPolynomial:
    """Rename indices by ``perm`` (a dict on 1..m; missing keys are fixed)."""
    acc: dict[RawMonomial, Fraction] = {}
    for mono, c in poly.terms.items():
        key = _canon([perm.get(i, i) for i in _flatten(mono.raw)], mono.ord_l)
        acc[key] = acc.get(key, 0) + c
    return FormalPolynomial.from_raw(poly.dim, acc)


def _action_vanishes(terms: Mapping[RawMonomial, Fraction], a: int, b: int, b_to_a: int) -> bool:
    acc: dict[RawMonomial, Fraction] = {}
    for raw, c in terms.items():
        for image, w in _act_raw(raw, a, b, b_to_a):
            acc[image] = acc.get(image, 0) + c * w
    return not any(acc.values())


def _permutation_invariant(terms: Mapping[RawMonomial, Fraction], sig: Signature) -> bool:
    """Invariance under sign-preserving relabelings, tested on adjacent transpositions in each block."""
    for block in ([i + 1 for i, s in enumerate(sig.signs) if s < 0], [i + 1 for i, s in enumerate(sig.signs) if s > 0]):
        for x, y in zip(block, block[1:]):
            swapped: dict[RawMonomial, Fraction] = {}
            for raw, c in terms.items():
                flat = [y if i == x else x if i == y else i for i in _flatten(raw)]
                key = _canon(flat, len(raw[0]))
                swapped[key] = swapped.get(key, 0) + c
            if {r: c for r, c in swapped.items() if c} != {r: c for r, c in terms.items() if c}:
                return False
    return True


def is_invariant(poly: FormalPolynomial, signs) -> bool:
    """True when X_ab P = 0 for every plane a < b.

    If P is invariant under the sign-preserving relabelings, the generators
    of one plane of each type are conjugate to all others, so only those are
    evaluated.
    """
    sig = as_signature(signs)
    if sig.dim != poly.dim:
        raise DomainError("signature length does not match polynomial dimension")
    terms = poly.raw_terms()
    if _permutation_invariant(terms, sig):
        planes = _representative_planes(sig)
    else:
        planes = list(combinations(range(1, poly.dim + 1), 2))
    return all(_action_vanishes(terms, a, b, 1 if _is_boost(sig, a, b) else -1) for a, b in planes)


def is_invariant_all_planes(poly: FormalPolynomial, signs) -> bool:
    """Literal check of X_ab P = 0 over all planes a < b (slow oracle for ``is_invariant``)."""
    sig = as_signature(signs)
    terms = poly.raw_terms()
    return all(
        _action_vanishes(terms, a, b, 1 if _is_boost(sig, a, b) else -1)
        for a, b in combinations(range(1, poly.dim + 1), 2)
    )


# --------------------------------------------------------------------------
# Invariant subspace
# --------------------------------------------------------------------------


def _block_permutations(sig: Signature):
    """Index relabelings (as tuples on 0..m) that preserve every frame sign."""
    neg = [i + 1 for i, s in enumerate(sig.signs) if s < 0]
    pos = [i + 1 for i, s in enumerate(sig.signs) if s > 0]
    for pn in permutations(neg):
        for pp in permutations(pos):
            table = [0] * (sig.dim + 1)
            for src, dst in zip(neg, pn):
                table[src] = dst
            for src, dst in zip(pos, pp):
                table[src] = dst
            yield tuple(table)


def _representative_planes(sig: Signature) -> list[Pair]:
    """One plane of each type (definite-negative, definite-positive, mixed)."""
    neg = [i + 1 for i, s in enumerate(sig.signs) if s < 0]
    pos = [i + 1 for i, s in enumerate(sig.signs) if s > 0]
    planes = []
    if len(neg) >= 2:
        planes.append((neg[0], neg[1]))
    if len(pos) >= 2:
        planes.append((pos[0], pos[1]))
    if neg and pos:
        planes.append(tuple(sorted((neg[0], pos[0]))))
    return planes


def _kernel_full(m: int, k: int, sig: Signature) -> list[dict[RawMonomial, Fraction]]:
    cols = _admissible_raw(m, k)
    col_of = {r: i for i, r in enumerate(cols)}
    rows: dict[tuple, dict[int, Fraction]] = {}
    for a, b in combinations(range(1, m + 1), 2):
        b_to_a = 1 if _is_boost(sig, a, b) else -1
        for r in cols:
            for image, w in _act_raw(r, a, b, b_to_a):
                row = rows.setdefault((a, b, image), {})
                row[col_of[r]] = row.get(col_of[r], 0) + w
    vectors = rational.nullspace(rows.values(), len(cols))
    return [{cols[c]: v for c, v in vec.items()} for vec in vectors]


def _kernel_orbits(m: int, k: int, sig: Signature) -> list[dict[RawMonomial, Fraction]]:
    cols = _admissible_raw(m, k)
    perms = list(_block_permutations(sig))
    orbit_of: dict[RawMonomial, int] = {}
    orbits: list[list[RawMonomial]] = []
    for r in cols:
        if r in orbit_of:
            continue
        flat = _flatten(r)
        members = {_canon([p[i] for i in flat], k) for p in perms}
        for mono in members:
            orbit_of[mono] = len(orbits)
        orbits.append(sorted(members, key=_sort_key))
    rows: dict[tuple, dict[int, Fraction]] = {}
    for a, b in _representative_planes(sig):
        b_to_a = 1 if _is_boost(sig, a, b) else -1
        for j, members in enumerate(orbits):
            for r in members:
                for image, w in _act_raw(r, a, b, b_to_a):
                    row = rows.setdefault((a, b, image), {})
                    row[j] = row.get(j, 0) + w
    vectors = rational.nullspace(rows.values(), len(orbits))
    return [{mono: v for j, v in vec.items() for mono in orbits[j]} for vec in vectors]


@lru_cache(maxsize=None)
def _invariant_basis(m: int, signs: tuple[int, ...], method: str) -> tuple[tuple[int, FormalPolynomial], ...]:
    sig = Signature(signs)
    kernel = _kernel_orbits if method == "orbits" else _kernel_full
    out = []
    for k in _l_orders(m):
        for vec in kernel(m, k, sig):
            out.append((k, FormalPolynomial.from_raw(m, vec)))
    return tuple(out)


def invariant_subspace(dim: int, signs=None, method: str = "orbits") -> list[FormalPolynomial]:
    """Exact basis of the invariant admissible polynomials, grouped by increasing L-order.

    ``method="full"`` intersects the kernels of every X_ab on the whole
    admissible space; ``"orbits"`` (default) first restricts to orbit sums
    under sign-preserving index permutations, which gives the same space.
    """
    if dim < 1:
        raise DomainError("dimension must be at least 1")
    sig = Signature.euclidean(dim) if signs is None else as_signature(signs)
    if sig.dim != dim:
        raise DomainError("signature length does not match dimension")
    if method not in ("orbits", "full"):
        raise DomainError(f"unknown kernel method {method!r}")
    return [p for _, p in _invariant_basis(dim, sig.signs, method)]


def q_count(dim: int) -> int:
    """Number of k with 0 <= k <= dim-1 and k = dim-1 mod 2."""
    return len(_l_orders(dim))


def printed_dimension_formula(dim: int) -> int:
    """The closed form 1 + (m-1)/2 (m odd) or 1 + m/2 (m even) as printed; see the dimension table."""
    return 1 + (dim - 1) // 2 if dim % 2 else 1 + dim // 2


@lru_cache(maxsize=None)
def _q_raw(m: int, k: int, signs: tuple[int, ...]) -> tuple[tuple[RawMonomial, int], ...]:
    xi = 1
    for s in signs:
        xi *= s
    acc: dict[RawMonomial, int] = {}
    perms = [(p, permutation_sign(p)) for p in permutations(range(1, m + 1))]
    # Relabeling the upper indices by pi maps the (id, sigma) term to the
    # (pi, pi o sigma) term, so the sum over pi is a sum over relabelings.
    base: dict[RawMonomial, int] = {}
    for sigma, sgn in perms:
        flat = []
        for slot in range(m):
            flat += (slot + 1, sigma[slot])
        key = _canon(flat, k)
        base[key] = base.get(key, 0) + sgn
    for key, w in base.items():
        if not w:
            continue
        flat = _flatten(key)
        for pi, _ in perms:
            image = _canon([pi[i - 1] for i in flat], k)
            acc[image] = acc.get(image, 0) + w * xi
    return tuple(sorted(((r, c) for r, c in acc.items() if c), key=lambda rc: _sort_key(rc[0])))


def q_polynomial(dim: int, k: int, signs=None) -> FormalPolynomial:
    """Q_k: L~^k g~^{(m-1-k)/2} e o e contracted against the generalized delta, expanded exactly."""
    sig = Signature.euclidean(dim) if signs is None else as_signature(signs)
    if sig.dim != dim:
        raise DomainError("signature length does not match dimension")
    if not 0 <= k <= dim - 1 or (dim - 1 - k) % 2:
        raise DomainError(f"Q_k needs 0 <= k <= {dim - 1} and k = {dim - 1} mod 2, got k={k}")
    return FormalPolynomial.from_raw(dim, {r: Fraction(c) for r, c in _q_raw(dim, k, sig.signs)})


def polynomial_rank(polys: Iterable[FormalPolynomial]) -> int:
    """Exact rank of a family of polynomials in monomial coordinates."""
    index: dict[FormalMonomial, int] = {}
    rows = []
    for p in polys:
        rows.append({index.setdefault(m, len(index)): c for m, c in p.terms.items()})
    return rational.rank(rows)


def in_span(poly: FormalPolynomial, basis: Iterable[FormalPolynomial]) -> bool:
    basis = list(basis)
    return polynomial_rank(basis + [poly]) == polynomial_rank(basis)


# --------------------------------------------------------------------------
# Exchange lemma and restriction
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExchangeViolation:
    c: FormalMonomial
    a_monomial: FormalMonomial
    b_monomial: FormalMonomial
    coeff_a: Fraction
    coeff_b: Fraction


@dataclass(frozen=True)
class ExchangeReport:
    a: int
    b: int
    triples_checked: int
    violations: tuple[ExchangeViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def exchange_triples(dim: int, a: int, b: int) -> list[tuple[FormalMonomial, FormalMonomial, FormalMonomial]]:
    """All (C, A, B): deg_a C = 3, deg_b C = 1, a touches itself in C, and A, B admissible.

    A changes one index of the self-touching variable of C from a to b; B
    changes the remaining occurrence of a.
    """
    triples = []
    seen: set[RawMonomial] = set()
    for k in _l_orders(dim):
        for r in _admissible_raw(dim, k):
            flat = _flatten(r)
            for pos, idx in enumerate(flat):
                if idx != b:
                    continue
                cflat = list(flat)
                cflat[pos] = a
                craw = _canon(cflat, k)
                if craw in seen:
                    continue
                seen.add(craw)
                cmono = FormalMonomial._from_raw(dim, craw)
                if not cmono.touches_itself(a):
                    continue
                triples.append((cmono,) + _exchange_pair(craw, a, b, k, dim))
    return triples


def _exchange_pair(craw: RawMonomial, a: int, b: int, k: int, dim: int):
    flat = _flatten(craw)
    # slot boundaries of the variable that holds the self-touching pair
    spans = [(2 * i, 2 * i + 2) for i in range(k)]
    base = 2 * k
    for i in range(len(craw[1])):
        spans += [(base + 4 * i, base + 4 * i + 2), (base + 4 * i + 2, base + 4 * i + 4)]
    spans.append((len(flat) - 2, len(flat)))
    self_span = next(s for s in spans if flat[s[0]] == a and flat[s[0] + 1] == a)
    a_flat = list(flat)
    a_flat[self_span[0]] = b
    other = next(p for p, idx in enumerate(flat) if idx == a and not self_span[0] <= p < self_span[1])
    b_flat = list(flat)
    b_flat[other] = b
    return (
        FormalMonomial._from_raw(dim, _canon(a_flat, k)),
        FormalMonomial._from_raw(dim, _canon(b_flat, k)),
    )


def exchange_check(poly: FormalPolynomial, a: int, b: int, signs=None) -> ExchangeReport:
    """Check that c(A, P) != 0 exactly when c(B, P) != 0 for every exchange triple."""
    sig = Signature.euclidean(poly.dim) if signs is None else as_signature(signs)
    _check_plane(sig, a, b)
    if not is_invariant(poly, sig):
        raise PreconditionError("exchange_check needs an invariant polynomial")
    triples = exchange_triples(poly.dim, a, b)
    bad = []
    for cm, am, bm in triples:
        ca, cb = poly.coefficient(am), poly.coefficient(bm)
        if (ca != 0) != (cb != 0):
            bad.append(ExchangeViolation(cm, am, bm, ca, cb))
    return ExchangeReport(a, b, len(triples), tuple(bad))


def restrict_polynomial(poly: FormalPolynomial) -> FormalPolynomial:
    """Delete every monomial containing the top index; the result lives in dimension m-1."""
    m = poly.dim
    if m < 2:
        raise DomainError("restriction needs dimension at least 2")
    kept = {}
    for mono, c in poly.terms.items():
        if m not in _flatten(mono.raw):
            kept[FormalMonomial._from_raw(m - 1, mono.raw)] = c
    return FormalPolynomial(m - 1, kept)


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DimensionRow:
    dim: int
    signs: tuple[int, ...]
    kernel_dim: int
    q_count: int
    printed_formula: int
    q_in_kernel: bool
    q_rank: int

    @property
    def matches_q_count(self) -> bool:
        return self.kernel_dim == self.q_count and self.q_rank == self.q_count and self.q_in_kernel

    @property
    def printed_formula_flag(self) -> str:
        return "" if self.printed_formula == self.kernel_dim else "DISCREPANCY"


def dimension_row(dim: int, signs=None, method: str = "orbits") -> DimensionRow:
    sig = Signature.euclidean(dim) if signs is None else as_signature(signs)
    basis = invariant_subspace(dim, sig, method=method)
    qs = [q_polynomial(dim, k, sig) for k in _l_orders(dim)]
    return DimensionRow(
        dim=dim,
        signs=sig.signs,
        kernel_dim=len(basis),
        q_count=q_count(dim),
        printed_formula=printed_dimension_formula(dim),
        q_in_kernel=all(is_invariant(q, sig) for q in qs),
        q_rank=polynomial_rank(qs),
    )


def format_dimension_table(rows: Iterable[DimensionRow]) -> str:
    lines = ["m  signs            kernel  Q_count  Q_rank  Q_in_kernel  printed_formula  flag"]
    for r in rows:
        signs = "".join("+" if s > 0 else "-" for s in r.signs)
        lines.append(
            f"{r.dim:<2} {signs:<16} {r.kernel_dim:<7} {r.q_count:<8} {r.q_rank:<7} "
            f"{str(r.q_in_kernel):<12} {r.printed_formula:<16} {r.printed_formula_flag}".rstrip()
        )
    return "\n".join(lines)
