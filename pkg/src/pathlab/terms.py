"""Symbolic message algebra with an XOR theory and Dolev-Yao derivability.

Terms are immutable and hashable. ``xor`` keeps them in canonical form:
XOR sets are flat, duplicate-free and never contain ``ZERO``; a singleton
collapses to its element and the empty set is ``ZERO``. With canonical
forms structural equality coincides with equality modulo the theory.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

WIDTH = 6


class Term:
    __slots__ = ()

    @cached_property
    def text(self) -> str:
        return self._render()

    def _render(self) -> str:  # pragma: no cover
        raise NotImplementedError

    def __str__(self) -> str:
        return self.text

    def __lt__(self, other: "Term") -> bool:
        return self.text < other.text


@dataclass(frozen=True, eq=False)
class _Zero(Term):
    def _render(self) -> str:
        return "0"

    def __eq__(self, other):
        return isinstance(other, _Zero)

    def __hash__(self):
        return 0


ZERO = _Zero()


def _cached_hash(obj, parts) -> int:
    h = obj.__dict__.get("_h")
    if h is None:
        h = hash(parts)
        obj.__dict__["_h"] = h
    return h


@dataclass(frozen=True, eq=True)
class Key(Term):
    as_id: str

    def _render(self) -> str:
        return f"key({self.as_id})"

    def __hash__(self):
        return _cached_hash(self, ("key", self.as_id))


@dataclass(frozen=True, eq=True)
class Nonce(Term):
    n: int

    def _render(self) -> str:
        return f"n{self.n}"

    def __hash__(self):
        return _cached_hash(self, ("n", self.n))


@dataclass(frozen=True, eq=True)
class IfLit(Term):
    ifid: int | None

    def _render(self) -> str:
        return "if(_)" if self.ifid is None else f"if({self.ifid})"

    def __hash__(self):
        return _cached_hash(self, ("if", self.ifid))


@dataclass(frozen=True, eq=True)
class AsLit(Term):
    as_id: str

    def _render(self) -> str:
        return f"as({self.as_id})"

    def __hash__(self):
        return _cached_hash(self, ("as", self.as_id))


@dataclass(frozen=True, eq=False)
class Mac(Term):
    key: Term
    body: tuple

    def _render(self) -> str:
        return "mac(" + ",".join([self.key.text] + [b.text for b in self.body]) + ")"

    def __eq__(self, other):
        if self is other:
            return True
        return (
            isinstance(other, Mac)
            and hash(self) == hash(other)
            and self.key == other.key
            and self.body == other.body
        )

    def __hash__(self):
        return _cached_hash(self, ("mac", self.key, self.body))


@dataclass(frozen=True, eq=False)
class Tup(Term):
    items: tuple

    def _render(self) -> str:
        return "tup(" + ",".join(i.text for i in self.items) + ")"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Tup) and hash(self) == hash(other) and self.items == other.items

    def __hash__(self):
        return _cached_hash(self, ("tup", self.items))


@dataclass(frozen=True, eq=False)
class Xor(Term):
    """An XOR of two or more distinct non-XOR, non-zero terms.

    Build these through :func:`xor`; direct construction is only meant for
    raw (not yet normalized) trees.
    """

    elems: frozenset

    def _render(self) -> str:
        return "xor(" + ",".join(sorted(e.text for e in self.elems)) + ")"

    def __eq__(self, other):
        if self is other:
            return True
        return isinstance(other, Xor) and hash(self) == hash(other) and self.elems == other.elems

    def __hash__(self):
        return _cached_hash(self, ("xor", self.elems))


def _summands(t: Term) -> frozenset:
    if isinstance(t, _Zero):
        return frozenset()
    if isinstance(t, Xor):
        return t.elems
    return frozenset((t,))


def _from_summands(s: frozenset) -> Term:
    if not s:
        return ZERO
    if len(s) == 1:
        return next(iter(s))
    return Xor(s)


def xor(a: Term, b: Term) -> Term:
    return _from_summands(_summands(a) ^ _summands(b))


def xor_all(terms: Iterable[Term]) -> Term:
    acc: frozenset = frozenset()
    for t in terms:
        acc = acc ^ _summands(t)
    return _from_summands(acc)


def mac(key: Term, body: Iterable[Term]) -> Mac:
    return Mac(key, tuple(body))


def normalize(t: Term) -> Term:
    """Canonicalize an arbitrary raw term tree."""
    if isinstance(t, Mac):
        return Mac(normalize(t.key), tuple(normalize(b) for b in t.body))
    if isinstance(t, Tup):
        return Tup(tuple(normalize(i) for i in t.items))
    if isinstance(t, Xor):
        return xor_all(normalize(e) for e in t.elems)
    return t


def is_canonical(t: Term) -> bool:
    if isinstance(t, Mac):
        return is_canonical(t.key) and all(is_canonical(b) for b in t.body)
    if isinstance(t, Tup):
        return all(is_canonical(i) for i in t.items)
    if isinstance(t, Xor):
        return len(t.elems) >= 2 and all(
            not isinstance(e, (Xor, _Zero)) and is_canonical(e) for e in t.elems
        )
    return True


def subterms(t: Term) -> set:
    out: set = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if x in out:
            continue
        out.add(x)
        if isinstance(x, Mac):
            stack.append(x.key)
            stack.extend(x.body)
        elif isinstance(x, Tup):
            stack.extend(x.items)
        elif isinstance(x, Xor):
            stack.extend(x.elems)
    return out


def is_public(t: Term) -> bool:
    """Interface numbers, AS names and the empty XOR are known to everyone."""
    return isinstance(t, (IfLit, AsLit, _Zero))


# -- attacker knowledge ------------------------------------------------------


@dataclass(frozen=True)
class Knowledge:
    atoms: frozenset = frozenset()

    def __contains__(self, t: Term) -> bool:
        return t in self.atoms

    def __len__(self) -> int:
        return len(self.atoms)


def learn(k: Knowledge, t: Term) -> Knowledge:
    """Add ``t``, splitting tuples. MACs are opaque; XORs are kept whole."""
    new = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Tup):
            stack.extend(x.items)
        elif not isinstance(x, _Zero) and x not in k.atoms:
            new.add(x)
    if not new:
        return k
    return Knowledge(k.atoms | new)


class XorSpan:
    """Row-echelon basis of a GF(2) vector space, vectors as Python ints."""

    def __init__(self) -> None:
        self.rows: dict[int, int] = {}

    def reduce(self, v: int) -> int:
        rows = self.rows
        while v:
            r = rows.get(v.bit_length() - 1)
            if r is None:
                return v
            v ^= r
        return 0

    def add(self, v: int) -> bool:
        v = self.reduce(v)
        if v:
            self.rows[v.bit_length() - 1] = v
            return True
        return False

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0


def derivable(k: Knowledge, t: Term) -> bool:
    """Decide ``t`` in DY(k) for the free constructors plus XOR.

    The atom universe is every non-XOR subterm of ``t`` and of the XOR
    members of ``k``. A universe atom becomes known when it is in ``k``,
    public, buildable by the MAC/tuple rules from known parts, or in the
    GF(2) span of what is known; this is iterated to a fixpoint.
    """
    if is_public(t) or t in k.atoms:
        return True
    universe: set = set()
    xor_atoms = [a for a in k.atoms if isinstance(a, Xor)]
    roots = [t] + xor_atoms
    for r in roots:
        universe |= subterms(r)
    universe = {u for u in universe if not isinstance(u, (Xor, _Zero))}

    index: dict = {}

    def bit(u: Term) -> int:
        b = index.get(u)
        if b is None:
            b = index[u] = len(index)
        return 1 << b

    def vec(x: Term) -> int:
        v = 0
        for e in _summands(x):
            v ^= bit(e)
        return v

    span = XorSpan()
    known: set = set()
    for a in xor_atoms:
        span.add(vec(a))
    for u in universe:
        if u in k.atoms or is_public(u):
            known.add(u)
            span.add(bit(u))

    def ok(x: Term) -> bool:
        if is_public(x) or x in known:
            return True
        if isinstance(x, Xor):
            return span.contains(vec(x))
        return False

    def mark(u: Term) -> None:
        # a tuple recovered through XOR still splits into its parts
        known.add(u)
        span.add(bit(u))
        if isinstance(u, Tup):
            for i in u.items:
                if isinstance(i, Xor):
                    span.add(vec(i))
                elif i not in known and not isinstance(i, _Zero):
                    mark(i)

    pending = sorted(universe - known)
    changed = True
    while changed and pending:
        changed = False
        rest = []
        for u in pending:
            if isinstance(u, Mac):
                built = ok(u.key) and all(ok(b) for b in u.body)
            elif isinstance(u, Tup):
                built = all(ok(i) for i in u.items)
            else:
                built = False
            if u not in known and (built or span.contains(bit(u))):
                mark(u)
                changed = True
            elif u not in known:
                rest.append(u)
        pending = rest
    return ok(t)


# -- concrete backend --------------------------------------------------------


class MissingKeyMaterial(KeyError):
    pass


def default_keymat(as_ids: Iterable[str], seed: int = 0) -> dict[str, bytes]:
    return {a: hashlib.sha256(f"pathlab-key:{seed}:{a}".encode()).digest()[:16] for a in as_ids}


def _h(tag: bytes, data: bytes) -> bytes:
    return hashlib.blake2b(tag + b"\x00" + data, digest_size=WIDTH).digest()


def mac_bytes(key: bytes, data: bytes) -> bytes:
    return hmac.new(key, data, hashlib.sha256).digest()[:WIDTH]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


class Concretizer:
    """Maps terms to 6-byte strings, homomorphically over XOR."""

    def __init__(self, keymat: Mapping[str, bytes]):
        self.keymat = keymat
        self._memo: dict = {}

    def key(self, as_id: str) -> bytes:
        try:
            return self.keymat[as_id]
        except KeyError:
            raise MissingKeyMaterial(as_id) from None

    def __call__(self, t: Term) -> bytes:
        r = self._memo.get(t)
        if r is None:
            r = self._memo[t] = self._compute(t)
        return r

    def _compute(self, t: Term) -> bytes:
        if isinstance(t, _Zero):
            return bytes(WIDTH)
        if isinstance(t, Xor):
            acc = bytes(WIDTH)
            for e in t.elems:
                acc = xor_bytes(acc, self(e))
            return acc
        if isinstance(t, Mac):
            data = b"".join(self(b) for b in t.body)
            if isinstance(t.key, Key):
                return mac_bytes(self.key(t.key.as_id), data)
            return mac_bytes(b"derived:" + self(t.key), data)
        if isinstance(t, Tup):
            return _h(b"tup", b"".join(self(i) for i in t.items))
        if isinstance(t, Key):
            return _h(b"key", self.key(t.as_id))
        return _h(b"atom", t.text.encode())


def concretize(t: Term, keymat: Mapping[str, bytes]) -> bytes:
    return Concretizer(keymat)(t)
