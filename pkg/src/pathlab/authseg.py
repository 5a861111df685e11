"""Authorized segments: nested-MAC hop fields, beaconing output, combination."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .terms import AsLit, IfLit, Key, Nonce, Term, Tup, mac, xor
from .topology import AsId, IfId, LinkType, Topology, link_type, neighbor


class SegmentError(ValueError):
    pass


class CombineError(ValueError):
    pass


class SegKind(enum.IntEnum):
    UP = 1
    CORE = 2
    DOWN = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, s) -> "SegKind":
        if isinstance(s, SegKind):
            return s
        return cls[str(s).upper()]


@dataclass(frozen=True)
class HopField:
    as_id: AsId
    prev: IfId | None
    next: IfId | None
    auth: object
    verify_only: bool = False

    def traversal(self, dir: bool) -> tuple[IfId | None, IfId | None]:
        """(ingress, egress) interfaces when traversed in direction ``dir``."""
        return (self.prev, self.next) if dir else (self.next, self.prev)


@dataclass(frozen=True)
class AuthSegment:
    """A segment as built by the control plane, in construction order.

    ``beta[0]`` is the random initial identifier and ``beta[k]`` the value
    after hop ``k``; an up-segment is a down-segment traversed with
    ``dir=False``.
    """

    kind: SegKind
    hops: tuple
    beta: tuple

    @property
    def ases(self) -> tuple:
        return tuple(h.as_id for h in self.hops)

    def traversal(self, dir: bool = True) -> list[tuple]:
        hops = self.hops if dir else tuple(reversed(self.hops))
        return [(h.as_id, *h.traversal(dir)) for h in hops]

    def beta_before(self, k: int) -> Term:
        return self.beta[k]

    def encode(self) -> Tup:
        return Tup(
            tuple(Tup((AsLit(h.as_id), IfLit(h.prev), IfLit(h.next), h.auth)) for h in self.hops)
            + (self.beta[0],)
        )


def hop_sigma(as_id: AsId, prev, nxt, beta: Term) -> Term:
    return mac(Key(as_id), [IfLit(prev), IfLit(nxt), beta])


def _route_violations(t: Topology, kind: SegKind, route: Sequence[tuple]) -> list[str]:
    out = []
    if not route:
        return ["empty route"]
    if route[0][1] is not None:
        out.append("first hop prev is not empty")
    if route[-1][2] is not None:
        out.append("last hop next is not empty")
    for k, (a, _, _) in enumerate(route):
        if a not in t.ases:
            out.append(f"hop {k}: unknown AS {a}")
            return out
    if kind is SegKind.UP:
        out.append("up-segments are stored as down-segments")
    if kind is SegKind.DOWN and not t.is_core(route[0][0]):
        out.append(f"down-segment rooted at non-core AS {route[0][0]}")
    for k in range(len(route) - 1):
        a, _, nxt = route[k]
        b, prv, _ = route[k + 1]
        if neighbor(t, a, nxt) != (b, prv):
            out.append(f"hop {k}: ({a},{nxt}) not linked to ({b},{prv})")
            continue
        lt = link_type(t, a, nxt)
        want = LinkType.PROV_CUST if kind is SegKind.DOWN else LinkType.CORE
        if lt is not want:
            out.append(f"hop {k}: link ({a},{nxt}) is {lt.value}, {kind.label} needs {want.value}")
    if kind is SegKind.CORE:
        for k, (a, _, _) in enumerate(route):
            if not t.is_core(a):
                out.append(f"hop {k}: core segment through non-core AS {a}")
    if len({a for a, _, _ in route}) != len(route):
        out.append("route revisits an AS")
    return out


def construct_segment(
    t: Topology, kind: SegKind | str, route: Sequence[tuple], rnd: Term | int
) -> AuthSegment:
    """Authorize ``route`` (a list of ``(as, prev, next)``) starting from ``rnd``."""
    kind = SegKind.parse(kind)
    rnd = Nonce(rnd) if isinstance(rnd, int) else rnd
    bad = _route_violations(t, kind, route)
    if bad:
        raise SegmentError("; ".join(bad))
    beta = [rnd]
    hops = []
    for a, prv, nxt in route:
        sigma = hop_sigma(a, prv, nxt, beta[-1])
        hops.append(HopField(a, prv, nxt, sigma))
        beta.append(xor(beta[-1], sigma))
    return AuthSegment(kind, tuple(hops), tuple(beta))


def validate_segment(t: Topology, s: AuthSegment) -> list[str]:
    route = [(h.as_id, h.prev, h.next) for h in s.hops]
    out = _route_violations(t, s.kind, route)
    if len(s.beta) != len(s.hops) + 1:
        out.append("beta chain has wrong length")
        return out
    for k, h in enumerate(s.hops):
        if h.auth != hop_sigma(h.as_id, h.prev, h.next, s.beta[k]):
            out.append(f"hop {k}: authenticator does not match")
        if s.beta[k + 1] != xor(s.beta[k], h.auth):
            out.append(f"hop {k}: beta chain broken")
    return out


@dataclass(frozen=True)
class AuthSet:
    segments: tuple = ()

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __contains__(self, s) -> bool:
        return s in self.segments

    def of_kind(self, kind: SegKind) -> list[AuthSegment]:
        return [s for s in self.segments if s.kind is kind]

    def find(self, kind: SegKind | str, ases: Sequence[AsId]) -> AuthSegment | None:
        """First segment whose traversal visits ``ases`` in order.

        ``UP`` looks for a down-segment whose reverse matches; ``CORE``
        accepts either orientation (check ``s.ases`` to tell which).
        """
        kind = SegKind.parse(kind)
        ases = tuple(ases)
        for s in self.segments:
            if kind is SegKind.UP and s.kind is SegKind.DOWN and s.ases[::-1] == ases:
                return s
            if kind is SegKind.DOWN and s.kind is SegKind.DOWN and s.ases == ases:
                return s
            if kind is SegKind.CORE and s.kind is SegKind.CORE and ases in (s.ases, s.ases[::-1]):
                return s
        return None


def _walks(t: Topology, start: AsId, want: LinkType, max_links: int) -> Iterable[list[tuple]]:
    """Acyclic walks from ``start`` over ``want`` links, as (as, prev, next) lists."""

    def rec(path: list[tuple], visited: set):
        yield path
        if len(path) - 1 >= max_links:
            return
        a, prv, _ = path[-1]
        for i in t.interfaces(a):
            if link_type(t, a, i) is not want:
                continue
            b, j = t.links[(a, i)]
            if b in visited:
                continue
            head = path[:-1] + [(a, prv, i)]
            yield from rec(head + [(b, j, None)], visited | {b})

    yield from rec([(start, None, None)], {start})


def auto_beacon(t: Topology, max_len: int, first_nonce: int = 1) -> AuthSet:
    """All down- and core-segments of at most ``max_len`` links.

    Down-segments include the single-hop segment at each core AS; core
    segments need at least one link. Nonces are allocated in enumeration
    order starting from ``first_nonce``.
    """
    routes: list[tuple[SegKind, list]] = []
    cores = sorted(a for a in t.ases if t.is_core(a))
    for c in cores:
        for w in _walks(t, c, LinkType.PROV_CUST, max_len):
            routes.append((SegKind.DOWN, w))
    for c in cores:
        for w in _walks(t, c, LinkType.CORE, max_len):
            if len(w) > 1:
                routes.append((SegKind.CORE, w))
    segs = []
    for n, (kind, route) in enumerate(routes):
        segs.append(construct_segment(t, kind, route, Nonce(first_nonce + n)))
    return AuthSet(tuple(segs))


# -- combination -------------------------------------------------------------


@dataclass(frozen=True)
class PlanSegment:
    segment: AuthSegment
    kind: SegKind
    dir: bool

    def traversal(self) -> list[tuple]:
        return self.segment.traversal(self.dir)


@dataclass(frozen=True)
class PathPlan:
    parts: tuple

    @property
    def source(self) -> AsId:
        return self.parts[0].traversal()[0][0]

    @property
    def destination(self) -> AsId:
        return self.parts[-1].traversal()[-1][0]

    def as_path(self) -> list[AsId]:
        out: list[AsId] = []
        for p in self.parts:
            for a, _, _ in p.traversal():
                if not out or out[-1] != a:
                    out.append(a)
        return out


def combine_parts(parts: Sequence[tuple], t: Topology | None = None) -> PathPlan:
    """Combine ``(kind, segment, dir)`` triples given in traversal order."""
    if not parts:
        raise CombineError("at least one segment is required")
    if len(parts) > 3:
        raise CombineError("at most three segments")
    plan = []
    for kind, seg, d in parts:
        kind = SegKind.parse(kind)
        want = SegKind.CORE if kind is SegKind.CORE else SegKind.DOWN
        if seg.kind is not want:
            raise CombineError(f"{kind.label} part must be built from a {want.label} segment")
        if kind is SegKind.UP and d:
            raise CombineError("up-segments are traversed against construction direction")
        if kind is SegKind.DOWN and not d:
            raise CombineError("down-segments are traversed in construction direction")
        plan.append(PlanSegment(seg, kind, bool(d)))
    kinds = [p.kind for p in plan]
    if kinds != sorted(set(kinds)):
        raise CombineError("segments must appear in order up, core, down without repetition")
    if len(plan) > 1 and any(len(p.segment.hops) < 2 for p in plan):
        raise CombineError("single-hop segments cannot be joined to others")
    for a, b in zip(plan, plan[1:]):
        end = a.traversal()[-1][0]
        start = b.traversal()[0][0]
        if end != start:
            raise CombineError(f"joint mismatch: {a.kind.label} ends at {end}, {b.kind.label} starts at {start}")
        if t is not None and not t.is_core(end):
            raise CombineError(f"joint at non-core AS {end}")
    if t is not None:
        seen_down = False
        for p in plan:
            for a, _, out in p.traversal():
                if out is None:
                    continue
                lt = link_type(t, a, out)
                if lt is LinkType.PROV_CUST:
                    seen_down = True
                elif lt is LinkType.CUST_PROV and seen_down:
                    raise CombineError(f"valley at {a}")
    return PathPlan(tuple(plan))


def combine(
    up: AuthSegment | None = None,
    core: AuthSegment | None = None,
    down: AuthSegment | None = None,
    *,
    core_dir: bool = True,
    t: Topology | None = None,
) -> PathPlan:
    parts = []
    if up is not None:
        parts.append((SegKind.UP, up, False))
    if core is not None:
        parts.append((SegKind.CORE, core, core_dir))
    if down is not None:
        parts.append((SegKind.DOWN, down, True))
    return combine_parts(parts, t)
