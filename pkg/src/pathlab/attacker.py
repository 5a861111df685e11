"""Dolev-Yao adversary: knowledge, guarded injection, scripted and random attacks."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .authseg import AuthSegment, AuthSet, HopField, SegKind, combine_parts
from .packet import Packet, PacketSegment, encode, make_packet, short
from .terms import ZERO, IfLit, Key, Knowledge, Term, derivable, learn, mac, xor
from .topology import LinkType, Topology, link_type, neighbor


class AttackInapplicable(ValueError):
    """The topology lacks the shape a scripted attack needs."""


@dataclass(frozen=True)
class Injection:
    """``target`` is ``("int", A)`` or ``("ext", (A, i, B, j))``."""

    target: tuple
    pkt: Packet
    label: str = ""


@dataclass(frozen=True)
class InjectResult:
    accepted: bool
    gap: tuple = ()


@dataclass
class AttackerState:
    knowledge: Knowledge = field(default_factory=Knowledge)

    @classmethod
    def initial(cls, auth: AuthSet, compromised: Iterable[str]) -> "AttackerState":
        k = Knowledge()
        for s in auth:
            k = learn(k, s.encode())
        for x in sorted(compromised):
            k = learn(k, Key(x))
        return cls(k)

    def observe(self, pkt: Packet) -> None:
        self.knowledge = learn(self.knowledge, encode(pkt))

    def can_derive(self, t: Term) -> bool:
        return derivable(self.knowledge, t)

    def gap(self, pkt: Packet) -> tuple:
        """Carried items the attacker cannot derive, rendered short."""
        return tuple(short(i) for i in encode(pkt).items if not derivable(self.knowledge, i))


def target_exists(t: Topology, target: tuple) -> bool:
    kind, key = target
    if kind == "int":
        return key in t.ases
    if kind == "ext":
        a, i, b, j = key
        return t.links.get((a, i)) == (b, j)
    return False


def inject(st: AttackerState, net, inj: Injection, t: Topology | None = None) -> InjectResult:
    """Place ``inj.pkt`` on its channel iff its encoding is derivable."""
    if t is not None and not target_exists(t, inj.target):
        raise ValueError(f"no such channel {inj.target}")
    if not derivable(st.knowledge, encode(inj.pkt)):
        return InjectResult(False, st.gap(inj.pkt))
    pkt = replace(inj.pkt, history=())
    kind, key = inj.target
    if kind == "int":
        net.push_int(key, pkt)
    else:
        net.push_ext(key, pkt)
    return InjectResult(True)


def natural_target(t: Topology, pkt: Packet) -> tuple:
    """Channel a router would expect the packet on, given its current hop."""
    seg = pkt.current_segment()
    h = pkt.current_hop()
    if h is None:
        return ("int", pkt.segments[0].hops[0].as_id)
    tin, _ = h.traversal(seg.dir)
    nb = neighbor(t, h.as_id, tin)
    if nb is None:
        return ("int", h.as_id)
    return ("ext", (nb[0], nb[1], h.as_id, tin))


# -- packet builders ---------------------------------------------------------


def segment_by_ases(auth: AuthSet, ases) -> AuthSegment:
    ases = tuple(ases)
    for s in auth:
        if s.ases == ases:
            return s
    raise AttackInapplicable(f"no authorized segment {'-'.join(ases)}")


@dataclass(frozen=True)
class Fragment:
    """Traversal of ``segment`` in direction ``dir`` from AS ``start`` to ``end``."""

    segment: AuthSegment
    kind: SegKind
    dir: bool
    start: str
    end: str


def fragment_segment(f: Fragment) -> PacketSegment:
    ases = f.segment.ases
    i, j = ases.index(f.start), ases.index(f.end)
    lo, hi = min(i, j), max(i, j)
    if f.dir and i > j or not f.dir and i < j:
        raise AttackInapplicable(f"{f.start}..{f.end} runs against dir={f.dir}")
    segid = f.segment.beta[lo] if f.dir else f.segment.beta[hi + 1]
    return PacketSegment(f.kind, f.dir, segid, f.segment.hops[lo : hi + 1])


def fragment_packet(frags: Iterable[Fragment], payload: bytes = b"") -> Packet:
    return Packet(tuple(fragment_segment(f) for f in frags), 0, 0, payload)


def forge_segment(auth: AuthSet, compromised, kind: SegKind, route) -> PacketSegment:
    """Construction-direction segment over ``route`` (``(as, prev, next)`` triples).

    Hops of compromised ASes get fresh MACs over the running identifier;
    other hops reuse the first authorized authenticator with the same
    fields. The initial identifier is the authorized one when the first
    hop is reused, else the public zero.
    """
    known = {}
    for s in auth:
        for k, h in enumerate(s.hops):
            known.setdefault((h.as_id, h.prev, h.next), (h.auth, s.beta[k]))
    a0, p0, n0 = route[0]
    cur = ZERO if a0 in compromised else known.get((a0, p0, n0), (None, ZERO))[1]
    segid = cur
    hops = []
    for a, prv, nxt in route:
        if a in compromised:
            sigma = mac(Key(a), [IfLit(prv), IfLit(nxt), cur])
        elif (a, prv, nxt) in known:
            sigma = known[(a, prv, nxt)][0]
        else:
            raise AttackInapplicable(f"no authenticator for honest hop {a}({prv},{nxt})")
        hops.append(HopField(a, prv, nxt, sigma))
        cur = xor(cur, sigma)
    return PacketSegment(kind, True, segid, tuple(hops))


def _iface(t: Topology, a: str, b: str):
    for i in t.interfaces(a):
        if t.links[(a, i)][0] == b:
            return i
    return None


def _downs(auth: AuthSet) -> list:
    return auth.of_kind(SegKind.DOWN)


def _cores(auth: AuthSet) -> list:
    return auth.of_kind(SegKind.CORE)


# -- scripted attacks --------------------------------------------------------


def splice_attack(t: Topology, auth: AuthSet, compromised=frozenset()) -> list:
    """Climb part of one down-segment, then switch at a non-joint AS onto
    the tail of another down-segment."""
    for s1 in _downs(auth):
        for k in range(1, len(s1.hops) - 1):
            e, came = s1.ases[k], s1.ases[k + 1]
            for s2 in _downs(auth):
                if e not in s2.ases[1:-1]:
                    continue
                m = s2.ases.index(e)
                if s2.ases[m + 1] == came:
                    continue
                pkt = fragment_packet(
                    [
                        Fragment(s1, SegKind.UP, False, s1.ases[-1], e),
                        Fragment(s2, SegKind.DOWN, True, e, s2.ases[-1]),
                    ]
                )
                return [Injection(("int", s1.ases[-1]), pkt, "splice")]
    raise AttackInapplicable("splice needs two down-segments crossing mid-segment")


def loop_attack(t: Topology, auth: AuthSet, compromised=frozenset(), rounds: int = 4) -> list:
    """Bounce over one core link with alternating core segments."""
    for s in _cores(auth):
        if len(s.hops) == 2:
            a, b = s.ases
            frags = [
                Fragment(s, SegKind.CORE, k % 2 == 0, a if k % 2 == 0 else b, b if k % 2 == 0 else a)
                for k in range(rounds)
            ]
            return [Injection(("int", a), fragment_packet(frags), "loop")]
    raise AttackInapplicable("loop needs a two-hop core segment")


def source_route_attack(t: Topology, auth: AuthSet, compromised=frozenset()) -> list:
    """Five fragments: up in two pieces, out and back over a core link, down."""
    cores = {s.ases: s for s in _cores(auth) if len(s.hops) == 2}
    for s in _downs(auth):
        if len(s.hops) < 3:
            continue
        c, x, y = s.ases[0], s.ases[-2], s.ases[-1]
        for (a, b), cs in sorted(cores.items()):
            if a != c:
                continue
            frags = [
                Fragment(s, SegKind.UP, False, y, x),
                Fragment(s, SegKind.UP, False, x, c),
                Fragment(cs, SegKind.CORE, True, c, b),
                Fragment(cs, SegKind.CORE, False, b, c),
                Fragment(s, SegKind.DOWN, True, c, y),
            ]
            return [Injection(("int", y), fragment_packet(frags), "sourceroute")]
    raise AttackInapplicable("source routing needs a 3-hop down-segment from a core AS with a core link")


def verify_only_attack(t: Topology, auth: AuthSet, compromised=frozenset()) -> list:
    """A zero-authenticator hop flagged verify-only, entered from a customer."""
    for s in _downs(auth):
        for k in range(1, len(s.hops) - 1):
            e, g = s.ases[k], s.ases[k + 1]
            out = s.hops[k].next
            for i in t.interfaces(e):
                if i == out or link_type(t, e, i) is not LinkType.PROV_CUST:
                    continue
                h, hi = t.links[(e, i)]
                forged = HopField(e, i, out, ZERO, verify_only=True)
                seg = PacketSegment(SegKind.DOWN, True, s.beta[k + 1], (forged,) + s.hops[k + 1 :])
                pkt = Packet((seg,), 0, 0)
                return [Injection(("ext", (h, hi, e, i)), pkt, "verify_only")]
    raise AttackInapplicable("verify-only abuse needs an AS with two customers on a down-segment")


def reflect_attack(t: Topology, auth: AuthSet, compromised=frozenset()) -> list:
    """Down, back up, and down again along one down-segment.

    Prefers the longest down-segment ending at a compromised AS.
    """
    downs = [s for s in _downs(auth) if len(s.hops) >= 2]
    if not downs:
        raise AttackInapplicable("reflection needs a down-segment with a link")
    downs.sort(key=lambda s: (s.ases[-1] not in compromised, -len(s.hops)))
    s = downs[0]
    top, leaf = s.ases[0], s.ases[-1]
    frags = [
        Fragment(s, SegKind.UP, True, top, leaf),
        Fragment(s, SegKind.CORE, False, leaf, top),
        Fragment(s, SegKind.DOWN, True, top, leaf),
    ]
    return [Injection(("int", top), fragment_packet(frags), "reflect")]


def forge_loop_attack(t: Topology, auth: AuthSet, compromised=frozenset()) -> list:
    """A single core segment A-B-C-A-B around a core triangle, forged where possible."""
    cores = sorted(a for a in t.ases if t.is_core(a))
    for a in cores:
        for b in cores:
            for c in cores:
                if len({a, b, c}) < 3:
                    continue
                ab, ba = _iface(t, a, b), _iface(t, b, a)
                bc, cb = _iface(t, b, c), _iface(t, c, b)
                ca, ac = _iface(t, c, a), _iface(t, a, c)
                if None in (ab, bc, ca):
                    continue
                route = [(a, None, ab), (b, ba, bc), (c, cb, ca), (a, ac, ab), (b, ba, None)]
                try:
                    seg = forge_segment(auth, compromised, SegKind.CORE, route)
                except AttackInapplicable:
                    seg = PacketSegment(
                        SegKind.CORE,
                        True,
                        ZERO,
                        tuple(HopField(x, p, n, ZERO) for x, p, n in route),
                    )
                return [Injection(("int", a), Packet((seg,), 0, 0), "forge_loop")]
    raise AttackInapplicable("forged loop needs a core triangle")


@dataclass(frozen=True)
class ScriptedAttack:
    name: str
    build: Callable
    disabled: tuple  # checks turned off in the legacy run
    expect: str  # violation class in the legacy run
    verified_drop: str  # drop reason in verified mode


def scripted_attacks() -> dict:
    """The four regression attacks, keyed by name."""
    return {
        "splice": ScriptedAttack("splice", splice_attack, ("segment_switch_checks",), "PathAuth", "BadSegmentSwitch"),
        "loop": ScriptedAttack(
            "loop", loop_attack, ("segment_switch_checks", "enforce_max_segments"), "LoopFree", "TooManySegments"
        ),
        "sourceroute": ScriptedAttack(
            "sourceroute",
            source_route_attack,
            ("segment_switch_checks", "enforce_max_segments"),
            "PathAuth",
            "TooManySegments",
        ),
        "verify_only": ScriptedAttack(
            "verify_only", verify_only_attack, ("verify_only_handling",), "PathAuth", "CryptoInvalid"
        ),
    }


EXTRA_ATTACKS = {"reflect": reflect_attack, "forge_loop": forge_loop_attack}


def build_attack(name: str, t: Topology, auth: AuthSet, compromised=frozenset()) -> list:
    cat = scripted_attacks()
    if name in cat:
        return cat[name].build(t, auth, compromised)
    if name in EXTRA_ATTACKS:
        return EXTRA_ATTACKS[name](t, auth, compromised)
    raise KeyError(f"unknown attack {name!r}")


# -- random strategy ---------------------------------------------------------


@dataclass
class RandomStrategy:
    """Structured mutations of authorized and observed material.

    Each call to :meth:`next` spends one unit of budget and returns a
    derivable injection or ``None`` when no candidate passed the guard.
    """

    seed: int
    budget: int
    topo: Topology
    auth: AuthSet
    compromised: frozenset = frozenset()
    tries: int = 6
    rng: random.Random = field(init=False)
    observed: list = field(default_factory=list)

    MUTATIONS = ("replay", "cursor", "reorder", "swap_sigma", "segid_xor", "recombine", "forge")

    def __post_init__(self):
        self.rng = random.Random(self.seed)
        self.segs = list(self.auth)

    def remaining(self) -> int:
        return self.budget

    def note(self, pkt: Packet) -> None:
        if len(self.observed) < 64:
            self.observed.append(pkt)
        else:
            self.observed[self.rng.randrange(64)] = pkt

    def next(self, st: AttackerState) -> Injection | None:
        if self.budget <= 0:
            return None
        self.budget -= 1
        for _ in range(self.tries):
            m = self.rng.choice(self.MUTATIONS)
            pkt = getattr(self, "_" + m)()
            if pkt is None or not pkt.segments or not all(s.hops for s in pkt.segments):
                continue
            if st.can_derive(encode(pkt)):
                return Injection(self._target(pkt), pkt, m)
        return None

    def _target(self, pkt: Packet) -> tuple:
        if self.rng.random() < 0.8:
            return natural_target(self.topo, pkt)
        if self.rng.random() < 0.5:
            return ("int", self.rng.choice(sorted(self.topo.ases)))
        return ("ext", self.rng.choice(self.topo.external_channels()))

    def _base(self) -> Packet | None:
        if self.observed and self.rng.random() < 0.5:
            return self.rng.choice(self.observed)
        return self._recombine(honest=True)

    def _random_fragment(self, kind=None) -> Fragment:
        s = self.rng.choice(self.segs)
        d = self.rng.random() < 0.5
        i, j = sorted(self.rng.sample(range(len(s.hops)), 2)) if len(s.hops) > 1 else (0, 0)
        if self.rng.random() < 0.5:
            i, j = 0, len(s.hops) - 1
        a, b = (s.ases[i], s.ases[j]) if d else (s.ases[j], s.ases[i])
        kind = kind or self.rng.choice(list(SegKind))
        return Fragment(s, kind, d, a, b)

    def _recombine(self, honest: bool = False) -> Packet | None:
        if not self.segs:
            return None
        if honest:
            s = self.rng.choice(self.segs)
            kind = SegKind.CORE if s.kind is SegKind.CORE else self.rng.choice([SegKind.UP, SegKind.DOWN])
            d = kind is SegKind.DOWN or (kind is SegKind.CORE and self.rng.random() < 0.5)
            try:
                return make_packet(combine_parts([(kind, s, d)]))
            except ValueError:
                return None
        n = self.rng.randint(1, 4)
        kinds = sorted(self.rng.choice(list(SegKind)) for _ in range(n))
        return fragment_packet([self._random_fragment(k) for k in kinds])

    def _replay(self):
        return self._base()

    def _cursor(self):
        p = self._base()
        if p is None:
            return None
        cs = self.rng.randrange(len(p.segments))
        hf = self.rng.randint(0, len(p.segments[cs].hops))
        return replace(p, curr_seg=cs, curr_hf=hf)

    def _reorder(self):
        p = self._base()
        if p is None:
            return None
        k = self.rng.randrange(len(p.segments))
        hops = list(p.segments[k].hops)
        if len(hops) < 2:
            return None
        i, j = self.rng.sample(range(len(hops)), 2)
        hops[i], hops[j] = hops[j], hops[i]
        segs = list(p.segments)
        segs[k] = replace(segs[k], hops=tuple(hops))
        return replace(p, segments=tuple(segs))

    def _known_sigma(self) -> Term:
        s = self.rng.choice(self.segs)
        return self.rng.choice(s.hops).auth

    def _swap_sigma(self):
        p = self._base()
        if p is None or not self.segs:
            return None
        k = self.rng.randrange(len(p.segments))
        hops = list(p.segments[k].hops)
        i = self.rng.randrange(len(hops))
        hops[i] = replace(hops[i], auth=self._known_sigma())
        segs = list(p.segments)
        segs[k] = replace(segs[k], hops=tuple(hops))
        return replace(p, segments=tuple(segs))

    def _segid_xor(self):
        p = self._base()
        if p is None or not self.segs:
            return None
        k = self.rng.randrange(len(p.segments))
        segs = list(p.segments)
        segs[k] = replace(segs[k], segid=xor(segs[k].segid, self._known_sigma()))
        return replace(p, segments=tuple(segs))

    def _forge(self):
        """Replace a compromised AS's hop by a freshly MACed detour hop."""
        if not self.compromised:
            return self._recombine()
        p = self._base()
        if p is None:
            return None
        cands = [
            (k, i)
            for k, s in enumerate(p.segments)
            for i, h in enumerate(s.hops)
            if h.as_id in self.compromised and s.dir
        ]
        if not cands:
            return None
        k, i = self.rng.choice(cands)
        seg = p.segments[k]
        a = seg.hops[i].as_id
        ifs = [None] + self.topo.interfaces(a)
        prv, nxt = self.rng.choice(ifs), self.rng.choice(ifs)
        cur = seg.segid
        hops = list(seg.hops)
        for h in hops[:i]:
            cur = xor(cur, h.auth)
        hops[i] = HopField(a, prv, nxt, mac(Key(a), [IfLit(prv), IfLit(nxt), cur]))
        segs = list(p.segments)
        segs[k] = replace(seg, hops=tuple(hops))
        return replace(p, segments=tuple(segs))


def random_strategy(seed: int, budget: int, topo: Topology, auth: AuthSet, compromised=frozenset()) -> RandomStrategy:
    return RandomStrategy(seed, budget, topo, auth, frozenset(compromised))
