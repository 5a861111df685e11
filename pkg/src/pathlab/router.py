"""Border router: buffered receive / forward / send with per-check switches."""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, fields, replace

from .authseg import SegKind
from .crypto import SYMBOLIC
from .network import NetworkState
from .packet import HistoryEntry, Packet, hop_valid
from .terms import Key
from .topology import AsId, LinkType, Topology, link_type, neighbor

INTERNAL = "int"
MAX_SEGMENTS = 3


class DropReason(str, enum.Enum):
    NO_HOP_FIELD = "NoHopField"
    IFACE_MISMATCH = "IfaceMismatch"
    CRYPTO_INVALID = "CryptoInvalid"
    BAD_SEGMENT_SWITCH = "BadSegmentSwitch"
    TOO_MANY_SEGMENTS = "TooManySegments"
    VALLEY_VIOLATION = "ValleyViolation"
    NO_SUCH_LINK = "NoSuchLink"
    INTERNAL_TO_INTERNAL = "InternalToInternal"


@dataclass(frozen=True)
class CheckFlags:
    """Router checks; every flag ``True`` is verified mode.

    ``verify_only_handling=False`` reproduces the legacy counter bug where a
    hop flagged verify-only is consumed without MAC validation.
    ``internal_loopback_check`` is the internal-to-internal rejection, kept
    separate because it is an implementation fix rather than a protocol
    variant.
    """

    segment_switch_checks: bool = True
    enforce_max_segments: bool = True
    intra_segment_valley_check: bool = True
    verify_only_handling: bool = True
    internal_loopback_check: bool = True

    @classmethod
    def verified(cls) -> "CheckFlags":
        return cls()

    @classmethod
    def legacy(cls, *disabled: str) -> "CheckFlags":
        names = {f.name for f in fields(cls)}
        for d in disabled:
            if d not in names:
                raise ValueError(f"unknown check {d!r}")
        return cls(**{d: False for d in disabled})

    def is_verified(self) -> bool:
        return all(getattr(self, f.name) for f in fields(self))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class RouterConfig:
    as_id: AsId
    name: str
    owned_interfaces: frozenset
    checks: CheckFlags = CheckFlags()
    crypto: object = SYMBOLIC

    @property
    def key(self) -> Key:
        return Key(self.as_id)


@dataclass(frozen=True)
class Forward:
    egress: object
    pkt: Packet
    switched: bool = False


@dataclass(frozen=True)
class Drop:
    reason: DropReason
    pkt: Packet


@dataclass(frozen=True)
class Deliver:
    pkt: Packet


# -- guards ------------------------------------------------------------------


def _kinds_ordered(pkt: Packet) -> bool:
    kinds = [s.kind for s in pkt.segments]
    return kinds == sorted(set(kinds))


def segment_count_ok(pkt: Packet) -> bool:
    return len(pkt.segments) <= MAX_SEGMENTS and _kinds_ordered(pkt)


def _other_router_owns(cfg: RouterConfig, t: Topology, ifid) -> bool:
    if cfg.as_id not in t.routers:
        return False
    return t.router_for(cfg.as_id, ifid) != cfg.name and (cfg.as_id, ifid) in t.links


def decide_egress(cfg: RouterConfig, t: Topology, pkt: Packet):
    """Return ``(egress, switching)`` or a :class:`DropReason`.

    ``egress`` is an interface, ``INTERNAL`` (segment switch or hand-off to
    another router of this AS), or ``None`` for local delivery. With switch
    checks on, a switch needs an empty traversal egress at the last hop of
    the segment; with them off, reaching the last hop of a segment while
    more segments remain triggers a switch unconditionally.
    """
    seg = pkt.current_segment()
    h = pkt.current_hop()
    _, tout = h.traversal(seg.dir)
    last = pkt.curr_hf == len(seg.hops) - 1
    more = pkt.curr_seg < len(pkt.segments) - 1
    if cfg.checks.segment_switch_checks:
        if more and last and tout is not None:
            return DropReason.BAD_SEGMENT_SWITCH
        if more and tout is None and not last:
            return DropReason.BAD_SEGMENT_SWITCH
        if tout is None:
            return (INTERNAL, True) if more else (None, False)
    else:
        if more and last:
            return INTERNAL, True
        if tout is None:
            return None, False
    if _other_router_owns(cfg, t, tout):
        return INTERNAL, False
    return tout, False


_KIND_LINK = {
    SegKind.UP: LinkType.CUST_PROV,
    SegKind.CORE: LinkType.CORE,
    SegKind.DOWN: LinkType.PROV_CUST,
}


def _kind_consistent(t: Topology, a: AsId, seg, tout) -> bool:
    """Up-segments run against construction direction and only climb,
    down-segments run along it and only descend, core segments stay on
    core links."""
    if seg.kind is SegKind.UP and seg.dir or seg.kind is SegKind.DOWN and not seg.dir:
        return False
    if tout is None or (a, tout) not in t.links:
        return True
    return link_type(t, a, tout) is _KIND_LINK[seg.kind]


def ifs_reason(cfg: RouterConfig, t: Topology, pkt: Packet, ingress, egress, switching: bool):
    """Interface guard on given labels; ``None`` when it holds."""
    seg = pkt.current_segment()
    h = pkt.current_hop()
    if ingress == INTERNAL and egress == INTERNAL and cfg.checks.internal_loopback_check:
        return DropReason.INTERNAL_TO_INTERNAL
    if h.as_id != cfg.as_id:
        return DropReason.IFACE_MISMATCH
    tin, tout = h.traversal(seg.dir)
    if ingress != INTERNAL and ingress != tin:
        return DropReason.IFACE_MISMATCH
    if cfg.checks.segment_switch_checks and not _kind_consistent(t, cfg.as_id, seg, tout):
        return DropReason.BAD_SEGMENT_SWITCH
    if switching:
        if egress != INTERNAL:
            return DropReason.IFACE_MISMATCH
        if cfg.checks.segment_switch_checks:
            if tout is not None:
                return DropReason.BAD_SEGMENT_SWITCH
            nseg = pkt.segments[pkt.curr_seg + 1]
            if nseg.kind <= seg.kind:
                return DropReason.BAD_SEGMENT_SWITCH
            h2 = nseg.hop_at(0)
            if h2 is not None:
                tin2, tout2 = h2.traversal(nseg.dir)
                if tin2 is not None or h2.as_id != cfg.as_id:
                    return DropReason.BAD_SEGMENT_SWITCH
                if (
                    ingress != INTERNAL
                    and (cfg.as_id, ingress) in t.links
                    and link_type(t, cfg.as_id, ingress) is LinkType.CUST_PROV
                    and (cfg.as_id, tout2) in t.links
                    and link_type(t, cfg.as_id, tout2) is LinkType.CUST_PROV
                ):
                    return DropReason.BAD_SEGMENT_SWITCH
        return None
    if egress is None:
        return None if tout is None else DropReason.IFACE_MISMATCH
    if egress == INTERNAL:
        return None if _other_router_owns(cfg, t, tout) else DropReason.IFACE_MISMATCH
    return None if egress == tout else DropReason.IFACE_MISMATCH


def ifs_valid(cfg: RouterConfig, t: Topology, pkt: Packet, ingress, egress, switching=None) -> bool:
    if pkt.current_hop() is None:
        return False
    if switching is None:
        d = decide_egress(cfg, t, pkt)
        if isinstance(d, DropReason):
            return False
        switching = d[1] and egress == INTERNAL
    return ifs_reason(cfg, t, pkt, ingress, egress, switching) is None


def crypto_valid(cfg: RouterConfig, pkt: Packet) -> bool:
    h = pkt.current_hop()
    if h is None:
        return False
    return hop_valid(cfg.crypto, replace(h, as_id=cfg.as_id), pkt.current_segment().segid, pkt.current_segment().dir)


def upd(cfg: RouterConfig, pkt: Packet, switching: bool = False) -> Packet:
    """Consume the current hop: fold its authenticator into the identifier
    and advance the cursor, moving to the next segment on a switch."""
    seg = pkt.current_segment()
    h = pkt.current_hop()
    segs = list(pkt.segments)
    if seg.segid is not None:
        segs[pkt.curr_seg] = replace(seg, segid=cfg.crypto.xor(seg.segid, h.auth))
    if switching:
        return replace(pkt, segments=tuple(segs), curr_seg=pkt.curr_seg + 1, curr_hf=0)
    return replace(pkt, segments=tuple(segs), curr_hf=pkt.curr_hf + 1)


def upd_abstract(pkt: Packet, switching: bool = False) -> Packet:
    if switching:
        return replace(pkt, curr_seg=pkt.curr_seg + 1, curr_hf=0)
    return replace(pkt, curr_hf=pkt.curr_hf + 1)


def _valley(t: Topology, cfg: RouterConfig, pkt: Packet, egress) -> bool:
    if egress in (None, INTERNAL) or (cfg.as_id, egress) not in t.links:
        return False
    if link_type(t, cfg.as_id, egress) is not LinkType.CUST_PROV:
        return False
    return any(e.ltype is LinkType.PROV_CUST for e in pkt.history)


def guard(cfg: RouterConfig, t: Topology, pkt: Packet, ingress, *, abstract: bool = False,
          labels=None):
    """Evaluate guards in fixed order; return ``(reason, egress, switching)``.

    ``abstract=True`` evaluates the abstract-model guard: no MAC check and
    no positional switch rule, with egress labels supplied by ``labels``.
    """
    h = pkt.current_hop()
    if h is None:
        return DropReason.NO_HOP_FIELD, None, False
    if cfg.checks.enforce_max_segments and not segment_count_ok(pkt):
        return DropReason.TOO_MANY_SEGMENTS, None, False
    if labels is not None:
        egress, switching = labels
    else:
        d = decide_egress(cfg, t, pkt)
        if isinstance(d, DropReason):
            return d, None, False
        egress, switching = d
    r = ifs_reason(cfg, t, pkt, ingress, egress, switching)
    if r is not None:
        return r, egress, switching
    skip_mac = h.verify_only and not cfg.checks.verify_only_handling
    if not abstract and not skip_mac and not crypto_valid(cfg, pkt):
        return DropReason.CRYPTO_INVALID, egress, switching
    if cfg.checks.intra_segment_valley_check and _valley(t, cfg, pkt, egress):
        return DropReason.VALLEY_VIOLATION, egress, switching
    return None, egress, switching


def process(cfg: RouterConfig, t: Topology, pkt: Packet, ingress):
    """Forward processing of one packet without any I/O."""
    reason, egress, switching = guard(cfg, t, pkt, ingress)
    if reason is not None:
        return Drop(reason, pkt)
    if egress is None:
        return Deliver(upd(cfg, pkt))
    handoff = egress == INTERNAL and not switching
    new = pkt if handoff else upd(cfg, pkt, switching)
    if egress != INTERNAL:
        nb = neighbor(t, cfg.as_id, egress)
        if nb is not None:
            entry = HistoryEntry((cfg.as_id, egress), nb, link_type(t, cfg.as_id, egress))
            new = replace(new, history=new.history + (entry,))
    return Forward(egress, new, switching)


# -- decomposed router -------------------------------------------------------


def channel_into(t: Topology, a: AsId, src):
    """Channel feeding ``src`` of AS ``a``: ``("int", a)`` or ``("ext", (B, j, a, i))``."""
    if src == INTERNAL:
        return ("int", a)
    b, j = t.links[(a, src)]
    return ("ext", (b, j, a, src))


@dataclass
class Router:
    cfg: RouterConfig
    topo: Topology
    input_buffer: dict = field(default_factory=dict)
    output_buffer: dict = field(default_factory=dict)

    def recv(self, net: NetworkState, src) -> Packet | None:
        kind, key = channel_into(self.topo, self.cfg.as_id, src)
        q = net.int_[key] if kind == "int" else net.ext[key]
        if not q:
            return None
        pkt = q.popleft()
        self.input_buffer.setdefault(src, deque()).append(pkt)
        return pkt

    def pending_inputs(self) -> list:
        return sorted((s for s, q in self.input_buffer.items() if q), key=str)

    def pending_outputs(self) -> list:
        return sorted((e for e, q in self.output_buffer.items() if q), key=str)

    def forward(self, src=None):
        """Pop one buffered packet, decide, and buffer the result for sending.

        Returns ``(ingress, packet_before, decision)``.
        """
        if src is None:
            src = self.pending_inputs()[0]
        pkt = self.input_buffer[src].popleft()
        dec = process(self.cfg, self.topo, pkt, src)
        if isinstance(dec, Forward):
            self.output_buffer.setdefault(dec.egress, deque()).append(dec.pkt)
        return src, pkt, dec

    def send(self, net: NetworkState, egress):
        """Move one packet from the output buffer onto its channel.

        Returns ``(packet, channel)`` or a :class:`Drop` for an unlinked egress.
        """
        pkt = self.output_buffer[egress].popleft()
        if egress == INTERNAL:
            net.push_int(self.cfg.as_id, pkt)
            return pkt, ("int", self.cfg.as_id)
        nb = neighbor(self.topo, self.cfg.as_id, egress)
        if nb is None:
            return Drop(DropReason.NO_SUCH_LINK, pkt)
        ch = (self.cfg.as_id, egress, nb[0], nb[1])
        net.push_ext(ch, pkt)
        return pkt, ("ext", ch)


def forward_monolithic(cfg: RouterConfig, t: Topology, net: NetworkState, src):
    """Single-step receive, process and send, for composition checks."""
    kind, key = channel_into(t, cfg.as_id, src)
    q = net.int_[key] if kind == "int" else net.ext[key]
    if not q:
        return None
    pkt = q.popleft()
    dec = process(cfg, t, pkt, src)
    if isinstance(dec, Forward):
        if dec.egress == INTERNAL:
            net.push_int(cfg.as_id, dec.pkt)
        else:
            nb = neighbor(t, cfg.as_id, dec.egress)
            if nb is None:
                return Drop(DropReason.NO_SUCH_LINK, dec.pkt)
            net.push_ext((cfg.as_id, dec.egress, nb[0], nb[1]), dec.pkt)
    return dec


def make_routers(t: Topology, checks, crypto=SYMBOLIC) -> dict:
    """One :class:`Router` per router instance; ``checks`` is a CheckFlags or
    a mapping AsId -> CheckFlags."""
    out = {}
    for a in sorted(t.ases):
        flags = checks.get(a, CheckFlags()) if isinstance(checks, dict) else checks
        for name in t.router_names(a):
            cfg = RouterConfig(a, name, t.owned_interfaces(a, name), flags, crypto)
            out[(a, name)] = Router(cfg, t)
    return out

