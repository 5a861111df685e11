"""Packets: cursors and direction flags, abstraction, MAC-path extraction, wire codec."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field, replace
from typing import Mapping

from .authseg import HopField, PathPlan, SegKind
from .crypto import SYMBOLIC
from .terms import AsLit, Concretizer, IfLit, Key, Mac, Nonce, Term, Tup, Xor, xor
from .topology import LinkType

MAX_SEGMENTS = 3


@dataclass(frozen=True)
class PacketSegment:
    kind: SegKind
    dir: bool
    segid: object
    hops: tuple  # construction order

    def traversal_hops(self) -> tuple:
        return self.hops if self.dir else tuple(reversed(self.hops))

    def hop_at(self, pos: int) -> HopField | None:
        if 0 <= pos < len(self.hops):
            return self.hops[pos] if self.dir else self.hops[len(self.hops) - 1 - pos]
        return None


@dataclass(frozen=True)
class HistoryEntry:
    frm: tuple
    to: tuple
    ltype: LinkType


@dataclass(frozen=True)
class Packet:
    """A forwardable packet.

    ``curr_hf`` counts hops already traversed in the current segment, so it
    indexes the traversal order regardless of ``dir``. ``history`` and
    ``tag`` are simulator ghost state: never marshaled, never consulted by
    the forwarding decision except the history-based valley check.
    """

    segments: tuple
    curr_seg: int = 0
    curr_hf: int = 0
    payload: bytes = b""
    history: tuple = field(default=(), compare=False)
    tag: int | None = field(default=None, compare=False)

    def current_segment(self) -> PacketSegment | None:
        if 0 <= self.curr_seg < len(self.segments):
            return self.segments[self.curr_seg]
        return None

    def current_hop(self) -> HopField | None:
        seg = self.current_segment()
        return None if seg is None else seg.hop_at(self.curr_hf)

    def with_segid(self, segid) -> "Packet":
        segs = list(self.segments)
        segs[self.curr_seg] = replace(segs[self.curr_seg], segid=segid)
        return replace(self, segments=tuple(segs))


def make_packet(plan: PathPlan, payload: bytes = b"", crypto=SYMBOLIC) -> Packet:
    """Honest sender: initial identifiers per traversal direction."""
    segs = []
    for p in plan.parts:
        s = p.segment
        segid = s.beta[0] if p.dir else s.beta[-1]
        hops = tuple(replace(h, auth=crypto.lift(h.auth)) for h in s.hops)
        segs.append(PacketSegment(p.kind, p.dir, crypto.lift(segid), hops))
    return Packet(tuple(segs), 0, 0, payload)


def lift_packet(pkt: Packet, crypto) -> Packet:
    segs = tuple(
        replace(
            s,
            segid=crypto.lift(s.segid),
            hops=tuple(replace(h, auth=crypto.lift(h.auth)) for h in s.hops),
        )
        for s in pkt.segments
    )
    return replace(pkt, segments=segs)


def packet_violations(pkt: Packet) -> list[str]:
    out = []
    n = len(pkt.segments)
    if not 1 <= n <= MAX_SEGMENTS:
        out.append(f"segment count {n}")
    if not 0 <= pkt.curr_seg < max(n, 1):
        out.append("curr_seg out of range")
    else:
        if n and not 0 <= pkt.curr_hf <= len(pkt.segments[pkt.curr_seg].hops):
            out.append("curr_hf out of range")
    kinds = [s.kind for s in pkt.segments]
    if kinds != sorted(set(kinds)):
        out.append("segment kinds out of order")
    for k, s in enumerate(pkt.segments):
        if not s.hops:
            out.append(f"segment {k} empty")
        if s.kind is SegKind.UP and s.dir:
            out.append(f"segment {k}: up-segment in construction direction")
        if s.kind is SegKind.DOWN and not s.dir:
            out.append(f"segment {k}: down-segment against construction direction")
    return out


# -- validity and abstraction ------------------------------------------------


def _anchor(pkt: Packet, k: int) -> int:
    if k < pkt.curr_seg:
        return len(pkt.segments[k].hops)
    if k == pkt.curr_seg:
        return pkt.curr_hf
    return 0


def hop_valid(crypto, h: HopField, arriving, dir: bool) -> bool:
    """MAC check of ``h`` given the identifier carried on arrival."""
    beta = arriving if dir else crypto.xor(arriving, h.auth)
    expected = crypto.hop_mac(h.as_id, h.prev, h.next, beta)
    return expected is not None and h.auth == expected


def valid_prefix_len(seg: PacketSegment, start: int, crypto=SYMBOLIC) -> int:
    """Number of consecutive valid hops from traversal position ``start``.

    The carried ``segid`` is the identifier on arrival at ``start``; later
    arrival values follow by XOR-ing each traversed authenticator.
    """
    hops = seg.traversal_hops()
    cur = seg.segid
    n = 0
    for h in hops[start:]:
        if cur is None or not hop_valid(crypto, h, cur, seg.dir):
            break
        cur = crypto.xor(cur, h.auth)
        n += 1
    return n


def _abs_hop(h: HopField) -> HopField:
    return HopField(h.as_id, h.prev, h.next, AsLit(h.as_id))


def abs_packet(pkt: Packet, crypto=SYMBOLIC) -> Packet:
    """Abstract packet: traversed hops plus the valid prefix of the rest.

    Every surviving authenticator becomes the name of its AS and segment
    identifiers are dropped. The cursor is clamped into the result.
    """
    segs = []
    for k, s in enumerate(pkt.segments):
        start = min(_anchor(pkt, k), len(s.hops))
        keep = start + valid_prefix_len(s, start, crypto)
        trav = [_abs_hop(h) for h in s.traversal_hops()[:keep]]
        stored = tuple(trav) if s.dir else tuple(reversed(trav))
        segs.append(PacketSegment(s.kind, s.dir, None, stored))
    curr_hf = pkt.curr_hf
    if 0 <= pkt.curr_seg < len(segs):
        curr_hf = min(curr_hf, len(segs[pkt.curr_seg].hops))
    return Packet(tuple(segs), pkt.curr_seg, curr_hf, pkt.payload, pkt.history, pkt.tag)


class ExtractError(ValueError):
    pass


def _hop_shape(t: Term):
    if (
        isinstance(t, Mac)
        and isinstance(t.key, Key)
        and len(t.body) == 3
        and isinstance(t.body[0], IfLit)
        and isinstance(t.body[1], IfLit)
    ):
        return t.key.as_id, t.body[0].ifid, t.body[1].ifid, t.body[2]
    return None


def extract_path(sigma: Term) -> list[tuple]:
    """Unfold a hop authenticator into the hops it transitively covers."""
    hops = []
    cur = sigma
    while True:
        shape = _hop_shape(cur)
        if shape is None:
            raise ExtractError(f"not a hop authenticator: {cur}")
        a, prv, nxt, beta = shape
        hops.append((a, prv, nxt))
        if isinstance(beta, Nonce):
            break
        if not isinstance(beta, Xor):
            raise ExtractError(f"identifier of unexpected shape: {beta}")
        cands = [
            m for m in beta.elems if _hop_shape(m) is not None and xor(beta, m) == m.body[2]
        ]
        if len(cands) != 1:
            raise ExtractError(f"no unique predecessor in {beta}")
        cur = cands[0]
    hops.reverse()
    return hops


def encode(pkt: Packet) -> Tup:
    """Term view of everything the packet carries on the wire."""
    items = []
    for s in pkt.segments:
        items.append(s.segid)
        for h in s.hops:
            items.extend((AsLit(h.as_id), IfLit(h.prev), IfLit(h.next), h.auth))
    return Tup(tuple(items))


def short(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bytes):
        return x.hex()
    if isinstance(x, (AsLit, IfLit)) or (isinstance(x, Term) and len(x.text) <= 12):
        return x.text
    return "#" + hashlib.blake2b(x.text.encode(), digest_size=4).hexdigest()


def _ifs(i) -> str:
    return "_" if i is None else str(i)


def render(pkt: Packet) -> str:
    parts = []
    for s in pkt.segments:
        hops = " ".join(
            f"{h.as_id}({_ifs(h.prev)},{_ifs(h.next)}){short(h.auth)}{'!' if h.verify_only else ''}"
            for h in s.hops
        )
        parts.append(f"{s.kind.label}{'+' if s.dir else '-'}<{short(s.segid)}>[{hops}]")
    return f"{pkt.curr_seg}/{pkt.curr_hf} " + " | ".join(parts)


# -- wire codec --------------------------------------------------------------

VERSION = 1
EMPTY_IF = 0xFFFF
VERIFY_ONLY_BIT = 0x8000


class CodecError(ValueError):
    TRUNCATED = "truncated"
    BAD_VERSION = "bad-version"
    SEGMENT_COUNT = "segment-count"
    EMPTY_SEGMENT = "empty-segment"
    CURSOR_RANGE = "cursor-out-of-range"
    BAD_FLAGS = "bad-flags"
    UNKNOWN_AS = "unknown-as"
    TRAILING = "trailing-bytes"
    INVARIANT = "invariant"
    UNENCODABLE = "unencodable"

    def __init__(self, code: str, detail: str = ""):
        super().__init__(f"{code}: {detail}" if detail else code)
        self.code = code


class WireContext:
    """AS numbering, key material and the term table recorded by ``marshal``."""

    def __init__(self, as_ids, keymat: Mapping[str, bytes]):
        self.as_ids = sorted(as_ids)
        self.index = {a: n for n, a in enumerate(self.as_ids)}
        self.conc = Concretizer(keymat)
        self.table: dict[bytes, Term] = {}

    def to_bytes(self, t) -> bytes:
        if isinstance(t, bytes):
            return t
        b = self.conc(t)
        self.table.setdefault(b, t)
        return b

    def from_bytes(self, b: bytes):
        return self.table.get(b, b)


def marshal(pkt: Packet, ctx: WireContext) -> bytes:
    n = len(pkt.segments)
    if not 1 <= n <= MAX_SEGMENTS:
        raise CodecError(CodecError.SEGMENT_COUNT, str(n))
    if not (0 <= pkt.curr_seg < 4 and 0 <= pkt.curr_hf < 64):
        raise CodecError(CodecError.CURSOR_RANGE)
    lens = [len(s.hops) for s in pkt.segments] + [0] * (MAX_SEGMENTS - n)
    if any(not 0 < x < 256 for x in lens[:n]):
        raise CodecError(CodecError.UNENCODABLE, "hop count")
    out = bytearray([VERSION, (pkt.curr_seg << 6) | pkt.curr_hf, *lens])
    for s in pkt.segments:
        out.append(int(s.dir) | (int(s.kind) << 1))
        out += ctx.to_bytes(s.segid)
        for h in s.hops:
            if h.as_id not in ctx.index:
                raise CodecError(CodecError.UNKNOWN_AS, h.as_id)
            idx = ctx.index[h.as_id] | (VERIFY_ONLY_BIT if h.verify_only else 0)
            prv = EMPTY_IF if h.prev is None else h.prev
            nxt = EMPTY_IF if h.next is None else h.next
            if not (0 <= prv <= EMPTY_IF and 0 <= nxt <= EMPTY_IF):
                raise CodecError(CodecError.UNENCODABLE, "interface")
            out += struct.pack(">HHH", idx, prv, nxt)
            out += ctx.to_bytes(h.auth)
    if len(pkt.payload) > 0xFFFF:
        raise CodecError(CodecError.UNENCODABLE, "payload")
    out += struct.pack(">H", len(pkt.payload)) + pkt.payload
    return bytes(out)


def unmarshal(data: bytes, ctx: WireContext) -> Packet:
    def need(pos: int, n: int) -> None:
        if pos + n > len(data):
            raise CodecError(CodecError.TRUNCATED, f"need {n} bytes at {pos}")

    need(0, 5)
    if data[0] != VERSION:
        raise CodecError(CodecError.BAD_VERSION, str(data[0]))
    curr_seg, curr_hf = data[1] >> 6, data[1] & 0x3F
    lens = list(data[2:5])
    n = 0
    while n < MAX_SEGMENTS and lens[n]:
        n += 1
    if n == 0:
        raise CodecError(CodecError.SEGMENT_COUNT, "0")
    if any(lens[n:]):
        raise CodecError(CodecError.EMPTY_SEGMENT, f"segment {n} absent but later present")
    if curr_seg >= n or curr_hf > lens[curr_seg]:
        raise CodecError(CodecError.CURSOR_RANGE, f"{curr_seg}/{curr_hf}")
    pos = 5
    segs = []
    for k in range(n):
        need(pos, 7 + 12 * lens[k])
        flags = data[pos]
        if flags >> 3 or (flags >> 1) not in (1, 2, 3):
            raise CodecError(CodecError.BAD_FLAGS, f"{flags:#x}")
        kind = SegKind(flags >> 1)
        segid = ctx.from_bytes(bytes(data[pos + 1 : pos + 7]))
        pos += 7
        hops = []
        for _ in range(lens[k]):
            idx, prv, nxt = struct.unpack_from(">HHH", data, pos)
            auth = ctx.from_bytes(bytes(data[pos + 6 : pos + 12]))
            pos += 12
            a = idx & ~VERIFY_ONLY_BIT
            if a >= len(ctx.as_ids):
                raise CodecError(CodecError.UNKNOWN_AS, str(a))
            hops.append(
                HopField(
                    ctx.as_ids[a],
                    None if prv == EMPTY_IF else prv,
                    None if nxt == EMPTY_IF else nxt,
                    auth,
                    bool(idx & VERIFY_ONLY_BIT),
                )
            )
        segs.append(PacketSegment(kind, bool(flags & 1), segid, tuple(hops)))
    need(pos, 2)
    (plen,) = struct.unpack_from(">H", data, pos)
    pos += 2
    need(pos, plen)
    payload = bytes(data[pos : pos + plen])
    pos += plen
    if pos != len(data):
        raise CodecError(CodecError.TRAILING, f"{len(data) - pos} bytes")
    pkt = Packet(tuple(segs), curr_seg, curr_hf, payload)
    bad = packet_violations(pkt)
    if bad:
        raise CodecError(CodecError.INVARIANT, "; ".join(bad))
    return pkt

