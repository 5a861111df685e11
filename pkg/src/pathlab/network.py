"""World state: packets sitting in internal networks and on inter-AS links."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .topology import Topology


@dataclass
class NetworkState:
    int_: dict = field(default_factory=dict)  # AsId -> deque of Packet
    ext: dict = field(default_factory=dict)  # (A, i, B, j) -> deque of Packet

    @classmethod
    def empty(cls, t: Topology) -> "NetworkState":
        return cls(
            {a: deque() for a in sorted(t.ases)},
            {ch: deque() for ch in t.external_channels()},
        )

    def push_int(self, a, pkt) -> None:
        self.int_[a].append(pkt)

    def push_ext(self, ch, pkt) -> None:
        self.ext[ch].append(pkt)

    def count(self) -> int:
        return sum(map(len, self.int_.values())) + sum(map(len, self.ext.values()))

    def snapshot(self) -> tuple:
        return (
            tuple((a, tuple(q)) for a, q in sorted(self.int_.items())),
            tuple((c, tuple(q)) for c, q in sorted(self.ext.items())),
        )
