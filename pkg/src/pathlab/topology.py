"""AS-level network model: ASes, interface-labelled links, link types."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

AsId = str
IfId = int  # None stands for the empty interface


class TopologyError(ValueError):
    pass


class LinkType(enum.Enum):
    CUST_PROV = "CustProv"
    PROV_CUST = "ProvCust"
    CORE = "Core"

    def dual(self) -> "LinkType":
        if self is LinkType.CUST_PROV:
            return LinkType.PROV_CUST
        if self is LinkType.PROV_CUST:
            return LinkType.CUST_PROV
        return LinkType.CORE

    @classmethod
    def parse(cls, s: str) -> "LinkType":
        for lt in cls:
            if lt.value.lower() == str(s).lower():
                return lt
        raise TopologyError(f"unknown link type {s!r} (peering links are not supported)")


@dataclass(frozen=True)
class Topology:
    """Immutable network description.

    ``links`` maps ``(A, i)`` to ``(B, j)`` and must be an involution;
    ``link_types[(A, i)]`` is the type of that link as seen from A.
    ``routers`` optionally splits an AS's interfaces over named router
    instances; ASes absent from it get a single router owning everything.
    """

    ases: Mapping[AsId, bool]
    links: Mapping[tuple[AsId, IfId], tuple[AsId, IfId]]
    link_types: Mapping[tuple[AsId, IfId], LinkType]
    compromised: frozenset = frozenset()
    routers: Mapping[AsId, Mapping[str, frozenset]] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        ases: Mapping[AsId, bool],
        links: Iterable[tuple[AsId, IfId, AsId, IfId, LinkType | str]],
        compromised: Iterable[AsId] = (),
        routers: Mapping[AsId, Mapping[str, Iterable[IfId]]] | None = None,
    ) -> "Topology":
        """Build from undirected link records ``(A, i, B, j, type-seen-from-A)``."""
        lmap: dict = {}
        tmap: dict = {}
        for a, i, b, j, lt in links:
            lt = lt if isinstance(lt, LinkType) else LinkType.parse(lt)
            for key in ((a, i), (b, j)):
                if key in lmap:
                    raise TopologyError(f"interface {key} used twice")
            lmap[(a, i)] = (b, j)
            lmap[(b, j)] = (a, i)
            tmap[(a, i)] = lt
            tmap[(b, j)] = lt.dual()
        rmap = {
            a: {name: frozenset(ifs) for name, ifs in rs.items()}
            for a, rs in (routers or {}).items()
        }
        return cls(dict(ases), lmap, tmap, frozenset(compromised), rmap)

    def is_core(self, a: AsId) -> bool:
        return bool(self.ases[a])

    def interfaces(self, a: AsId) -> list[IfId]:
        return sorted(i for (x, i) in self.links if x == a)

    def router_names(self, a: AsId) -> list[str]:
        if a in self.routers:
            return sorted(self.routers[a])
        return [a]

    def owned_interfaces(self, a: AsId, router: str) -> frozenset:
        if a in self.routers:
            return self.routers[a][router]
        return frozenset(self.interfaces(a))

    def router_for(self, a: AsId, ifid: IfId | None) -> str:
        """Router instance of AS ``a`` that owns ``ifid`` (first router if none does)."""
        names = self.router_names(a)
        if ifid is not None:
            for n in names:
                if ifid in self.owned_interfaces(a, n):
                    return n
        return names[0]

    def external_channels(self) -> list[tuple[AsId, IfId, AsId, IfId]]:
        return sorted((a, i, b, j) for (a, i), (b, j) in self.links.items())


def neighbor(t: Topology, a: AsId, i: IfId | None) -> tuple[AsId, IfId] | None:
    if i is None:
        return None
    return t.links.get((a, i))


def link_type(t: Topology, a: AsId, i: IfId) -> LinkType:
    try:
        return t.link_types[(a, i)]
    except KeyError:
        raise TopologyError(f"no link at ({a},{i})") from None


def validate_topology(t: Topology) -> list[str]:
    """Return every violated structural rule; an empty list means well-formed."""
    out: list[str] = []
    for (a, i), (b, j) in sorted(t.links.items()):
        if a not in t.ases:
            out.append(f"unknown AS {a} at ({a},{i})")
        if b not in t.ases:
            out.append(f"unknown AS {b} at ({a},{i})")
        if i is None or j is None:
            out.append(f"empty interface in link ({a},{i})~({b},{j})")
        if a == b:
            out.append(f"self-link at ({a},{i})")
        if t.links.get((b, j)) != (a, i):
            out.append(f"involution at ({a},{i})~({b},{j})")
        lt = t.link_types.get((a, i))
        back = t.link_types.get((b, j))
        if not isinstance(lt, LinkType):
            out.append(f"link type missing or invalid at ({a},{i})")
            continue
        if not isinstance(back, LinkType):
            continue
        if back is not lt.dual():
            if (a, i) < (b, j):
                out.append(f"duality at ({a},{i})~({b},{j})")
        if a in t.ases and b in t.ases:
            if lt is LinkType.CORE and not (t.ases[a] and t.ases[b]):
                out.append(f"core link between non-core ASes at ({a},{i})~({b},{j})")
            if lt is LinkType.CUST_PROV and t.ases[a]:
                out.append(f"core AS {a} has provider link ({a},{i})")
    for key in t.link_types:
        if key not in t.links:
            out.append(f"link type for unlinked interface {key}")
    for a in sorted(t.compromised):
        if a not in t.ases:
            out.append(f"unknown compromised AS {a}")
    for a, rs in sorted(t.routers.items()):
        if a not in t.ases:
            out.append(f"routers for unknown AS {a}")
            continue
        seen: set = set()
        for name, ifs in sorted(rs.items()):
            for i in ifs:
                if (a, i) not in t.links:
                    out.append(f"router {a}/{name} owns unlinked interface {i}")
                if i in seen:
                    out.append(f"interface ({a},{i}) owned by two routers")
                seen.add(i)
        for i in t.interfaces(a):
            if i not in seen:
                out.append(f"interface ({a},{i}) owned by no router")
    return out
