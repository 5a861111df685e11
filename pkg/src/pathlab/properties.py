"""Trace checkers for path authorization, valley freedom and loop freedom.

Checkers read trace records (plain dicts, as written to the JSON-lines
trace), so a stored trace can be re-checked without rerunning it. Only
``forward`` records matter; each carries the packet tag, the router's AS,
the actual ingress and egress, the segment index and direction before the
step, the outcome and the ghost history after it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .authseg import AuthSet
from .topology import LinkType

PATH_AUTH = "PathAuth"
VALLEY_FREE = "ValleyFree"
LOOP_FREE = "LoopFree"
INTERNAL = "int"


@dataclass(frozen=True)
class Violation:
    property: str
    tag: int
    witness: tuple
    mode: str = "strong"

    def as_dict(self) -> dict:
        return {"property": self.property, "tag": self.tag, "mode": self.mode, "witness": _jsonable(self.witness)}


def _jsonable(x):
    if isinstance(x, (list, tuple)):
        return [_jsonable(i) for i in x]
    return x


def _forwards(trace: Iterable[dict]) -> dict:
    """Non-drop forward records grouped by tag, in trace order."""
    out: dict = {}
    for ev in trace:
        if ev.get("ev") == "forward" and ev.get("result") != "drop":
            out.setdefault(ev["tag"], []).append(ev)
    return out


def _histories(trace: Iterable[dict]) -> dict:
    """Final ghost history per tag (entries as ``(A, i, B, j, type)`` tuples)."""
    out: dict = {}
    for ev in trace:
        if ev.get("ev") == "forward" and ev.get("result") != "drop":
            out[ev["tag"]] = tuple(tuple(e) for e in ev["history"])
    return out


def _lbl(x):
    return None if x == INTERNAL else x


def hop_runs(events: list) -> list:
    """Split one packet's forwards into per-segment runs of ``(as, in, out)``.

    A hand-off between two routers of one AS shows up as two records and
    is merged into one hop. ``in`` is ``None`` when the packet entered
    from the internal network, ``out`` when it left towards it or was
    delivered.
    """
    runs: list = []
    key = None
    pending = None  # hop waiting for the second half of a hand-off
    for ev in events:
        k = (ev["seg"], ev["dir"])
        if k != key:
            runs.append((ev["dir"], []))
            key = k
            pending = None
        hop_in = _lbl(ev["ingress"])
        if pending is not None and pending[0] == ev["as"] and ev["ingress"] == INTERNAL:
            hop_in = pending[1]
            runs[-1][1].pop()
        hop_out = None if ev["result"] == "deliver" else _lbl(ev["egress"])
        runs[-1][1].append((ev["as"], hop_in, hop_out))
        handoff = ev["egress"] == INTERNAL and not ev["switch"] and ev["result"] == "forward"
        pending = (ev["as"], hop_in) if handoff else None
    return runs


def _split_honest(run: list, compromised) -> list:
    parts, cur = [], []
    for hop in run:
        if hop[0] in compromised:
            if cur:
                parts.append(cur)
            cur = []
        else:
            cur.append(hop)
    if cur:
        parts.append(cur)
    return parts


def _hop_match(actual, auth_hop, first: bool) -> bool:
    a, i, o = actual
    b, j, p = auth_hop
    # a packet handed in from the AS's own network may start anywhere
    return a == b and o == p and (i == j or (first and i is None))


def is_infix(run: list, traversal: list, from_internal_ok: bool = True) -> bool:
    n = len(run)
    for s in range(len(traversal) - n + 1):
        if all(
            _hop_match(run[k], traversal[s + k], from_internal_ok and k == 0) for k in range(n)
        ):
            return True
    return False


def check_path_authorization(trace, auth: AuthSet, compromised=frozenset()) -> list:
    travs = {True: [s.traversal(True) for s in auth], False: [s.traversal(False) for s in auth]}
    out = []
    for tag, evs in sorted(_forwards(trace).items()):
        for d, run in hop_runs(evs):
            for part in _split_honest(run, compromised):
                if not any(is_infix(part, tr) for tr in travs[d]):
                    out.append(Violation(PATH_AUTH, tag, tuple(part)))
    return out


def check_valley_freedom(trace) -> list:
    out = []
    for tag, hist in sorted(_histories(trace).items()):
        down = None
        for n, e in enumerate(hist):
            lt = e[4]
            if lt == LinkType.PROV_CUST.value and down is None:
                down = n
            elif lt == LinkType.CUST_PROV.value and down is not None:
                out.append(Violation(VALLEY_FREE, tag, hist[down : n + 1]))
                break
    return out


def find_loops(trace) -> list:
    """Every packet's first repeated directed link, unfiltered.

    Returns ``(tag, witness, on_loop_ases)`` with the history slice from the
    first traversal of the link to the second.
    """
    out = []
    for tag, hist in sorted(_histories(trace).items()):
        seen: dict = {}
        for n, e in enumerate(hist):
            link = tuple(e[:4])
            if link in seen:
                p = seen[link]
                on_loop = frozenset(x[0] for x in hist[p + 1 : n + 1])
                out.append((tag, hist[p : n + 1], on_loop))
                break
            seen[link] = n
    return out


def check_loop_freedom(trace, compromised=frozenset(), mode: str = "strong") -> list:
    """``weak`` forgives a loop if any on-loop AS is compromised, ``strong``
    only if all of them are."""
    if mode not in ("weak", "strong"):
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    for tag, witness, on_loop in find_loops(trace):
        bad = on_loop & frozenset(compromised)
        forgiven = bool(bad) if mode == "weak" else bad == on_loop
        if not forgiven:
            out.append(Violation(LOOP_FREE, tag, witness, mode))
    return out


def check_all(trace, auth: AuthSet, compromised=frozenset(), loop_mode: str = "strong") -> list:
    trace = list(trace)
    return (
        check_path_authorization(trace, auth, compromised)
        + check_valley_freedom(trace)
        + check_loop_freedom(trace, compromised, loop_mode)
    )
