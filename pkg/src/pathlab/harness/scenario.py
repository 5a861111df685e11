"""Scenario files: YAML in, validated :class:`Scenario` out.

Schema (all sections but ``topology`` optional)::

    name: sample8
    topology:
      ases: {A: core, D: leaf}          # or "non-core"/false
      links: [[A, 1, D, 1, ProvCust]]   # type as seen from the first AS
      routers: {A: {r1: [1], r2: [2]}}  # optional split of interfaces
    compromised: [D]
    segments: {max_len: 3}              # or {explicit: [{kind, route, nonce}]}
    routers:
      mode: verified                    # or legacy
      legacy_disable: [segment_switch_checks]
      per_as: {E: {disable: [verify_only_handling]}}
    attacker:
      scripted: [splice]
      random: {seed: 1, budget: 20}
    traffic:
      - {up: [D, A], core: [A, B], down: [B, F], count: 2}
    run: {seed: 0, steps: 2000, backend: symbolic}
    expect: {legacy: PathAuth, verified_drop: BadSegmentSwitch}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from ..attacker import EXTRA_ATTACKS, scripted_attacks
from ..authseg import AuthSet, CombineError, SegKind, SegmentError, auto_beacon, combine, construct_segment
from ..router import CheckFlags
from ..topology import Topology, TopologyError, validate_topology

FIXTURES = ("sample8", "splice", "loop", "sourceroute", "verifyonly", "reflect_line", "triangle_one", "triangle_all")


class ScenarioError(ValueError):
    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")
        self.where = where


@dataclass
class Scenario:
    name: str
    topo: Topology
    auth: AuthSet
    mode: str = "verified"
    legacy_disable: tuple = ()
    per_as: dict = field(default_factory=dict)
    scripted: tuple = ()
    random_attack: dict | None = None
    traffic: list = field(default_factory=list)  # (PathPlan, count)
    seed: int = 0
    steps: int = 2000
    backend: str = "symbolic"
    expect: dict = field(default_factory=dict)

    @property
    def compromised(self) -> frozenset:
        return self.topo.compromised

    def checks(self, mode: str | None = None):
        """Global CheckFlags, or a per-AS mapping when overrides exist."""
        mode = mode or self.mode
        base = CheckFlags.legacy(*self.legacy_disable) if mode == "legacy" else CheckFlags.verified()
        if not self.per_as:
            return base
        out = {a: base for a in self.topo.ases}
        for a, disabled in self.per_as.items():
            out[a] = CheckFlags.legacy(*disabled)
        return out


def _is_core(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).lower() in ("core", "true", "yes")


def _as_list(x, where):
    if x is None:
        return []
    if not isinstance(x, list):
        raise ScenarioError(where, "expected a list")
    return x


def parse_topology(d: dict, compromised, where="topology") -> Topology:
    if not isinstance(d, dict) or "ases" not in d:
        raise ScenarioError(where, "needs an 'ases' mapping")
    ases = {str(a): _is_core(v) for a, v in d["ases"].items()}
    links = []
    for n, rec in enumerate(_as_list(d.get("links"), f"{where}.links")):
        if not isinstance(rec, list) or len(rec) != 5:
            raise ScenarioError(f"{where}.links[{n}]", "expected [A, i, B, j, type]")
        a, i, b, j, lt = rec
        for x in (a, b):
            if str(x) not in ases:
                raise ScenarioError(f"{where}.links[{n}]", f"undefined AS {x}")
        links.append((str(a), int(i), str(b), int(j), lt))
    for x in compromised:
        if x not in ases:
            raise ScenarioError("compromised", f"undefined AS {x}")
    routers = d.get("routers") or {}
    try:
        t = Topology.build(ases, links, compromised, {str(a): rs for a, rs in routers.items()})
    except TopologyError as e:
        raise ScenarioError(where, str(e)) from None
    bad = validate_topology(t)
    if bad:
        raise ScenarioError(where, "; ".join(bad))
    return t


def _segments(d, t: Topology) -> AuthSet:
    d = d or {"max_len": 3}
    if "explicit" in d:
        segs = []
        for n, rec in enumerate(d["explicit"]):
            where = f"segments.explicit[{n}]"
            try:
                route = [(str(a), p, q) for a, p, q in rec["route"]]
                segs.append(construct_segment(t, rec["kind"], route, int(rec.get("nonce", 1000 + n))))
            except (KeyError, TypeError, ValueError) as e:
                raise ScenarioError(where, str(e)) from None
        return AuthSet(tuple(segs))
    return auto_beacon(t, int(d.get("max_len", 3)))


def find_plan(auth: AuthSet, t: Topology, up=None, core=None, down=None):
    """Path plan from AS lists given in traversal order."""
    u = c = dn = None
    core_dir = True
    if up:
        u = auth.find(SegKind.UP, up)
        if u is None:
            raise CombineError(f"no up-segment {'-'.join(up)}")
    if core:
        c = auth.find(SegKind.CORE, core)
        if c is None:
            raise CombineError(f"no core segment {'-'.join(core)}")
        core_dir = c.ases == tuple(core)
    if down:
        dn = auth.find(SegKind.DOWN, down)
        if dn is None:
            raise CombineError(f"no down-segment {'-'.join(down)}")
    return combine(u, c, dn, core_dir=core_dir, t=t)


def scenario_from_dict(d: dict, name: str = "scenario") -> Scenario:
    if not isinstance(d, dict):
        raise ScenarioError("<root>", "expected a mapping")
    compromised = [str(x) for x in _as_list(d.get("compromised"), "compromised")]
    t = parse_topology(d.get("topology"), compromised)
    auth = _segments(d.get("segments"), t)
    r = d.get("routers") or {}
    mode = r.get("mode", "verified")
    if mode not in ("verified", "legacy"):
        raise ScenarioError("routers.mode", f"unknown mode {mode!r}")
    legacy = tuple(r.get("legacy_disable") or ())
    per_as = {}
    try:
        CheckFlags.legacy(*legacy)
        for a, spec in (r.get("per_as") or {}).items():
            if str(a) not in t.ases:
                raise ScenarioError(f"routers.per_as.{a}", "undefined AS")
            per_as[str(a)] = tuple(spec.get("disable") or ())
            CheckFlags.legacy(*per_as[str(a)])
    except ValueError as e:
        if isinstance(e, ScenarioError):
            raise
        raise ScenarioError("routers", str(e)) from None
    att = d.get("attacker") or {}
    known = set(scripted_attacks()) | set(EXTRA_ATTACKS)
    for attack in att.get("scripted") or ():
        if attack not in known:
            raise ScenarioError("attacker.scripted", f"unknown attack {attack!r}")
    traffic = []
    for n, rec in enumerate(_as_list(d.get("traffic"), "traffic")):
        try:
            plan = find_plan(auth, t, rec.get("up"), rec.get("core"), rec.get("down"))
        except CombineError as e:
            raise ScenarioError(f"traffic[{n}]", str(e)) from None
        traffic.append((plan, int(rec.get("count", 1))))
    run = d.get("run") or {}
    backend = run.get("backend", "symbolic")
    if backend not in ("symbolic", "concrete"):
        raise ScenarioError("run.backend", f"unknown backend {backend!r}")
    return Scenario(
        name=str(d.get("name", name)),
        topo=t,
        auth=auth,
        mode=mode,
        legacy_disable=legacy,
        per_as=per_as,
        scripted=tuple(att.get("scripted") or ()),
        random_attack=att.get("random"),
        traffic=traffic,
        seed=int(run.get("seed", 0)),
        steps=int(run.get("steps", 2000)),
        backend=backend,
        expect=dict(d.get("expect") or {}),
    )


def load_scenario(data: bytes | str, name: str = "scenario") -> Scenario:
    try:
        d = yaml.safe_load(data)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "<parse>"
        raise ScenarioError(where, getattr(e, "problem", None) or str(e)) from None
    try:
        return scenario_from_dict(d, name)
    except (SegmentError, TopologyError) as e:
        raise ScenarioError("<semantic>", str(e)) from None


def fixture_text(name: str) -> str:
    return resources.files("pathlab.harness").joinpath("scenarios", f"{name}.yaml").read_text()


def resolve(ref: str) -> Scenario:
    """Load a scenario from a file path or a shipped fixture name."""
    p = Path(ref)
    if p.exists():
        return load_scenario(p.read_bytes(), p.stem)
    if ref in FIXTURES:
        return load_scenario(fixture_text(ref), ref)
    raise ScenarioError(ref, "no such file or shipped scenario")
