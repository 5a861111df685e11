"""Seeded simulation of routers, honest senders and the attacker."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field, replace

from ..attacker import AttackerState, AttackInapplicable, Injection, build_attack, inject, random_strategy
from ..crypto import SYMBOLIC, ConcreteCrypto
from ..network import NetworkState
from ..packet import lift_packet, make_packet, render
from ..properties import LOOP_FREE, PATH_AUTH, VALLEY_FREE, check_loop_freedom, check_path_authorization, check_valley_freedom
from ..router import INTERNAL, Deliver, Drop, Forward, make_routers
from ..terms import default_keymat
from .scenario import Scenario

WEAK_LOOP = "LoopFreeWeak"


@dataclass
class RunReport:
    scenario: str
    seed: int
    mode: str
    backend: str
    violations: dict
    drops: dict
    delivered: int
    dropped: int
    sent: int
    injected: int
    rejected: int
    in_flight: int
    steps: int
    quiescent: bool
    notes: list = field(default_factory=list)
    trace_path: str | None = None
    trace: list = field(default_factory=list, repr=False)

    def fatal(self) -> bool:
        """Violations that falsify a verified-mode run."""
        return self.mode == "verified" and any(self.violations[p] for p in (PATH_AUTH, VALLEY_FREE, LOOP_FREE))

    def count(self, prop: str) -> int:
        return len(self.violations.get(prop, ()))

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "mode": self.mode,
            "backend": self.backend,
            "delivered": self.delivered,
            "dropped": self.dropped,
            "sent": self.sent,
            "injected": self.injected,
            "rejected": self.rejected,
            "in_flight": self.in_flight,
            "steps": self.steps,
            "quiescent": self.quiescent,
            "drops": dict(sorted(self.drops.items())),
            "violations": {k: [v.as_dict() for v in vs] for k, vs in self.violations.items()},
            "notes": list(self.notes),
            "trace": self.trace_path,
        }

    def summary(self) -> str:
        v = " ".join(f"{k}={len(vs)}" for k, vs in self.violations.items())
        d = ",".join(f"{k}:{n}" for k, n in sorted(self.drops.items())) or "-"
        return (
            f"{self.scenario} mode={self.mode} seed={self.seed} sent={self.sent} "
            f"injected={self.injected} delivered={self.delivered} dropped={self.dropped} "
            f"in_flight={self.in_flight} drops={d} {v}"
        )


def _target_str(target) -> str:
    kind, key = target
    return f"int:{key}" if kind == "int" else "ext:" + ",".join(map(str, key))


def _hist(pkt) -> list:
    return [[e.frm[0], e.frm[1], e.to[0], e.to[1], e.ltype.value] for e in pkt.history]


class Simulation:
    def __init__(self, sc: Scenario, seed: int | None = None, mode: str | None = None, backend: str | None = None):
        self.sc = sc
        self.t = sc.topo
        self.seed = sc.seed if seed is None else seed
        self.mode = mode or sc.mode
        self.backend = backend or sc.backend
        if self.backend == "concrete":
            self.crypto = ConcreteCrypto(default_keymat(self.t.ases))
        else:
            self.crypto = SYMBOLIC
        self.rng = random.Random(self.seed)
        self.checks = sc.checks(self.mode)
        self.routers = make_routers(self.t, self.checks, self.crypto)
        self.net = NetworkState.empty(self.t)
        self.attacker = AttackerState.initial(sc.auth, self.t.compromised)
        self.trace: list = []
        self.next_tag = 0
        self.honest = [[plan, n] for plan, n in sc.traffic]
        self.scripted: list = []
        self.notes: list = []
        for name in sc.scripted:
            try:
                self.scripted.extend(build_attack(name, self.t, sc.auth, self.t.compromised))
            except AttackInapplicable as e:
                self.notes.append(f"{name}: inapplicable ({e})")
        ra = sc.random_attack
        self.strategy = None
        if ra:
            rseed = int(ra.get("seed", self.seed))
            self.strategy = random_strategy(rseed, int(ra.get("budget", 0)), self.t, sc.auth, self.t.compromised)
        self.stats = Counter()
        self.drops: Counter = Counter()
        self.step = 0

    # -- helpers ------------------------------------------------------------

    def emit(self, rec: dict) -> None:
        self.trace.append(rec)

    def _observe(self, pkt) -> None:
        if self.backend == "symbolic":
            self.attacker.observe(pkt)
            if self.strategy is not None:
                self.strategy.note(pkt)

    def _tag(self, pkt):
        tag = self.next_tag
        self.next_tag += 1
        return replace(pkt, tag=tag, history=())

    def _int_router(self, a):
        q = self.net.int_[a]
        head = q[0]
        h = head.current_hop()
        tout = h.traversal(head.current_segment().dir)[1] if h is not None else None
        return self.t.router_for(a, tout)

    def enabled(self) -> list:
        ev = []
        for a, q in self.net.int_.items():
            if q:
                ev.append(("recv", (a, self._int_router(a)), INTERNAL))
        for (b, j, a, i), q in self.net.ext.items():
            if q:
                ev.append(("recv", (a, self.t.router_for(a, i)), i))
        for key, r in self.routers.items():
            for src in r.pending_inputs():
                ev.append(("forward", key, src))
            for eg in r.pending_outputs():
                ev.append(("send", key, eg))
        for n, (_, left) in enumerate(self.honest):
            if left > 0:
                ev.append(("honest", n, None))
        if self.scripted or (self.strategy is not None and self.strategy.remaining() > 0):
            ev.append(("attack", None, None))
        return ev

    # -- events -------------------------------------------------------------

    def do_recv(self, key, src):
        r = self.routers[key]
        pkt = r.recv(self.net, src)
        self.emit({"ev": "recv", "step": self.step, "as": key[0], "router": key[1], "src": src, "tag": pkt.tag})

    def do_forward(self, key, src):
        r = self.routers[key]
        ingress, before, dec = r.forward(src)
        seg = before.current_segment()
        rec = {
            "ev": "forward",
            "step": self.step,
            "as": key[0],
            "router": key[1],
            "tag": before.tag,
            "ingress": ingress,
            "egress": None,
            "seg": before.curr_seg,
            "hf": before.curr_hf,
            "dir": seg.dir if seg is not None else None,
            "kind": seg.kind.label if seg is not None else None,
            "switch": False,
            "result": "",
            "reason": None,
            "before": render(before),
            "after": None,
            "history": _hist(before),
        }
        if isinstance(dec, Drop):
            rec["result"] = "drop"
            rec["reason"] = dec.reason.value
            self.drops[dec.reason.value] += 1
            self.stats["dropped"] += 1
        elif isinstance(dec, Deliver):
            rec["result"] = "deliver"
            rec["after"] = render(dec.pkt)
            self.stats["delivered"] += 1
        else:
            rec.update(result="forward", egress=dec.egress, switch=dec.switched, after=render(dec.pkt), history=_hist(dec.pkt))
        self.emit(rec)

    def do_send(self, key, egress):
        r = self.routers[key]
        res = r.send(self.net, egress)
        rec = {"ev": "send", "step": self.step, "as": key[0], "router": key[1], "egress": egress}
        if isinstance(res, Drop):
            rec.update(tag=res.pkt.tag, result="drop", reason=res.reason.value)
            self.drops[res.reason.value] += 1
            self.stats["dropped"] += 1
        else:
            pkt, (kind, ch) = res
            rec.update(tag=pkt.tag, result="sent", channel=_target_str((kind, ch)))
            self._observe(pkt)
        self.emit(rec)

    def do_honest(self, n):
        plan = self.honest[n][0]
        self.honest[n][1] -= 1
        pkt = self._tag(make_packet(plan, b"hello", self.crypto))
        self.net.push_int(plan.source, pkt)
        self._observe(pkt)
        self.stats["sent"] += 1
        self.emit(
            {
                "ev": "inject",
                "step": self.step,
                "tag": pkt.tag,
                "src": "honest",
                "label": "-".join(plan.as_path()),
                "target": _target_str(("int", plan.source)),
                "accepted": True,
                "gap": [],
                "pkt": render(pkt),
            }
        )

    def do_attack(self):
        if self.scripted:
            inj = self.scripted.pop(0)
        else:
            inj = self.strategy.next(self.attacker)
            if inj is None:
                self.emit({"ev": "attack-idle", "step": self.step})
                return
        pkt = self._tag(inj.pkt)
        res = inject(self.attacker, _Lifter(self.net, self.crypto), Injection(inj.target, pkt, inj.label), self.t)
        if res.accepted:
            self.stats["injected"] += 1
            self._observe(pkt)
        else:
            self.stats["rejected"] += 1
        self.emit(
            {
                "ev": "inject",
                "step": self.step,
                "tag": pkt.tag,
                "src": "attacker",
                "label": inj.label,
                "target": _target_str(inj.target),
                "accepted": res.accepted,
                "gap": list(res.gap),
                "pkt": render(pkt),
            }
        )

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunReport:
        self.emit(
            {
                "ev": "meta",
                "scenario": self.sc.name,
                "seed": self.seed,
                "mode": self.mode,
                "backend": self.backend,
                "compromised": sorted(self.t.compromised),
                "notes": list(self.notes),
            }
        )
        quiescent = False
        while self.step < self.sc.steps:
            ev = self.enabled()
            if not ev:
                quiescent = True
                break
            kind, key, arg = ev[self.rng.randrange(len(ev))]
            if kind == "recv":
                self.do_recv(key, arg)
            elif kind == "forward":
                self.do_forward(key, arg)
            elif kind == "send":
                self.do_send(key, arg)
            elif kind == "honest":
                self.do_honest(key)
            else:
                self.do_attack()
            self.step += 1
        in_flight = self.net.count() + sum(
            len(q) for r in self.routers.values() for b in (r.input_buffer, r.output_buffer) for q in b.values()
        )
        self.emit({"ev": "end", "steps": self.step, "quiescent": quiescent, "in_flight": in_flight})
        comp = self.t.compromised
        violations = {
            PATH_AUTH: check_path_authorization(self.trace, self.sc.auth, comp),
            VALLEY_FREE: check_valley_freedom(self.trace),
            LOOP_FREE: check_loop_freedom(self.trace, comp, "strong"),
            WEAK_LOOP: check_loop_freedom(self.trace, comp, "weak"),
        }
        return RunReport(
            scenario=self.sc.name,
            seed=self.seed,
            mode=self.mode,
            backend=self.backend,
            violations=violations,
            drops=dict(self.drops),
            delivered=self.stats["delivered"],
            dropped=self.stats["dropped"],
            sent=self.stats["sent"],
            injected=self.stats["injected"],
            rejected=self.stats["rejected"],
            in_flight=in_flight,
            steps=self.step,
            quiescent=quiescent,
            notes=list(self.notes),
        )


class _Lifter:
    """Network view that converts accepted injections to the run's backend."""

    def __init__(self, net: NetworkState, crypto):
        self.net, self.crypto = net, crypto

    def push_int(self, a, pkt):
        self.net.push_int(a, lift_packet(pkt, self.crypto))

    def push_ext(self, ch, pkt):
        self.net.push_ext(ch, lift_packet(pkt, self.crypto))


def trace_lines(trace: list) -> str:
    return "".join(json.dumps(rec, separators=(",", ":")) + "\n" for rec in trace)


def run(sc: Scenario, seed: int | None = None, mode: str | None = None, backend: str | None = None,
        trace_path: str | None = None) -> RunReport:
    sim = Simulation(sc, seed, mode, backend)
    rep = sim.run()
    rep.trace = sim.trace  # in-memory copy for callers and tests
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as f:
            f.write(trace_lines(sim.trace))
        rep.trace_path = str(trace_path)
    return rep


def read_trace(path: str) -> list:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
