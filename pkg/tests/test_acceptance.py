"""End-to-end acceptance criteria, one test each, with their stated budgets.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import random
import time
from dataclasses import replace

from pathlab.attacker import scripted_attacks
from pathlab.crypto import SYMBOLIC, ConcreteCrypto
from pathlab.harness.gen import random_plans, random_scenario, random_topology
from pathlab.harness.scenario import FIXTURES, resolve
from pathlab.harness.sim import WEAK_LOOP, run, trace_lines
from pathlab.authseg import auto_beacon
from pathlab.packet import (
    CodecError,
    WireContext,
    abs_packet,
    extract_path,
    make_packet,
    marshal,
    packet_violations,
    unmarshal,
)
from pathlab.properties import LOOP_FREE, PATH_AUTH, VALLEY_FREE, find_loops
from pathlab.router import INTERNAL, CheckFlags, Deliver, Forward, RouterConfig, guard, process, upd, upd_abstract
from pathlab.terms import ZERO, Knowledge, default_keymat, derivable, is_canonical, learn, normalize, xor
from pathlab.topology import neighbor

from conftest import record_acceptance
from helpers import mutate, world
from oracle import ATOMS, closure_contains, dy_instance, random_term, raw_tree

STRONG = (PATH_AUTH, VALLEY_FREE, LOOP_FREE)


def _strong(rep) -> int:
    return sum(rep.count(p) for p in STRONG)


def test_01_random_verified_scenarios():
    t0 = time.monotonic()
    bad = []
    sizes = set()
    for seed in range(200):
        sc = random_scenario(seed, steps=2000)
        sizes.add(len(sc.topo.ases))
        rep = run(sc)
        if _strong(rep):
            bad.append((seed, rep.summary()))
    dt = time.monotonic() - t0
    ok = not bad and dt < 300
    record_acceptance(1, ok, f"200 scenarios, {len(bad)} with violations, {min(sizes)}-{max(sizes)} ASes, {dt:.1f}s")
    assert ok, bad[:3]


def test_02_attack_regression():
    t0 = time.monotonic()
    rows = []
    for name, exp in scripted_attacks().items():
        sc = resolve(name.replace("_", ""))
        assert tuple(sc.legacy_disable) == exp.disabled
        legacy = run(sc, mode="legacy")
        verified = run(sc, mode="verified")
        rows.append(
            (
                name,
                legacy.count(exp.expect) > 0,
                verified.drops.get(exp.verified_drop, 0) > 0 and _strong(verified) == 0,
            )
        )
    dt = time.monotonic() - t0
    ok = all(l and v for _, l, v in rows) and dt < 30
    detail = ", ".join(f"{n}:{'ok' if l and v else 'bad'}" for n, l, v in rows)
    record_acceptance(2, ok, f"8 runs in {dt:.2f}s ({detail})")
    assert ok, rows


def test_03_strengthened_loop_property():
    sc = resolve("reflect_line")
    results = {}
    for label, disabled in [
        ("both off", ("segment_switch_checks", "intra_segment_valley_check")),
        ("switch off", ("segment_switch_checks",)),
        ("valley off", ("intra_segment_valley_check",)),
        ("all on", ()),
    ]:
        rep = run(replace(sc, legacy_disable=disabled), mode="legacy" if disabled else "verified")
        results[label] = (rep.count(LOOP_FREE), rep.count(WEAK_LOOP))
    one = run(resolve("triangle_one"))
    allc = run(resolve("triangle_all"))
    checks = {
        "one compromised, both checks off: strong loop": results["both off"][0] > 0,
        "weak mode forgives it": results["both off"][1] == 0,
        "no loop with either check on": all(results[k][0] == 0 for k in ("switch off", "valley off", "all on")),
        "triangle, one compromised: no loop": not find_loops(one.trace) and _strong(one) == 0,
        "triangle, all compromised: loop, forgiven": bool(find_loops(allc.trace)) and _strong(allc) == 0,
    }
    ok = all(checks.values())
    record_acceptance(3, ok, "; ".join(f"{k}={'yes' if v else 'NO'}" for k, v in checks.items()))
    assert ok, (results, checks)


def _guard_passing(n: int):
    """Yield ``(cfg, topo, pkt, ingress, egress, switching)`` for packets
    walked hop by hop through routers until their guard fails."""
    seed = 0
    while n > 0:
        rng, t, auth = world(seed)
        seed += 1
        concrete = rng.random() < 0.3
        crypto = ConcreteCrypto(default_keymat(t.ases)) if concrete else SYMBOLIC
        checks = CheckFlags() if rng.random() < 0.8 else CheckFlags.legacy(
            *rng.sample(["segment_switch_checks", "intra_segment_valley_check", "verify_only_handling"], 1)
        )
        for plan in random_plans(rng, t, auth, 6):
            pkt = make_packet(plan, b"p", crypto)
            a, ingress = pkt.current_hop().as_id, INTERNAL
            for _ in range(20):
                if not concrete and rng.random() < 0.15:
                    pkt = mutate(rng, pkt)
                h = pkt.current_hop()
                if h is None:
                    break
                tout = h.traversal(pkt.current_segment().dir)[1]
                name = t.router_for(a, tout if ingress == INTERNAL else ingress)
                cfg = RouterConfig(a, name, t.owned_interfaces(a, name), checks, crypto)
                reason, egress, switching = guard(cfg, t, pkt, ingress)
                if reason is not None:
                    break
                yield cfg, t, pkt, ingress, egress, switching, crypto
                n -= 1
                dec = process(cfg, t, pkt, ingress)
                if isinstance(dec, Deliver) or n <= 0:
                    break
                assert isinstance(dec, Forward)
                pkt = dec.pkt
                if dec.egress != INTERNAL:
                    nb = neighbor(t, a, dec.egress)
                    if nb is None:
                        break
                    a, ingress = nb
                else:
                    ingress = INTERNAL
            if n <= 0:
                return


def test_04_refinement_square():
    t0 = time.monotonic()
    bad = []
    count = 0
    for cfg, t, pkt, ingress, egress, switching, crypto in _guard_passing(10_000):
        count += 1
        a_pkt = abs_packet(pkt, crypto)
        handoff = egress == INTERNAL and not switching
        if not handoff:
            if abs_packet(upd(cfg, pkt, switching), crypto) != upd_abstract(a_pkt, switching):
                bad.append(("square", cfg.as_id, pkt))
        r, _, _ = guard(cfg, t, a_pkt, ingress, abstract=True, labels=(egress, switching))
        if r is not None:
            bad.append(("guard", r, cfg.as_id, pkt))
    dt = time.monotonic() - t0
    ok = count == 10_000 and not bad and dt < 60
    record_acceptance(4, ok, f"{count} guard-passing packets, {len(bad)} counterexamples, {dt:.1f}s")
    assert ok, bad[:2]


def test_05_dy_oracle():
    t0 = time.monotonic()
    rng = random.Random(2024)
    bad, positive = [], 0
    for _ in range(1000):
        atoms, k, t = dy_instance(rng)
        assert len(atoms) <= 6
        kn = Knowledge()
        for x in k:
            kn = learn(kn, x)
        want = closure_contains(kn.atoms, t)
        positive += want
        if derivable(kn, t) != want:
            bad.append((k, t))
    dt = time.monotonic() - t0
    ok = not bad and dt < 120
    record_acceptance(5, ok, f"1000 instances ({positive} derivable), {len(bad)} disagreements, {dt:.1f}s")
    assert ok, bad[:2]


def test_06_xor_laws():
    rng = random.Random(6)
    bad = 0
    for _ in range(10_000):
        x, y, z = (random_term(rng, ATOMS, 3) for _ in range(3))
        laws = (
            xor(xor(x, y), z) == xor(x, xor(y, z)),
            xor(x, y) == xor(y, x),
            xor(x, ZERO) == x,
            xor(x, x) == ZERO,
            is_canonical(xor(x, y)),
        )
        raw = raw_tree(rng, ATOMS, 4)
        n = normalize(raw)
        bad += (not all(laws)) + (normalize(n) != n)
    record_acceptance(6, bad == 0, f"10000 term triples, {bad} counterexamples")
    assert bad == 0


def test_07_nested_extraction():
    bad, segs = 0, 0
    for seed in range(50):
        t = random_topology(random.Random(seed))
        for s in auto_beacon(t, 3):
            segs += 1
            trav = s.traversal(True)
            for k, h in enumerate(s.hops):
                bad += extract_path(h.auth) != trav[: k + 1]
    record_acceptance(7, bad == 0, f"50 topologies, {segs} segments, {bad} mismatches")
    assert bad == 0


def test_08_codec():
    rng = random.Random(8)
    trips = bad = 0
    samples = []
    seed = 0
    while trips < 1000:
        r, t, auth = world(seed)
        seed += 1
        keys = default_keymat(t.ases)
        crypto = ConcreteCrypto(keys) if seed % 2 else SYMBOLIC
        for plan in random_plans(r, t, auth, 5):
            ctx = WireContext(t.ases, keys)
            pkt = make_packet(plan, bytes(r.randrange(256) for _ in range(r.randrange(8))), crypto)
            pkt = replace(pkt, curr_hf=r.randrange(len(pkt.segments[0].hops) + 1))
            b = marshal(pkt, ctx)
            samples.append((b, t.ases, keys))
            bad += unmarshal(b, ctx) != pkt
            trips += 1
    crashes = invalid = 0
    for n in range(10_000):
        base, ases, keys = rng.choice(samples)
        if n % 4 == 0:
            data = bytes(rng.randrange(256) for _ in range(rng.randrange(64)))
        else:
            data = bytearray(base)
            for _ in range(rng.randint(1, 4)):
                op = rng.random()
                if op < 0.6 and data:
                    data[rng.randrange(len(data))] = rng.randrange(256)
                elif op < 0.8:
                    data = data[: rng.randrange(len(data) + 1)]
                else:
                    data += bytes([rng.randrange(256)])
            data = bytes(data)
        try:
            pkt = unmarshal(data, WireContext(ases, keys))
        except CodecError:
            continue
        except Exception:  # any other exception is a crash
            crashes += 1
            continue
        invalid += bool(packet_violations(pkt))
    ok = bad == 0 and crashes == 0 and invalid == 0
    record_acceptance(8, ok, f"{trips} round-trips ({bad} unequal), 10000 fuzzed inputs ({crashes} crashes, {invalid} invalid)")
    assert ok


def _decisions(trace):
    keep = ("ev", "step", "as", "router", "tag", "ingress", "egress", "seg", "hf", "switch", "result", "reason", "src", "channel")
    return [{k: r.get(k) for k in keep} for r in trace if r["ev"] in ("recv", "forward", "send")]


def test_09_backend_agreement():
    diffs = []
    for name in FIXTURES:
        sc = replace(resolve(name), scripted=(), random_attack=None)
        sym = run(sc, backend="symbolic")
        con = run(sc, backend="concrete")
        if _decisions(sym.trace) != _decisions(con.trace) or sym.delivered != con.delivered:
            diffs.append(name)
    ok = not diffs
    record_acceptance(9, ok, f"{len(FIXTURES)} fixtures, differing: {diffs or 'none'}")
    assert ok


def test_10_determinism():
    diffs = []
    for name in FIXTURES:
        for mode in ("verified", "legacy"):
            a = trace_lines(run(resolve(name), mode=mode).trace)
            b = trace_lines(run(resolve(name), mode=mode).trace)
            if a != b:
                diffs.append((name, mode))
    ok = not diffs
    record_acceptance(10, ok, f"{len(FIXTURES)} fixtures x 2 modes rerun, differing: {diffs or 'none'}")
    assert ok
