"""Random hierarchical topologies and verified-mode scenarios for fuzzing."""

from __future__ import annotations

import random

from ..authseg import CombineError, SegKind, auto_beacon, combine
from ..topology import LinkType, Topology
from .scenario import Scenario

ATTACKS = ("splice", "loop", "sourceroute", "verify_only", "reflect", "forge_loop")


def random_topology(rng: random.Random, n_min: int = 4, n_max: int = 12, max_compromised: int = 3) -> Topology:
    """Fully meshed core of 1-3 ASes; every other AS buys transit from 1-2
    earlier ASes, so the provider relation is acyclic."""
    n = rng.randint(n_min, n_max)
    n_core = rng.randint(1, min(3, n - 1))
    names = [f"AS{k}" for k in range(n)]
    ases = {a: k < n_core for k, a in enumerate(names)}
    nif = {a: 0 for a in names}
    links = []

    def link(a, b, lt):
        nif[a] += 1
        nif[b] += 1
        links.append((a, nif[a], b, nif[b], lt))

    for i in range(n_core):
        for j in range(i + 1, n_core):
            link(names[i], names[j], LinkType.CORE)
    for k in range(n_core, n):
        provs = rng.sample(names[:k], min(k, rng.randint(1, 2)))
        for p in sorted(provs):
            link(p, names[k], LinkType.PROV_CUST)
    comp = rng.sample(names, rng.randint(0, min(max_compromised, n)))
    return Topology.build(ases, links, comp)


def random_plans(rng: random.Random, t: Topology, auth, k: int, tries: int = 200) -> list:
    downs = auth.of_kind(SegKind.DOWN)
    cores = auth.of_kind(SegKind.CORE)
    plans = []
    for _ in range(tries):
        if len(plans) >= k:
            break
        shape = rng.choice(("up", "down", "core", "updown", "upcoredown"))
        up = rng.choice(downs) if "up" in shape and downs else None
        down = rng.choice(downs) if shape.endswith("down") and downs else None
        core = rng.choice(cores) if "core" in shape and cores else None
        try:
            plans.append(combine(up, core, down, core_dir=rng.random() < 0.5, t=t))
        except (CombineError, IndexError):
            continue
    return plans


def random_scenario(seed: int, steps: int = 2000, attack_budget: int = 30) -> Scenario:
    rng = random.Random(seed)
    t = random_topology(rng)
    auth = auto_beacon(t, rng.randint(2, 3))
    plans = random_plans(rng, t, auth, rng.randint(2, 6))
    scripted = tuple(a for a in ATTACKS if rng.random() < 0.5)
    return Scenario(
        name=f"random-{seed}",
        topo=t,
        auth=auth,
        mode="verified",
        scripted=scripted,
        random_attack={"seed": seed, "budget": attack_budget},
        traffic=[(p, rng.randint(1, 3)) for p in plans],
        seed=seed,
        steps=steps,
    )
