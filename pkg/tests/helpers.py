"""Shared generators for packet-level tests."""

from __future__ import annotations

import random
from dataclasses import replace

from pathlab.authseg import auto_beacon
from pathlab.harness.gen import random_plans, random_topology
from pathlab.packet import make_packet
from pathlab.terms import ZERO, Nonce, xor


def world(seed: int, max_len: int = 3):
    rng = random.Random(seed)
    t = random_topology(rng)
    return rng, t, auto_beacon(t, max_len)


def honest_packets(seed: int, n: int = 6, crypto=None):
    rng, t, auth = world(seed)
    plans = random_plans(rng, t, auth, n)
    kw = {} if crypto is None else {"crypto": crypto}
    return rng, t, auth, [make_packet(p, bytes([seed % 256]), **kw) for p in plans]


def mutate(rng: random.Random, pkt):
    """Random symbolic tampering: cursor moves, flipped directions, swapped
    authenticators and altered identifiers."""
    segs = list(pkt.segments)
    k = rng.randrange(len(segs))
    s = segs[k]
    c = rng.random()
    if c < 0.25:
        s = replace(s, dir=not s.dir)
    elif c < 0.5 and len(s.hops) > 1:
        hops = list(s.hops)
        i, j = rng.sample(range(len(hops)), 2)
        hops[i] = replace(hops[i], auth=s.hops[j].auth)
        s = replace(s, hops=tuple(hops))
    elif c < 0.75:
        s = replace(s, segid=xor(s.segid, rng.choice([Nonce(999), s.hops[0].auth, ZERO])))
    else:
        return replace(pkt, curr_hf=rng.randrange(len(segs[pkt.curr_seg].hops) + 1))
    segs[k] = s
    return replace(pkt, segments=tuple(segs))
