import pytest

from pathlab.authseg import (
    AuthSet,
    CombineError,
    SegKind,
    SegmentError,
    auto_beacon,
    combine,
    combine_parts,
    construct_segment,
    hop_sigma,
    validate_segment,
)
from pathlab.terms import IfLit, Key, Nonce, mac, xor, xor_all


def test_beta_chain_frozen(sample8_topo):
    s = construct_segment(sample8_topo, "Down", [("A", None, 4), ("E", 1, 3), ("H", 1, None)], 9)
    s0 = mac(Key("A"), [IfLit(None), IfLit(4), Nonce(9)])
    b1 = xor(Nonce(9), s0)
    s1 = mac(Key("E"), [IfLit(1), IfLit(3), b1])
    assert s.hops[0].auth == s0
    assert s.hops[1].auth == s1
    assert s.beta[2] == xor_all([Nonce(9), s0, s1])
    assert s.ases == ("A", "E", "H")
    assert validate_segment(sample8_topo, s) == []


def test_traversal_both_directions(sample8_topo):
    s = construct_segment(sample8_topo, "Down", [("A", None, 4), ("E", 1, 3), ("H", 1, None)], 9)
    assert s.traversal(True) == [("A", None, 4), ("E", 1, 3), ("H", 1, None)]
    assert s.traversal(False) == [("H", None, 1), ("E", 3, 1), ("A", 4, None)]


@pytest.mark.parametrize(
    "kind,route,msg",
    [
        ("Down", [("E", None, 3), ("H", 1, None)], "non-core"),
        ("Down", [("A", None, 1), ("B", 1, None)], "Core"),
        ("Core", [("A", None, 3), ("D", 1, None)], "non-core AS D"),
        ("Down", [("A", None, 4), ("E", 2, None)], "not linked"),
        ("Up", [("H", None, 1), ("E", 3, None)], "stored as down"),
        ("Down", [("A", 1, 4), ("E", 1, None)], "prev is not empty"),
    ],
)
def test_construct_rejects(sample8_topo, kind, route, msg):
    with pytest.raises(SegmentError, match=msg):
        construct_segment(sample8_topo, kind, route, 1)


def test_validate_detects_tampering(sample8_topo):
    from dataclasses import replace

    s = construct_segment(sample8_topo, "Down", [("A", None, 4), ("E", 1, 3), ("H", 1, None)], 9)
    hops = list(s.hops)
    hops[1] = replace(hops[1], auth=hop_sigma("E", 1, 4, s.beta[1]))
    bad = replace(s, hops=tuple(hops))
    assert any("authenticator" in m for m in validate_segment(sample8_topo, bad))


def test_auto_beacon_sample8(sample8):
    auth = sample8.auth
    assert all(validate_segment(sample8.topo, s) == [] for s in auth)
    assert auth.find("Down", ["A", "E", "H"]) is not None
    assert auth.find("Up", ["H", "E", "A"]) is not None
    assert auth.find("Core", ["B", "A"]) is not None
    assert auth.find("Down", ["E", "H"]) is None
    nonces = [s.beta[0] for s in auth]
    assert len(set(nonces)) == len(nonces)
    downs = auth.of_kind(SegKind.DOWN)
    assert {s.ases for s in downs if len(s.hops) == 1} == {("A",), ("B",), ("C",)}


def test_auto_beacon_is_deterministic(sample8_topo):
    assert auto_beacon(sample8_topo, 3) == auto_beacon(sample8_topo, 3)


def test_combine_up_core_down(sample8):
    a = sample8.auth
    plan = combine(a.find("Up", ["D", "A"]), a.find("Core", ["A", "B"]), None, core_dir=True, t=sample8.topo)
    assert plan.as_path() == ["D", "A", "B"]
    assert plan.source == "D" and plan.destination == "B"


def test_combine_rejections(sample8):
    a, t = sample8.auth, sample8.topo
    with pytest.raises(CombineError, match="joint mismatch"):
        combine(a.find("Up", ["D", "A"]), None, a.find("Down", ["C", "E", "H"]), t=t)
    with pytest.raises(CombineError, match="order"):
        combine_parts([("Down", a.find("Down", ["A", "D"]), True), ("Up", a.find("Down", ["A", "D"]), False)])
    with pytest.raises(CombineError, match="single-hop"):
        combine(a.find("Up", ["D", "A"]), None, a.find("Down", ["A"]), t=t)
    with pytest.raises(CombineError, match="construction direction"):
        combine_parts([("Up", a.find("Down", ["A", "D"]), True)])
    with pytest.raises(CombineError, match="at most three"):
        s = a.find("Down", ["A", "D"])
        combine_parts([("Down", s, True)] * 4)


def test_authset_membership(sample8):
    s = next(iter(sample8.auth))
    assert s in sample8.auth
    assert len(AuthSet()) == 0
