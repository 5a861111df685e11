from pathlab.properties import (
    LOOP_FREE,
    PATH_AUTH,
    VALLEY_FREE,
    check_all,
    check_loop_freedom,
    check_path_authorization,
    check_valley_freedom,
    find_loops,
    hop_runs,
    is_infix,
)


def fwd(tag, a, ingress, egress, seg=0, d=True, result="forward", switch=False, history=()):
    return {
        "ev": "forward", "tag": tag, "as": a, "ingress": ingress, "egress": egress,
        "seg": seg, "dir": d, "switch": switch, "result": result, "history": [list(h) for h in history],
    }


C, P, Q = "Core", "ProvCust", "CustProv"


def honest_down_trace():
    return [
        fwd(0, "A", "int", 4, history=[("A", 4, "E", 1, P)]),
        fwd(0, "E", 1, "int", history=[("A", 4, "E", 1, P)]),
        fwd(0, "E", "int", 3, history=[("A", 4, "E", 1, P), ("E", 3, "H", 1, P)]),
        fwd(0, "H", 1, None, result="deliver", history=[("A", 4, "E", 1, P), ("E", 3, "H", 1, P)]),
    ]


def test_hop_runs_merge_handoff():
    runs = hop_runs(honest_down_trace())
    assert runs == [(True, [("A", None, 4), ("E", 1, 3), ("H", 1, None)])]


def test_hop_runs_split_on_switch():
    evs = [
        fwd(1, "D", "int", 1, d=False),
        fwd(1, "A", 3, "int", d=False, switch=True),
        fwd(1, "A", "int", 4, seg=1),
    ]
    assert hop_runs(evs) == [(False, [("D", None, 1), ("A", 3, None)]), (True, [("A", None, 4)])]


def test_is_infix_wildcard_only_first():
    trav = [("A", None, 4), ("E", 1, 3), ("H", 1, None)]
    assert is_infix([("E", None, 3), ("H", 1, None)], trav)
    assert not is_infix([("E", 1, 3), ("H", None, None)], trav)
    assert not is_infix([("E", 1, 4)], trav)


def test_path_authorization(sample8):
    assert check_path_authorization(honest_down_trace(), sample8.auth) == []
    bad = [fwd(5, "H", "int", 1, d=False), fwd(5, "E", 3, 4, d=False)]
    vs = check_path_authorization(bad, sample8.auth)
    assert [v.property for v in vs] == [PATH_AUTH]
    assert vs[0].witness == (("H", None, 1), ("E", 3, 4))
    assert check_path_authorization(bad, sample8.auth, {"E"}) == []


def test_drops_are_ignored(sample8):
    bad = [fwd(5, "H", "int", 1, d=False, result="drop")]
    assert check_all(bad, sample8.auth) == []


def test_valley():
    h = [("A", 4, "E", 1, P), ("E", 2, "C", 3, Q)]
    vs = check_valley_freedom([fwd(2, "E", 1, 2, history=h)])
    assert [v.property for v in vs] == [VALLEY_FREE]
    assert vs[0].witness == tuple(tuple(e) for e in h)
    ok = [("D", 1, "A", 3, Q), ("A", 1, "B", 1, C), ("B", 2, "C", 2, C), ("C", 3, "E", 2, P)]
    assert check_valley_freedom([fwd(3, "C", 2, 3, history=ok)]) == []


LOOP = [("A", 1, "B", 1, C), ("B", 2, "C", 1, C), ("C", 2, "A", 2, C), ("A", 1, "B", 1, C)]


def test_find_loops_witness():
    ((tag, witness, on_loop),) = find_loops([fwd(4, "A", 2, 1, history=LOOP)])
    assert tag == 4
    assert witness == tuple(tuple(e) for e in LOOP)
    assert on_loop == {"B", "C", "A"}


def test_loop_modes():
    tr = [fwd(4, "A", 2, 1, history=LOOP)]
    assert [v.property for v in check_loop_freedom(tr)] == [LOOP_FREE]
    assert check_loop_freedom(tr, {"A"}, "weak") == []
    assert len(check_loop_freedom(tr, {"A"}, "strong")) == 1
    assert check_loop_freedom(tr, {"A", "B", "C"}, "strong") == []


def test_revisiting_an_as_is_not_a_loop():
    h = [("A", 1, "B", 1, C), ("B", 2, "C", 1, C), ("C", 2, "A", 2, C), ("A", 3, "D", 1, P)]
    assert find_loops([fwd(6, "A", 2, 3, history=h)]) == []


def test_violation_json():
    v = check_loop_freedom([fwd(4, "A", 2, 1, history=LOOP)])[0]
    d = v.as_dict()
    assert d["property"] == LOOP_FREE and d["mode"] == "strong"
    assert d["witness"][0] == ["A", 1, "B", 1, C]
