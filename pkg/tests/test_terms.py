import random

from hypothesis import given, settings
from hypothesis import strategies as st

from pathlab.terms import (
    ZERO,
    IfLit,
    Key,
    Knowledge,
    Mac,
    MissingKeyMaterial,
    Nonce,
    Tup,
    Xor,
    concretize,
    default_keymat,
    derivable,
    is_canonical,
    learn,
    mac,
    normalize,
    xor,
    xor_bytes,
)

from oracle import ATOMS, closure_contains, dy_instance, random_term, raw_tree

KEYMAT = default_keymat(["A", "B"], seed=1)
a, b, c = Nonce(1), Nonce(2), mac(Key("A"), [IfLit(None), IfLit(2), Nonce(7)])


def test_xor_examples():
    assert xor(a, a) == ZERO
    assert xor(xor(a, b), b) == a
    assert xor(a, c) == xor(c, a) == Xor(frozenset({a, c}))
    assert xor(a, ZERO) == a


def test_mac_is_free():
    m = mac(Key("A"), [IfLit(None), IfLit(2), Nonce(7)])
    assert m == c
    assert m != mac(Key("A"), [IfLit(None), IfLit(3), Nonce(7)])
    assert m != mac(Key("B"), [IfLit(None), IfLit(2), Nonce(7)])
    inner = mac(Key("A"), [xor(a, b)])
    assert inner.body[0] == Xor(frozenset({a, b}))
    assert is_canonical(inner)


def test_text_rendering_is_sorted():
    assert xor(b, a).text == "xor(n1,n2)"
    assert c.text == "mac(key(A),if(_),if(2),n7)"


def test_learn_examples():
    k = learn(Knowledge(), Tup((a, b)))
    assert k.atoms == {a, b}
    k2 = learn(k, c)
    assert c in k2 and Key("A") not in k2 and Nonce(7) not in k2
    assert learn(k2, c) is k2


def test_derivable_examples():
    assert derivable(Knowledge(), ZERO)
    k = Knowledge(frozenset({Key("A"), IfLit(1), IfLit(2), Nonce(5)}))
    assert derivable(k, mac(Key("A"), [IfLit(1), IfLit(2), Nonce(5)]))
    assert not derivable(k, mac(Key("B"), [IfLit(1), IfLit(2), Nonce(5)]))


def test_no_mac_inversion():
    k = Knowledge(frozenset({mac(Key("A"), [Nonce(1)]), Nonce(2)}))
    assert not derivable(k, Key("A"))
    assert not derivable(k, Nonce(1))
    assert derivable(k, xor(mac(Key("A"), [Nonce(1)]), Nonce(2)))


def test_xor_span_reasoning():
    k = Knowledge(frozenset({xor(a, c), xor(b, c)}))
    assert derivable(k, xor(a, b))
    assert not derivable(k, a)
    assert derivable(learn(k, a), c)


def test_concretize_examples():
    assert concretize(ZERO, KEYMAT) == bytes(6)
    assert concretize(xor(a, a), KEYMAT) == bytes(6)
    try:
        concretize(mac(Key("Q"), [a]), KEYMAT)
    except MissingKeyMaterial:
        pass
    else:
        raise AssertionError("missing key material accepted")


def test_concretize_homomorphic_on_random_pairs():
    rng = random.Random(0)
    for _ in range(100):
        x, y = random_term(rng, ATOMS[:5], 2), random_term(rng, ATOMS[:5], 2)
        assert concretize(xor(x, y), KEYMAT) == xor_bytes(concretize(x, KEYMAT), concretize(y, KEYMAT))


def test_dy_agrees_with_brute_force_small():
    rng = random.Random(11)
    for _ in range(150):
        _, k, t = dy_instance(rng)
        kn = Knowledge()
        for x in k:
            kn = learn(kn, x)
        assert derivable(kn, t) == closure_contains(kn.atoms, t), (k, t)


def test_derivable_is_monotone():
    rng = random.Random(5)
    for _ in range(100):
        _, k, t = dy_instance(rng)
        small = Knowledge()
        for x in k[:1]:
            small = learn(small, x)
        big = small
        for x in k:
            big = learn(big, x)
        if derivable(small, t):
            assert derivable(big, t)


terms = st.builds(lambda s: random_term(random.Random(s), ATOMS, 3), st.integers(0, 10**6))


@settings(max_examples=150, deadline=None)
@given(terms, terms, terms)
def test_xor_group_laws(x, y, z):
    assert xor(xor(x, y), z) == xor(x, xor(y, z))
    assert xor(x, y) == xor(y, x)
    assert xor(x, ZERO) == x
    assert xor(x, x) == ZERO
    assert is_canonical(xor(x, y))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_normalize_idempotent(seed):
    t = raw_tree(random.Random(seed), ATOMS, 4)
    n = normalize(t)
    assert is_canonical(n)
    assert normalize(n) == n


def test_mac_body_keeps_xor_opaque():
    m = Mac(Key("A"), (xor(a, b),))
    assert xor(m, m) == ZERO
    assert xor(m, a) != xor(Mac(Key("A"), (a,)), b)
