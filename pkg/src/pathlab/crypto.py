"""Hop-authenticator backends used by routers: symbolic terms or 6-byte strings.

Both compute ``MAC_K_A(prev, next, segid)`` and the segment-identifier XOR.
The concrete backend agrees with :func:`pathlab.terms.concretize`, so a
packet concretized term by term validates exactly when its symbolic
original does (up to truncation collisions).
"""

from __future__ import annotations

from typing import Mapping

from .terms import ZERO, Concretizer, IfLit, Key, Mac, WIDTH, mac_bytes, xor, xor_bytes


class SymbolicCrypto:
    name = "symbolic"
    zero = ZERO

    def hop_mac(self, as_id, prev, nxt, segid):
        return Mac(Key(as_id), (IfLit(prev), IfLit(nxt), segid))

    def xor(self, a, b):
        return xor(a, b)

    def lift(self, t):
        return t


class ConcreteCrypto:
    name = "concrete"
    zero = bytes(WIDTH)

    def __init__(self, keymat: Mapping[str, bytes]):
        self.keymat = keymat
        self.conc = Concretizer(keymat)

    def hop_mac(self, as_id, prev, nxt, segid):
        if not isinstance(segid, bytes):
            return None
        data = self.conc(IfLit(prev)) + self.conc(IfLit(nxt)) + segid
        return mac_bytes(self.conc.key(as_id), data)

    def xor(self, a, b):
        return xor_bytes(a, b)

    def lift(self, t):
        return self.conc(t)


SYMBOLIC = SymbolicCrypto()
