"""Walk one packet across the sample topology and watch the identifier chain.

A leaf D sends to H through core A: the up-segment D->A, a switch at A,
then the down-segment A->E->H. AS E runs two routers, so the packet is
handed across E's internal network on the way.

Run: python3 demos/honest_forwarding.py
"""

from pathlab.harness.scenario import find_plan, resolve
from pathlab.network import NetworkState
from pathlab.packet import make_packet, render
from pathlab.router import INTERNAL, CheckFlags, Deliver, Forward, make_routers

sc = resolve("sample8")
t = sc.topo
plan = find_plan(sc.auth, t, up=["D", "A"], down=["A", "E", "H"])
pkt = make_packet(plan, b"hello")
print("path plan:", " -> ".join(plan.as_path()))
print("sent     :", render(pkt))

routers = make_routers(t, CheckFlags.verified())
net = NetworkState.empty(t)
net.push_int("D", pkt)
at, src = "D", INTERNAL
while True:
    h = net.int_[at][0].current_hop() if src == INTERNAL else None
    owner = t.router_for(at, src if src != INTERNAL else h.traversal(net.int_[at][0].current_segment().dir)[1])
    r = routers[(at, owner)]
    r.recv(net, src)
    ingress, before, dec = r.forward(src)
    if isinstance(dec, Deliver):
        print(f"{at}/{owner}: delivered after {len(dec.pkt.history)} inter-AS links")
        break
    if not isinstance(dec, Forward):
        print(f"{at}/{owner}: dropped ({dec.reason.value})")
        break
    what = "segment switch" if dec.switched else ("hand-off" if dec.egress == INTERNAL else f"out of {dec.egress}")
    print(f"{at}/{owner}: in {ingress}, {what}")
    print("           ", render(dec.pkt))
    r.send(net, dec.egress)
    if dec.egress == INTERNAL:
        src = INTERNAL
    else:
        at, src = t.links[(at, dec.egress)]

print("\nghost history:")
for e in dec.pkt.history:
    print(f"  {e.frm} -> {e.to}  {e.ltype.value}")
