"""How many compromised ASes does it take to loop a packet?

Line topology P (core) - Y - X with X compromised. X reflects a
down-segment back up through Y as a relabeled segment. Y is honest, so
under the strong loop property this counts as a violation; under the
weak property one compromised AS on the loop is enough to excuse it.

On the core triangle A-B-C, forging a loop with all checks on needs all
three keys: with only A compromised the forged hops at B fail their MAC.

Run: python3 demos/loop_delta.py
"""

from dataclasses import replace

from pathlab.harness.scenario import resolve
from pathlab.harness.sim import run
from pathlab.properties import find_loops

sc = resolve("reflect_line")
for disabled in [("segment_switch_checks", "intra_segment_valley_check"), ("segment_switch_checks",),
                 ("intra_segment_valley_check",), ()]:
    rep = run(replace(sc, legacy_disable=disabled), mode="legacy" if disabled else "verified")
    label = "off: " + ", ".join(disabled) if disabled else "all checks on"
    print(f"reflect  {label:60} strong={rep.count('LoopFree')} weak={rep.count('LoopFreeWeak')}"
          f" drops={dict(rep.drops)}")

for name in ("triangle_one", "triangle_all"):
    rep = run(resolve(name))
    loops = find_loops(rep.trace)
    print(f"{name:13} compromised={sorted(rep.trace[0]['compromised'])} raw loops={len(loops)}"
          f" strong={rep.count('LoopFree')} drops={dict(rep.drops)}")
