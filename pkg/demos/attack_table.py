"""Replay the four historical data-plane attacks.

Each attack runs twice on the same topology: once against a router with
the check that would stop it switched off, and once against the fully
checked router. The first run shows which property breaks; the second
shows the drop reason that prevents it.

Run: python3 demos/attack_table.py
"""

from pathlab.attacker import scripted_attacks
from pathlab.harness.scenario import resolve
from pathlab.harness.sim import run

print(f"{'attack':12} {'checks off':45} {'breaks':10} {'fixed by':18}")
for name, a in scripted_attacks().items():
    sc = resolve(name.replace("_", ""))
    legacy = run(sc, mode="legacy")
    verified = run(sc, mode="verified")
    broke = [p for p in ("PathAuth", "ValleyFree", "LoopFree") if legacy.count(p)]
    drop = ",".join(sorted(verified.drops)) or "-"
    print(f"{name:12} {', '.join(a.disabled):45} {'/'.join(broke) or '-':10} {drop:18}")
    for v in legacy.violations[a.expect][:1]:
        print(f"{'':12} witness: {v.as_dict()['witness']}")
