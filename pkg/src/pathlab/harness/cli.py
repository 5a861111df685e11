"""Command line: ``pathlab run|check|regress|fuzz``.

Exit codes: 0 success, 1 property violation in verified mode (or a failed
regression), 2 usage or parse error. ``PATHLAB_SEED`` overrides the
default seed when ``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import yaml

from ..attacker import scripted_attacks
from ..authseg import AuthSegment, AuthSet, HopField, SegKind
from ..properties import check_loop_freedom, check_path_authorization, check_valley_freedom
from .gen import random_scenario
from .scenario import ScenarioError, resolve
from .sim import read_trace, run

SEED_ENV = "PATHLAB_SEED"
REGRESSION = ("splice", "loop", "sourceroute", "verifyonly")


class UsageError(Exception):
    pass


def _env_seed():
    v = os.environ.get(SEED_ENV)
    if v is None:
        return None
    try:
        return int(v)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {v!r}") from None


def auth_to_json(auth: AuthSet) -> dict:
    return {
        "segments": [
            {"kind": s.kind.label, "route": [[h.as_id, h.prev, h.next] for h in s.hops]} for s in auth
        ]
    }


def _load_auth(path: str):
    """Authorized segments and compromised set from a scenario or an authset JSON."""
    p = Path(path)
    if p.suffix in (".yaml", ".yml") or not p.exists():
        sc = resolve(path)
        return sc.auth, sc.compromised
    d = json.loads(p.read_text())
    segs = []
    for rec in d["segments"]:
        # re-checking only reads hop fields, so authenticators are not rebuilt
        hops = tuple(HopField(x, prv, nxt, None) for x, prv, nxt in rec["route"])
        segs.append(AuthSegment(SegKind.parse(rec["kind"]), hops, ()))
    return AuthSet(tuple(segs)), frozenset(d.get("compromised", ()))


def cmd_run(a) -> int:
    sc = resolve(a.scenario)
    seed = a.seed if a.seed is not None else _env_seed()
    rep = run(sc, seed=seed, mode=a.mode, backend=a.backend, trace_path=a.trace)
    print(rep.summary())
    for note in rep.notes:
        print(f"note: {note}")
    for prop, vs in rep.violations.items():
        for v in vs:
            print(f"violation {prop} tag={v.tag} mode={v.mode} witness={json.dumps(v.as_dict()['witness'])}")
    if a.report:
        Path(a.report).write_text(json.dumps(rep.as_dict(), indent=2) + "\n")
    if a.auth_out:
        d = auth_to_json(sc.auth)
        d["compromised"] = sorted(sc.compromised)
        Path(a.auth_out).write_text(json.dumps(d, indent=1) + "\n")
    return 1 if rep.fatal() else 0


def cmd_check(a) -> int:
    trace = read_trace(a.trace)
    auth, comp = _load_auth(a.auth)
    meta = next((r for r in trace if r.get("ev") == "meta"), {})
    comp = frozenset(meta.get("compromised", comp))
    vs = (
        check_path_authorization(trace, auth, comp)
        + check_valley_freedom(trace)
        + check_loop_freedom(trace, comp, a.loop_mode)
    )
    for v in vs:
        print(json.dumps(v.as_dict()))
    print(f"{len(vs)} violation(s)")
    return 1 if vs and meta.get("mode", "verified") == "verified" else 0


def regress(seed=None, out=print) -> bool:
    """Table of attack runs; ``True`` when every expectation holds."""
    cat = {c.name.replace("_", ""): c for c in scripted_attacks().values()}
    ok = True
    for name in REGRESSION:
        sc = resolve(name)
        exp = cat[name]
        legacy = run(sc, seed=seed, mode="legacy")
        verified = run(sc, seed=seed, mode="verified")
        l_ok = legacy.count(exp.expect) > 0
        v_ok = not verified.fatal() and verified.drops.get(exp.verified_drop, 0) > 0
        ok &= l_ok and v_ok
        out(
            f"{'PASS' if l_ok else 'FAIL'} {name} legacy: {exp.expect}={legacy.count(exp.expect)}"
        )
        out(
            f"{'PASS' if v_ok else 'FAIL'} {name} verified: {exp.verified_drop}="
            f"{verified.drops.get(exp.verified_drop, 0)} violations="
            f"{sum(len(v) for k, v in verified.violations.items() if k != 'LoopFreeWeak')}"
        )
    return ok


def cmd_regress(a) -> int:
    seed = a.seed if a.seed is not None else _env_seed()
    return 0 if regress(seed) else 1


def cmd_fuzz(a) -> int:
    seed = a.seed if a.seed is not None else (_env_seed() or 0)
    failures = 0
    for k in range(a.count):
        rep = run(random_scenario(seed + k, steps=a.steps))
        if rep.fatal():
            failures += 1
            print(f"FAIL {rep.summary()}")
        elif a.verbose:
            print(rep.summary())
    print(f"{a.count} scenario(s), {failures} with violations")
    return 1 if failures else 0


def parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pathlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="simulate a scenario file or shipped fixture")
    r.add_argument("scenario")
    r.add_argument("--trace")
    r.add_argument("--seed", type=int)
    r.add_argument("--mode", choices=("verified", "legacy"))
    r.add_argument("--backend", choices=("symbolic", "concrete"))
    r.add_argument("--report", help="write the run report as JSON")
    r.add_argument("--auth-out", help="write the authorized segments as JSON")
    r.set_defaults(fn=cmd_run)
    c = sub.add_parser("check", help="re-check a stored trace")
    c.add_argument("trace")
    c.add_argument("--auth", required=True, help="authset JSON or scenario")
    c.add_argument("--loop-mode", choices=("weak", "strong"), default="strong")
    c.set_defaults(fn=cmd_check)
    g = sub.add_parser("regress", help="run the attack regression suite")
    g.add_argument("--seed", type=int)
    g.set_defaults(fn=cmd_regress)
    f = sub.add_parser("fuzz", help="verified-mode runs on generated topologies")
    f.add_argument("--steps", type=int, default=2000)
    f.add_argument("--seed", type=int)
    f.add_argument("--count", type=int, default=20)
    f.add_argument("-v", "--verbose", action="store_true")
    f.set_defaults(fn=cmd_fuzz)
    return p


def main(argv=None) -> int:
    try:
        a = parser().parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return a.fn(a)
    except (UsageError, ScenarioError, FileNotFoundError, json.JSONDecodeError, yaml.YAMLError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
