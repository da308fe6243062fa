"""Routing equivalence against a brute-force graph-walk oracle.

Two hundred seeded random activities (mixed automatic/interactive actions,
up to two decision nodes, acyclic by construction) are executed through the
full parse -> link -> simulate pipeline. An independent oracle walks the AST
directly, enumerating every reachable combination of decision labels; each
enumerated path must match the engine's visited-action trace exactly.
"""

from __future__ import annotations

import random

import pytest

from wisflow import ast
from wisflow.engine import ChoiceScript, ChoiceStep, simulate
from wisflow.linker import link
from wisflow.parser import parse_activity, parse_app, parse_class_model, parse_page
from wisflow.store import MemoryBackend, Store, seed_store

ACTIVITY_COUNT = 200

CD = """
classdiagram M {
  class Person <<user>> {
    login: String;
    password: String;
  }
}
"""

PAGES = ["page Blank() { }"]
APP = "application M { }"


# -- generation -----------------------------------------------------------------


def generate_activity_source(seed: int) -> str:
    """Emit a random acyclic activity; edges only point at later actions."""
    rng = random.Random(seed)
    count = rng.randint(1, 7)
    names = [f"Act{i}" for i in range(1, count + 1)]
    interactive = {name: rng.random() < 0.55 for name in names}

    decision_sources = set(
        rng.sample(names, k=min(rng.randint(0, 2), count))
    )

    def guard(can_be_true: bool) -> str:
        kind = rng.randrange(3)
        if kind == 0:
            return rng.choice(["[true] ", "[false] "]) if can_be_true else "[false] "
        a = rng.randint(0, 3)
        b = a if (can_be_true and rng.random() < 0.5) else rng.randint(4, 7)
        op = rng.choice(["==", "!="])
        return f"[{a} {op} {b}] "

    lines = ["activity Gen {"]
    workers = [n for n in names if interactive[n]]
    if workers:
        lines.append(f"  role Worker {{ {', '.join(workers)} }}")
    for name in names:
        body = "view: Blank();" if interactive[name] else ""
        lines.append(f"  action {name} {{ {body} }}")
    lines.append(f"  initial -> {names[0]};")
    for idx, name in enumerate(names):
        later = names[idx + 1 :] + ["final"]
        if name in decision_sources and len(later) >= 2:
            k = rng.randint(2, min(3, len(later)))
            targets = rng.sample(later, k=k)
            rendered = []
            unguarded_at = rng.randrange(k)  # at least one target stays open
            for pos, target in enumerate(targets):
                prefix = "" if pos == unguarded_at else (
                    guard(can_be_true=True) if rng.random() < 0.7 else ""
                )
                rendered.append(prefix + target)
            lines.append(f"  {name} -> {' | '.join(rendered)};")
        else:
            lines.append(f"  {name} -> {rng.choice(later)};")
    lines.append("}")
    return "\n".join(lines)


def build(seed: int):
    cd = parse_class_model(CD)
    act = parse_activity(generate_activity_source(seed))
    pages = [parse_page(p) for p in PAGES]
    app = parse_app(APP)
    for item in (cd, act, app, *pages):
        assert not isinstance(item, list), [d.render() for d in item]
    system = link(cd, [act], pages, app)
    assert not isinstance(system, list), [d.render() for d in system]
    return system


# -- the oracle ------------------------------------------------------------------


def _guard_holds(guard: ast.GuardExpr) -> bool:
    # generated guards are literal-only by construction
    left = guard.left.value
    if guard.op is None:
        return left is True
    right = guard.right.value
    return left == right if guard.op == "==" else left != right


def _label(target: ast.EdgeTarget) -> str:
    return "final" if target.node.kind == "final" else target.node.action


def oracle_paths(activity: ast.ActivityModel):
    """All (trace, decision labels) pairs a compliant engine can produce."""
    first = activity.initial_edge().targets[0].node.action
    results = []

    def walk(name: str, trace: list[str], decisions: list[str | None]):
        trace = trace + [name]
        action = activity.action(name)
        edge = activity.edge_from(name)
        routed = None
        for target in edge.targets:
            if target.guard is not None and _guard_holds(target.guard):
                routed = target
                break
        unguarded = [t for t in edge.targets if t.guard is None]
        options = [_label(t) for t in unguarded] if edge.is_decision else []

        def proceed(target, decisions):
            if _label(target) == "final":
                results.append((trace, decisions))
            else:
                walk(_label(target), trace, decisions)

        if not action.is_interactive:
            proceed(routed or unguarded[0], decisions)
        elif not options:
            proceed(routed or unguarded[0], decisions + [None])
        else:
            # the engine demands a choice whenever options exist, then lets a
            # true guard override it: every offered label yields the same target
            for label in options:
                chosen = routed or next(t for t in unguarded if _label(t) == label)
                proceed(chosen, decisions + [label])

    walk(first, [], [])
    return results


# -- the comparison ---------------------------------------------------------------


@pytest.mark.parametrize("seed", range(ACTIVITY_COUNT))
def test_simulate_matches_oracle(seed):
    system = build(seed)
    activity = system.activities[0]
    store = Store(system.class_model, MemoryBackend(), seed=seed)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
    user = store.authenticate("u1", "p").id

    paths = oracle_paths(activity)
    assert paths, "the oracle must always find at least one path"
    for expected_trace, decisions in paths:
        steps = tuple(ChoiceStep(decision=d) for d in decisions)
        got = simulate(system, store, "Gen", ChoiceScript(user, steps))
        assert got == expected_trace, (
            f"seed {seed}: decisions {decisions} gave {got}, expected {expected_trace}"
        )


def test_oracle_enumerates_alternatives():
    src = """
    activity Gen {
      role Worker { A }
      action A { view: Blank(); }
      action B { }
      initial -> A;
      A -> B | final;
      B -> final;
    }
    """
    activity = parse_activity(src)
    assert not isinstance(activity, list)
    assert sorted(oracle_paths(activity)) == [
        (["A"], ["final"]),
        (["A", "B"], ["B"]),
    ]
