"""Engine semantics: routing, phases, statements, tasks, simulation."""

from __future__ import annotations

import pytest

from wisflow.engine import (
    ChoiceScript,
    ChoiceStep,
    Engine,
    ExecutionFailure,
    Finished,
    Interactive,
    PermissionDeniedError,
    ScriptExhaustedError,
    Submission,
    UnknownActivityError,
    ValidationFailure,
    WrongUserError,
    simulate,
)
from wisflow.linker import link
from wisflow.parser import parse_activity, parse_app, parse_class_model, parse_page
from wisflow.store import MemoryBackend, Store, TempRef, seed_store

ROUTING_CD = """
classdiagram M {
  class Person <<user>> {
    login: String;
    password: String;
  }
  class Doc {
    level: Int;
    note: String;
  }
}
"""

ROUTING_ACT = """
activity Route {
  role Worker { Fill, High, Mid, Low }

  action Fill {
    out: Doc o;
    java: { o = new Doc(); }
    view: FillPage(o);
  }

  action High { in: Doc i; view: ShowPage(i); }
  action Mid  { in: Doc i; view: ShowPage(i); }
  action Low  { in: Doc i; view: ShowPage(i); }

  initial -> Fill;
  Fill.o -> [o.getLevel() == 1] High.i | [o.getLevel() == 2] Mid.i | Low.i;
  High -> final;
  Mid -> final;
  Low -> final;
}
"""

ROUTING_PAGES = [
    "page FillPage(Doc d) { input d.level; }",
    "page ShowPage(Doc d) { output d.level; }",
]

ROUTING_APP = "application M { }"


def build_system(cd=ROUTING_CD, act=ROUTING_ACT, pages=ROUTING_PAGES, app=ROUTING_APP):
    acts = act if isinstance(act, list) else [act]
    parsed = {
        "cd": parse_class_model(cd),
        "acts": [parse_activity(a) for a in acts],
        "pages": [parse_page(p) for p in pages],
        "app": parse_app(app),
    }
    flat = [parsed["cd"], *parsed["acts"], *parsed["pages"], parsed["app"]]
    for item in flat:
        assert not isinstance(item, list), [d.render() for d in item]
    system = link(parsed["cd"], parsed["acts"], parsed["pages"], parsed["app"])
    assert not isinstance(system, list), [d.render() for d in system]
    return system


@pytest.fixture()
def routing():
    system = build_system()
    store = Store(system.class_model, MemoryBackend(), seed=9)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}, {"login": "u2", "password": "p"}]})
    engine = Engine(system, store)
    u1 = store.authenticate("u1", "p").id
    u2 = store.authenticate("u2", "p").id
    return engine, store, u1, u2


def run_fill(engine, user, level, decision="Low"):
    ctx, step = engine.start_activity("Route", user)
    engine.render_action(step.instance_id, user)
    return engine.submit_action(
        step.instance_id, user, Submission({"d.level": str(level)}, decision, None)
    )


# -- guard and decision routing ----------------------------------------------------


def test_guards_win_in_declaration_order(routing):
    engine, store, u1, _ = routing
    assert run_fill(engine, u1, 1).action_name == "High"
    assert run_fill(engine, u1, 2).action_name == "Mid"
    assert run_fill(engine, u1, 9).action_name == "Low"


def test_matching_guard_overrides_the_submitted_decision(routing):
    engine, store, u1, _ = routing
    # decision names the unguarded target, but the first true guard wins
    step = run_fill(engine, u1, 1, decision="Low")
    assert step.action_name == "High"


def test_decision_options_offer_only_unguarded_targets(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    render = engine.render_action(step.instance_id, u1)
    assert render.decisions == ["Low"]
    assert render.fields == {"d.level": "Int"}


def test_decision_is_required_when_options_exist(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    with pytest.raises(ValidationFailure) as exc:
        engine.submit_action(step.instance_id, u1, Submission({"d.level": "7"}, None, None))
    assert "_decision" in exc.value.fields


def test_unknown_decision_is_rejected(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    with pytest.raises(ValidationFailure) as exc:
        engine.submit_action(
            step.instance_id, u1, Submission({"d.level": "7"}, "Sideways", None)
        )
    assert "_decision" in exc.value.fields


OVERLAP_ACT = """
activity Overlap {
  role Worker { Fill, High, Mid }

  action Fill {
    out: Doc o;
    java: { o = new Doc(); }
    view: FillPage(o);
  }
  action High { in: Doc i; view: ShowPage(i); }
  action Mid  { in: Doc i; view: ShowPage(i); }

  initial -> Fill;
  Fill.o -> [o.getLevel() != 99] High.i | [o.getLevel() == 1] Mid.i;
  High -> final;
  Mid -> final;
}
"""


def test_overlapping_guards_use_the_first_true_one():
    system = build_system(act=OVERLAP_ACT)
    store = Store(system.class_model, MemoryBackend(), seed=9)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
    engine = Engine(system, store)
    u1 = store.authenticate("u1", "p").id
    ctx, step = engine.start_activity("Overlap", u1)
    # level 1 satisfies both guards; declaration order decides
    next_step = engine.submit_action(
        step.instance_id, u1, Submission({"d.level": "1"}, None, None)
    )
    assert next_step.action_name == "High"


AUTO_DECISION_ACT = """
activity AutoRoute {
  role Worker { Fill, Big, Small }

  action Fill {
    out: Doc o;
    java: { o = new Doc(); }
    view: FillPage(o);
  }

  action Sort {
    in: Doc i;
    out: Doc o;
    java: { o = i; }
  }

  action Big   { in: Doc i; view: ShowPage(i); }
  action Small { in: Doc i; view: ShowPage(i); }

  initial -> Fill;
  Fill.o -> Sort.i;
  Sort.o -> [i.getLevel() == 10] Big.i | Small.i | [i.getLevel() == 20] final;
  Big -> final;
  Small -> final;
}
"""


def test_automatic_decision_prefers_true_guards_then_first_unguarded():
    system = build_system(act=AUTO_DECISION_ACT)
    store = Store(system.class_model, MemoryBackend(), seed=9)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
    engine = Engine(system, store)
    u1 = store.authenticate("u1", "p").id

    ctx, step = engine.start_activity("AutoRoute", u1)
    step = engine.submit_action(step.instance_id, u1, Submission({"d.level": "10"}, None, None))
    assert step.action_name == "Big"

    ctx, step = engine.start_activity("AutoRoute", u1)
    step = engine.submit_action(step.instance_id, u1, Submission({"d.level": "3"}, None, None))
    assert step.action_name == "Small"


# -- phases, epochs and idempotent rendering ------------------------------------------


def test_epoch_counts_token_moves(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    assert step.epoch == 0
    engine.render_action(step.instance_id, u1)  # phase flip, not a move
    assert store.load_context(step.instance_id).epoch == 0
    step = engine.submit_action(step.instance_id, u1, Submission({"d.level": "1"}, "Low", None))
    assert store.load_context(step.instance_id).epoch == 1


def test_render_runs_pre_view_exactly_once(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    engine.render_action(step.instance_id, u1)
    once = store.load_context(step.instance_id)
    assert len(once.transients) == 1  # the freshly created Doc

    engine.render_action(step.instance_id, u1)
    again = store.load_context(step.instance_id)
    assert again == once  # idempotent re-render


def test_submit_without_render_still_runs_pre_view(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    step = engine.submit_action(step.instance_id, u1, Submission({"d.level": "2"}, "Low", None))
    assert step.action_name == "Mid"


# -- failures leave no trace ---------------------------------------------------------


def test_validation_failure_mutates_nothing(routing):
    engine, store, u1, _ = routing
    ctx, step = engine.start_activity("Route", u1)
    engine.render_action(step.instance_id, u1)
    before = store.load_context(step.instance_id)
    with pytest.raises(ValidationFailure) as exc:
        engine.submit_action(
            step.instance_id, u1, Submission({"d.level": "not a number"}, "Low", None)
        )
    assert "d.level" in exc.value.fields
    assert store.load_context(step.instance_id) == before


def test_wrong_user_cannot_render_or_submit(routing):
    engine, store, u1, u2 = routing
    ctx, step = engine.start_activity("Route", u1)
    before = store.load_context(step.instance_id)
    with pytest.raises(WrongUserError):
        engine.render_action(step.instance_id, u2)
    with pytest.raises(WrongUserError):
        engine.submit_action(step.instance_id, u2, Submission({"d.level": "1"}, "Low", None))
    assert store.load_context(step.instance_id) == before


def test_unknown_activity_and_rights():
    system = build_system(
        app="application M { roles { boss } rights { allow boss: activity Route; } }"
    )
    store = Store(system.class_model, MemoryBackend(), seed=9)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
    engine = Engine(system, store)
    u1 = store.authenticate("u1", "p").id
    with pytest.raises(UnknownActivityError):
        engine.start_activity("Ghost", u1)
    # Route is restricted to role boss; Person has no role attribute value
    with pytest.raises(PermissionDeniedError):
        engine.start_activity("Route", u1)


# -- role binding ----------------------------------------------------------------------


HANDOFF_ACT = """
activity Handoff {
  role First { A }
  role Second { B }

  action A { var: Doc d; java: { d = new Doc(); } view: FillPage(d); }
  action B { var: Doc d; java: { d = new Doc(); } view: FillPage(d); }

  initial -> A;
  A -> B;
  B -> final;
}
"""


def test_partitions_bind_on_arrival():
    system = build_system(act=HANDOFF_ACT)
    store = Store(system.class_model, MemoryBackend(), seed=9)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
    engine = Engine(system, store)
    u1 = store.authenticate("u1", "p").id

    ctx, step = engine.start_activity("Handoff", u1)
    assert store.load_context(step.instance_id).role_bindings == {"First": u1}

    # no assignRole ran, so arrival at B binds the submitting user
    step = engine.submit_action(step.instance_id, u1, Submission({"d.level": "1"}, None, None))
    assert store.load_context(step.instance_id).role_bindings == {
        "First": u1,
        "Second": u1,
    }


def test_tasks_follow_the_bound_user(routing):
    engine, store, u1, u2 = routing
    ctx1, step1 = engine.start_activity("Route", u1)
    ctx2, step2 = engine.start_activity("Route", u2)
    assert [t.instance_id for t in engine.list_tasks(u1)] == [step1.instance_id]
    assert [t.instance_id for t in engine.list_tasks(u2)] == [step2.instance_id]
    tasks = engine.list_tasks(u1)
    assert tasks[0].action_name == "Fill" and tasks[0].activity_name == "Route"


# -- statement semantics ---------------------------------------------------------------


SAVE_CD = """
classdiagram M {
  class Person <<user>> {
    login: String;
    password: String;
  }
  class Box {
    label: String;
    -> inner: Part (one);
  }
  class Part {
    code: String;
  }
}
"""

SAVE_ACT = """
activity Build {
  role Worker { Go }

  action Go {
    var: Box b, Part p;
    java: {
      b = new Box();
      p = new Part();
      b.setInner(p);
    }
    view: GoPage(b);
    cmd: save(b);
  }

  initial -> Go;
  Go -> final;
}
"""

SAVE_PAGES = ["page GoPage(Box b) { input b.label; }"]


def test_save_persists_linked_transients_together():
    system = build_system(cd=SAVE_CD, act=SAVE_ACT, pages=SAVE_PAGES)
    store = Store(system.class_model, MemoryBackend(), seed=9)
    seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
    engine = Engine(system, store)
    u1 = store.authenticate("u1", "p").id

    ctx, step = engine.start_activity("Build", u1)
    step = engine.submit_action(step.instance_id, u1, Submission({"b.label": "crate"}, None, None))
    assert isinstance(step, Finished)

    boxes = store.load_all("Box")
    parts = store.load_all("Part")
    assert len(boxes) == 1 and len(parts) == 1
    assert boxes[0].fields["label"] == "crate"
    assert boxes[0].links["inner"] == [parts[0].id]


def test_linking_a_saved_object_to_an_unsaved_one_fails():
    system = build_system(cd=SAVE_CD, act=SAVE_ACT, pages=SAVE_PAGES)
    store = Store(system.class_model, MemoryBackend(), seed=9)
    box = store.create_object("Box", fields={"label": "old"})
    engine = Engine(system, store)
    from wisflow.store import ExecutionContext, Ref
    from wisflow import ast

    ctx = ExecutionContext("x1", "Build", "u", "Go")
    ctx.bindings["Go.b"] = Ref("Box", box.id)
    ctx.bindings["Go.p"] = TempRef("Part", ctx.new_temp_id())
    from wisflow.store import TransientObject

    ctx.transients["t1"] = TransientObject("Part", {"code": None}, {})
    stmt = ast.ScriptBlock((ast.Invoke("b", "inner", ast.VarRef("p")),))
    with pytest.raises(ExecutionFailure):
        engine.execute_statement(ctx, "Go", stmt, "u")


def test_notify_reaches_each_participant_once(example_system, fresh_store):
    engine = Engine(example_system, fresh_store)
    ref1 = fresh_store.authenticate("ref1", "ref1pw").id
    from wisflow.store import ExecutionContext
    from wisflow import ast

    ctx = ExecutionContext("n1", "GradeThesis", ref1, "SaveAndNotify")
    ctx.role_bindings = {"Referee1": ref1, "Referee2": ref1}
    engine.execute_statement(ctx, "SaveAndNotify", ast.Notify("done"), ref1)
    assert fresh_store.notifications(ref1) == ["done"]


def test_first_of_empty_collection_fails(example_system, fresh_store):
    engine = Engine(example_system, fresh_store)
    from wisflow.store import ExecutionContext, SetOf
    from wisflow import ast

    ctx = ExecutionContext("f1", "GradeThesis", "u", "AssignRef2")
    ctx.bindings["AssignRef2.allStaff"] = SetOf(())
    stmt = ast.ScriptBlock((ast.Assign("selectedUser", ast.FirstOf("allStaff")),))
    with pytest.raises(ExecutionFailure):
        engine.execute_statement(ctx, "AssignRef2", stmt, "u")


# -- simulation ------------------------------------------------------------------------


def test_simulate_returns_the_visit_order(routing):
    engine, store, u1, _ = routing
    trace = simulate(
        engine.system,
        store,
        "Route",
        ChoiceScript(u1, (ChoiceStep(form={"d.level": "1"}, decision="Low"), ChoiceStep())),
    )
    assert trace == ["Fill", "High"]


def test_simulate_reports_script_exhaustion(routing):
    engine, store, u1, _ = routing
    with pytest.raises(ScriptExhaustedError):
        simulate(engine.system, store, "Route", ChoiceScript(u1, ()))


def test_simulate_is_deterministic():
    def run():
        system = build_system()
        store = Store(system.class_model, MemoryBackend(), seed=123)
        seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
        u1 = store.authenticate("u1", "p").id
        trace = simulate(
            system,
            store,
            "Route",
            ChoiceScript(u1, (ChoiceStep(form={"d.level": "2"}, decision="Low"), ChoiceStep())),
        )
        ids = [o.id for o in store.load_all("Person")]
        return trace, ids

    assert run() == run()
