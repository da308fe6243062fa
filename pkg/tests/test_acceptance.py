"""Acceptance gate: one scenario per shipped guarantee, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
print; under default capture they appear in the failure report only.
"""

from __future__ import annotations

import random
import subprocess
import sys
import time
import urllib.error
import urllib.request
import warnings
from contextlib import contextmanager
from decimal import Decimal

from test_cli import _free_port, _request, _wait_until_up
from test_linker import MUTATIONS, build as build_mutant
from test_oracle_equivalence import ACTIVITY_COUNT, build as build_generated, oracle_paths
from test_roundtrip import (
    GENERATED_PER_LANGUAGE,
    test_generated_activities_roundtrip as roundtrip_generated_activities,
    test_generated_apps_roundtrip as roundtrip_generated_apps,
    test_generated_class_models_roundtrip as roundtrip_generated_class_models,
    test_generated_pages_roundtrip as roundtrip_generated_pages,
)
from wisflow import parse_activity, parse_app, parse_class_model, parse_page, pretty_print
from wisflow.engine import ChoiceScript, ChoiceStep, Engine, Submission, simulate
from wisflow.example import FILES, SEED, write_example
from wisflow.httpapi import create_app
from wisflow.project import load_directory
from wisflow.store import (
    PHASE_AWAITING_SUBMIT,
    PHASE_BEFORE_VIEW,
    ExecutionContext,
    FileBackend,
    MemoryBackend,
    Ref,
    SetOf,
    Store,
    TempRef,
    TransientObject,
    seed_store,
)

with warnings.catch_warnings():
    warnings.simplefilter("ignore", DeprecationWarning)
    from fastapi.testclient import TestClient


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"FAIL {name}")
        raise
    print(f"PASS {name}")


def user_id_of(store: Store, login_name: str) -> str:
    return next(u.id for u in store.load_all("Staff") if u.fields["login"] == login_name)


# -- 1: the bundled grading activity has the documented shape -----------------------


def test_reference_activity_shape():
    with criterion("reference-activity-shape"):
        started = time.perf_counter()
        activity = parse_activity(FILES["gradethesis.act"], "gradethesis.act")
        assert not isinstance(activity, list), [d.render() for d in activity]

        assert len(activity.partitions) == 2
        assert len(activity.actions) >= 5
        initial_edges = [e for e in activity.edges if e.source.kind == "initial"]
        assert len(initial_edges) == 1
        decision_edges = [e for e in activity.edges if e.is_decision]
        assert len(decision_edges) == 1
        assert len(decision_edges[0].targets) == 2

        assign = activity.action("AssignRef2")
        assert len(assign.out_pins) == 1
        assert len(assign.vars) == 3
        assert time.perf_counter() - started < 1.0


# -- 2: the two-referee scenario over HTTP ------------------------------------------


def test_two_referee_grading_scenario(tmp_path):
    with criterion("two-referee-grading-scenario"):
        started = time.perf_counter()
        write_example(tmp_path / "models")
        system, diags = load_directory(tmp_path / "models")
        assert system is not None, [d.render() for d in diags]
        data_dir = tmp_path / "data"
        store = Store(system.class_model, FileBackend(data_dir), seed=7)
        seed_store(store, SEED)
        client = TestClient(create_app(system, store), follow_redirects=False)

        ref1 = {"Authorization": f"Bearer {client.post('/login', json={'login': 'ref1', 'password': 'ref1pw'}).json()['token']}"}
        ref2 = {"Authorization": f"Bearer {client.post('/login', json={'login': 'ref2', 'password': 'ref2pw'}).json()['token']}"}
        ref1_id = user_id_of(store, "ref1")
        ref2_id = user_id_of(store, "ref2")

        # (a) whoever starts the activity is bound to the first partition
        url = client.post("/activity/GradeThesis", headers=ref1).headers["location"]
        instance = url.rsplit("/", 1)[1].rsplit("-", 1)[0]
        assert store.load_context(instance).role_bindings == {"Referee1": ref1_id}

        # (b) submitting the referee selection binds the second partition
        doc = client.get(url, headers=ref1).json()
        table = next(e for e in doc["elements"] if e["kind"] == "table")
        row = next(r for r in table["rows"] if r["cells"][0] == "Referee Two")
        url = client.post(url, headers=ref1, json={"_selection": row["id"]}).headers["location"]
        assert store.load_context(instance).role_bindings["Referee2"] == ref2_id

        url = client.post(
            url, headers=ref1, json={"t.title": "On Tokens", "t.grade1": "1.3"}
        ).headers["location"]

        def instances_of(headers):
            return [t["instance"] for t in client.get("/tasks", headers=headers).json()["tasks"]]

        assert instances_of(ref2) == [instance]
        assert instances_of(ref1) == []

        # (c) the second referee's interaction follows the redirect protocol
        statuses = []
        render = client.get(url, headers=ref2)
        statuses.append(render.status_code)
        submit = client.post(
            url, headers=ref2, json={"t.grade2": "2.0", "_decision": "SaveAndNotify"}
        )
        statuses.append(submit.status_code)
        final_url = submit.headers["location"]
        statuses.append(client.get(final_url, headers=ref2).status_code)
        finish = client.post(final_url, headers=ref2, json={})
        statuses.append(finish.status_code)
        assert statuses == [200, 303, 200, 200]
        assert finish.json()["status"] == "finished"

        # (d) one ThesisData with both grades and both referee links; one
        # notification per participant
        theses = store.load_all("ThesisData")
        assert len(theses) == 1
        thesis = theses[0]
        assert thesis.fields["grade1"] == Decimal("1.3")
        assert thesis.fields["grade2"] == Decimal("2.0")
        assert thesis.links["primaryRef"] == [ref1_id]
        assert thesis.links["secondaryRef"] == [ref2_id]
        assert store.notifications(ref1_id) == ["Thesis grading completed."]
        assert store.notifications(ref2_id) == ["Thesis grading completed."]

        # (e) the finished instance is gone from the API and from disk
        assert client.get(final_url, headers=ref2).status_code == 410
        leftovers = [
            p for p in (data_dir / "contexts").glob("*.json") if p.name != "_order.json"
        ]
        assert leftovers == []
        assert store.load_all_contexts() == []
        assert time.perf_counter() - started < 5.0


# -- 3: the quiet decision branch ---------------------------------------------------


def test_save_without_notify_trace(example_system, fresh_store):
    with criterion("save-without-notify-trace"):
        store = fresh_store
        ref1_id = user_id_of(store, "ref1")
        ref2_id = user_id_of(store, "ref2")
        script = ChoiceScript(
            ref1_id,
            (
                ChoiceStep(selection=ref2_id),
                ChoiceStep(form={"t.title": "On Tokens", "t.grade1": "1.0"}),
                ChoiceStep(form={"t.grade2": "2.0"}, decision="Save"),
                ChoiceStep(),
            ),
        )
        visited = simulate(example_system, store, "GradeThesis", script)
        assert visited == ["AssignRef2", "SetGrade1", "SetGrade2", "Save", "Saved"]
        assert len(store.load_all("ThesisData")) == 1
        assert store.notifications(ref1_id) == []
        assert store.notifications(ref2_id) == []


# -- 4: generated activities behave exactly like a brute-force graph walk ------------


def test_generated_traces_match_oracle():
    with criterion("generated-traces-match-oracle"):
        assert ACTIVITY_COUNT >= 200
        mismatches = []
        for seed in range(ACTIVITY_COUNT):
            system = build_generated(seed)
            activity = system.activities[0]
            store = Store(system.class_model, MemoryBackend(), seed=seed)
            seed_store(store, {"Person": [{"login": "u1", "password": "p"}]})
            user = store.authenticate("u1", "p").id
            for expected, decisions in oracle_paths(activity):
                steps = tuple(ChoiceStep(decision=d) for d in decisions)
                got = simulate(system, store, "Gen", ChoiceScript(user, steps))
                if got != expected:
                    mismatches.append((seed, decisions, got, expected))
        assert mismatches == []


# -- 5: each consistency rule fires alone --------------------------------------------


def test_linker_mutation_corpus():
    with criterion("linker-mutation-corpus"):
        assert sorted(MUTATIONS) == [f"L{n:03d}" for n in range(1, 11)]
        for code, mutation in sorted(MUTATIONS.items()):
            result = build_mutant(**mutation)
            assert isinstance(result, list), f"{code}: mutation not detected"
            errors = {d.code for d in result if d.severity == "error"}
            assert errors == {code}, (code, [d.render() for d in result])


# -- 6: contexts survive storage and restarts ----------------------------------------


def _random_value(rng: random.Random):
    kind = rng.randrange(6)
    if kind == 0:
        return None
    if kind == 1:
        return f"text-{rng.randrange(1000)}"
    if kind == 2:
        return Decimal(f"{rng.randrange(100)}.{rng.randrange(100):02d}")
    if kind == 3:
        return Ref("Staff", f"obj{rng.randrange(100)}")
    if kind == 4:
        return TempRef("ThesisData", f"t{rng.randrange(10)}")
    return SetOf(tuple(Ref("Staff", f"obj{i}") for i in range(rng.randrange(4))))


def _random_context(rng: random.Random, n: int) -> ExecutionContext:
    transients = {
        f"t{i}": TransientObject(
            "ThesisData",
            fields={"title": f"t{rng.randrange(50)}", "grade1": None, "grade2": None},
            links={"primaryRef": [Ref("Staff", f"obj{rng.randrange(20)}")]},
        )
        for i in range(1, rng.randrange(1, 4))
    }
    return ExecutionContext(
        instance_id=f"inst{n:03d}",
        activity_name="GradeThesis",
        started_by=f"obj{rng.randrange(20)}",
        token_action=rng.choice(["AssignRef2", "SetGrade1", "SetGrade2"]),
        phase=rng.choice([PHASE_BEFORE_VIEW, PHASE_AWAITING_SUBMIT]),
        epoch=rng.randrange(30),
        bindings={f"A.v{i}": _random_value(rng) for i in range(rng.randrange(5))},
        role_bindings={"Referee1": f"obj{rng.randrange(20)}"},
        transients=transients,
        notifications=[(f"obj{rng.randrange(20)}", "saved") for _ in range(rng.randrange(3))],
        next_temp=rng.randrange(1, 20),
    )


def test_context_persistence_and_resume(tmp_path, example_system):
    with criterion("context-persistence-and-resume"):
        rng = random.Random(2024)
        store = Store(example_system.class_model, FileBackend(tmp_path / "bulk"))
        for n in range(100):
            ctx = _random_context(rng, n)
            store.save_context(ctx)
            assert store.load_context(ctx.instance_id) == ctx

        # live system: stop mid-workflow, reopen the same directory
        data_dir = tmp_path / "live"
        store = Store(example_system.class_model, FileBackend(data_dir), seed=3)
        seed_store(store, SEED)
        ref1_id = user_id_of(store, "ref1")
        ref2_id = user_id_of(store, "ref2")
        engine = Engine(example_system, store)
        ctx, step = engine.start_activity("GradeThesis", ref1_id)
        engine.render_action(step.instance_id, ref1_id)
        before = store.load_context(step.instance_id)
        objects_before = {o.id: o for o in store.load_all("Staff")}

        reopened = Store(example_system.class_model, FileBackend(data_dir))
        assert {o.id: o for o in reopened.load_all("Staff")} == objects_before
        resumed = reopened.load_context(step.instance_id)
        assert resumed == before
        assert resumed.token_action == "AssignRef2"
        assert resumed.phase == PHASE_AWAITING_SUBMIT

        # and the instance still runs to completion afterwards
        engine = Engine(example_system, reopened)
        render = engine.render_action(step.instance_id, ref1_id)
        assert render.action_name == "AssignRef2"
        engine.submit_action(step.instance_id, ref1_id, Submission(selection=ref2_id))
        assert reopened.load_context(step.instance_id).token_action == "SetGrade1"


# -- 7: a class model alone yields a working CRUD application ------------------------


MINI_CD = """\
classdiagram Mini {
  class Member <<user>> {
    login: String;
    password: String;
    email: Email;
    joined: Date;
  }
  class Widget {
    name: String;
    built: Date;
    contact: Email;
    count: Int;
  }
}
"""

MINI_APP = """\
application Mini {
}
"""


def test_crud_from_class_model_alone(tmp_path):
    with criterion("crud-from-class-model-alone"):
        model_dir = tmp_path / "models"
        model_dir.mkdir()
        (model_dir / "mini.cd").write_text(MINI_CD, encoding="utf-8")
        (model_dir / "mini.app").write_text(MINI_APP, encoding="utf-8")
        assert sorted(p.name for p in model_dir.iterdir()) == ["mini.app", "mini.cd"]

        # first account is operator-provisioned state, not part of the models
        data_dir = tmp_path / "state"
        system, _ = load_directory(model_dir)
        Store(system.class_model, FileBackend(data_dir)).create_object(
            "Member", fields={"login": "op", "password": "oppw", "email": "op@example.org"}
        )

        port = _free_port()
        base = f"http://127.0.0.1:{port}"
        proc = subprocess.Popen(
            [sys.executable, "-m", "wisflow", "serve", str(model_dir),
             "--port", str(port), "--data", str(data_dir)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
        )
        try:
            _wait_until_up(f"{base}/menu", proc)
            _, login = _request("POST", f"{base}/login", {"login": "op", "password": "oppw"})
            token = login["token"]

            for class_name, fields, update in [
                ("Member", {"login": "m2", "password": "pw", "email": "m2@example.org",
                            "joined": "2026-02-01"}, {"email": "m3@example.org"}),
                ("Widget", {"name": "gear", "built": "2025-12-31",
                            "contact": "w@example.org", "count": "4"}, {"count": "5"}),
            ]:
                status, listing = _request("GET", f"{base}/class/{class_name}", token=token)
                assert status == 200 and listing["class"] == class_name
                status, created = _request(
                    "POST", f"{base}/class/{class_name}", {"fields": fields}, token
                )
                assert status == 201
                oid = created["id"]
                status, detail = _request(
                    "GET", f"{base}/class/{class_name}/{oid}", token=token
                )
                assert status == 200 and detail["id"] == oid
                status, updated = _request(
                    "PUT", f"{base}/class/{class_name}/{oid}", {"fields": update}, token
                )
                assert status == 200
                key, value = next(iter(update.items()))
                assert updated["values"][key] == value

                req = urllib.request.Request(
                    f"{base}/class/{class_name}/{oid}", method="DELETE"
                )
                req.add_header("Authorization", f"Bearer {token}")
                with urllib.request.urlopen(req, timeout=5) as resp:
                    assert resp.status == 204
                status, listing = _request("GET", f"{base}/class/{class_name}", token=token)
                assert oid not in listing["ids"]

            for class_name, bad in [
                ("Member", {"login": "m4", "password": "pw", "email": "not-an-address"}),
                ("Member", {"login": "m5", "password": "pw", "joined": "yesterday"}),
                ("Widget", {"contact": "still@not"}),
                ("Widget", {"built": "2026-13-40"}),
            ]:
                try:
                    _request("POST", f"{base}/class/{class_name}", {"fields": bad}, token)
                    raise AssertionError(f"{bad} was accepted")
                except urllib.error.HTTPError as exc:
                    assert exc.code == 422
        finally:
            proc.terminate()
            proc.wait(timeout=10)


# -- 8: printing is the inverse of parsing -------------------------------------------


_PARSER_FOR_SUFFIX = {
    ".cd": parse_class_model,
    ".act": parse_activity,
    ".page": parse_page,
    ".app": parse_app,
}


def test_print_parse_fixpoint():
    with criterion("print-parse-fixpoint"):
        for filename, source in sorted(FILES.items()):
            parse = _PARSER_FOR_SUFFIX["." + filename.rsplit(".", 1)[1]]
            model = parse(source, filename)
            assert not isinstance(model, list), [d.render() for d in model]
            printed = pretty_print(model)
            again = parse(printed, filename)
            assert again == model
            assert pretty_print(again) == printed

        # the generated half: four languages at 125 models each
        assert 4 * GENERATED_PER_LANGUAGE == 500
        roundtrip_generated_class_models()
        roundtrip_generated_activities()
        roundtrip_generated_pages()
        roundtrip_generated_apps()
