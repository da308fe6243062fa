"""Workflow execution.

The engine is a transition function over execution contexts: starting an
activity places a single token at the first action, rendering an interactive
action runs its pre-view statements once and describes its page, submitting
writes form values back, runs post-view statements, routes along the chosen
edge and chains automatic actions until the next interactive action or the
final node. Contexts live in the store between steps, so any server holding
the same data directory can resume an instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .linker import LinkedSystem
from .store import (
    PHASE_AWAITING_SUBMIT,
    PHASE_BEFORE_VIEW,
    ExecutionContext,
    Ref,
    SetOf,
    Store,
    StoredObject,
    TempRef,
    TransientObject,
    ValidationError,
    check_field,
    field_to_text,
    parse_field,
)

_STEP_LIMIT = 10_000
FINAL_LABEL = "final"


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class EngineError(Exception):
    code = "engine"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class UnknownInstanceError(EngineError):
    code = "not-found"


class UnknownActivityError(EngineError):
    code = "not-found"


class PermissionDeniedError(EngineError):
    code = "forbidden"


class WrongUserError(EngineError):
    code = "wrong-user"


class NoRouteError(EngineError):
    code = "no-route"


class ExecutionFailure(EngineError):
    """A statement failed at runtime (empty set, deleted object, bad value)."""

    code = "execution"


class ScriptExhaustedError(EngineError):
    code = "script-exhausted"


class ValidationFailure(EngineError):
    code = "validation"

    def __init__(self, fields: dict[str, str]):
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(fields.items())))
        self.fields = fields


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Interactive:
    instance_id: str
    action_name: str
    epoch: int


@dataclass(frozen=True)
class Finished:
    instance_id: str


NextStep = Interactive | Finished


@dataclass(frozen=True)
class Task:
    instance_id: str
    activity_name: str
    action_name: str
    epoch: int


@dataclass
class PageRender:
    instance_id: str
    action_name: str
    page_name: str
    epoch: int
    elements: list[dict]
    decisions: list[str]
    fields: dict[str, str]

    def to_doc(self) -> dict:
        return {
            "instance": self.instance_id,
            "action": self.action_name,
            "page": self.page_name,
            "elements": self.elements,
            "decisions": list(self.decisions),
            "fields": dict(self.fields),
        }


@dataclass(frozen=True)
class Submission:
    form_data: dict = field(default_factory=dict)
    decision: str | None = None
    selection: str | None = None


# ---------------------------------------------------------------------------
# Rights
# ---------------------------------------------------------------------------


def allowed_roles(app: ast.AppModel, kind: str, name: str) -> set[str] | None:
    """Roles allowed to use a menu target; None when no rule mentions it."""
    mentioned = False
    roles: set[str] = set()
    for rule in app.rights:
        for entry in rule.allowed:
            if entry.kind == kind and entry.name == name:
                mentioned = True
                roles.add(rule.role)
    return roles if mentioned else None


def user_may(app: ast.AppModel, user: StoredObject, kind: str, name: str) -> bool:
    roles = allowed_roles(app, kind, name)
    if roles is None:
        return True
    return user.fields.get("role") in roles


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


class Engine:
    def __init__(self, system: LinkedSystem, store: Store):
        self.system = system
        self.store = store

    # -- public operations ----------------------------------------------------

    def start_activity(
        self, activity_name: str, user_id: str
    ) -> tuple[ExecutionContext | None, NextStep]:
        """Create an instance; returns its context (None when immediately
        finished) and the first step."""
        ctx, step, _ = self.start_with_trace(activity_name, user_id)
        return ctx, step

    def start_with_trace(
        self, activity_name: str, user_id: str
    ) -> tuple[ExecutionContext | None, NextStep, list[str]]:
        if not self.system.has_activity(activity_name):
            raise UnknownActivityError(f"unknown activity {activity_name!r}")
        activity = self.system.activity(activity_name)
        user = self.store.find_user(user_id)
        if user is None:
            raise WrongUserError(f"no user with id {user_id!r}")
        if not user_may(self.system.app, user, "activity", activity_name):
            raise PermissionDeniedError(
                f"user {user_id!r} may not start activity {activity_name!r}"
            )
        initial = activity.initial_edge()
        if initial is None:
            raise NoRouteError(f"activity {activity_name!r} has no initial edge")
        ctx = ExecutionContext(
            instance_id=self.store.new_instance_id(),
            activity_name=activity_name,
            started_by=user_id,
            token_action="",
        )
        trace: list[str] = []
        target = initial.targets[0].node
        step = self._arrive(ctx, activity, target, user_id, trace)
        if isinstance(step, Interactive):
            self.store.save_context(ctx)
            return ctx, step, trace
        return None, step, trace

    def render_action(self, instance_id: str, user_id: str) -> PageRender:
        ctx = self._load(instance_id)
        activity, action = self._current_action(ctx)
        self._check_actor(ctx, activity, action, user_id)
        if ctx.phase == PHASE_BEFORE_VIEW:
            for stmt in _pre_view(action):
                self.execute_statement(ctx, action.name, stmt, user_id)
            ctx.phase = PHASE_AWAITING_SUBMIT
            self.store.save_context(ctx)
        return self._describe(ctx, activity, action)

    def submit_action(
        self, instance_id: str, user_id: str, submission: Submission
    ) -> NextStep:
        step, _ = self.submit_with_trace(instance_id, user_id, submission)
        return step

    def submit_with_trace(
        self, instance_id: str, user_id: str, submission: Submission
    ) -> tuple[NextStep, list[str]]:
        ctx = self._load(instance_id)
        activity, action = self._current_action(ctx)
        self._check_actor(ctx, activity, action, user_id)
        if ctx.phase == PHASE_BEFORE_VIEW:
            # submit without a prior render; run the skipped pre-view part
            for stmt in _pre_view(action):
                self.execute_statement(ctx, action.name, stmt, user_id)
            ctx.phase = PHASE_AWAITING_SUBMIT

        page = self.system.page(action.view().page)
        param_values = self._page_params(ctx, action, page)
        edge = activity.edge_from(action.name)
        parsed, selection_param = self._validate_submission(
            ctx, page, param_values, edge, submission
        )

        self._write_back(ctx, action, page, param_values, parsed, selection_param, submission)
        for stmt in _post_view(action):
            self.execute_statement(ctx, action.name, stmt, user_id)

        if edge is None:
            raise NoRouteError(f"action {action.name!r} has no outgoing edge")
        target = self._route(ctx, action, edge, submission.decision, automatic=False)
        trace: list[str] = []
        step = self._move(ctx, activity, action, edge, target, user_id, trace)
        if isinstance(step, Interactive):
            self.store.save_context(ctx)
        else:
            self.store.delete_context(ctx.instance_id)
        return step, trace

    def list_tasks(self, user_id: str) -> list[Task]:
        tasks = []
        for ctx in self.store.load_all_contexts():
            activity = self.system.activity(ctx.activity_name)
            partition = activity.partition_of(ctx.token_action)
            if partition and ctx.role_bindings.get(partition.name) == user_id:
                tasks.append(
                    Task(ctx.instance_id, ctx.activity_name, ctx.token_action, ctx.epoch)
                )
        return tasks

    # -- token movement ---------------------------------------------------------

    def _arrive(
        self,
        ctx: ExecutionContext,
        activity: ast.ActivityModel,
        node: ast.NodeRef,
        user_id: str,
        trace: list[str],
    ) -> NextStep:
        """Walk the token from ``node`` through automatic actions."""
        for _ in range(_STEP_LIMIT):
            if node.kind == "final":
                return Finished(ctx.instance_id)
            action = activity.action(node.action or "")
            if action is None:
                raise ExecutionFailure(f"edge leads to unknown action {node.action!r}")
            trace.append(action.name)
            ctx.token_action = action.name
            ctx.phase = PHASE_BEFORE_VIEW
            if action.is_interactive:
                partition = activity.partition_of(action.name)
                if partition and partition.name not in ctx.role_bindings:
                    ctx.role_bindings[partition.name] = user_id
                return Interactive(ctx.instance_id, action.name, ctx.epoch)
            for stmt in action.body:
                self.execute_statement(ctx, action.name, stmt, user_id)
            edge = activity.edge_from(action.name)
            if edge is None:
                raise NoRouteError(f"automatic action {action.name!r} has no outgoing edge")
            target = self._route(ctx, action, edge, None, automatic=True)
            node = self._propagate(ctx, action, edge, target)
        raise ExecutionFailure(f"step limit exceeded in activity {activity.name!r}")

    def _move(
        self,
        ctx: ExecutionContext,
        activity: ast.ActivityModel,
        action: ast.ActionDef,
        edge: ast.EdgeDef,
        target: ast.EdgeTarget,
        user_id: str,
        trace: list[str],
    ) -> NextStep:
        node = self._propagate(ctx, action, edge, target)
        return self._arrive(ctx, activity, node, user_id, trace)

    def _propagate(
        self,
        ctx: ExecutionContext,
        action: ast.ActionDef,
        edge: ast.EdgeDef,
        target: ast.EdgeTarget,
    ) -> ast.NodeRef:
        ctx.epoch += 1
        if target.node.kind == "action" and target.node.pin and edge.source.pin:
            value = ctx.bindings.get(f"{action.name}.{edge.source.pin}")
            ctx.bindings[f"{target.node.action}.{target.node.pin}"] = value
        return target.node

    def _route(
        self,
        ctx: ExecutionContext,
        action: ast.ActionDef,
        edge: ast.EdgeDef,
        decision: str | None,
        automatic: bool,
    ) -> ast.EdgeTarget:
        for target in edge.targets:
            if target.guard is not None and self._eval_guard(ctx, action, target.guard):
                return target
        unguarded = [t for t in edge.targets if t.guard is None]
        if not unguarded:
            raise NoRouteError(
                f"no guard matched on the edge leaving action {action.name!r}"
            )
        if len(edge.targets) == 1 or automatic:
            return unguarded[0]
        for target in unguarded:
            if _target_label(target) == decision:
                return target
        raise NoRouteError(f"decision {decision!r} matches no target")  # pre-validated

    # -- actor checks -------------------------------------------------------------

    def _load(self, instance_id: str) -> ExecutionContext:
        ctx = self.store.load_context(instance_id)
        if ctx is None:
            raise UnknownInstanceError(f"no workflow instance {instance_id!r}")
        return ctx

    def _current_action(
        self, ctx: ExecutionContext
    ) -> tuple[ast.ActivityModel, ast.ActionDef]:
        activity = self.system.activity(ctx.activity_name)
        action = activity.action(ctx.token_action)
        if action is None:
            raise ExecutionFailure(f"token rests on unknown action {ctx.token_action!r}")
        if not action.is_interactive:
            raise ExecutionFailure(
                f"token rests on automatic action {action.name!r}"
            )
        return activity, action

    def _check_actor(
        self,
        ctx: ExecutionContext,
        activity: ast.ActivityModel,
        action: ast.ActionDef,
        user_id: str,
    ) -> None:
        partition = activity.partition_of(action.name)
        if partition is None or ctx.role_bindings.get(partition.name) != user_id:
            raise WrongUserError(
                f"action {action.name!r} is not assigned to this user"
            )

    # -- page description -----------------------------------------------------------

    def _page_params(
        self, ctx: ExecutionContext, action: ast.ActionDef, page: ast.PageModel
    ) -> dict[str, object]:
        view = action.view()
        return {
            param.name: ctx.bindings.get(f"{action.name}.{arg}")
            for arg, param in zip(view.args, page.params)
        }

    def _describe(
        self, ctx: ExecutionContext, activity: ast.ActivityModel, action: ast.ActionDef
    ) -> PageRender:
        page = self.system.page(action.view().page)
        params = self._page_params(ctx, action, page)
        elements: list[dict] = []
        fields: dict[str, str] = {}
        for elem in page.elements:
            if isinstance(elem, ast.Heading):
                elements.append({"kind": "heading", "level": elem.level, "text": elem.text})
            elif isinstance(elem, ast.TextElement):
                elements.append({"kind": "text", "text": elem.text})
            elif isinstance(elem, ast.Output):
                if elem.attr is None:
                    value = params.get(elem.param)
                    elements.append(
                        {"kind": "output", "label": elem.param, "value": field_to_text(value)}
                    )
                else:
                    value = self._read_attr(ctx, params.get(elem.param), elem.attr, elem.param)
                    elements.append(
                        {"kind": "output", "label": elem.attr, "value": field_to_text(value)}
                    )
            elif isinstance(elem, ast.Input):
                receiver = params.get(elem.param)
                value = self._read_attr(ctx, receiver, elem.attr, elem.param)
                attr_type = self._attr_type(receiver, elem.attr)
                name = f"{elem.param}.{elem.attr}"
                elements.append(
                    {
                        "kind": "input",
                        "name": name,
                        "label": elem.attr,
                        "type": attr_type,
                        "value": field_to_text(value),
                    }
                )
                fields[name] = attr_type
            elif isinstance(elem, ast.Table):
                value = params.get(elem.param)
                if not isinstance(value, SetOf):
                    raise ExecutionFailure(
                        f"page parameter {elem.param!r} holds no collection"
                    )
                rows = []
                for item in value.items:
                    cells = [
                        field_to_text(self._read_attr(ctx, item, col, elem.param))
                        for col in elem.columns
                    ]
                    rows.append({"id": item.id, "cells": cells})
                elements.append(
                    {
                        "kind": "table",
                        "param": elem.param,
                        "selectable": elem.selectable,
                        "columns": list(elem.columns),
                        "rows": rows,
                    }
                )
        edge = activity.edge_from(action.name)
        decisions = _decision_options(edge)
        return PageRender(
            instance_id=ctx.instance_id,
            action_name=action.name,
            page_name=page.name,
            epoch=ctx.epoch,
            elements=elements,
            decisions=decisions,
            fields=fields,
        )

    def _attr_type(self, receiver, attr: str) -> str:
        if not isinstance(receiver, (Ref, TempRef)):
            raise ExecutionFailure(f"cannot read {attr!r} of a non-object value")
        cdef = self.system.cls(receiver.class_name)
        adef = cdef.attribute(attr)
        if adef is None:
            raise ExecutionFailure(f"class {cdef.name!r} has no attribute {attr!r}")
        return adef.type

    def _read_attr(self, ctx: ExecutionContext, receiver, attr: str, param: str):
        if receiver is None:
            raise ExecutionFailure(f"page parameter {param!r} is unset")
        if isinstance(receiver, Ref):
            obj = self.store.load(receiver.class_name, receiver.id)
            if obj is None:
                raise ExecutionFailure(
                    f"object {receiver.class_name}/{receiver.id} no longer exists"
                )
            return obj.fields.get(attr)
        if isinstance(receiver, TempRef):
            temp = ctx.transients.get(receiver.id)
            if temp is None:
                raise ExecutionFailure(f"transient object {receiver.id!r} is gone")
            return temp.fields.get(attr)
        raise ExecutionFailure(f"cannot read {attr!r} of a non-object value")

    # -- submission ---------------------------------------------------------------

    def _validate_submission(
        self,
        ctx: ExecutionContext,
        page: ast.PageModel,
        params: dict[str, object],
        edge: ast.EdgeDef | None,
        submission: Submission,
    ) -> tuple[dict[str, object], str | None]:
        errors: dict[str, str] = {}
        parsed: dict[str, object] = {}
        for elem in page.elements:
            if not isinstance(elem, ast.Input):
                continue
            name = f"{elem.param}.{elem.attr}"
            attr_type = self._attr_type(params.get(elem.param), elem.attr)
            raw = submission.form_data.get(name, "")
            try:
                parsed[name] = parse_field(attr_type, raw)
            except ValueError as exc:
                errors[name] = str(exc)

        selection_param = None
        for elem in page.elements:
            if isinstance(elem, ast.Table) and elem.selectable:
                selection_param = elem.param
                value = params.get(elem.param)
                ids = {
                    item.id for item in (value.items if isinstance(value, SetOf) else ())
                }
                if submission.selection is None or submission.selection == "":
                    errors["_selection"] = "select a row"
                elif submission.selection not in ids:
                    errors["_selection"] = "the selected row does not exist"
        if selection_param is None and submission.selection:
            errors["_selection"] = "no selection expected"

        options = _decision_options(edge)
        if options:
            if submission.decision is None or submission.decision == "":
                errors["_decision"] = f"choose one of: {', '.join(options)}"
            elif submission.decision not in options:
                errors["_decision"] = f"unknown choice; options are: {', '.join(options)}"
        elif submission.decision:
            errors["_decision"] = "no decision expected"

        if errors:
            raise ValidationFailure(errors)
        return parsed, selection_param

    def _write_back(
        self,
        ctx: ExecutionContext,
        action: ast.ActionDef,
        page: ast.PageModel,
        params: dict[str, object],
        parsed: dict[str, object],
        selection_param: str | None,
        submission: Submission,
    ) -> None:
        view = action.view()
        param_to_arg = {p.name: a for a, p in zip(view.args, page.params)}
        for elem in page.elements:
            if not isinstance(elem, ast.Input):
                continue
            name = f"{elem.param}.{elem.attr}"
            self._assign_attr(ctx, params.get(elem.param), elem.attr, parsed[name])
        if selection_param is not None:
            value = params.get(selection_param)
            chosen = next(
                item for item in value.items if item.id == submission.selection
            )
            arg = param_to_arg[selection_param]
            ctx.bindings[f"{action.name}.{arg}"] = SetOf((chosen,))

    def _assign_attr(self, ctx: ExecutionContext, receiver, attr: str, value) -> None:
        if isinstance(receiver, Ref):
            try:
                self.store.update(receiver.class_name, receiver.id, fields={attr: value})
            except ValidationError as exc:
                raise ExecutionFailure(str(exc)) from None
            return
        if isinstance(receiver, TempRef):
            temp = ctx.transients.get(receiver.id)
            if temp is None:
                raise ExecutionFailure(f"transient object {receiver.id!r} is gone")
            cdef = self.system.cls(receiver.class_name)
            adef = cdef.attribute(attr)
            if adef is None:
                raise ExecutionFailure(f"class {cdef.name!r} has no attribute {attr!r}")
            message = check_field(adef.type, value)
            if message is not None:
                raise ExecutionFailure(f"{attr}: {message}")
            temp.fields[attr] = value
            return
        raise ExecutionFailure(f"cannot assign {attr!r} on a non-object value")

    # -- statements -----------------------------------------------------------------

    def execute_statement(
        self, ctx: ExecutionContext, action_name: str, stmt: ast.Statement, user_id: str
    ) -> ExecutionContext:
        key = lambda name: f"{action_name}.{name}"  # noqa: E731

        if isinstance(stmt, ast.LoadAll):
            refs = tuple(
                Ref(stmt.class_name, obj.id) for obj in self.store.load_all(stmt.class_name)
            )
            ctx.bindings[key(stmt.assign_to)] = SetOf(refs)
        elif isinstance(stmt, ast.GetActualUser):
            user = self.store.find_user(user_id)
            if user is None:
                raise ExecutionFailure(f"acting user {user_id!r} no longer exists")
            ctx.bindings[key(stmt.assign_to)] = Ref(user.class_name, user.id)
        elif isinstance(stmt, ast.AssignRole):
            value = ctx.bindings.get(key(stmt.user_var))
            if not isinstance(value, Ref):
                raise ExecutionFailure(
                    f"assignRole needs a saved user object, got {value!r}"
                )
            ctx.role_bindings[stmt.partition] = value.id
        elif isinstance(stmt, ast.SaveCmd):
            self._save_value(ctx, ctx.bindings.get(key(stmt.target)))
        elif isinstance(stmt, ast.Notify):
            recipients = list(dict.fromkeys(ctx.role_bindings.values()))
            for recipient in recipients:
                self.store.add_notification(recipient, stmt.message)
                ctx.notifications.append((recipient, stmt.message))
        elif isinstance(stmt, ast.ScriptBlock):
            for script_stmt in stmt.statements:
                self._execute_script(ctx, action_name, script_stmt, key)
        elif isinstance(stmt, ast.View):
            raise ExecutionFailure("view statements are not executed directly")
        else:
            raise ExecutionFailure(f"cannot execute {type(stmt).__name__}")
        return ctx

    def _execute_script(self, ctx, action_name: str, stmt: ast.ScriptStmt, key) -> None:
        if isinstance(stmt, ast.Assign):
            ctx.bindings[key(stmt.lhs)] = self._eval(ctx, action_name, stmt.rhs)
            return
        receiver = ctx.bindings.get(key(stmt.receiver))
        value = self._eval(ctx, action_name, stmt.arg)
        cdef = None
        if isinstance(receiver, (Ref, TempRef)):
            cdef = self.system.cls(receiver.class_name)
        if cdef is None:
            raise ExecutionFailure(
                f"cannot call a setter on {receiver!r} (variable {stmt.receiver!r})"
            )
        assoc = cdef.association(stmt.attr)
        if assoc is None:
            self._assign_attr(ctx, receiver, stmt.attr, value)
            return
        # association write
        if isinstance(value, SetOf):
            targets = list(value.items)
        elif value is None:
            targets = []
        else:
            targets = [value]
        if assoc.multiplicity == "one" and len(targets) > 1:
            raise ExecutionFailure(f"association {stmt.attr!r} holds at most one object")
        if isinstance(receiver, TempRef):
            temp = ctx.transients[receiver.id]
            temp.links[stmt.attr] = targets
            return
        ids = []
        for target in targets:
            if isinstance(target, TempRef):
                raise ExecutionFailure(
                    "cannot link a saved object to an unsaved one; save it first"
                )
            if not isinstance(target, Ref):
                raise ExecutionFailure(f"association {stmt.attr!r} needs object values")
            ids.append(target.id)
        try:
            self.store.update(receiver.class_name, receiver.id, links={stmt.attr: ids})
        except ValidationError as exc:
            raise ExecutionFailure(str(exc)) from None

    def _eval(self, ctx: ExecutionContext, action_name: str, expr: ast.Expr):
        if isinstance(expr, ast.VarRef):
            return ctx.bindings.get(f"{action_name}.{expr.name}")
        if isinstance(expr, ast.NewObject):
            temp_id = ctx.new_temp_id()
            cdef = self.system.cls(expr.class_name)
            ctx.transients[temp_id] = TransientObject(
                expr.class_name,
                {a.name: None for a in cdef.attributes},
                {a.role_name: [] for a in cdef.associations},
            )
            return TempRef(expr.class_name, temp_id)
        if isinstance(expr, ast.Getter):
            receiver = ctx.bindings.get(f"{action_name}.{expr.receiver}")
            return self._get_member(ctx, receiver, expr.attr, expr.receiver)
        if isinstance(expr, ast.FirstOf):
            value = ctx.bindings.get(f"{action_name}.{expr.receiver}")
            if not isinstance(value, SetOf):
                raise ExecutionFailure(
                    f"iterator().next() needs a collection, {expr.receiver!r} holds {value!r}"
                )
            if not value.items:
                raise ExecutionFailure(f"the collection {expr.receiver!r} is empty")
            return value.items[0]
        raise ExecutionFailure(f"cannot evaluate {type(expr).__name__}")

    def _get_member(self, ctx: ExecutionContext, receiver, member: str, var: str):
        if receiver is None:
            raise ExecutionFailure(f"variable {var!r} is unset")
        if isinstance(receiver, Ref):
            obj = self.store.load(receiver.class_name, receiver.id)
            if obj is None:
                raise ExecutionFailure(
                    f"object {receiver.class_name}/{receiver.id} no longer exists"
                )
            cdef = self.system.cls(receiver.class_name)
            if cdef.attribute(member) is not None:
                return obj.fields.get(member)
            assoc = cdef.association(member)
            if assoc is None:
                raise ExecutionFailure(f"class {cdef.name!r} has no member {member!r}")
            refs = tuple(Ref(assoc.target_class, i) for i in obj.links.get(member, []))
            if assoc.multiplicity == "one":
                return refs[0] if refs else None
            return SetOf(refs)
        if isinstance(receiver, TempRef):
            temp = ctx.transients.get(receiver.id)
            if temp is None:
                raise ExecutionFailure(f"transient object {receiver.id!r} is gone")
            cdef = self.system.cls(receiver.class_name)
            if cdef.attribute(member) is not None:
                return temp.fields.get(member)
            assoc = cdef.association(member)
            if assoc is None:
                raise ExecutionFailure(f"class {cdef.name!r} has no member {member!r}")
            values = tuple(temp.links.get(member, []))
            if assoc.multiplicity == "one":
                return values[0] if values else None
            return SetOf(values)
        raise ExecutionFailure(f"cannot read member {member!r} of {receiver!r}")

    def _save_value(self, ctx: ExecutionContext, value) -> None:
        if isinstance(value, Ref):
            return  # already persisted
        if not isinstance(value, TempRef):
            raise ExecutionFailure(f"save() needs an object, got {value!r}")
        mapping: dict[str, Ref] = {}

        def persist(temp_ref: TempRef, in_progress: set[str]) -> Ref:
            if temp_ref.id in mapping:
                return mapping[temp_ref.id]
            if temp_ref.id in in_progress:
                raise ExecutionFailure("cannot save a cycle of unsaved objects")
            in_progress.add(temp_ref.id)
            temp = ctx.transients.get(temp_ref.id)
            if temp is None:
                raise ExecutionFailure(f"transient object {temp_ref.id!r} is gone")
            link_ids: dict[str, list[str]] = {}
            for role, items in temp.links.items():
                ids = []
                for item in items:
                    if isinstance(item, TempRef):
                        ids.append(persist(item, in_progress).id)
                    elif isinstance(item, Ref):
                        ids.append(item.id)
                    else:
                        raise ExecutionFailure(f"association {role!r} holds a non-object")
                link_ids[role] = ids
            try:
                obj = self.store.create_object(temp.class_name, temp.fields, link_ids)
            except ValidationError as exc:
                raise ExecutionFailure(f"save failed: {exc}") from None
            mapping[temp_ref.id] = Ref(temp.class_name, obj.id)
            return mapping[temp_ref.id]

        persist(value, set())
        for temp_id in mapping:
            ctx.transients.pop(temp_id, None)
        remap = lambda v: _replace_temps(v, mapping)  # noqa: E731
        ctx.bindings = {k: remap(v) for k, v in ctx.bindings.items()}
        for temp in ctx.transients.values():
            temp.links = {role: [remap(v) for v in items] for role, items in temp.links.items()}

    # -- guards ------------------------------------------------------------------

    def _eval_guard(
        self, ctx: ExecutionContext, action: ast.ActionDef, guard: ast.GuardExpr
    ) -> bool:
        left = self._guard_atom(ctx, action, guard.left)
        if guard.op is None:
            return left is True
        right = self._guard_atom(ctx, action, guard.right)
        return left == right if guard.op == "==" else left != right

    def _guard_atom(self, ctx: ExecutionContext, action: ast.ActionDef, atom: ast.GuardAtom):
        if isinstance(atom, ast.Literal):
            return atom.value
        if isinstance(atom, ast.VarRef):
            return ctx.bindings.get(f"{action.name}.{atom.name}")
        receiver = ctx.bindings.get(f"{action.name}.{atom.receiver}")
        return self._get_member(ctx, receiver, atom.attr, atom.receiver)


def _replace_temps(value, mapping: dict[str, Ref]):
    if isinstance(value, TempRef) and value.id in mapping:
        return mapping[value.id]
    if isinstance(value, SetOf):
        return SetOf(tuple(_replace_temps(v, mapping) for v in value.items))
    return value


def _pre_view(action: ast.ActionDef) -> list[ast.Statement]:
    out = []
    for stmt in action.body:
        if isinstance(stmt, ast.View):
            break
        out.append(stmt)
    return out


def _post_view(action: ast.ActionDef) -> list[ast.Statement]:
    out = []
    seen_view = False
    for stmt in action.body:
        if isinstance(stmt, ast.View):
            seen_view = True
            continue
        if seen_view:
            out.append(stmt)
    return out


def _target_label(target: ast.EdgeTarget) -> str:
    if target.node.kind == "final":
        return FINAL_LABEL
    return target.node.action or ""


def _decision_options(edge: ast.EdgeDef | None) -> list[str]:
    if edge is None or not edge.is_decision:
        return []
    return [_target_label(t) for t in edge.targets if t.guard is None]


# ---------------------------------------------------------------------------
# Module-level operation wrappers
# ---------------------------------------------------------------------------


def start_activity(system: LinkedSystem, store: Store, activity_name: str, user_id: str):
    return Engine(system, store).start_activity(activity_name, user_id)


def render_action(system: LinkedSystem, store: Store, instance_id: str, user_id: str):
    return Engine(system, store).render_action(instance_id, user_id)


def submit_action(
    system: LinkedSystem, store: Store, instance_id: str, user_id: str, submission: Submission
):
    return Engine(system, store).submit_action(instance_id, user_id, submission)


def execute_statement(
    system: LinkedSystem,
    store: Store,
    ctx: ExecutionContext,
    action_name: str,
    stmt: ast.Statement,
    user_id: str,
) -> ExecutionContext:
    return Engine(system, store).execute_statement(ctx, action_name, stmt, user_id)


def list_tasks(system: LinkedSystem, store: Store, user_id: str) -> list[Task]:
    return Engine(system, store).list_tasks(user_id)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChoiceStep:
    form: dict = field(default_factory=dict)
    decision: str | None = None
    selection: str | None = None


@dataclass(frozen=True)
class ChoiceScript:
    user_id: str
    steps: tuple[ChoiceStep, ...] = ()


def simulate(system: LinkedSystem, store: Store, activity_name: str, script: ChoiceScript):
    """Run one instance to completion; returns visited action names in order."""
    engine = Engine(system, store)
    ctx, step, visited = engine.start_with_trace(activity_name, script.user_id)
    if isinstance(step, Finished):
        return visited
    remaining = list(script.steps)
    while isinstance(step, Interactive):
        ctx = store.load_context(step.instance_id)
        activity = system.activity(ctx.activity_name)
        partition = activity.partition_of(ctx.token_action)
        actor = ctx.role_bindings.get(partition.name) if partition else None
        if actor is None:
            raise ScriptExhaustedError(
                f"action {ctx.token_action!r} has no bound user to act as"
            )
        engine.render_action(step.instance_id, actor)
        if not remaining:
            raise ScriptExhaustedError(
                f"script exhausted at action {ctx.token_action!r}"
            )
        choice = remaining.pop(0)
        step, trace = engine.submit_with_trace(
            step.instance_id,
            actor,
            Submission(dict(choice.form), choice.decision, choice.selection),
        )
        visited += trace
    return visited
