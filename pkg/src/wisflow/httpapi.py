"""HTTP interface.

Activities, actions, tasks and domain objects are resources. Workflow steps
follow a redirect protocol: POST /activity/{name} answers 303 with the first
action's URL, GET renders its page descriptor, POST submits it and redirects
to the next action until the final submission answers 200 with a finished
status. Action URLs embed the instance epoch, so URLs of superseded steps
answer 410 instead of replaying.

All bodies are JSON. Errors use one shape: {"error", "message", "fields"}.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field as dc_field

from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, RedirectResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import ast
from .engine import (
    Engine,
    EngineError,
    Finished,
    Interactive,
    PermissionDeniedError,
    Submission,
    UnknownActivityError,
    UnknownInstanceError,
    ValidationFailure,
    WrongUserError,
    user_may,
)
from .linker import LinkedSystem
from .store import NotFoundError, Store, ValidationError, field_to_text

SESSION_TTL_SECONDS = 8 * 3600

_ENDPOINTS = (
    ("POST", "/login"),
    ("GET", "/menu"),
    ("GET", "/tasks"),
    ("GET", "/activities"),
    ("POST", "/activity/{name}"),
    ("GET", "/action/{action_id}"),
    ("POST", "/action/{action_id}"),
    ("GET", "/class/{class_name}"),
    ("POST", "/class/{class_name}"),
    ("GET", "/class/{class_name}/{object_id}"),
    ("PUT", "/class/{class_name}/{object_id}"),
    ("DELETE", "/class/{class_name}/{object_id}"),
)


def route_table() -> tuple[tuple[str, str], ...]:
    """The (method, path) pairs this API exposes."""
    return _ENDPOINTS


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, fields: dict | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.fields = fields or {}

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.status,
            content={"error": self.code, "message": self.message, "fields": self.fields},
        )


@dataclass
class Session:
    token: str
    user_id: str
    created_at: float
    expires_at: float


@dataclass
class _ServerState:
    system: LinkedSystem
    store: Store
    sessions: dict[str, Session] = dc_field(default_factory=dict)
    completed: set[str] = dc_field(default_factory=set)
    locks: dict[str, threading.Lock] = dc_field(default_factory=dict)
    locks_guard: threading.Lock = dc_field(default_factory=threading.Lock)

    def instance_lock(self, instance_id: str) -> threading.Lock:
        with self.locks_guard:
            return self.locks.setdefault(instance_id, threading.Lock())


def join_action_id(instance_id: str, epoch: int) -> str:
    return f"{instance_id}-{epoch}"


def split_action_id(raw: str) -> tuple[str, int]:
    instance_id, sep, epoch = raw.rpartition("-")
    if not sep or not epoch.isdigit():
        raise ApiError(404, "not-found", f"malformed action id {raw!r}")
    return instance_id, int(epoch)


def _engine_error(exc: EngineError) -> ApiError:
    if isinstance(exc, ValidationFailure):
        return ApiError(422, "validation", "the submission is invalid", exc.fields)
    if isinstance(exc, WrongUserError):
        return ApiError(403, "wrong-user", exc.message)
    if isinstance(exc, PermissionDeniedError):
        return ApiError(403, "forbidden", exc.message)
    if isinstance(exc, (UnknownInstanceError, UnknownActivityError)):
        return ApiError(404, "not-found", exc.message)
    return ApiError(500, exc.code, exc.message)


def _form_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, str):
        return value
    raise ApiError(422, "validation", "form values must be strings", {})


def create_app(system: LinkedSystem, store: Store, ui_dir=None) -> FastAPI:
    app = FastAPI(title=system.app.name, openapi_url=None, docs_url=None, redoc_url=None)
    state = _ServerState(system, store)
    app.state.server = state
    engine = Engine(system, store)

    # -- error shaping --------------------------------------------------------

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return exc.response()

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(_request: Request, exc: StarletteHTTPException):
        code = {404: "not-found", 405: "method-not-allowed"}.get(exc.status_code, "error")
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": code, "message": str(exc.detail), "fields": {}},
        )

    @app.exception_handler(RequestValidationError)
    async def _request_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": "validation", "message": "malformed request body", "fields": {}},
        )

    # -- sessions ----------------------------------------------------------------

    def require_session(request: Request) -> Session:
        header = request.headers.get("authorization", "")
        token = header[7:] if header.lower().startswith("bearer ") else ""
        session = state.sessions.get(token)
        if session is None:
            raise ApiError(401, "unauthorized", "login required")
        if session.expires_at < time.time():
            state.sessions.pop(token, None)
            raise ApiError(401, "unauthorized", "session expired")
        return session

    def session_user(session: Session):
        user = store.find_user(session.user_id)
        if user is None:
            raise ApiError(401, "unauthorized", "user no longer exists")
        return user

    @app.post("/login")
    def login(payload: dict = Body(default={})):
        login_name = payload.get("login")
        password = payload.get("password")
        if not isinstance(login_name, str) or not isinstance(password, str):
            raise ApiError(422, "validation", "login and password are required")
        user = store.authenticate(login_name, password)
        if user is None:
            raise ApiError(401, "unauthorized", "wrong login or password")
        now = time.time()
        session = Session(secrets.token_hex(16), user.id, now, now + SESSION_TTL_SECONDS)
        state.sessions[session.token] = session
        return {
            "token": session.token,
            "user": {
                "id": user.id,
                "class": user.class_name,
                "name": field_to_text(user.fields.get("name")),
                "role": field_to_text(user.fields.get("role")),
            },
        }

    # -- menu and activities --------------------------------------------------------

    def _static_page_doc(page: ast.PageModel) -> dict:
        elements = []
        for elem in page.elements:
            if isinstance(elem, ast.Heading):
                elements.append({"kind": "heading", "level": elem.level, "text": elem.text})
            elif isinstance(elem, ast.TextElement):
                elements.append({"kind": "text", "text": elem.text})
        return {"page": page.name, "elements": elements}

    @app.get("/menu")
    def menu(request: Request):
        user = session_user(require_session(request))
        entries = []
        for entry in system.app.menu:
            if not user_may(system.app, user, entry.kind, entry.name):
                continue
            doc = {"kind": entry.kind, "name": entry.name}
            if entry.kind == "page":
                doc["render"] = _static_page_doc(system.page(entry.name))
            entries.append(doc)
        return {
            "application": system.app.name,
            "entries": entries,
            "notifications": store.notifications(user.id),
        }

    @app.get("/activities")
    def activities(request: Request):
        user = session_user(require_session(request))
        names = [
            a.name
            for a in system.activities
            if user_may(system.app, user, "activity", a.name)
        ]
        return {"activities": names}

    @app.get("/tasks")
    def tasks(request: Request):
        session = require_session(request)
        return {
            "tasks": [
                {
                    "instance": t.instance_id,
                    "activity": t.activity_name,
                    "action": t.action_name,
                    "actionId": join_action_id(t.instance_id, t.epoch),
                }
                for t in engine.list_tasks(session.user_id)
            ]
        }

    # -- workflow ---------------------------------------------------------------------

    @app.post("/activity/{name}")
    def start(name: str, request: Request):
        session = require_session(request)
        try:
            ctx, step = engine.start_activity(name, session.user_id)
        except EngineError as exc:
            raise _engine_error(exc) from None
        if isinstance(step, Finished):
            state.completed.add(step.instance_id)
            return JSONResponse(
                status_code=200, content={"status": "finished", "instance": step.instance_id}
            )
        return RedirectResponse(
            url=f"/action/{join_action_id(step.instance_id, step.epoch)}", status_code=303
        )

    def resolve_action(action_id: str) -> tuple[str, int]:
        instance_id, epoch = split_action_id(action_id)
        if instance_id in state.completed:
            raise ApiError(410, "gone", "this workflow instance has finished")
        ctx = store.load_context(instance_id)
        if ctx is None:
            raise ApiError(404, "not-found", f"no workflow instance {instance_id!r}")
        if ctx.epoch != epoch:
            raise ApiError(410, "gone", "this step was already completed")
        return instance_id, epoch

    @app.get("/action/{action_id}")
    def get_action(action_id: str, request: Request):
        session = require_session(request)
        instance_id, _ = split_action_id(action_id)
        lock = state.instance_lock(instance_id)
        with lock:
            resolve_action(action_id)
            try:
                render = engine.render_action(instance_id, session.user_id)
            except EngineError as exc:
                raise _engine_error(exc) from None
            return render.to_doc()

    @app.post("/action/{action_id}")
    def post_action(action_id: str, request: Request, payload: dict = Body(default={})):
        session = require_session(request)
        instance_id, _ = split_action_id(action_id)
        lock = state.instance_lock(instance_id)
        if not lock.acquire(blocking=False):
            raise ApiError(409, "conflict", "another submission for this instance is running")
        try:
            resolve_action(action_id)
            form = {}
            decision = None
            selection = None
            for key, value in payload.items():
                if key == "_decision":
                    decision = _form_text(value) or None
                elif key == "_selection":
                    selection = _form_text(value) or None
                else:
                    form[key] = _form_text(value)
            try:
                step = engine.submit_action(
                    instance_id, session.user_id, Submission(form, decision, selection)
                )
            except EngineError as exc:
                raise _engine_error(exc) from None
            if isinstance(step, Finished):
                state.completed.add(step.instance_id)
                return JSONResponse(
                    status_code=200,
                    content={"status": "finished", "instance": step.instance_id},
                )
            return RedirectResponse(
                url=f"/action/{join_action_id(step.instance_id, step.epoch)}", status_code=303
            )
        finally:
            lock.release()

    # -- CRUD -------------------------------------------------------------------------

    def resolve_class(class_name: str) -> ast.ClassDef:
        cdef = system.class_model.cls(class_name)
        if cdef is None:
            raise ApiError(404, "not-found", f"unknown class {class_name!r}")
        return cdef

    def check_class_right(user, class_name: str, write: bool) -> None:
        mode = "create" if write else "list"
        if not user_may(system.app, user, mode, class_name):
            raise ApiError(403, "forbidden", f"no {mode} right on class {class_name!r}")

    def parse_crud_fields(cdef: ast.ClassDef, raw: dict) -> dict:
        from .store import check_field, parse_field

        fields = {}
        errors = {}
        for name, value in raw.items():
            attr = cdef.attribute(name)
            if attr is None:
                errors[name] = f"class {cdef.name!r} has no attribute {name!r}"
                continue
            if isinstance(value, str):
                try:
                    fields[name] = parse_field(attr.type, value)
                except ValueError as exc:
                    errors[name] = str(exc)
            elif value is None:
                fields[name] = None
            else:
                message = check_field(attr.type, value)
                if message is not None:
                    errors[name] = message
                else:
                    fields[name] = value
        if errors:
            raise ApiError(422, "validation", "invalid fields", errors)
        return fields

    def parse_crud_links(raw: dict) -> dict:
        links = {}
        for role, ids in raw.items():
            if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
                raise ApiError(422, "validation", "invalid links", {role: "expected a list of ids"})
            links[role] = ids
        return links

    def object_doc(cdef: ast.ClassDef, obj) -> dict:
        values = {
            a.name: field_to_text(obj.fields.get(a.name))
            for a in cdef.attributes
            if a.name != "password"
        }
        return {
            "class": cdef.name,
            "id": obj.id,
            "values": values,
            "links": {k: list(v) for k, v in obj.links.items()},
        }

    def form_schema(cdef: ast.ClassDef) -> dict:
        return {a.name: a.type for a in cdef.attributes}

    @app.get("/class/{class_name}")
    def list_objects(class_name: str, request: Request):
        user = session_user(require_session(request))
        cdef = resolve_class(class_name)
        check_class_right(user, class_name, write=False)
        columns = [a.name for a in cdef.attributes if a.name != "password"]
        objects = store.load_all(class_name)
        rows = [
            {"id": o.id, "cells": [field_to_text(o.fields.get(c)) for c in columns]}
            for o in objects
        ]
        return {
            "class": class_name,
            "elements": [
                {"kind": "heading", "level": 1, "text": class_name},
                {
                    "kind": "table",
                    "param": class_name,
                    "selectable": False,
                    "columns": columns,
                    "rows": rows,
                },
            ],
            "ids": [o.id for o in objects],
        }

    @app.post("/class/{class_name}", status_code=201)
    def create_object(class_name: str, request: Request, payload: dict = Body(default={})):
        user = session_user(require_session(request))
        cdef = resolve_class(class_name)
        check_class_right(user, class_name, write=True)
        fields = parse_crud_fields(cdef, payload.get("fields", {}))
        links = parse_crud_links(payload.get("links", {}))
        try:
            obj = store.create_object(class_name, fields, links)
        except ValidationError as exc:
            raise ApiError(422, "validation", "invalid fields", exc.fields) from None
        return object_doc(cdef, obj)

    @app.get("/class/{class_name}/{object_id}")
    def get_object(class_name: str, object_id: str, request: Request):
        user = session_user(require_session(request))
        cdef = resolve_class(class_name)
        if object_id == "new":
            check_class_right(user, class_name, write=True)
            elements = [{"kind": "heading", "level": 1, "text": f"New {class_name}"}] + [
                {"kind": "input", "name": a.name, "label": a.name, "type": a.type, "value": ""}
                for a in cdef.attributes
            ]
            return {"class": class_name, "elements": elements, "fields": form_schema(cdef)}
        check_class_right(user, class_name, write=False)
        obj = store.load(class_name, object_id)
        if obj is None:
            raise ApiError(404, "not-found", f"no {class_name} object with id {object_id!r}")
        doc = object_doc(cdef, obj)
        doc["fields"] = form_schema(cdef)
        return doc

    @app.put("/class/{class_name}/{object_id}")
    def update_object(
        class_name: str, object_id: str, request: Request, payload: dict = Body(default={})
    ):
        user = session_user(require_session(request))
        cdef = resolve_class(class_name)
        check_class_right(user, class_name, write=True)
        fields = parse_crud_fields(cdef, payload.get("fields", {}))
        if cdef.is_user and fields.get("password") is None:
            fields.pop("password", None)  # empty password input means "unchanged"
        links = parse_crud_links(payload.get("links", {}))
        try:
            obj = store.update(class_name, object_id, fields, links)
        except NotFoundError as exc:
            raise ApiError(404, "not-found", str(exc)) from None
        except ValidationError as exc:
            raise ApiError(422, "validation", "invalid fields", exc.fields) from None
        return object_doc(cdef, obj)

    @app.delete("/class/{class_name}/{object_id}", status_code=204)
    def delete_object(class_name: str, object_id: str, request: Request):
        user = session_user(require_session(request))
        resolve_class(class_name)
        check_class_right(user, class_name, write=True)
        try:
            store.delete(class_name, object_id)
        except NotFoundError as exc:
            raise ApiError(404, "not-found", str(exc)) from None

    # -- static webclient ------------------------------------------------------------

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
