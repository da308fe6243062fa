"""Object and context persistence.

The class model doubles as the storage schema: objects are validated field
dictionaries plus association links, stored one JSON document per object.
Workflow instances persist as execution contexts so a restarted server
resumes them where they stood. Two backends share one document format, an
in-memory one for tests and simulation and a file-backed one for serving.

Layout of a file-backed data directory:

    objects/<Class>/<id>.json      one document per object
    objects/<Class>/_order.json    creation order of ids
    contexts/<instanceId>.json     one document per live workflow instance
    contexts/_order.json           creation order of instance ids
    inbox/<userId>.json            notification messages per user
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import secrets
import threading
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, InvalidOperation
from pathlib import Path
from random import Random

from . import ast

_ID_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
_ID_LENGTH = 5
_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
_PBKDF2_ITERATIONS = 20000


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


class ValidationError(StoreError):
    """Field-level validation failure; ``fields`` maps field name to message."""

    def __init__(self, fields: dict[str, str]):
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(fields.items())))
        self.fields = fields


# ---------------------------------------------------------------------------
# Field values
# ---------------------------------------------------------------------------

# attribute values in memory: str for String/Text/Email, ISO str for Date,
# int for Int, Decimal for Decimal, bool for Bool, None for unset


def parse_field(attr_type: str, raw: str):
    """Convert a submitted string to a field value; raises ValueError."""
    raw = raw.strip()
    if raw == "":
        return None
    if attr_type in ("String", "Text"):
        return raw
    if attr_type == "Email":
        if not _EMAIL_RE.match(raw):
            raise ValueError("not a valid email address")
        return raw
    if attr_type == "Date":
        try:
            return date.fromisoformat(raw).isoformat()
        except ValueError:
            raise ValueError("not a valid date (expected YYYY-MM-DD)") from None
    if attr_type == "Int":
        try:
            return int(raw)
        except ValueError:
            raise ValueError("not a whole number") from None
    if attr_type == "Decimal":
        try:
            return Decimal(raw)
        except InvalidOperation:
            raise ValueError("not a decimal number") from None
    if attr_type == "Bool":
        if raw in ("true", "1", "yes", "on"):
            return True
        if raw in ("false", "0", "no", "off"):
            return False
        raise ValueError("not a boolean (expected true or false)")
    raise ValueError(f"unknown attribute type {attr_type!r}")


def check_field(attr_type: str, value) -> str | None:
    """Validate an in-memory field value; returns an error message or None."""
    if value is None:
        return None
    if attr_type in ("String", "Text"):
        return None if isinstance(value, str) else "expected a string"
    if attr_type == "Email":
        if not isinstance(value, str):
            return "expected a string"
        return None if _EMAIL_RE.match(value) else "not a valid email address"
    if attr_type == "Date":
        if not isinstance(value, str):
            return "expected an ISO date string"
        try:
            date.fromisoformat(value)
            return None
        except ValueError:
            return "not a valid date (expected YYYY-MM-DD)"
    if attr_type == "Int":
        return None if isinstance(value, int) and not isinstance(value, bool) else "expected a whole number"
    if attr_type == "Decimal":
        return None if isinstance(value, Decimal) else "expected a decimal number"
    if attr_type == "Bool":
        return None if isinstance(value, bool) else "expected a boolean"
    return f"unknown attribute type {attr_type!r}"


def field_to_json(value):
    if isinstance(value, Decimal):
        return str(value)
    return value


def field_from_json(attr_type: str, value):
    if value is None:
        return None
    if attr_type == "Decimal":
        return Decimal(value)
    return value


def field_to_text(value) -> str:
    """Render a field value for display."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


# ---------------------------------------------------------------------------
# Runtime values (pin/variable bindings)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ref:
    """Reference to a persisted object."""

    class_name: str
    id: str


@dataclass(frozen=True)
class TempRef:
    """Reference to a transient object living inside one execution context."""

    class_name: str
    id: str


@dataclass(frozen=True)
class SetOf:
    items: tuple = ()


Value = None | str | int | bool | Decimal | Ref | TempRef | SetOf


def value_to_doc(value):
    if value is None:
        return {"kind": "null"}
    if isinstance(value, bool):
        return {"kind": "bool", "value": value}
    if isinstance(value, int):
        return {"kind": "int", "value": value}
    if isinstance(value, str):
        return {"kind": "str", "value": value}
    if isinstance(value, Decimal):
        return {"kind": "dec", "value": str(value)}
    if isinstance(value, Ref):
        return {"kind": "ref", "class": value.class_name, "id": value.id}
    if isinstance(value, TempRef):
        return {"kind": "temp", "class": value.class_name, "id": value.id}
    if isinstance(value, SetOf):
        return {"kind": "set", "items": [value_to_doc(v) for v in value.items]}
    raise TypeError(f"cannot serialize value {value!r}")


def value_from_doc(doc):
    kind = doc["kind"]
    if kind == "null":
        return None
    if kind in ("bool", "int", "str"):
        return doc["value"]
    if kind == "dec":
        return Decimal(doc["value"])
    if kind == "ref":
        return Ref(doc["class"], doc["id"])
    if kind == "temp":
        return TempRef(doc["class"], doc["id"])
    if kind == "set":
        return SetOf(tuple(value_from_doc(v) for v in doc["items"]))
    raise ValueError(f"unknown value kind {kind!r}")


# ---------------------------------------------------------------------------
# Execution contexts
# ---------------------------------------------------------------------------

PHASE_BEFORE_VIEW = "beforeView"
PHASE_AWAITING_SUBMIT = "awaitingSubmit"


@dataclass
class TransientObject:
    class_name: str
    fields: dict = field(default_factory=dict)
    links: dict = field(default_factory=dict)  # role -> list[Ref | TempRef]

    def to_doc(self) -> dict:
        return {
            "class": self.class_name,
            "fields": {k: field_to_json(v) for k, v in self.fields.items()},
            "links": {k: [value_to_doc(v) for v in vs] for k, vs in self.links.items()},
        }

    @classmethod
    def from_doc(cls, doc: dict, class_model: ast.ClassModel) -> "TransientObject":
        cdef = class_model.cls(doc["class"])
        fields = {}
        for name, value in doc["fields"].items():
            attr = cdef.attribute(name) if cdef else None
            fields[name] = field_from_json(attr.type if attr else "String", value)
        links = {k: [value_from_doc(v) for v in vs] for k, vs in doc["links"].items()}
        return cls(doc["class"], fields, links)


@dataclass
class ExecutionContext:
    """Complete runtime state of one workflow instance."""

    instance_id: str
    activity_name: str
    started_by: str
    token_action: str
    phase: str = PHASE_BEFORE_VIEW
    epoch: int = 0
    bindings: dict = field(default_factory=dict)  # "Action.decl" -> Value
    role_bindings: dict = field(default_factory=dict)  # partition -> user object id
    transients: dict = field(default_factory=dict)  # temp id -> TransientObject
    notifications: list = field(default_factory=list)  # [user id, message] pairs
    next_temp: int = 1

    def to_doc(self) -> dict:
        return {
            "instanceId": self.instance_id,
            "activityName": self.activity_name,
            "startedBy": self.started_by,
            "token": {"action": self.token_action, "phase": self.phase},
            "epoch": self.epoch,
            "bindings": {k: value_to_doc(v) for k, v in self.bindings.items()},
            "roleBindings": dict(self.role_bindings),
            "transientObjects": {k: t.to_doc() for k, t in self.transients.items()},
            "notifications": [list(pair) for pair in self.notifications],
            "nextTemp": self.next_temp,
        }

    @classmethod
    def from_doc(cls, doc: dict, class_model: ast.ClassModel) -> "ExecutionContext":
        return cls(
            instance_id=doc["instanceId"],
            activity_name=doc["activityName"],
            started_by=doc["startedBy"],
            token_action=doc["token"]["action"],
            phase=doc["token"]["phase"],
            epoch=doc["epoch"],
            bindings={k: value_from_doc(v) for k, v in doc["bindings"].items()},
            role_bindings=dict(doc["roleBindings"]),
            transients={
                k: TransientObject.from_doc(t, class_model)
                for k, t in doc["transientObjects"].items()
            },
            notifications=[tuple(pair) for pair in doc["notifications"]],
            next_temp=doc["nextTemp"],
        )

    def new_temp_id(self) -> str:
        temp_id = f"t{self.next_temp}"
        self.next_temp += 1
        return temp_id


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class MemoryBackend:
    def __init__(self):
        self.objects: dict[str, dict[str, dict]] = {}
        self.contexts: dict[str, dict] = {}
        self.inboxes: dict[str, list[str]] = {}

    def read_object(self, class_name: str, obj_id: str) -> dict | None:
        return self.objects.get(class_name, {}).get(obj_id)

    def write_object(self, doc: dict) -> None:
        self.objects.setdefault(doc["className"], {})[doc["id"]] = doc

    def delete_object(self, class_name: str, obj_id: str) -> None:
        self.objects.get(class_name, {}).pop(obj_id, None)

    def list_ids(self, class_name: str) -> list[str]:
        return list(self.objects.get(class_name, {}))

    def read_context(self, instance_id: str) -> dict | None:
        return self.contexts.get(instance_id)

    def write_context(self, doc: dict) -> None:
        self.contexts[doc["instanceId"]] = doc

    def delete_context(self, instance_id: str) -> None:
        self.contexts.pop(instance_id, None)

    def list_context_ids(self) -> list[str]:
        return list(self.contexts)

    def read_inbox(self, user_id: str) -> list[str]:
        return list(self.inboxes.get(user_id, []))

    def write_inbox(self, user_id: str, messages: list[str]) -> None:
        self.inboxes[user_id] = list(messages)


class FileBackend:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "objects").mkdir(parents=True, exist_ok=True)
        (self.root / "contexts").mkdir(parents=True, exist_ok=True)
        (self.root / "inbox").mkdir(parents=True, exist_ok=True)

    @staticmethod
    def _write_json(path: Path, doc) -> None:
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @staticmethod
    def _read_json(path: Path):
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def _class_dir(self, class_name: str) -> Path:
        return self.root / "objects" / class_name

    def _order(self, directory: Path) -> list[str]:
        doc = self._read_json(directory / "_order.json")
        return doc["ids"] if doc else []

    def _set_order(self, directory: Path, ids: list[str]) -> None:
        self._write_json(directory / "_order.json", {"ids": ids})

    def read_object(self, class_name: str, obj_id: str) -> dict | None:
        return self._read_json(self._class_dir(class_name) / f"{obj_id}.json")

    def write_object(self, doc: dict) -> None:
        directory = self._class_dir(doc["className"])
        directory.mkdir(parents=True, exist_ok=True)
        self._write_json(directory / f"{doc['id']}.json", doc)
        order = self._order(directory)
        if doc["id"] not in order:
            self._set_order(directory, order + [doc["id"]])

    def delete_object(self, class_name: str, obj_id: str) -> None:
        directory = self._class_dir(class_name)
        path = directory / f"{obj_id}.json"
        if path.exists():
            path.unlink()
        order = self._order(directory)
        if obj_id in order:
            self._set_order(directory, [i for i in order if i != obj_id])

    def list_ids(self, class_name: str) -> list[str]:
        directory = self._class_dir(class_name)
        return [i for i in self._order(directory) if (directory / f"{i}.json").exists()]

    def read_context(self, instance_id: str) -> dict | None:
        return self._read_json(self.root / "contexts" / f"{instance_id}.json")

    def write_context(self, doc: dict) -> None:
        directory = self.root / "contexts"
        self._write_json(directory / f"{doc['instanceId']}.json", doc)
        order = self._order(directory)
        if doc["instanceId"] not in order:
            self._set_order(directory, order + [doc["instanceId"]])

    def delete_context(self, instance_id: str) -> None:
        directory = self.root / "contexts"
        path = directory / f"{instance_id}.json"
        if path.exists():
            path.unlink()
        order = self._order(directory)
        if instance_id in order:
            self._set_order(directory, [i for i in order if i != instance_id])

    def list_context_ids(self) -> list[str]:
        directory = self.root / "contexts"
        return [i for i in self._order(directory) if (directory / f"{i}.json").exists()]

    def read_inbox(self, user_id: str) -> list[str]:
        doc = self._read_json(self.root / "inbox" / f"{user_id}.json")
        return doc["messages"] if doc else []

    def write_inbox(self, user_id: str, messages: list[str]) -> None:
        self._write_json(self.root / "inbox" / f"{user_id}.json", {"messages": messages})


# ---------------------------------------------------------------------------
# Objects
# ---------------------------------------------------------------------------


@dataclass
class StoredObject:
    class_name: str
    id: str
    fields: dict
    links: dict  # role -> list of target ids

    def to_doc(self) -> dict:
        return {
            "className": self.class_name,
            "id": self.id,
            "fields": {k: field_to_json(v) for k, v in self.fields.items()},
            "links": {k: list(v) for k, v in self.links.items()},
        }

    @classmethod
    def from_doc(cls, doc: dict, cdef: ast.ClassDef) -> "StoredObject":
        fields = {}
        for attr in cdef.attributes:
            fields[attr.name] = field_from_json(attr.type, doc["fields"].get(attr.name))
        links = {a.role_name: list(doc["links"].get(a.role_name, [])) for a in cdef.associations}
        return cls(doc["className"], doc["id"], fields, links)

    def copy(self) -> "StoredObject":
        return StoredObject(
            self.class_name,
            self.id,
            dict(self.fields),
            {k: list(v) for k, v in self.links.items()},
        )


def hash_password(plain: str) -> str:
    salt = secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac("sha256", plain.encode(), bytes.fromhex(salt), _PBKDF2_ITERATIONS)
    return f"pbkdf2${_PBKDF2_ITERATIONS}${salt}${digest.hex()}"


def verify_password(plain: str, stored: str | None) -> bool:
    if not stored or not stored.startswith("pbkdf2$"):
        return False
    try:
        _, iters, salt, digest = stored.split("$")
        candidate = hashlib.pbkdf2_hmac("sha256", plain.encode(), bytes.fromhex(salt), int(iters))
        return secrets.compare_digest(candidate.hex(), digest)
    except (ValueError, TypeError):
        return False


class Store:
    """Validated object and context storage over a backend."""

    def __init__(self, class_model: ast.ClassModel, backend=None, seed: int | None = None):
        self.class_model = class_model
        self.backend = backend if backend is not None else MemoryBackend()
        self._rng = Random(seed)
        self._lock = threading.RLock()

    # -- helpers -------------------------------------------------------------

    def _cdef(self, class_name: str) -> ast.ClassDef:
        cdef = self.class_model.cls(class_name)
        if cdef is None:
            raise NotFoundError(f"unknown class {class_name!r}")
        return cdef

    def _new_id(self, taken) -> str:
        while True:
            candidate = "".join(self._rng.choice(_ID_ALPHABET) for _ in range(_ID_LENGTH))
            if candidate not in taken:
                return candidate

    def _validate(
        self, cdef: ast.ClassDef, fields: dict, links: dict, current: StoredObject | None
    ) -> tuple[dict, dict, dict[str, str]]:
        errors: dict[str, str] = {}
        clean_fields = {}
        for name, value in fields.items():
            attr = cdef.attribute(name)
            if attr is None:
                errors[name] = f"class {cdef.name!r} has no attribute {name!r}"
                continue
            message = check_field(attr.type, value)
            if message is not None:
                errors[name] = message
                continue
            if attr.name == "password" and cdef.is_user and isinstance(value, str):
                if not value.startswith("pbkdf2$"):
                    value = hash_password(value)
            clean_fields[name] = value

        clean_links = {}
        for role, target_ids in links.items():
            assoc = cdef.association(role)
            if assoc is None:
                errors[role] = f"class {cdef.name!r} has no association {role!r}"
                continue
            target_ids = list(target_ids)
            if assoc.multiplicity == "one" and len(target_ids) > 1:
                errors[role] = "association holds at most one object"
                continue
            missing = [
                t for t in target_ids if self.backend.read_object(assoc.target_class, t) is None
            ]
            if missing:
                errors[role] = f"no {assoc.target_class} object with id {missing[0]!r}"
                continue
            clean_links[role] = target_ids

        if cdef.is_user:
            login = clean_fields.get("login", current.fields.get("login") if current else None)
            if not login:
                errors.setdefault("login", "user objects need a login")
            elif "login" in clean_fields:
                existing = self._find_login(login)
                if existing is not None and (current is None or existing.id != current.id):
                    errors["login"] = "login is already taken"
            if current is None and not clean_fields.get("password"):
                errors.setdefault("password", "user objects need a password")
        return clean_fields, clean_links, errors

    def _find_login(self, login: str) -> StoredObject | None:
        for cdef in self.class_model.user_classes():
            for obj_id in self.backend.list_ids(cdef.name):
                doc = self.backend.read_object(cdef.name, obj_id)
                if doc and doc["fields"].get("login") == login:
                    return StoredObject.from_doc(doc, cdef)
        return None

    # -- object CRUD -----------------------------------------------------------

    def create_object(
        self, class_name: str, fields: dict | None = None, links: dict | None = None
    ) -> StoredObject:
        with self._lock:
            cdef = self._cdef(class_name)
            clean_fields, clean_links, errors = self._validate(
                cdef, fields or {}, links or {}, current=None
            )
            if errors:
                raise ValidationError(errors)
            full_fields = {a.name: clean_fields.get(a.name) for a in cdef.attributes}
            full_links = {a.role_name: clean_links.get(a.role_name, []) for a in cdef.associations}
            obj = StoredObject(
                class_name, self._new_id(set(self.backend.list_ids(class_name))),
                full_fields, full_links,
            )
            self.backend.write_object(obj.to_doc())
            return obj.copy()

    def load(self, class_name: str, obj_id: str) -> StoredObject | None:
        with self._lock:
            cdef = self._cdef(class_name)
            doc = self.backend.read_object(class_name, obj_id)
            return StoredObject.from_doc(doc, cdef) if doc else None

    def load_all(self, class_name: str) -> list[StoredObject]:
        with self._lock:
            cdef = self._cdef(class_name)
            out = []
            for obj_id in self.backend.list_ids(class_name):
                doc = self.backend.read_object(class_name, obj_id)
                if doc:
                    out.append(StoredObject.from_doc(doc, cdef))
            return out

    def update(
        self, class_name: str, obj_id: str, fields: dict | None = None, links: dict | None = None
    ) -> StoredObject:
        with self._lock:
            cdef = self._cdef(class_name)
            doc = self.backend.read_object(class_name, obj_id)
            if doc is None:
                raise NotFoundError(f"no {class_name} object with id {obj_id!r}")
            obj = StoredObject.from_doc(doc, cdef)
            clean_fields, clean_links, errors = self._validate(
                cdef, fields or {}, links or {}, current=obj
            )
            if errors:
                raise ValidationError(errors)
            obj.fields.update(clean_fields)
            obj.links.update({k: list(v) for k, v in clean_links.items()})
            self.backend.write_object(obj.to_doc())
            return obj.copy()

    def delete(self, class_name: str, obj_id: str) -> None:
        with self._lock:
            self._cdef(class_name)
            if self.backend.read_object(class_name, obj_id) is None:
                raise NotFoundError(f"no {class_name} object with id {obj_id!r}")
            self.backend.delete_object(class_name, obj_id)
            # drop dangling links from every object that pointed here
            for cdef in self.class_model.classes:
                roles = [a.role_name for a in cdef.associations if a.target_class == class_name]
                if not roles:
                    continue
                for other_id in self.backend.list_ids(cdef.name):
                    doc = self.backend.read_object(cdef.name, other_id)
                    if doc is None:
                        continue
                    changed = False
                    for role in roles:
                        ids = doc["links"].get(role, [])
                        if obj_id in ids:
                            doc["links"][role] = [i for i in ids if i != obj_id]
                            changed = True
                    if changed:
                        self.backend.write_object(doc)

    # -- users -------------------------------------------------------------------

    def authenticate(self, login: str, password: str) -> StoredObject | None:
        with self._lock:
            candidate = self._find_login(login)
            if candidate is None:
                return None
            if verify_password(password, candidate.fields.get("password")):
                return candidate.copy()
            return None

    def find_user(self, user_id: str) -> StoredObject | None:
        with self._lock:
            for cdef in self.class_model.user_classes():
                doc = self.backend.read_object(cdef.name, user_id)
                if doc:
                    return StoredObject.from_doc(doc, cdef)
            return None

    # -- contexts ----------------------------------------------------------------

    def new_instance_id(self) -> str:
        with self._lock:
            return self._new_id(set(self.backend.list_context_ids()))

    def save_context(self, ctx: ExecutionContext) -> None:
        with self._lock:
            self.backend.write_context(ctx.to_doc())

    def load_context(self, instance_id: str) -> ExecutionContext | None:
        with self._lock:
            doc = self.backend.read_context(instance_id)
            if doc is None:
                return None
            return ExecutionContext.from_doc(doc, self.class_model)

    def load_all_contexts(self) -> list[ExecutionContext]:
        with self._lock:
            out = []
            for instance_id in self.backend.list_context_ids():
                doc = self.backend.read_context(instance_id)
                if doc:
                    out.append(ExecutionContext.from_doc(doc, self.class_model))
            return out

    def delete_context(self, instance_id: str) -> None:
        with self._lock:
            self.backend.delete_context(instance_id)

    # -- notifications -------------------------------------------------------------

    def add_notification(self, user_id: str, message: str) -> None:
        with self._lock:
            messages = self.backend.read_inbox(user_id)
            messages.append(message)
            self.backend.write_inbox(user_id, messages)

    def notifications(self, user_id: str) -> list[str]:
        with self._lock:
            return self.backend.read_inbox(user_id)


def seed_store(store: Store, seed: dict) -> None:
    """Create the objects described by a seed mapping of class name to rows."""
    for class_name, rows in seed.items():
        for row in rows:
            store.create_object(class_name, fields=dict(row))
