"""AST node definitions for the four modeling languages.

Covers class diagrams (.cd), activities (.act), pages (.page) and the
application model (.app), plus the restricted script statements embedded in
activity actions. Nodes are frozen dataclasses: parsers build them once and
everything downstream (linker, engine) shares them freely. Structural
equality ignores source locations, so pretty-print round-trips compare clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Union

BUILTIN_TYPES = ("String", "Text", "Email", "Date", "Int", "Decimal", "Bool")


@dataclass(frozen=True)
class Loc:
    file: str
    line: int
    col: int


def _loc_field():
    # excluded from equality: round-tripped ASTs carry different positions
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Diagnostic:
    """A located parser or linker finding; severity is ``error`` or ``warning``."""

    severity: str
    loc: Loc
    code: str
    message: str

    def render(self) -> str:
        return (
            f"{self.loc.file}:{self.loc.line}:{self.loc.col}: "
            f"{self.severity}[{self.code}]: {self.message}"
        )


def error(loc: Loc, code: str, message: str) -> Diagnostic:
    return Diagnostic("error", loc, code, message)


def warning(loc: Loc, code: str, message: str) -> Diagnostic:
    return Diagnostic("warning", loc, code, message)


# ---------------------------------------------------------------------------
# Class model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AttributeDef:
    name: str
    type: str  # member of BUILTIN_TYPES
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class AssociationDef:
    role_name: str
    target_class: str
    multiplicity: str  # "one" | "many"
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class ClassDef:
    name: str
    is_user: bool
    attributes: tuple[AttributeDef, ...]
    associations: tuple[AssociationDef, ...]
    loc: Loc | None = _loc_field()

    def attribute(self, name: str) -> AttributeDef | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def association(self, role_name: str) -> AssociationDef | None:
        for a in self.associations:
            if a.role_name == role_name:
                return a
        return None


@dataclass(frozen=True)
class ClassModel:
    name: str
    classes: tuple[ClassDef, ...]
    loc: Loc | None = _loc_field()

    def cls(self, name: str) -> ClassDef | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def user_classes(self) -> tuple[ClassDef, ...]:
        return tuple(c for c in self.classes if c.is_user)


# ---------------------------------------------------------------------------
# Shared type references
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeRef:
    """Either ``builtin(name)``, ``class(name)`` or ``set(name)`` of a class."""

    kind: str  # "builtin" | "class" | "set"
    name: str
    loc: Loc | None = _loc_field()

    @property
    def is_set(self) -> bool:
        return self.kind == "set"


def builtin_type(name: str, loc: Loc | None = None) -> TypeRef:
    return TypeRef("builtin", name, loc=loc)


def class_type(name: str, loc: Loc | None = None) -> TypeRef:
    return TypeRef("class", name, loc=loc)


def set_type(name: str, loc: Loc | None = None) -> TypeRef:
    return TypeRef("set", name, loc=loc)


@dataclass(frozen=True)
class ParamDecl:
    name: str
    type: TypeRef
    loc: Loc | None = _loc_field()


# ---------------------------------------------------------------------------
# Activity model
# ---------------------------------------------------------------------------


class Statement:
    """Base for everything that may appear in an action body."""


class CmdStmt(Statement):
    """Base for the predefined ``cmd :`` forms."""


@dataclass(frozen=True)
class LoadAll(CmdStmt):
    assign_to: str
    class_name: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class GetActualUser(CmdStmt):
    assign_to: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class AssignRole(CmdStmt):
    partition: str
    user_var: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class SaveCmd(CmdStmt):
    target: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Notify(CmdStmt):
    message: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class View(Statement):
    page: str
    args: tuple[str, ...]
    loc: Loc | None = _loc_field()


class ScriptStmt:
    """Base for statements of the restricted script language."""


class Expr:
    """Base for script expressions."""


@dataclass(frozen=True)
class VarRef(Expr):
    name: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class NewObject(Expr):
    class_name: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Getter(Expr):
    """``receiver.getAttr()`` with the leading ``get`` stripped from ``attr``."""

    receiver: str
    attr: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class FirstOf(Expr):
    """``receiver.iterator().next()``: the first element of a collection."""

    receiver: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Assign(ScriptStmt):
    lhs: str
    rhs: Expr
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Invoke(ScriptStmt):
    """``receiver.setAttr(arg)``: an attribute or association write."""

    receiver: str
    attr: str
    arg: Expr
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class ScriptBlock(Statement):
    statements: tuple[ScriptStmt, ...]
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Literal:
    """Guard-only literal; value is str, int, Decimal or bool."""

    value: Union[str, int, Decimal, bool]
    loc: Loc | None = _loc_field()


GuardAtom = Union[VarRef, Getter, Literal]


@dataclass(frozen=True)
class GuardExpr:
    """``left`` alone (must be boolean) or ``left op right`` with op == / !=."""

    left: GuardAtom
    op: str | None = None
    right: GuardAtom | None = None
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class NodeRef:
    kind: str  # "initial" | "final" | "action"
    action: str | None = None
    pin: str | None = None


INITIAL = NodeRef("initial")
FINAL = NodeRef("final")


def action_ref(action: str, pin: str | None = None) -> NodeRef:
    return NodeRef("action", action, pin)


@dataclass(frozen=True)
class EdgeTarget:
    node: NodeRef
    guard: GuardExpr | None = None
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class EdgeDef:
    source: NodeRef
    targets: tuple[EdgeTarget, ...]
    loc: Loc | None = _loc_field()

    @property
    def is_decision(self) -> bool:
        return len(self.targets) > 1


@dataclass(frozen=True)
class ActionDef:
    name: str
    in_pins: tuple[ParamDecl, ...]
    out_pins: tuple[ParamDecl, ...]
    vars: tuple[ParamDecl, ...]
    body: tuple[Statement, ...]
    loc: Loc | None = _loc_field()

    def view(self) -> View | None:
        for stmt in self.body:
            if isinstance(stmt, View):
                return stmt
        return None

    @property
    def is_interactive(self) -> bool:
        return self.view() is not None

    def decl(self, name: str) -> ParamDecl | None:
        for p in self.in_pins + self.out_pins + self.vars:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class Partition:
    name: str
    action_names: tuple[str, ...]
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class ActivityModel:
    name: str
    partitions: tuple[Partition, ...]
    actions: tuple[ActionDef, ...]
    edges: tuple[EdgeDef, ...]
    loc: Loc | None = _loc_field()

    def action(self, name: str) -> ActionDef | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None

    def partition_of(self, action_name: str) -> Partition | None:
        for p in self.partitions:
            if action_name in p.action_names:
                return p
        return None

    def initial_edge(self) -> EdgeDef | None:
        for e in self.edges:
            if e.source.kind == "initial":
                return e
        return None

    def edge_from(self, action_name: str) -> EdgeDef | None:
        for e in self.edges:
            if e.source.kind == "action" and e.source.action == action_name:
                return e
        return None


# ---------------------------------------------------------------------------
# Page model
# ---------------------------------------------------------------------------


class PageElement:
    """Base for the page content elements."""


@dataclass(frozen=True)
class Heading(PageElement):
    level: int  # 1..3
    text: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class TextElement(PageElement):
    text: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Output(PageElement):
    """Read-only display of a whole parameter (attr None) or one attribute."""

    param: str
    attr: str | None = None
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Input(PageElement):
    param: str
    attr: str
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class Table(PageElement):
    param: str  # must be set-typed
    selectable: bool
    columns: tuple[str, ...]
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class PageModel:
    name: str
    params: tuple[ParamDecl, ...]
    elements: tuple[PageElement, ...]
    loc: Loc | None = _loc_field()

    def param(self, name: str) -> ParamDecl | None:
        for p in self.params:
            if p.name == name:
                return p
        return None


# ---------------------------------------------------------------------------
# Application model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MenuEntry:
    """kind: "page", "activity", or the class defaults "list" / "create"."""

    kind: str
    name: str
    loc: Loc | None = _loc_field()

    def key(self) -> tuple[str, str]:
        return (self.kind, self.name)


@dataclass(frozen=True)
class RightRule:
    role: str
    allowed: tuple[MenuEntry, ...]
    loc: Loc | None = _loc_field()


@dataclass(frozen=True)
class AppModel:
    name: str
    roles: tuple[str, ...]
    menu: tuple[MenuEntry, ...]
    rights: tuple[RightRule, ...]
    loc: Loc | None = _loc_field()


Model = Union[ClassModel, ActivityModel, PageModel, AppModel]
