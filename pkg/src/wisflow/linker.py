"""Cross-model linker.

Resolves every name that crosses model boundaries and checks the shapes the
runtime relies on. ``link`` either returns a LinkedSystem, which the engine
and the HTTP layer treat as trusted, or a list of error Diagnostics.

Error codes:

  L001  type reference names an undeclared class
  L002  attribute/association reference or type mismatch
  L003  view statement does not match its page signature
  L004  assignRole names an unknown partition
  L005  menu or rights entry does not resolve
  L006  edge connects pins of different types or feeds a pin no value
  L007  reachable action has an in-pin no edge supplies
  L008  user class lacks login/password String attributes
  L009  interactive action is not assigned to a partition
  L010  cycle through automatic actions

Warnings (non-blocking): unreachable-action, unused-var.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from . import ast
from .ast import Diagnostic, Loc, TypeRef, error, warning

_NOWHERE = Loc("<linker>", 1, 1)


@dataclass(frozen=True)
class LinkedSystem:
    """A consistent set of models; lookups here never fail for linked names."""

    class_model: ast.ClassModel
    activities: tuple[ast.ActivityModel, ...]
    pages: tuple[ast.PageModel, ...]
    app: ast.AppModel
    warnings: tuple[Diagnostic, ...] = ()

    @cached_property
    def _classes(self) -> dict[str, ast.ClassDef]:
        return {c.name: c for c in self.class_model.classes}

    @cached_property
    def _activities(self) -> dict[str, ast.ActivityModel]:
        return {a.name: a for a in self.activities}

    @cached_property
    def _pages(self) -> dict[str, ast.PageModel]:
        return {p.name: p for p in self.pages}

    def cls(self, name: str) -> ast.ClassDef:
        return self._classes[name]

    def has_class(self, name: str) -> bool:
        return name in self._classes

    def activity(self, name: str) -> ast.ActivityModel:
        return self._activities[name]

    def has_activity(self, name: str) -> bool:
        return name in self._activities

    def page(self, name: str) -> ast.PageModel:
        return self._pages[name]

    def user_classes(self) -> tuple[ast.ClassDef, ...]:
        return self.class_model.user_classes()


def reachable_actions(activity: ast.ActivityModel) -> tuple[str, ...]:
    """Action names reachable from the initial node, in BFS order."""
    initial = activity.initial_edge()
    if initial is None:
        return ()
    seen: list[str] = []
    queue = [t.node.action for t in initial.targets if t.node.kind == "action"]
    while queue:
        name = queue.pop(0)
        if name is None or name in seen or activity.action(name) is None:
            continue
        seen.append(name)
        edge = activity.edge_from(name)
        if edge is not None:
            queue += [t.node.action for t in edge.targets if t.node.kind == "action"]
    return tuple(seen)


class _Linker:
    def __init__(
        self,
        class_model: ast.ClassModel,
        activities: tuple[ast.ActivityModel, ...],
        pages: tuple[ast.PageModel, ...],
        app: ast.AppModel,
    ):
        self.class_model = class_model
        self.activities = activities
        self.pages = pages
        self.app = app
        self.classes = {c.name: c for c in class_model.classes}
        self.pages_by_name = {p.name: p for p in pages}
        self.activities_by_name = {a.name: a for a in activities}
        self.errors: list[Diagnostic] = []
        self.warnings: list[Diagnostic] = []

    def err(self, loc: Loc | None, code: str, message: str) -> None:
        self.errors.append(error(loc or _NOWHERE, code, message))

    # -- entry ---------------------------------------------------------------

    def run(self):
        self.check_model_names()
        self.check_user_classes()
        for activity in self.activities:
            self.check_activity(activity)
        for page in self.pages:
            self.check_page(page)
        self.check_app()
        if self.errors:
            return self.errors
        return LinkedSystem(
            self.class_model,
            self.activities,
            self.pages,
            self.app,
            tuple(self.warnings),
        )

    # -- global shape ----------------------------------------------------------

    def check_model_names(self) -> None:
        for kind, models in (("activity", self.activities), ("page", self.pages)):
            seen: set[str] = set()
            for m in models:
                if m.name in seen:
                    self.err(m.loc, "duplicate-model", f"duplicate {kind} {m.name!r}")
                seen.add(m.name)

    def check_user_classes(self) -> None:
        for cls in self.class_model.classes:
            if not cls.is_user:
                continue
            for needed in ("login", "password"):
                attr = cls.attribute(needed)
                if attr is None or attr.type != "String":
                    self.err(
                        cls.loc,
                        "L008",
                        f"user class {cls.name!r} needs a {needed!r} attribute of type String",
                    )

    # -- type helpers ----------------------------------------------------------

    def check_type_ref(self, ty: TypeRef, where: str, loc: Loc | None) -> bool:
        if ty.kind == "builtin":
            return True
        if ty.name in self.classes:
            return True
        self.err(loc, "L001", f"{where} references undeclared class {ty.name!r}")
        return False

    def class_of(self, ty: TypeRef) -> ast.ClassDef | None:
        if ty.kind == "class":
            return self.classes.get(ty.name)
        return None

    def member_type(self, cls: ast.ClassDef, member: str) -> TypeRef | None:
        attr = cls.attribute(member)
        if attr is not None:
            return ast.builtin_type(attr.type)
        assoc = cls.association(member)
        if assoc is not None:
            if assoc.multiplicity == "one":
                return ast.class_type(assoc.target_class)
            return ast.set_type(assoc.target_class)
        return None

    # -- activities ------------------------------------------------------------

    def check_activity(self, activity: ast.ActivityModel) -> None:
        where = f"activity {activity.name!r}"
        scopes: dict[str, dict[str, TypeRef]] = {}
        for action in activity.actions:
            scope: dict[str, TypeRef] = {}
            for p in action.in_pins + action.out_pins + action.vars:
                self.check_type_ref(p.type, f"{where}, action {action.name!r}", p.loc)
                scope[p.name] = p.type
            scopes[action.name] = scope
            self.check_action_body(activity, action, scope)

        self.check_edges(activity, scopes)
        self.check_partitions(activity)
        self.check_automatic_cycles(activity)

        reachable = set(reachable_actions(activity))
        for action in activity.actions:
            if action.name not in reachable:
                self.warnings.append(
                    warning(
                        action.loc or _NOWHERE,
                        "unreachable-action",
                        f"action {action.name!r} is not reachable from the initial node",
                    )
                )
        self.check_unused_vars(activity)

    def check_action_body(
        self, activity: ast.ActivityModel, action: ast.ActionDef, scope: dict[str, TypeRef]
    ) -> None:
        where = f"action {action.name!r}"

        def infer(expr: ast.Expr) -> TypeRef | None:
            if isinstance(expr, ast.VarRef):
                return scope.get(expr.name)
            if isinstance(expr, ast.NewObject):
                if expr.class_name not in self.classes:
                    self.err(
                        expr.loc, "L001", f"{where} creates undeclared class {expr.class_name!r}"
                    )
                    return None
                return ast.class_type(expr.class_name)
            if isinstance(expr, ast.Getter):
                recv = scope.get(expr.receiver)
                if recv is None:
                    return None
                cls = self.class_of(recv)
                if cls is None:
                    self.err(
                        expr.loc,
                        "L002",
                        f"{where}: {expr.receiver!r} is not object-typed, cannot read "
                        f"{expr.attr!r}",
                    )
                    return None
                ty = self.member_type(cls, expr.attr)
                if ty is None:
                    self.err(
                        expr.loc,
                        "L002",
                        f"{where}: class {cls.name!r} has no member {expr.attr!r}",
                    )
                return ty
            if isinstance(expr, ast.FirstOf):
                recv = scope.get(expr.receiver)
                if recv is None:
                    return None
                if not recv.is_set:
                    self.err(
                        expr.loc,
                        "L002",
                        f"{where}: iterator().next() needs a Set, {expr.receiver!r} is not one",
                    )
                    return None
                return ast.class_type(recv.name)
            return None

        def require(actual: TypeRef | None, expected: TypeRef | None, loc, what: str) -> None:
            if actual is None or expected is None:
                return
            if actual != expected:
                self.err(
                    loc,
                    "L002",
                    f"{where}: {what} has type {_show(actual)}, expected {_show(expected)}",
                )

        for stmt in action.body:
            if isinstance(stmt, ast.LoadAll):
                if stmt.class_name not in self.classes:
                    self.err(stmt.loc, "L001", f"{where} loads undeclared class {stmt.class_name!r}")
                else:
                    require(
                        scope.get(stmt.assign_to),
                        ast.set_type(stmt.class_name),
                        stmt.loc,
                        f"target of {stmt.class_name}.loadAll()",
                    )
            elif isinstance(stmt, ast.GetActualUser):
                target = scope.get(stmt.assign_to)
                cls = self.class_of(target) if target else None
                if target is not None and (cls is None or not cls.is_user):
                    self.err(
                        stmt.loc,
                        "L002",
                        f"{where}: getActualUser() target must be a user class, "
                        f"got {_show(target)}",
                    )
            elif isinstance(stmt, ast.AssignRole):
                if all(p.name != stmt.partition for p in activity.partitions):
                    self.err(
                        stmt.loc,
                        "L004",
                        f"{where}: assignRole names unknown partition {stmt.partition!r}",
                    )
                target = scope.get(stmt.user_var)
                cls = self.class_of(target) if target else None
                if target is not None and (cls is None or not cls.is_user):
                    self.err(
                        stmt.loc,
                        "L002",
                        f"{where}: assignRole needs a user object, got {_show(target)}",
                    )
            elif isinstance(stmt, ast.SaveCmd):
                target = scope.get(stmt.target)
                if target is not None and self.class_of(target) is None:
                    self.err(
                        stmt.loc,
                        "L002",
                        f"{where}: save() needs an object, got {_show(target)}",
                    )
            elif isinstance(stmt, ast.View):
                self.check_view(stmt, scope, where)
            elif isinstance(stmt, ast.ScriptBlock):
                for s in stmt.statements:
                    if isinstance(s, ast.Assign):
                        require(infer(s.rhs), scope.get(s.lhs), s.loc, f"value assigned to {s.lhs!r}")
                    elif isinstance(s, ast.Invoke):
                        recv = scope.get(s.receiver)
                        cls = self.class_of(recv) if recv else None
                        if recv is not None and cls is None:
                            self.err(
                                s.loc,
                                "L002",
                                f"{where}: {s.receiver!r} is not object-typed, cannot set "
                                f"{s.attr!r}",
                            )
                            continue
                        if cls is not None:
                            member = self.member_type(cls, s.attr)
                            if member is None:
                                self.err(
                                    s.loc,
                                    "L002",
                                    f"{where}: class {cls.name!r} has no member {s.attr!r}",
                                )
                            else:
                                require(infer(s.arg), member, s.loc, f"value for {s.attr!r}")

    def check_view(self, stmt: ast.View, scope: dict[str, TypeRef], where: str) -> None:
        page = self.pages_by_name.get(stmt.page)
        if page is None:
            self.err(stmt.loc, "L003", f"{where}: view references unknown page {stmt.page!r}")
            return
        if len(stmt.args) != len(page.params):
            self.err(
                stmt.loc,
                "L003",
                f"{where}: page {page.name!r} takes {len(page.params)} argument(s), "
                f"view passes {len(stmt.args)}",
            )
            return
        for arg, param in zip(stmt.args, page.params):
            actual = scope.get(arg)
            if actual is not None and actual != param.type:
                self.err(
                    stmt.loc,
                    "L003",
                    f"{where}: view argument {arg!r} has type {_show(actual)}, page "
                    f"{page.name!r} expects {_show(param.type)}",
                )

    def check_edges(
        self, activity: ast.ActivityModel, scopes: dict[str, dict[str, TypeRef]]
    ) -> None:
        where = f"activity {activity.name!r}"
        for edge in activity.edges:
            source_type: TypeRef | None = None
            if edge.source.kind == "action" and edge.source.pin is not None:
                source_type = scopes.get(edge.source.action or "", {}).get(edge.source.pin)
            for tgt in edge.targets:
                if tgt.guard is not None and edge.source.kind == "action":
                    self.check_guard(
                        tgt.guard, scopes.get(edge.source.action or "", {}), where, edge.loc
                    )
                if tgt.node.kind != "action" or tgt.node.pin is None:
                    continue
                target_type = scopes.get(tgt.node.action or "", {}).get(tgt.node.pin)
                if edge.source.pin is None:
                    self.err(
                        edge.loc,
                        "L006",
                        f"{where}: pin {tgt.node.action}.{tgt.node.pin} receives no value "
                        "(edge has no source pin)",
                    )
                elif source_type is not None and target_type is not None and source_type != target_type:
                    self.err(
                        edge.loc,
                        "L006",
                        f"{where}: edge connects {_show(source_type)} pin to "
                        f"{_show(target_type)} pin",
                    )

        reachable = reachable_actions(activity)
        for name in reachable:
            action = activity.action(name)
            for pin in action.in_pins:
                fed = any(
                    tgt.node.kind == "action"
                    and tgt.node.action == name
                    and tgt.node.pin == pin.name
                    for edge in activity.edges
                    for tgt in edge.targets
                )
                if not fed:
                    self.err(
                        pin.loc,
                        "L007",
                        f"{where}: in-pin {name}.{pin.name} is never supplied by an edge",
                    )

    def check_guard(
        self, guard: ast.GuardExpr, scope: dict[str, TypeRef], where: str, loc
    ) -> None:
        def atom_type(atom: ast.GuardAtom) -> TypeRef | None:
            if isinstance(atom, ast.Literal):
                return None  # literals adapt to the other side
            if isinstance(atom, ast.VarRef):
                return scope.get(atom.name)
            recv = scope.get(atom.receiver)
            cls = self.class_of(recv) if recv else None
            if cls is None:
                if recv is not None:
                    self.err(
                        atom.loc or loc,
                        "L002",
                        f"{where}: guard receiver {atom.receiver!r} is not object-typed",
                    )
                return None
            ty = self.member_type(cls, atom.attr)
            if ty is None:
                self.err(
                    atom.loc or loc,
                    "L002",
                    f"{where}: class {cls.name!r} has no member {atom.attr!r}",
                )
            return ty

        left = atom_type(guard.left)
        if guard.op is None:
            is_bool_literal = isinstance(guard.left, ast.Literal) and isinstance(
                guard.left.value, bool
            )
            if not is_bool_literal and left is not None and left != ast.builtin_type("Bool"):
                self.err(
                    loc,
                    "L002",
                    f"{where}: bare guard must be Bool, got {_show(left)}",
                )
            return
        right = atom_type(guard.right)
        if left is not None and right is not None and left != right:
            self.err(
                loc,
                "L002",
                f"{where}: guard compares {_show(left)} with {_show(right)}",
            )
        for atom, ty in ((guard.left, left), (guard.right, right)):
            if ty is not None and ty.is_set:
                self.err(loc, "L002", f"{where}: guards cannot compare sets")
            if isinstance(atom, ast.Literal) and ty is None:
                other = right if atom is guard.left else left
                if other is not None and not _literal_matches(atom.value, other):
                    self.err(
                        loc,
                        "L002",
                        f"{where}: guard literal {atom.value!r} does not match {_show(other)}",
                    )

    def check_partitions(self, activity: ast.ActivityModel) -> None:
        for action in activity.actions:
            if action.is_interactive and activity.partition_of(action.name) is None:
                self.err(
                    action.loc,
                    "L009",
                    f"interactive action {action.name!r} in activity {activity.name!r} "
                    "is not assigned to a partition",
                )

    def check_automatic_cycles(self, activity: ast.ActivityModel) -> None:
        automatic = {a.name for a in activity.actions if not a.is_interactive}
        graph: dict[str, list[str]] = {name: [] for name in automatic}
        for edge in activity.edges:
            if edge.source.kind != "action" or edge.source.action not in automatic:
                continue
            for tgt in edge.targets:
                if tgt.node.kind == "action" and tgt.node.action in automatic:
                    graph[edge.source.action].append(tgt.node.action)

        WHITE, GRAY, BLACK = 0, 1, 2
        state = dict.fromkeys(graph, WHITE)

        def visit(node: str) -> bool:
            state[node] = GRAY
            for succ in graph[node]:
                if state[succ] == GRAY:
                    return True
                if state[succ] == WHITE and visit(succ):
                    return True
            state[node] = BLACK
            return False

        for node in graph:
            if state[node] == WHITE and visit(node):
                self.err(
                    activity.action(node).loc if activity.action(node) else _NOWHERE,
                    "L010",
                    f"activity {activity.name!r} has a cycle through automatic actions "
                    f"involving {node!r}; it could never yield to a user",
                )
                return

    def check_unused_vars(self, activity: ast.ActivityModel) -> None:
        for action in activity.actions:
            used: set[str] = set()
            for stmt in action.body:
                used |= _names_read(stmt)
            edge = activity.edge_from(action.name)
            if edge is not None and edge.source.pin is not None:
                used.add(edge.source.pin)
                for tgt in edge.targets:
                    if tgt.guard is not None:
                        used |= {n for n, _ in _guard_reads(tgt.guard)}
            for var in action.vars:
                if var.name not in used:
                    self.warnings.append(
                        warning(
                            var.loc or _NOWHERE,
                            "unused-var",
                            f"variable {var.name!r} in action {action.name!r} is never used",
                        )
                    )

    # -- pages -------------------------------------------------------------------

    def check_page(self, page: ast.PageModel) -> None:
        where = f"page {page.name!r}"
        params: dict[str, TypeRef] = {}
        for p in page.params:
            self.check_type_ref(p.type, where, p.loc)
            params[p.name] = p.type

        for elem in page.elements:
            if isinstance(elem, (ast.Heading, ast.TextElement)):
                continue
            param = params.get(elem.param)
            if param is None:
                self.err(
                    elem.loc, "L002", f"{where}: {elem.param!r} is not a parameter of the page"
                )
                continue
            if isinstance(elem, ast.Output) and elem.attr is None:
                if param.kind != "builtin":
                    self.err(
                        elem.loc,
                        "L002",
                        f"{where}: output of {elem.param!r} needs an attribute, the "
                        f"parameter is {_show(param)}",
                    )
                continue
            if isinstance(elem, (ast.Output, ast.Input)):
                cls = self.class_of(param)
                if cls is None:
                    self.err(
                        elem.loc,
                        "L002",
                        f"{where}: {elem.param!r} is {_show(param)}, not an object with "
                        f"attribute {elem.attr!r}",
                    )
                    continue
                if cls.attribute(elem.attr) is None:
                    self.err(
                        elem.loc,
                        "L002",
                        f"{where}: class {cls.name!r} has no attribute {elem.attr!r}",
                    )
                continue
            if isinstance(elem, ast.Table):
                if not param.is_set or param.name not in self.classes:
                    self.err(
                        elem.loc,
                        "L002",
                        f"{where}: table needs a Set parameter, {elem.param!r} is {_show(param)}",
                    )
                    continue
                cls = self.classes[param.name]
                for col in elem.columns:
                    if cls.attribute(col) is None:
                        self.err(
                            elem.loc,
                            "L002",
                            f"{where}: class {cls.name!r} has no attribute {col!r} "
                            "(table columns must be attributes)",
                        )

    # -- application ---------------------------------------------------------------

    def check_app(self) -> None:
        for entry in self.app.menu:
            self.check_entry(entry, f"menu of application {self.app.name!r}")
        for rule in self.app.rights:
            for entry in rule.allowed:
                self.check_entry(entry, f"rights rule for role {rule.role!r}")

    def check_entry(self, entry: ast.MenuEntry, where: str) -> None:
        if entry.kind == "page":
            page = self.pages_by_name.get(entry.name)
            if page is None:
                self.err(entry.loc, "L005", f"{where}: unknown page {entry.name!r}")
            elif page.params:
                self.err(
                    entry.loc,
                    "L005",
                    f"{where}: page {entry.name!r} takes parameters and cannot be opened "
                    "from the menu",
                )
        elif entry.kind == "activity":
            if entry.name not in self.activities_by_name:
                self.err(entry.loc, "L005", f"{where}: unknown activity {entry.name!r}")
        else:  # list | create
            if entry.name not in self.classes:
                self.err(entry.loc, "L005", f"{where}: unknown class {entry.name!r}")


def _show(ty: TypeRef | None) -> str:
    if ty is None:
        return "<unknown>"
    return f"Set<{ty.name}>" if ty.is_set else ty.name


def _literal_matches(value, ty: TypeRef) -> bool:
    if ty.kind != "builtin":
        return False
    if isinstance(value, bool):
        return ty.name == "Bool"
    if isinstance(value, int):
        return ty.name in ("Int", "Decimal")
    if isinstance(value, str):
        return ty.name in ("String", "Text", "Email", "Date")
    return ty.name == "Decimal"


def _expr_reads(expr: ast.Expr) -> set[str]:
    if isinstance(expr, ast.VarRef):
        return {expr.name}
    if isinstance(expr, (ast.Getter, ast.FirstOf)):
        return {expr.receiver}
    return set()


def _names_read(stmt: ast.Statement) -> set[str]:
    if isinstance(stmt, ast.AssignRole):
        return {stmt.user_var}
    if isinstance(stmt, ast.SaveCmd):
        return {stmt.target}
    if isinstance(stmt, ast.View):
        return set(stmt.args)
    if isinstance(stmt, ast.ScriptBlock):
        reads: set[str] = set()
        for s in stmt.statements:
            if isinstance(s, ast.Assign):
                reads |= _expr_reads(s.rhs)
            elif isinstance(s, ast.Invoke):
                reads |= {s.receiver} | _expr_reads(s.arg)
        return reads
    return set()


def _guard_reads(guard: ast.GuardExpr) -> list[tuple[str, Loc | None]]:
    names = []
    for atom in (guard.left, guard.right):
        if isinstance(atom, ast.VarRef):
            names.append((atom.name, atom.loc))
        elif isinstance(atom, ast.Getter):
            names.append((atom.receiver, atom.loc))
    return names


def link(
    class_model: ast.ClassModel,
    activities: tuple[ast.ActivityModel, ...] | list[ast.ActivityModel],
    pages: tuple[ast.PageModel, ...] | list[ast.PageModel],
    app: ast.AppModel,
):
    """Link the models; returns LinkedSystem or a list of error Diagnostics."""
    return _Linker(class_model, tuple(activities), tuple(pages), app).run()
