"""Canonical pretty-printer for the model ASTs.

The output reparses to an AST that is structurally equal to the input, so
printing is a fixpoint after one parse/print cycle. Formatting is fixed:
two-space indentation, one declaration group per line, statement terminators
always emitted even where the grammar treats them as optional.
"""

from __future__ import annotations

from . import ast
from .lexer import escape_string

_INDENT = "  "


def pretty_print(model: ast.Model) -> str:
    if isinstance(model, ast.ClassModel):
        return _print_class_model(model)
    if isinstance(model, ast.ActivityModel):
        return _print_activity(model)
    if isinstance(model, ast.PageModel):
        return _print_page(model)
    if isinstance(model, ast.AppModel):
        return _print_app(model)
    raise TypeError(f"cannot pretty-print {type(model).__name__}")


def _quoted(text: str) -> str:
    return escape_string(text)


def _type(ty: ast.TypeRef) -> str:
    return f"Set<{ty.name}>" if ty.kind == "set" else ty.name


def _params(params: tuple[ast.ParamDecl, ...]) -> str:
    return ", ".join(f"{_type(p.type)} {p.name}" for p in params)


# -- class model ------------------------------------------------------------


def _print_class_model(model: ast.ClassModel) -> str:
    lines = [f"classdiagram {model.name} {{"]
    for idx, cls in enumerate(model.classes):
        if idx:
            lines.append("")
        marker = " <<user>>" if cls.is_user else ""
        lines.append(f"{_INDENT}class {cls.name}{marker} {{")
        for attr in cls.attributes:
            lines.append(f"{_INDENT * 2}{attr.name}: {attr.type};")
        for assoc in cls.associations:
            lines.append(
                f"{_INDENT * 2}-> {assoc.role_name}: {assoc.target_class} ({assoc.multiplicity});"
            )
        lines.append(f"{_INDENT}}}")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- activity ---------------------------------------------------------------


def _print_activity(model: ast.ActivityModel) -> str:
    lines = [f"activity {model.name} {{"]
    for part in model.partitions:
        names = ", ".join(part.action_names)
        body = f" {names} " if names else " "
        lines.append(f"{_INDENT}role {part.name} {{{body}}}")
    for act in model.actions:
        lines.append("")
        lines.append(f"{_INDENT}action {act.name} {{")
        for kw, params in (("in", act.in_pins), ("out", act.out_pins), ("var", act.vars)):
            if params:
                lines.append(f"{_INDENT * 2}{kw}: {_params(params)};")
        for stmt in act.body:
            lines += _print_statement(stmt)
        lines.append(f"{_INDENT}}}")
    if model.edges:
        lines.append("")
    for edge in model.edges:
        targets = " | ".join(_print_target(t) for t in edge.targets)
        lines.append(f"{_INDENT}{_node(edge.source)} -> {targets};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _node(node: ast.NodeRef) -> str:
    if node.kind != "action":
        return node.kind
    return node.action if node.pin is None else f"{node.action}.{node.pin}"


def _print_target(target: ast.EdgeTarget) -> str:
    guard = f"[{_guard(target.guard)}] " if target.guard is not None else ""
    return guard + _node(target.node)


def _guard(guard: ast.GuardExpr) -> str:
    text = _atom(guard.left)
    if guard.op is not None:
        text += f" {guard.op} {_atom(guard.right)}"
    return text


def _atom(atom: ast.GuardAtom) -> str:
    if isinstance(atom, ast.Literal):
        if isinstance(atom.value, bool):
            return "true" if atom.value else "false"
        if isinstance(atom.value, str):
            return _quoted(atom.value)
        return str(atom.value)
    if isinstance(atom, ast.Getter):
        return f"{atom.receiver}.get{_upper_first(atom.attr)}()"
    return atom.name


def _upper_first(name: str) -> str:
    return name[0].upper() + name[1:]


def _print_statement(stmt: ast.Statement) -> list[str]:
    pre = _INDENT * 2
    if isinstance(stmt, ast.LoadAll):
        return [f"{pre}cmd: {stmt.assign_to} = {stmt.class_name}.loadAll();"]
    if isinstance(stmt, ast.GetActualUser):
        return [f"{pre}cmd: {stmt.assign_to} = getActualUser();"]
    if isinstance(stmt, ast.AssignRole):
        return [f"{pre}cmd: assignRole({stmt.partition}, {stmt.user_var});"]
    if isinstance(stmt, ast.SaveCmd):
        return [f"{pre}cmd: save({stmt.target});"]
    if isinstance(stmt, ast.Notify):
        return [f"{pre}cmd: notify({_quoted(stmt.message)});"]
    if isinstance(stmt, ast.View):
        return [f"{pre}view: {stmt.page}({', '.join(stmt.args)});"]
    if isinstance(stmt, ast.ScriptBlock):
        lines = [f"{pre}java: {{"]
        for s in stmt.statements:
            lines.append(f"{pre}{_INDENT}{_script_stmt(s)}")
        lines.append(f"{pre}}}")
        return lines
    raise TypeError(f"cannot print statement {type(stmt).__name__}")


def _script_stmt(stmt: ast.ScriptStmt) -> str:
    if isinstance(stmt, ast.Assign):
        return f"{stmt.lhs} = {_expr(stmt.rhs)};"
    if isinstance(stmt, ast.Invoke):
        return f"{stmt.receiver}.set{_upper_first(stmt.attr)}({_expr(stmt.arg)});"
    raise TypeError(f"cannot print script statement {type(stmt).__name__}")


def _expr(expr: ast.Expr) -> str:
    if isinstance(expr, ast.VarRef):
        return expr.name
    if isinstance(expr, ast.NewObject):
        return f"new {expr.class_name}()"
    if isinstance(expr, ast.Getter):
        return f"{expr.receiver}.get{_upper_first(expr.attr)}()"
    if isinstance(expr, ast.FirstOf):
        return f"{expr.receiver}.iterator().next()"
    raise TypeError(f"cannot print expression {type(expr).__name__}")


# -- page -------------------------------------------------------------------


def _print_page(model: ast.PageModel) -> str:
    lines = [f"page {model.name}({_params(model.params)}) {{"]
    for elem in model.elements:
        lines.append(f"{_INDENT}{_print_element(elem)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _print_element(elem: ast.PageElement) -> str:
    if isinstance(elem, ast.Heading):
        return f"heading{elem.level} {_quoted(elem.text)};"
    if isinstance(elem, ast.TextElement):
        return f"text {_quoted(elem.text)};"
    if isinstance(elem, ast.Output):
        ref = elem.param if elem.attr is None else f"{elem.param}.{elem.attr}"
        return f"output {ref};"
    if isinstance(elem, ast.Input):
        return f"input {elem.param}.{elem.attr};"
    if isinstance(elem, ast.Table):
        sel = " selectable" if elem.selectable else ""
        return f"table {elem.param}{sel} ({', '.join(elem.columns)});"
    raise TypeError(f"cannot print page element {type(elem).__name__}")


# -- application ------------------------------------------------------------


def _print_app(model: ast.AppModel) -> str:
    lines = [f"application {model.name} {{"]
    if model.roles:
        lines.append(f"{_INDENT}roles {{ {', '.join(model.roles)} }}")
    if model.menu:
        lines.append(f"{_INDENT}menu {{")
        for entry in model.menu:
            lines.append(f"{_INDENT * 2}{entry.kind} {entry.name};")
        lines.append(f"{_INDENT}}}")
    if model.rights:
        lines.append(f"{_INDENT}rights {{")
        for rule in model.rights:
            allowed = ", ".join(f"{e.kind} {e.name}" for e in rule.allowed)
            lines.append(f"{_INDENT * 2}allow {rule.role}: {allowed};")
        lines.append(f"{_INDENT}}}")
    lines.append("}")
    return "\n".join(lines) + "\n"
