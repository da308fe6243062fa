"""Recursive-descent parsers for the four model languages.

Each ``parse_*`` function returns the model AST on success or a list of error
Diagnostics. Syntax errors abort at the first offence; the post-parse
validation pass can report several model-local violations at once (duplicate
names, scope errors, edge shape). Cross-model rules live in the linker.
"""

from __future__ import annotations

from decimal import Decimal

from . import ast
from .ast import Diagnostic, Loc, error
from .lexer import (
    ACTIVITY_RESERVED,
    APP_RESERVED,
    CLASS_RESERVED,
    PAGE_RESERVED,
    LexError,
    Token,
    tokenize,
)

_DECL_KEYWORDS = ("in", "out", "var")
_MENU_KINDS = ("page", "activity", "list", "create")
_REJECTED_SCRIPT_KEYWORDS = frozenset(
    {"while", "for", "if", "else", "do", "switch", "try", "return", "throw", "import"}
)
_ARITHMETIC = frozenset({"+", "-", "*", "/", "%", "&", "!"})


class ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


def _lower_first(name: str) -> str:
    return name[0].lower() + name[1:]


class _Parser:
    RESERVED: frozenset[str] = frozenset()

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    # -- stream helpers -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self._tokens[min(self._pos + ahead, len(self._tokens) - 1)]

    def advance(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def at(self, value: str) -> bool:
        return self.peek().value == value and self.peek().kind in ("ident", "punct")

    def accept(self, value: str) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def fail(self, message: str, loc: Loc | None = None, code: str = "syntax") -> ParseError:
        return ParseError(error(loc or self.peek().loc, code, message))

    def expect(self, value: str) -> Token:
        if not self.at(value):
            raise self.fail(f"expected {value!r}, found {self._describe(self.peek())}")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.fail(f"expected {what}, found {self._describe(tok)}")
        return self.advance()

    def expect_name(self, what: str) -> Token:
        """An identifier being *declared*; reserved words are refused."""
        tok = self.expect_ident(what)
        if tok.value in self.RESERVED:
            raise self.fail(
                f"{tok.value!r} is a reserved word and cannot be used as {what}",
                tok.loc,
                code="reserved-name",
            )
        return tok

    def expect_eof(self) -> None:
        tok = self.peek()
        if tok.kind != "eof":
            raise self.fail(f"unexpected {self._describe(tok)} after model body")

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind == "eof":
            return "end of input"
        if tok.kind == "string":
            return "string literal"
        return repr(tok.value)

    # -- shared productions ---------------------------------------------------

    def type_ref(self) -> ast.TypeRef:
        tok = self.expect_ident("type")
        if tok.value == "Set":
            self.expect("<")
            elem = self.expect_ident("class name")
            self.expect(">")
            return ast.set_type(elem.value, tok.loc)
        if tok.value in ast.BUILTIN_TYPES:
            return ast.builtin_type(tok.value, tok.loc)
        if tok.value in self.RESERVED:
            raise self.fail(f"{tok.value!r} is not a type", tok.loc)
        return ast.class_type(tok.value, tok.loc)

    def param_decl(self) -> ast.ParamDecl:
        ty = self.type_ref()
        name = self.expect_name("a parameter name")
        return ast.ParamDecl(name.value, ty, loc=name.loc)


# ---------------------------------------------------------------------------
# Class model
# ---------------------------------------------------------------------------


class _ClassParser(_Parser):
    RESERVED = CLASS_RESERVED

    def model(self) -> ast.ClassModel:
        kw = self.expect("classdiagram")
        name = self.expect_name("a model name")
        self.expect("{")
        classes = []
        while not self.accept("}"):
            classes.append(self.class_def())
        self.expect_eof()
        return ast.ClassModel(name.value, tuple(classes), loc=kw.loc)

    def class_def(self) -> ast.ClassDef:
        kw = self.expect("class")
        name = self.expect_name("a class name")
        is_user = False
        if self.accept("<<"):
            self.expect("user")
            self.expect(">>")
            is_user = True
        self.expect("{")
        attributes = []
        associations = []
        while not self.accept("}"):
            if self.accept("->"):
                role = self.expect_name("an association role name")
                self.expect(":")
                target = self.expect_ident("a class name")
                self.expect("(")
                mult = self.expect_ident("'one' or 'many'")
                if mult.value not in ("one", "many"):
                    raise self.fail("multiplicity must be 'one' or 'many'", mult.loc)
                self.expect(")")
                self.expect(";")
                associations.append(
                    ast.AssociationDef(role.value, target.value, mult.value, loc=role.loc)
                )
            else:
                attr = self.expect_name("an attribute name")
                self.expect(":")
                ty = self.expect_ident("a builtin type")
                if ty.value not in ast.BUILTIN_TYPES:
                    raise self.fail(
                        f"attribute type must be one of {', '.join(ast.BUILTIN_TYPES)}",
                        ty.loc,
                    )
                self.expect(";")
                attributes.append(ast.AttributeDef(attr.value, ty.value, loc=attr.loc))
        return ast.ClassDef(name.value, is_user, tuple(attributes), tuple(associations), loc=kw.loc)


# ---------------------------------------------------------------------------
# Activity model
# ---------------------------------------------------------------------------


class _ActivityParser(_Parser):
    RESERVED = ACTIVITY_RESERVED

    def model(self) -> ast.ActivityModel:
        kw = self.expect("activity")
        name = self.expect_name("an activity name")
        self.expect("{")
        partitions: list[ast.Partition] = []
        actions: list[ast.ActionDef] = []
        edges: list[ast.EdgeDef] = []
        while not self.accept("}"):
            if self.at("role"):
                partitions.append(self.partition())
            elif self.at("action"):
                actions.append(self.action())
            else:
                edges.append(self.edge())
        self.expect_eof()
        return ast.ActivityModel(name.value, tuple(partitions), tuple(actions), tuple(edges), loc=kw.loc)

    def partition(self) -> ast.Partition:
        kw = self.expect("role")
        name = self.expect_name("a partition name")
        self.expect("{")
        names = []
        if not self.at("}"):
            names.append(self.expect_ident("an action name"))
            while self.accept(","):
                names.append(self.expect_ident("an action name"))
        self.expect("}")
        return ast.Partition(name.value, tuple(t.value for t in names), loc=kw.loc)

    def action(self) -> ast.ActionDef:
        kw = self.expect("action")
        name = self.expect_name("an action name")
        self.expect("{")
        in_pins: list[ast.ParamDecl] = []
        out_pins: list[ast.ParamDecl] = []
        vars_: list[ast.ParamDecl] = []
        while self.peek().value in _DECL_KEYWORDS and self.peek(1).value == ":":
            kind = self.advance().value
            self.advance()  # ':'
            bucket = {"in": in_pins, "out": out_pins, "var": vars_}[kind]
            bucket.append(self.param_decl())
            while self.accept(","):
                bucket.append(self.param_decl())
            self.expect(";")
        body: list[ast.Statement] = []
        while not self.accept("}"):
            if self.peek().value in _DECL_KEYWORDS:
                raise self.fail("declarations must precede statements")
            body.append(self.statement())
        return ast.ActionDef(
            name.value, tuple(in_pins), tuple(out_pins), tuple(vars_), tuple(body), loc=kw.loc
        )

    def statement(self) -> ast.Statement:
        tok = self.peek()
        if self.accept("cmd"):
            self.expect(":")
            stmt = self.command(tok.loc)
            self.accept(";")
            return stmt
        if self.accept("view"):
            self.expect(":")
            page = self.expect_ident("a page name")
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.expect_ident("an argument name").value)
                while self.accept(","):
                    args.append(self.expect_ident("an argument name").value)
            self.expect(")")
            self.accept(";")
            return ast.View(page.value, tuple(args), loc=tok.loc)
        if self.accept("java"):
            self.expect(":")
            self.expect("{")
            stmts = script_statements(self, "}")
            self.expect("}")
            self.accept(";")
            return ast.ScriptBlock(tuple(stmts), loc=tok.loc)
        raise self.fail(
            f"expected a statement (cmd, view or java block), found {self._describe(tok)}"
        )

    def command(self, loc: Loc) -> ast.CmdStmt:
        first = self.expect_ident("a command")
        if first.value == "assignRole":
            self.expect("(")
            partition = self.expect_ident("a partition name")
            self.expect(",")
            user = self.expect_ident("a variable name")
            self.expect(")")
            return ast.AssignRole(partition.value, user.value, loc=loc)
        if first.value == "save":
            self.expect("(")
            target = self.expect_ident("a variable name")
            self.expect(")")
            return ast.SaveCmd(target.value, loc=loc)
        if first.value == "notify":
            self.expect("(")
            msg = self.peek()
            if msg.kind != "string":
                raise self.fail("notify takes a string literal", msg.loc)
            self.advance()
            self.expect(")")
            return ast.Notify(msg.value, loc=loc)
        # assignment commands: x = Class.loadAll() | x = getActualUser()
        self.expect("=")
        head = self.expect_ident("a command")
        if head.value == "getActualUser":
            self.expect("(")
            self.expect(")")
            return ast.GetActualUser(first.value, loc=loc)
        if self.accept("."):
            meth = self.expect_ident("'loadAll'")
            if meth.value != "loadAll":
                raise self.fail(f"unknown command {meth.value!r}", meth.loc, code="unknown-command")
            self.expect("(")
            self.expect(")")
            return ast.LoadAll(first.value, head.value, loc=loc)
        raise self.fail(f"unknown command {head.value!r}", head.loc, code="unknown-command")

    def edge(self) -> ast.EdgeDef:
        loc = self.peek().loc
        source = self.node_ref()
        self.expect("->")
        targets = [self.edge_target()]
        while self.accept("|"):
            targets.append(self.edge_target())
        self.expect(";")
        return ast.EdgeDef(source, tuple(targets), loc=loc)

    def edge_target(self) -> ast.EdgeTarget:
        loc = self.peek().loc
        guard = None
        if self.accept("["):
            guard = self.guard_expr()
            self.expect("]")
        return ast.EdgeTarget(self.node_ref(), guard, loc=loc)

    def node_ref(self) -> ast.NodeRef:
        tok = self.expect_ident("a node reference")
        if tok.value in ("initial", "final"):
            if self.at("."):
                raise self.fail(f"{tok.value!r} takes no pin", tok.loc)
            return ast.INITIAL if tok.value == "initial" else ast.FINAL
        pin = None
        if self.accept("."):
            pin = self.expect_ident("a pin name").value
        return ast.action_ref(tok.value, pin)

    def guard_expr(self) -> ast.GuardExpr:
        loc = self.peek().loc
        left = self.guard_atom()
        op = None
        right = None
        if self.peek().value in ("==", "!="):
            op = self.advance().value
            right = self.guard_atom()
        return ast.GuardExpr(left, op, right, loc=loc)

    def guard_atom(self) -> ast.GuardAtom:
        tok = self.peek()
        if tok.kind == "string":
            self.advance()
            return ast.Literal(tok.value, loc=tok.loc)
        if tok.kind == "number":
            self.advance()
            value = Decimal(tok.value) if "." in tok.value else int(tok.value)
            return ast.Literal(value, loc=tok.loc)
        if tok.value in ("true", "false"):
            self.advance()
            return ast.Literal(tok.value == "true", loc=tok.loc)
        name = self.expect_ident("a guard operand")
        if self.accept("."):
            meth = self.expect_ident("a getter")
            if not (meth.value.startswith("get") and len(meth.value) > 3):
                raise self.fail("guards support only getter calls", meth.loc)
            self.expect("(")
            self.expect(")")
            return ast.Getter(name.value, _lower_first(meth.value[3:]), loc=name.loc)
        return ast.VarRef(name.value, loc=name.loc)


# ---------------------------------------------------------------------------
# Script statements (embedded in activities; also a standalone entry point)
# ---------------------------------------------------------------------------


def script_statements(p: _Parser, terminator: str) -> list[ast.ScriptStmt]:
    stmts: list[ast.ScriptStmt] = []
    while not p.at(terminator) and p.peek().kind != "eof":
        stmts.append(_script_statement(p))
    return stmts


def _unsupported(p: _Parser, loc: Loc, construct: str) -> ParseError:
    return ParseError(
        error(loc, "unsupported-construct", f"unsupported construct in script block: {construct}")
    )


def _script_statement(p: _Parser) -> ast.ScriptStmt:
    tok = p.peek()
    if tok.kind != "ident":
        raise _unsupported(p, tok.loc, p._describe(tok))
    if tok.value in _REJECTED_SCRIPT_KEYWORDS:
        raise _unsupported(p, tok.loc, f"{tok.value!r} statement")
    first = p.advance()
    if p.accept("="):
        rhs = _script_expr(p)
        _reject_operators(p)
        p.expect(";")
        return ast.Assign(first.value, rhs, loc=first.loc)
    if p.accept("."):
        meth = p.expect_ident("a setter")
        if meth.value.startswith("set") and len(meth.value) > 3:
            p.expect("(")
            arg = _script_expr(p)
            p.expect(")")
            p.expect(";")
            return ast.Invoke(first.value, _lower_first(meth.value[3:]), arg, loc=first.loc)
        raise _unsupported(p, meth.loc, f"method call '.{meth.value}(...)'")
    raise _unsupported(p, tok.loc, f"statement starting with {tok.value!r}")


def _script_expr(p: _Parser) -> ast.Expr:
    tok = p.peek()
    if tok.kind in ("number", "string"):
        raise _unsupported(p, tok.loc, "literal value")
    if p.accept("new"):
        cls = p.expect_ident("a class name")
        p.expect("(")
        p.expect(")")
        return ast.NewObject(cls.value, loc=tok.loc)
    name = p.expect_ident("an expression")
    if p.at("("):
        raise _unsupported(p, name.loc, f"function call '{name.value}(...)'")
    if not p.at("."):
        return ast.VarRef(name.value, loc=name.loc)
    p.advance()
    meth = p.expect_ident("a method")
    if meth.value == "iterator":
        p.expect("(")
        p.expect(")")
        p.expect(".")
        nxt = p.expect_ident("'next'")
        if nxt.value != "next":
            raise _unsupported(p, nxt.loc, f"iterator method '.{nxt.value}(...)'")
        p.expect("(")
        p.expect(")")
        return ast.FirstOf(name.value, loc=name.loc)
    if meth.value.startswith("get") and len(meth.value) > 3:
        p.expect("(")
        p.expect(")")
        return ast.Getter(name.value, _lower_first(meth.value[3:]), loc=name.loc)
    raise _unsupported(p, meth.loc, f"method call '.{meth.value}(...)'")


def _reject_operators(p: _Parser) -> None:
    if p.peek().value in _ARITHMETIC:
        raise _unsupported(p, p.peek().loc, f"operator {p.peek().value!r}")


# ---------------------------------------------------------------------------
# Page model
# ---------------------------------------------------------------------------


class _PageParser(_Parser):
    RESERVED = PAGE_RESERVED

    def model(self) -> ast.PageModel:
        kw = self.expect("page")
        name = self.expect_name("a page name")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.param_decl())
            while self.accept(","):
                params.append(self.param_decl())
        self.expect(")")
        self.expect("{")
        elements = []
        while not self.accept("}"):
            elements.append(self.element())
        self.expect_eof()
        return ast.PageModel(name.value, tuple(params), tuple(elements), loc=kw.loc)

    def element(self) -> ast.PageElement:
        tok = self.peek()
        for level in (1, 2, 3):
            if self.accept(f"heading{level}"):
                text = self._string("heading text")
                self.expect(";")
                return ast.Heading(level, text, loc=tok.loc)
        if self.accept("text"):
            text = self._string("text content")
            self.expect(";")
            return ast.TextElement(text, loc=tok.loc)
        if self.accept("output"):
            param = self.expect_ident("a parameter name")
            attr = None
            if self.accept("."):
                attr = self.expect_ident("an attribute name").value
            self.expect(";")
            return ast.Output(param.value, attr, loc=tok.loc)
        if self.accept("input"):
            param = self.expect_ident("a parameter name")
            self.expect(".")
            attr = self.expect_ident("an attribute name")
            self.expect(";")
            return ast.Input(param.value, attr.value, loc=tok.loc)
        if self.accept("table"):
            param = self.expect_ident("a parameter name")
            selectable = self.accept("selectable")
            self.expect("(")
            columns = []
            if not self.at(")"):
                columns.append(self.expect_ident("an attribute name").value)
                while self.accept(","):
                    columns.append(self.expect_ident("an attribute name").value)
            self.expect(")")
            self.expect(";")
            return ast.Table(param.value, selectable, tuple(columns), loc=tok.loc)
        raise self.fail(f"expected a page element, found {self._describe(tok)}")

    def _string(self, what: str) -> str:
        tok = self.peek()
        if tok.kind != "string":
            raise self.fail(f"expected {what} (a string literal)", tok.loc)
        self.advance()
        return tok.value


# ---------------------------------------------------------------------------
# Application model
# ---------------------------------------------------------------------------


class _AppParser(_Parser):
    RESERVED = APP_RESERVED

    def model(self) -> ast.AppModel:
        kw = self.expect("application")
        name = self.expect_name("an application name")
        self.expect("{")
        roles: list[str] = []
        menu: list[ast.MenuEntry] = []
        rights: list[ast.RightRule] = []
        seen = set()
        while not self.accept("}"):
            section = self.peek()
            if section.value in seen:
                raise self.fail(f"duplicate {section.value!r} section", section.loc)
            if self.accept("roles"):
                seen.add("roles")
                self.expect("{")
                if not self.at("}"):
                    roles.append(self.expect_name("a role name").value)
                    while self.accept(","):
                        roles.append(self.expect_name("a role name").value)
                self.expect("}")
            elif self.accept("menu"):
                seen.add("menu")
                self.expect("{")
                while not self.accept("}"):
                    menu.append(self.menu_entry())
                    self.expect(";")
            elif self.accept("rights"):
                seen.add("rights")
                self.expect("{")
                while not self.accept("}"):
                    rights.append(self.right_rule())
            else:
                raise self.fail(
                    f"expected a roles, menu or rights section, found {self._describe(section)}"
                )
        self.expect_eof()
        return ast.AppModel(name.value, tuple(roles), tuple(menu), tuple(rights), loc=kw.loc)

    def menu_entry(self) -> ast.MenuEntry:
        tok = self.peek()
        if tok.value not in _MENU_KINDS:
            raise self.fail(
                "expected a menu entry (page, activity, list or create)", tok.loc
            )
        self.advance()
        name = self.expect_ident("a target name")
        return ast.MenuEntry(tok.value, name.value, loc=tok.loc)

    def right_rule(self) -> ast.RightRule:
        kw = self.expect("allow")
        role = self.expect_ident("a role name")
        self.expect(":")
        allowed = [self.menu_entry()]
        while self.accept(","):
            allowed.append(self.menu_entry())
        self.expect(";")
        return ast.RightRule(role.value, tuple(allowed), loc=kw.loc)


# ---------------------------------------------------------------------------
# Model-local validation
# ---------------------------------------------------------------------------


def _dupes(pairs: list[tuple[str, Loc | None]], code: str, what: str) -> list[Diagnostic]:
    seen: set[str] = set()
    out = []
    for name, loc in pairs:
        if name in seen:
            out.append(error(loc or _NOWHERE, code, f"duplicate {what} {name!r}"))
        seen.add(name)
    return out


_NOWHERE = Loc("<input>", 1, 1)


def _validate_class_model(model: ast.ClassModel) -> list[Diagnostic]:
    diags = _dupes([(c.name, c.loc) for c in model.classes], "duplicate-class", "class")
    for cls in model.classes:
        members = [(a.name, a.loc) for a in cls.attributes] + [
            (a.role_name, a.loc) for a in cls.associations
        ]
        diags += _dupes(members, "duplicate-member", f"member of class {cls.name!r}")
    return diags


def _expr_names(expr: ast.Expr) -> list[tuple[str, Loc | None]]:
    if isinstance(expr, ast.VarRef):
        return [(expr.name, expr.loc)]
    if isinstance(expr, (ast.Getter, ast.FirstOf)):
        return [(expr.receiver, expr.loc)]
    return []


def _statement_names(stmt: ast.Statement) -> list[tuple[str, Loc | None]]:
    if isinstance(stmt, ast.LoadAll):
        return [(stmt.assign_to, stmt.loc)]
    if isinstance(stmt, ast.GetActualUser):
        return [(stmt.assign_to, stmt.loc)]
    if isinstance(stmt, ast.AssignRole):
        return [(stmt.user_var, stmt.loc)]
    if isinstance(stmt, ast.SaveCmd):
        return [(stmt.target, stmt.loc)]
    if isinstance(stmt, ast.View):
        return [(a, stmt.loc) for a in stmt.args]
    if isinstance(stmt, ast.ScriptBlock):
        names: list[tuple[str, Loc | None]] = []
        for s in stmt.statements:
            if isinstance(s, ast.Assign):
                names.append((s.lhs, s.loc))
                names += _expr_names(s.rhs)
            elif isinstance(s, ast.Invoke):
                names.append((s.receiver, s.loc))
                names += _expr_names(s.arg)
        return names
    return []


def _guard_names(guard: ast.GuardExpr) -> list[tuple[str, Loc | None]]:
    names = []
    for atom in (guard.left, guard.right):
        if isinstance(atom, ast.VarRef):
            names.append((atom.name, atom.loc or guard.loc))
        elif isinstance(atom, ast.Getter):
            names.append((atom.receiver, atom.loc or guard.loc))
    return names


def _validate_activity(model: ast.ActivityModel) -> list[Diagnostic]:
    diags = _dupes([(a.name, a.loc) for a in model.actions], "duplicate-action", "action")
    diags += _dupes(
        [(p.name, p.loc) for p in model.partitions], "duplicate-partition", "partition"
    )
    actions = {a.name: a for a in model.actions}

    assigned: set[str] = set()
    for part in model.partitions:
        for name in part.action_names:
            if name not in actions:
                diags.append(
                    error(
                        part.loc or _NOWHERE,
                        "unknown-partition-action",
                        f"partition {part.name!r} lists unknown action {name!r}",
                    )
                )
            elif name in assigned:
                diags.append(
                    error(
                        part.loc or _NOWHERE,
                        "partition-overlap",
                        f"action {name!r} belongs to more than one partition",
                    )
                )
            assigned.add(name)

    for act in model.actions:
        decls = [(p.name, p.loc) for p in act.in_pins + act.out_pins + act.vars]
        diags += _dupes(decls, "duplicate-decl", f"declaration in action {act.name!r}")
        views = [s for s in act.body if isinstance(s, ast.View)]
        if len(views) > 1:
            diags.append(
                error(
                    views[1].loc or _NOWHERE,
                    "multiple-views",
                    f"action {act.name!r} has more than one view statement",
                )
            )
        scope = {name for name, _ in decls}
        for stmt in act.body:
            for name, loc in _statement_names(stmt):
                if name not in scope:
                    diags.append(
                        error(
                            loc or _NOWHERE,
                            "unknown-name",
                            f"{name!r} is not a pin or variable of action {act.name!r}",
                        )
                    )

    diags += _validate_edges(model, actions)
    return diags


def _validate_edges(
    model: ast.ActivityModel, actions: dict[str, ast.ActionDef]
) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    initial_edges = [e for e in model.edges if e.source.kind == "initial"]
    if (model.actions or model.edges) and len(initial_edges) != 1:
        diags.append(
            error(
                model.loc or _NOWHERE,
                "initial-edge",
                f"activity {model.name!r} must have exactly one edge from 'initial', "
                f"found {len(initial_edges)}",
            )
        )
    if initial_edges and initial_edges[0].is_decision:
        diags.append(
            error(
                initial_edges[0].loc or _NOWHERE,
                "initial-decision",
                "the initial edge cannot be a decision",
            )
        )

    def check_endpoint(node: ast.NodeRef, loc: Loc | None, is_source: bool) -> None:
        if node.kind == "initial" and not is_source:
            diags.append(error(loc or _NOWHERE, "bad-initial", "'initial' can only be an edge source"))
            return
        if node.kind == "final" and is_source:
            diags.append(error(loc or _NOWHERE, "bad-final", "'final' can only be an edge target"))
            return
        if node.kind != "action":
            return
        act = actions.get(node.action or "")
        if act is None:
            diags.append(
                error(loc or _NOWHERE, "unknown-action", f"edge references unknown action {node.action!r}")
            )
            return
        if node.pin is not None:
            pins = act.out_pins if is_source else act.in_pins
            if all(p.name != node.pin for p in pins):
                diags.append(
                    error(
                        loc or _NOWHERE,
                        "unknown-pin",
                        f"action {node.action!r} has no {'out' if is_source else 'in'}-pin "
                        f"{node.pin!r}",
                    )
                )

    outgoing: set[str] = set()
    for edge in model.edges:
        check_endpoint(edge.source, edge.loc, is_source=True)
        if edge.source.kind == "action":
            if edge.source.action in outgoing:
                diags.append(
                    error(
                        edge.loc or _NOWHERE,
                        "multiple-outgoing",
                        f"action {edge.source.action!r} has more than one outgoing edge "
                        "(fork nodes are not supported)",
                    )
                )
            outgoing.add(edge.source.action or "")
        target_actions: set[str] = set()
        for tgt in edge.targets:
            check_endpoint(tgt.node, tgt.loc or edge.loc, is_source=False)
            if tgt.node.kind == "final":
                if "final" in target_actions:
                    diags.append(
                        error(
                            tgt.loc or edge.loc or _NOWHERE,
                            "duplicate-target",
                            "decision lists 'final' twice",
                        )
                    )
                target_actions.add("final")
            if tgt.node.kind == "action":
                if tgt.node.action in target_actions:
                    diags.append(
                        error(
                            tgt.loc or edge.loc or _NOWHERE,
                            "duplicate-target",
                            f"decision lists action {tgt.node.action!r} twice",
                        )
                    )
                target_actions.add(tgt.node.action or "")
            if tgt.guard is not None:
                source_act = actions.get(edge.source.action or "")
                scope = (
                    {p.name for p in source_act.in_pins + source_act.out_pins + source_act.vars}
                    if source_act
                    else set()
                )
                for name, loc in _guard_names(tgt.guard):
                    if name not in scope:
                        diags.append(
                            error(
                                loc or _NOWHERE,
                                "unknown-name",
                                f"guard references {name!r} which is not in scope of the edge source",
                            )
                        )
    return diags


def _validate_page(model: ast.PageModel) -> list[Diagnostic]:
    return _dupes([(p.name, p.loc) for p in model.params], "duplicate-param", "page parameter")


def _validate_app(model: ast.AppModel) -> list[Diagnostic]:
    diags = _dupes([(r, model.loc) for r in model.roles], "duplicate-role", "role")
    declared = set(model.roles)
    for rule in model.rights:
        if rule.role not in declared:
            diags.append(
                error(
                    rule.loc or _NOWHERE,
                    "unknown-role",
                    f"rights rule names undeclared role {rule.role!r}",
                )
            )
    return diags


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def _run(source, filename, parser_cls, validate):
    try:
        tokens = tokenize(source, filename)
        model = parser_cls(tokens).model()
    except LexError as exc:
        return [exc.diagnostic]
    except ParseError as exc:
        return [exc.diagnostic]
    diags = validate(model)
    if any(d.severity == "error" for d in diags):
        return diags
    return model


def parse_class_model(source: str, filename: str = "<class>"):
    """Parse a .cd source; returns ClassModel or a list of Diagnostics."""
    return _run(source, filename, _ClassParser, _validate_class_model)


def parse_activity(source: str, filename: str = "<activity>"):
    """Parse an .act source; returns ActivityModel or a list of Diagnostics."""
    return _run(source, filename, _ActivityParser, _validate_activity)


def parse_page(source: str, filename: str = "<page>"):
    """Parse a .page source; returns PageModel or a list of Diagnostics."""
    return _run(source, filename, _PageParser, _validate_page)


def parse_app(source: str, filename: str = "<app>"):
    """Parse an .app source; returns AppModel or a list of Diagnostics."""
    return _run(source, filename, _AppParser, _validate_app)


def parse_script_block(source: str, filename: str = "<script>"):
    """Parse bare script-block content into ScriptStmts or Diagnostics."""
    try:
        tokens = tokenize(source, filename)
        p = _Parser(tokens)
        stmts = script_statements(p, terminator="\0")
        p.expect_eof()
    except LexError as exc:
        return [exc.diagnostic]
    except ParseError as exc:
        return [exc.diagnostic]
    return tuple(stmts)
