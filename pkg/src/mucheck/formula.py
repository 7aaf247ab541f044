"""Coalgebraic mu-calculus formulas.

Formulas are immutable trees in negation normal form.  Negation is only
available on atoms; :func:`negate` dualizes a closed formula.  The parser
accepts a small ASCII surface syntax::

    mu X. p | <> X          nu X. [] X & q        <g 5> p
    <p 1/2> X               <m> p                 <{a,b}> X

Identifiers bound by an enclosing ``mu``/``nu`` are fixpoint variables.
Free identifiers starting with a lowercase letter are atoms; free
identifiers starting with an uppercase letter are rejected as unbound
variables.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Optional, Union


class FormulaSyntaxError(ValueError):
    """Raised for malformed formula text."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# Modal operators

_DUAL_KIND = {
    "dia": "box", "box": "dia",
    "gdia": "gbox", "gbox": "gdia",
    "pdia": "pbox", "pbox": "pdia",
    "mdia": "mbox", "mbox": "mdia",
    "cdia": "cbox", "cbox": "cdia",
}

#: functor tag each modality is interpreted over
FUNCTOR_OF = {
    "dia": "powerset", "box": "powerset",
    "gdia": "multiset", "gbox": "multiset",
    "pdia": "distribution", "pbox": "distribution",
    "mdia": "monotone", "mbox": "monotone",
    "cdia": "game", "cbox": "game",
}


@dataclass(frozen=True)
class ModalOp:
    """A modality.

    ``param`` holds the grade (``int``) for graded modalities, the
    threshold (``Fraction``) for probabilistic ones and the coalition
    (``frozenset`` of agent names) for coalition modalities.
    """

    kind: str
    param: Union[None, int, Fraction, frozenset] = None

    def __post_init__(self):
        if self.kind not in _DUAL_KIND:
            raise ValueError(f"unknown modality kind {self.kind!r}")
        if self.kind in ("gdia", "gbox"):
            if not isinstance(self.param, int) or self.param < 0:
                raise ValueError("graded modality needs a non-negative integer")
        elif self.kind in ("pdia", "pbox"):
            p = Fraction(self.param)
            if not 0 <= p <= 1:
                raise ValueError("probability threshold must lie in [0, 1]")
            object.__setattr__(self, "param", p)
        elif self.kind in ("cdia", "cbox"):
            object.__setattr__(self, "param", frozenset(self.param))
        elif self.param is not None:
            raise ValueError(f"modality {self.kind!r} takes no parameter")

    @property
    def functor(self) -> str:
        return FUNCTOR_OF[self.kind]

    @property
    def is_diamond(self) -> bool:
        return self.kind in ("dia", "gdia", "pdia", "mdia", "cdia")

    def dual(self) -> "ModalOp":
        return ModalOp(_DUAL_KIND[self.kind], self.param)

    def __str__(self) -> str:
        k, p = self.kind, self.param
        if k == "dia":
            return "<>"
        if k == "box":
            return "[]"
        if k == "gdia":
            return f"<g {p}>"
        if k == "gbox":
            return f"[g {p}]"
        if k == "pdia":
            return f"<p {p}>"
        if k == "pbox":
            return f"[p {p}]"
        if k == "mdia":
            return "<m>"
        if k == "mbox":
            return "[m]"
        agents = ",".join(sorted(p))
        return f"<{{{agents}}}>" if k == "cdia" else f"[{{{agents}}}]"


DIAMOND = ModalOp("dia")
BOX = ModalOp("box")
MON_DIA = ModalOp("mdia")
MON_BOX = ModalOp("mbox")


def graded_dia(n: int) -> ModalOp:
    return ModalOp("gdia", n)


def graded_box(n: int) -> ModalOp:
    return ModalOp("gbox", n)


def prob_dia(p) -> ModalOp:
    return ModalOp("pdia", Fraction(p))


def prob_box(p) -> ModalOp:
    return ModalOp("pbox", Fraction(p))


def coal_dia(agents) -> ModalOp:
    return ModalOp("cdia", frozenset(agents))


def coal_box(agents) -> ModalOp:
    return ModalOp("cbox", frozenset(agents))


# ---------------------------------------------------------------------------
# Formula AST


class Formula:
    """Base class of formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return format_formula(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class NegAtom(Formula):
    name: str


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Modal(Formula):
    op: ModalOp
    arg: Formula


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Mu(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Nu(Formula):
    var: str
    body: Formula


TRUE = Top()
FALSE = Bot()


def conj(parts) -> Formula:
    """Right-nested conjunction; the empty conjunction is ``true``."""
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(parts) -> Formula:
    """Right-nested disjunction; the empty disjunction is ``false``."""
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def is_fixpoint(phi: Formula) -> bool:
    return isinstance(phi, (Mu, Nu))


def children(phi: Formula) -> tuple:
    if isinstance(phi, (And, Or)):
        return (phi.left, phi.right)
    if isinstance(phi, Modal):
        return (phi.arg,)
    if isinstance(phi, (Mu, Nu)):
        return (phi.body,)
    return ()


def size(phi: Formula) -> int:
    """Syntactic size: number of AST nodes."""
    n = 0
    stack = [phi]
    while stack:
        f = stack.pop()
        n += 1
        stack.extend(children(f))
    return n


@lru_cache(maxsize=None)
def free_vars(phi: Formula) -> frozenset:
    if isinstance(phi, Var):
        return frozenset((phi.name,))
    if isinstance(phi, (Mu, Nu)):
        return free_vars(phi.body) - {phi.var}
    out = frozenset()
    for c in children(phi):
        out |= free_vars(c)
    return out


def bound_vars(phi: Formula) -> list:
    """Binder names in pre-order (with repetitions, if any)."""
    out = []
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, (Mu, Nu)):
            out.append(f.var)
        stack.extend(reversed(children(f)))
    return out


def atoms(phi: Formula) -> set:
    out = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, (Atom, NegAtom)):
            out.add(f.name)
        stack.extend(children(f))
    return out


def modal_ops(phi: Formula) -> set:
    out = set()
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, Modal):
            out.add(f.op)
        stack.extend(children(f))
    return out


def negate(phi: Formula) -> Formula:
    """Dual of a formula: swaps and/or, true/false, mu/nu, atoms/negated
    atoms and every modality with its dual.  Variables are kept, so the
    result of negating a closed formula is again closed."""
    if isinstance(phi, Top):
        return FALSE
    if isinstance(phi, Bot):
        return TRUE
    if isinstance(phi, Atom):
        return NegAtom(phi.name)
    if isinstance(phi, NegAtom):
        return Atom(phi.name)
    if isinstance(phi, And):
        return Or(negate(phi.left), negate(phi.right))
    if isinstance(phi, Or):
        return And(negate(phi.left), negate(phi.right))
    if isinstance(phi, Modal):
        return Modal(phi.op.dual(), negate(phi.arg))
    if isinstance(phi, Var):
        return phi
    if isinstance(phi, Mu):
        return Nu(phi.var, negate(phi.body))
    if isinstance(phi, Nu):
        return Mu(phi.var, negate(phi.body))
    raise TypeError(f"not a formula: {phi!r}")


def alpha_rename(phi: Formula) -> Formula:
    """Rename binders so that all bound variable names are distinct.

    The first binder of each name keeps it; later ones get a fresh
    ``<name>_<k>``.  Formulas whose binders are already distinct are
    returned unchanged.
    """
    taken = set(atoms(phi)) | set(bound_vars(phi)) | set(free_vars(phi))
    seen: set = set()

    def fresh(name):
        k = 1
        while f"{name}_{k}" in taken:
            k += 1
        new = f"{name}_{k}"
        taken.add(new)
        return new

    def walk(f, env):
        if isinstance(f, Var):
            return Var(env.get(f.name, f.name))
        if isinstance(f, (Mu, Nu)):
            name = f.var
            if name in seen:
                name = fresh(name)
            seen.add(name)
            body = walk(f.body, {**env, f.var: name})
            return type(f)(name, body)
        if isinstance(f, (And, Or)):
            return type(f)(walk(f.left, env), walk(f.right, env))
        if isinstance(f, Modal):
            return Modal(f.op, walk(f.arg, env))
        return f

    return walk(phi, {})


# ---------------------------------------------------------------------------
# Printing

_PREC_FIX, _PREC_OR, _PREC_AND, _PREC_UNARY = 0, 1, 2, 3


def format_formula(phi: Formula) -> str:
    """Render ``phi`` in the surface syntax accepted by :func:`parse_formula`."""

    def go(f, prec):
        if isinstance(f, Top):
            return "true"
        if isinstance(f, Bot):
            return "false"
        if isinstance(f, Atom):
            return f.name
        if isinstance(f, NegAtom):
            return "!" + f.name
        if isinstance(f, Var):
            return f.name
        if isinstance(f, Modal):
            return f"{f.op} {go(f.arg, _PREC_UNARY)}"
        if isinstance(f, And):
            s = f"{go(f.left, _PREC_AND)} & {go(f.right, _PREC_UNARY)}"
            return s if prec <= _PREC_AND else f"({s})"
        if isinstance(f, Or):
            s = f"{go(f.left, _PREC_OR)} | {go(f.right, _PREC_AND)}"
            return s if prec <= _PREC_OR else f"({s})"
        if isinstance(f, (Mu, Nu)):
            kw = "mu" if isinstance(f, Mu) else "nu"
            s = f"{kw} {f.var}. {go(f.body, _PREC_FIX)}"
            return s if prec == _PREC_FIX else f"({s})"
        raise TypeError(f"not a formula: {f!r}")

    return go(phi, _PREC_FIX)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<sym><>|\[\]|<m>|\[m\]|<\{|\[\{|\}>|\}\]|<g|\[g|<p|\[p|[()|&!.,/<>\[\]])
  | (?P<nat>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"mu", "nu", "true", "false"}


class _Tok(NamedTuple):
    kind: str  # 'sym', 'nat', 'ident', 'kw', 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "ident" and s in _KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, s, line, m.start() - line_start + 1))
        for i, ch in enumerate(s):
            if ch == "\n":
                line += 1
                line_start = m.start() + i + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


# raw syntax tree, before negation is pushed inward
@dataclass(frozen=True)
class _Not:
    sub: object
    tok: _Tok = field(compare=False)


@dataclass(frozen=True)
class _Name:
    name: str
    tok: _Tok = field(compare=False)


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise FormulaSyntaxError(msg, tok.line, tok.col)

    def advance(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text):
        if self.tok.kind in ("sym", "kw") and self.tok.text == text:
            return self.advance()
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")
        return t

    def parse(self):
        f = self.formula()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return f

    def formula(self):
        if self.tok.kind == "kw" and self.tok.text in ("mu", "nu"):
            return self.binder()
        return self.disj()

    def binder(self):
        kw = self.advance().text
        if self.tok.kind != "ident":
            self.error("expected a variable name after binder")
        var = self.advance().text
        self.expect(".")
        body = self.formula()
        return (Mu if kw == "mu" else Nu)(var, body)

    def disj(self):
        f = self.conj()
        while self.accept("|"):
            f = Or(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self):
        t = self.tok
        if self.accept("!"):
            return _Not(self.unary(), t)
        if t.kind == "kw" and t.text in ("mu", "nu"):
            return self.binder()
        op = self.modal()
        if op is not None:
            return Modal(op, self.unary())
        return self.atomexpr()

    def nat(self):
        if self.tok.kind != "nat":
            self.error("expected a natural number")
        return int(self.advance().text)

    def agents(self, close):
        names = []
        if self.accept(close):
            return frozenset()
        while True:
            if self.tok.kind != "ident":
                self.error("expected an agent name")
            names.append(self.advance().text)
            if self.accept(close):
                return frozenset(names)
            self.expect(",")

    def rational(self):
        num = self.nat()
        if self.accept("/"):
            den = self.nat()
            if den == 0:
                self.error("zero denominator")
            return Fraction(num, den)
        return Fraction(num)

    def modal(self):
        t = self.tok
        if t.kind != "sym":
            return None
        s = t.text
        try:
            if s == "<>":
                self.advance()
                return DIAMOND
            if s == "[]":
                self.advance()
                return BOX
            if s == "<m>":
                self.advance()
                return MON_DIA
            if s == "[m]":
                self.advance()
                return MON_BOX
            if s in ("<g", "[g"):
                self.advance()
                n = self.nat()
                self.expect(">" if s == "<g" else "]")
                return ModalOp("gdia" if s == "<g" else "gbox", n)
            if s in ("<p", "[p"):
                self.advance()
                p = self.rational()
                self.expect(">" if s == "<p" else "]")
                return ModalOp("pdia" if s == "<p" else "pbox", p)
            if s == "<{":
                self.advance()
                return ModalOp("cdia", self.agents("}>"))
            if s == "[{":
                self.advance()
                return ModalOp("cbox", self.agents("}]"))
        except ValueError as exc:
            if isinstance(exc, FormulaSyntaxError):
                raise
            self.error(str(exc), t)
        return None

    def atomexpr(self):
        t = self.tok
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if t.kind == "ident":
            self.advance()
            return _Name(t.text, t)
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        shown = t.text or "end of input"
        self.error(f"unexpected {shown!r}")


def _to_nnf(raw) -> Formula:
    """Resolve names and push negations to atoms."""

    # env maps a bound name to the polarity at which it was bound
    def go(f, neg, env):
        if isinstance(f, _Not):
            return go(f.sub, not neg, env)
        if isinstance(f, _Name):
            if f.name in env:
                if env[f.name] != neg:
                    raise FormulaSyntaxError(
                        f"negation applied to fixpoint variable {f.name!r}",
                        f.tok.line, f.tok.col)
                return Var(f.name)
            if f.name[0].isupper():
                raise FormulaSyntaxError(
                    f"unbound variable {f.name!r}", f.tok.line, f.tok.col)
            return NegAtom(f.name) if neg else Atom(f.name)
        if isinstance(f, Top):
            return FALSE if neg else TRUE
        if isinstance(f, Bot):
            return TRUE if neg else FALSE
        if isinstance(f, And):
            cls = Or if neg else And
            return cls(go(f.left, neg, env), go(f.right, neg, env))
        if isinstance(f, Or):
            cls = And if neg else Or
            return cls(go(f.left, neg, env), go(f.right, neg, env))
        if isinstance(f, Modal):
            op = f.op.dual() if neg else f.op
            return Modal(op, go(f.arg, neg, env))
        if isinstance(f, (Mu, Nu)):
            cls = type(f)
            if neg:
                cls = Nu if cls is Mu else Mu
            return cls(f.var, go(f.body, neg, {**env, f.var: neg}))
        raise TypeError(f)  # pragma: no cover

    return go(raw, False, {})


def parse_formula(text: str) -> Formula:
    """Parse surface syntax into a closed, alpha-renamed NNF formula."""
    raw = _Parser(text).parse()
    return alpha_rename(_to_nnf(raw))


# ---------------------------------------------------------------------------
# Closure, priorities, alternation depth


class ClosureNode(NamedTuple):
    kind: str  # top bot atom natom and or modal mu nu
    children: tuple  # operand node indices; fixpoints: (unfolding,)
    formula: Formula
    name: Optional[str] = None  # atom name or bound variable
    op: Optional[ModalOp] = None


@dataclass
class ClosureGraph:
    """Fischer-Ladner closure with variables identified with their binders.

    Node 0 is the root.  Nodes are numbered in depth-first pre-order and
    structurally equal subformulas share a node.
    """

    nodes: list
    priority: list
    root: int = 0
    ad: int = 0

    def __len__(self):
        return len(self.nodes)

    @property
    def max_priority(self) -> int:
        return max(self.priority, default=0)

    def describe(self, i: int) -> str:
        return format_formula(self.nodes[i].formula)


_KIND = {Top: "top", Bot: "bot", Atom: "atom", NegAtom: "natom", And: "and",
         Or: "or", Modal: "modal", Mu: "mu", Nu: "nu"}


def closure(phi: Formula) -> ClosureGraph:
    """Build the closure graph of a closed formula, with priorities."""
    if free_vars(phi):
        raise ValueError(f"formula has free variables: {sorted(free_vars(phi))}")
    if len(set(bound_vars(phi))) != len(bound_vars(phi)):
        phi = alpha_rename(phi)
    nodes: list = []
    index: dict = {}
    binder: dict = {}

    def visit(f):
        if isinstance(f, Var):
            return binder[f.name]
        if f in index:
            return index[f]
        i = len(nodes)
        index[f] = i
        nodes.append(None)
        kind = _KIND[type(f)]
        if isinstance(f, (Mu, Nu)):
            binder[f.var] = i
            nodes[i] = ClosureNode(kind, (visit(f.body),), f, f.var)
        elif isinstance(f, (And, Or)):
            left = visit(f.left)
            nodes[i] = ClosureNode(kind, (left, visit(f.right)), f)
        elif isinstance(f, Modal):
            nodes[i] = ClosureNode(kind, (visit(f.arg),), f, op=f.op)
        elif isinstance(f, (Atom, NegAtom)):
            nodes[i] = ClosureNode(kind, (), f, f.name)
        else:
            nodes[i] = ClosureNode(kind, (), f)
        return i

    need = 4 * size(phi) + 100
    if need > sys.getrecursionlimit():
        sys.setrecursionlimit(need)
    visit(phi)
    cl = ClosureGraph(nodes, [0] * len(nodes), 0, alternation_depth(phi))
    return assign_priorities(cl)


def _inner_fixpoints(body: Formula):
    """Fixpoint subformulas of ``body`` (not descending below them)."""
    out = []
    stack = [body]
    while stack:
        f = stack.pop()
        if isinstance(f, (Mu, Nu)):
            out.append(f)
        else:
            stack.extend(children(f))
    return out


def _all_dependents(fix: Formula) -> list:
    """Every fixpoint nested in ``fix`` with ``fix``'s variable free."""
    out = []
    stack = list(_inner_fixpoints(fix.body))
    while stack:
        g = stack.pop()
        if fix.var in free_vars(g):
            out.append(g)
        stack.extend(_inner_fixpoints(g.body))
    return out


def assign_priorities(cl: ClosureGraph) -> ClosureGraph:
    """Bottom-up priorities: each fixpoint node gets the least number of
    its parity (odd for mu, even and positive for nu) that is at least the
    priority of every nested fixpoint depending on it.  Other nodes get 0.
    """
    memo: dict = {}

    def prio(f):
        if f in memo:
            return memo[f]
        low = max((prio(g) for g in _all_dependents(f)), default=0)
        parity = 1 if isinstance(f, Mu) else 0
        p = max(low, 1)
        if p % 2 != parity:
            p += 1
        memo[f] = p
        return p

    priority = []
    for node in cl.nodes:
        if node.kind in ("mu", "nu"):
            priority.append(prio(node.formula))
        else:
            priority.append(0)
    return ClosureGraph(cl.nodes, priority, cl.root, cl.ad)


def alternation_depth(phi: Formula) -> int:
    """Number of dependent mu/nu alternations (0 without fixpoints)."""
    memo: dict = {}

    def ad(f):
        if f in memo:
            return memo[f]
        d = 1
        for g in _all_dependents(f):
            d = max(d, ad(g) + (type(g) is not type(f)))
        memo[f] = d
        return d

    best = 0
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, (Mu, Nu)):
            best = max(best, ad(f))
        stack.extend(children(f))
    return best


def dual_closure(cl: ClosureGraph) -> ClosureGraph:
    """Closure graph of the negated root formula, index-aligned with ``cl``."""
    swap = {"top": "bot", "bot": "top", "atom": "natom", "natom": "atom",
            "and": "or", "or": "and", "modal": "modal", "mu": "nu", "nu": "mu"}
    nodes = [
        ClosureNode(swap[n.kind], n.children, negate(n.formula), n.name,
                    n.op.dual() if n.op is not None else None)
        for n in cl.nodes
    ]
    return assign_priorities(ClosureGraph(nodes, [0] * len(nodes), cl.root, cl.ad))
