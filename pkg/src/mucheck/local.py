"""Local model checking by nested fixpoint iteration.

Winning regions of the model checking game are computed directly over
pairs ``(state, closure node)``; modal steps are decided by evaluating the
predicate lifting instead of building intermediate game positions.  In
lazy mode the product is explored breadth-first from the root pair and
solved on the explored part at exponentially spaced checkpoints, which
can settle the verdict long before the product is exhausted.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .formula import ClosureGraph, Formula, closure, dual_closure
from .model import CoalgebraModel, StepEvaluator, check_functor, modal_base


class SolverTimeout(Exception):
    """A cooperative deadline expired inside a solver loop."""


def check_deadline(deadline: Optional[float]) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise SolverTimeout()


class ProductRegion:
    """A set of ``(state, node)`` pairs stored as a boolean matrix."""

    __slots__ = ("mask",)

    def __init__(self, mask: np.ndarray):
        self.mask = mask

    @classmethod
    def empty(cls, n_states: int, n_nodes: int) -> "ProductRegion":
        return cls(np.zeros((n_states, n_nodes), dtype=bool))

    @classmethod
    def full(cls, n_states: int, n_nodes: int) -> "ProductRegion":
        return cls(np.ones((n_states, n_nodes), dtype=bool))

    @classmethod
    def from_pairs(cls, pairs, n_states: int, n_nodes: int) -> "ProductRegion":
        region = cls.empty(n_states, n_nodes)
        for c, j in pairs:
            region.mask[c, j] = True
        return region

    def __contains__(self, pair) -> bool:
        c, j = pair
        return bool(self.mask[c, j])

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __iter__(self):
        for c, j in np.argwhere(self.mask):
            yield int(c), int(j)

    def __or__(self, other: "ProductRegion") -> "ProductRegion":
        return ProductRegion(self.mask | other.mask)

    def __and__(self, other: "ProductRegion") -> "ProductRegion":
        return ProductRegion(self.mask & other.mask)

    def __le__(self, other: "ProductRegion") -> bool:
        return not (self.mask & ~other.mask).any()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProductRegion):
            return NotImplemented
        return self.mask.shape == other.mask.shape and bool((self.mask == other.mask).all())

    def isdisjoint(self, other: "ProductRegion") -> bool:
        return not (self.mask & other.mask).any()

    def __repr__(self) -> str:
        return f"ProductRegion({len(self)} of {self.mask.size} pairs)"


def _levels(cl: ClosureGraph):
    """Compress the priorities of fixpoint nodes to nesting levels.

    Only priorities that occur matter, and runs of equal parity collapse
    into one variable.  Returns, per level, the fixpoint nodes on it and
    1 for a least or 0 for a greatest fixpoint.
    """
    fix = [j for j, info in enumerate(cl.nodes) if info.kind in ("mu", "nu")]
    parities: list = []
    level_of: dict = {}
    for p in sorted({cl.priority[j] for j in fix}):
        if not parities or parities[-1] != p % 2:
            parities.append(p % 2)
        level_of[p] = len(parities) - 1
    members = [[] for _ in parities]
    for j in fix:
        members[level_of[cl.priority[j]]].append(j)
    return members, parities


def _evaluation_order(cl: ClosureGraph) -> list:
    """Non-fixpoint nodes, each after its non-fixpoint children.

    Every cycle of the closure passes through a fixpoint node, so cutting
    at fixpoint nodes leaves a DAG.
    """
    nodes = cl.nodes
    order, done = [], [False] * len(nodes)
    for start in range(len(nodes)):
        if done[start] or nodes[start].kind in ("mu", "nu"):
            continue
        stack = [(start, False)]
        while stack:
            j, expanded = stack.pop()
            if done[j]:
                continue
            if expanded:
                done[j] = True
                order.append(j)
                continue
            stack.append((j, True))
            for k in nodes[j].children:
                if not done[k] and nodes[k].kind not in ("mu", "nu"):
                    stack.append((k, False))
    return order


def eval_step(model: CoalgebraModel, cl: ClosureGraph, node: int,
              X: ProductRegion, scope: ProductRegion) -> ProductRegion:
    """One-step evaluation of a single closure node against ``X``.

    Returns the pairs ``(c, node)`` in ``scope`` whose local condition holds
    when the operand pairs in ``X`` are taken as won.
    """
    n_states = len(model.states)
    info = cl.nodes[node]
    col = np.zeros(n_states, dtype=bool)
    if info.kind == "top":
        col[:] = True
    elif info.kind in ("atom", "natom"):
        members = list(model.valuation.get(info.name, ()))
        col[members] = True
        if info.kind == "natom":
            col = ~col
    elif info.kind == "and":
        a, b = info.children
        col = X.mask[:, a] & X.mask[:, b]
    elif info.kind == "or":
        a, b = info.children
        col = X.mask[:, a] | X.mask[:, b]
    elif info.kind in ("mu", "nu"):
        col = X.mask[:, info.children[0]].copy()
    elif info.kind == "modal":
        col = StepEvaluator(model).evaluate(info.op, X.mask[:, info.children[0]])
    out = ProductRegion.empty(n_states, len(cl))
    out.mask[:, node] = col & scope.mask[:, node]
    return out


@dataclass
class SolveStats:
    evaluations: int = 0


def solve_nested(model: CoalgebraModel, cl: ClosureGraph, scope: ProductRegion,
                 deadline: Optional[float] = None,
                 stats: Optional[SolveStats] = None,
                 warm_start: bool = True) -> ProductRegion:
    """Winning region of the existential player within ``scope``.

    Kleene iteration of the nested fixpoint, innermost variable to
    convergence for every value of the outer ones.  Least fixpoints start
    empty and greatest fixpoints start at ``scope``.  With
    ``warm_start=False`` every inner variable restarts from scratch after
    each outer update.  Otherwise an inner variable resumes from its last
    value whenever all outer variables have since moved in its favour
    (grown, for a least fixpoint; shrunk, for a greatest one); by
    monotonicity that value still lies below (above) the new fixpoint.
    Pairs outside ``scope`` never count as won.
    """
    n_states, n_nodes = scope.mask.shape
    for info in cl.nodes:
        if info.op is not None:
            check_functor(info.op, model)
    rows = np.flatnonzero(scope.mask.any(axis=1))
    S = scope.mask[rows]
    result = ProductRegion.empty(n_states, n_nodes)
    if len(rows) == 0:
        return result
    step = StepEvaluator(model, rows)
    members, parities = _levels(cl)
    stats = stats if stats is not None else SolveStats()

    fixed = np.zeros_like(S)
    for j, info in enumerate(cl.nodes):
        if info.kind == "top":
            fixed[:, j] = True
        elif info.kind in ("atom", "natom"):
            holds = np.zeros(n_states, dtype=bool)
            holds[list(model.valuation.get(info.name, ()))] = True
            fixed[:, j] = holds[rows] if info.kind == "atom" else ~holds[rows]
    fixed &= S
    # group the Boolean and modal nodes into batches by DAG depth, so a
    # whole batch is one vectorized operation
    depth = [0] * n_nodes
    batches: dict = {}
    for j in _evaluation_order(cl):
        info = cl.nodes[j]
        if info.kind not in ("and", "or", "modal"):
            continue
        depth[j] = 1 + max(depth[k] for k in info.children)
        key = (depth[j], info.kind, info.op)
        batches.setdefault(key, []).append(j)
    plan = []
    for (_, kind, op), js in sorted(batches.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2]))):
        first = [cl.nodes[j].children[0] for j in js]
        second = [cl.nodes[j].children[-1] for j in js]
        plan.append((kind, op, js, first, second))
    bodies = [[cl.nodes[j].children[0] for j in m] for m in members]

    Xs: list = [None] * len(parities)

    def apply():
        # one simultaneous step for all fixpoint variables; the other
        # nodes are functions of those and are evaluated in DAG order
        stats.evaluations += 1
        val = fixed.copy()
        for lv, m in enumerate(members):
            val[:, m] = Xs[lv]
        for kind, op, js, first, second in plan:
            if kind == "and":
                cols = val[:, first] & val[:, second]
            elif kind == "or":
                cols = val[:, first] | val[:, second]
            else:
                cols = step.evaluate(op, val[:, first])
            val[:, js] = cols & S[:, js]
        return val

    memo: list = [None] * len(parities)

    def resumable(lv):
        prev, snapshot = memo[lv]
        for outer, old in zip(Xs[lv + 1:], snapshot):
            lost = old & ~outer if parities[lv] == 1 else outer & ~old
            if lost.any():
                return None
        return prev

    def iterate(lv):
        # returns the evaluation at the fixpoint of levels lv and below
        X = resumable(lv) if warm_start and memo[lv] is not None else None
        if X is None:
            X = np.zeros((len(rows), len(members[lv])), dtype=bool)
            if parities[lv] == 0:
                X[:] = S[:, members[lv]]
        while True:
            check_deadline(deadline)
            Xs[lv] = X
            val = iterate(lv - 1) if lv > 0 else apply()
            Y = val[:, bodies[lv]] & S[:, members[lv]]
            if np.array_equal(X, Y):
                memo[lv] = (X, list(Xs[lv + 1:]))
                return val
            X = Y

    result.mask[rows] = iterate(len(parities) - 1) if parities else apply()
    return result


@dataclass
class LocalResult:
    holds: bool
    explored: int
    total: int
    evaluations: int = 0
    checkpoints: int = 0

    @property
    def quotient(self) -> Fraction:
        return exploration_quotient(self)


def exploration_quotient(stats) -> Fraction:
    """Explored pairs as a fraction of all ``(state, node)`` pairs."""
    if stats.total == 0:
        return Fraction(1)
    return Fraction(stats.explored, stats.total)


def _dependencies(model, cl, base_cache, c, j):
    info = cl.nodes[j]
    if info.kind == "modal":
        if c not in base_cache:
            base_cache[c] = modal_base(model, c)
        child = info.children[0]
        return [(d, child) for d in base_cache[c]]
    return sorted({(c, k) for k in info.children})


def check_local(model: CoalgebraModel, state, phi: Formula, lazy: bool = False,
                deadline: Optional[float] = None, sanity: bool = True,
                cl: Optional[ClosureGraph] = None,
                warm_start: bool = True) -> LocalResult:
    """Decide ``model, state |= phi`` with the local engine.

    The eager mode solves the full product (and, with ``sanity``, also the
    negated formula as a determinacy check).  The lazy mode explores from
    the root pair and stops as soon as a partial solution decides it.
    """
    c0 = model.state_id(state)
    cl = cl if cl is not None else closure(phi)
    dcl = dual_closure(cl)
    n_states, n_nodes = len(model.states), len(cl)
    total = n_states * n_nodes
    stats = SolveStats()
    if not lazy:
        scope = ProductRegion.full(n_states, n_nodes)
        holds = (c0, cl.root) in solve_nested(model, cl, scope, deadline, stats, warm_start)
        if sanity:
            refuted = (c0, cl.root) in solve_nested(model, dcl, scope, deadline, stats, warm_start)
            if holds == refuted:
                raise RuntimeError("winning regions of a formula and its negation overlap or miss the root")
        return LocalResult(holds, total, total, stats.evaluations, 1)

    explored = ProductRegion.empty(n_states, n_nodes)
    queued = np.zeros((n_states, n_nodes), dtype=bool)
    root = (c0, cl.root)
    frontier = deque([root])
    queued[root] = True
    base_cache: dict = {}
    count, next_check, checkpoints = 0, 1, 0
    while frontier:
        check_deadline(deadline)
        c, j = frontier.popleft()
        explored.mask[c, j] = True
        count += 1
        for dep in _dependencies(model, cl, base_cache, c, j):
            if not queued[dep]:
                queued[dep] = True
                frontier.append(dep)
        if count == next_check or not frontier:
            while next_check <= count:
                next_check *= 2
            checkpoints += 1
            if root in solve_nested(model, cl, explored, deadline, stats, warm_start):
                return LocalResult(True, count, total, stats.evaluations, checkpoints)
            if root in solve_nested(model, dcl, explored, deadline, stats, warm_start):
                return LocalResult(False, count, total, stats.evaluations, checkpoints)
    raise RuntimeError("exhausted the product without deciding the root")


def satisfying_states(model: CoalgebraModel, phi: Formula,
                      deadline: Optional[float] = None) -> set:
    """All states satisfying ``phi``, from one eager solve."""
    cl = closure(phi)
    full = ProductRegion.full(len(model.states), len(cl))
    win = solve_nested(model, cl, full, deadline)
    return {int(c) for c in np.flatnonzero(win.mask[:, cl.root])}
