"""Model checking by reduction to parity games.

Positions ``(c, j)`` pair a state with a closure node.  Modal positions
open a small one-step game whose shape depends on the modality; for
graded and probabilistic modalities this is a layered counting game that
walks the successors in index order and keeps a saturating counter.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .formula import ClosureGraph, Formula, ModalOp, closure
from .games import EXISTS, FORALL, ParityGame, solve_zielonka
from .model import CoalgebraModel, check_functor

_DIAMOND_KINDS = ("dia", "gdia", "pdia", "mdia", "cdia")


class GameBuilder:
    """Hash-consed construction of a parity game."""

    def __init__(self, deadline: Optional[float] = None):
        self.game = ParityGame()
        self.index: dict = {}
        self.deadline = deadline

    def position(self, key, owner: int, priority: int = 0, label: Optional[str] = None):
        """Index of the position for ``key`` and whether it was just created."""
        idx = self.index.get(key)
        if idx is not None:
            return idx, False
        idx = self.game.add(owner, priority, (), label)
        self.index[key] = idx
        if self.deadline is not None and idx % 4096 == 0 and time.monotonic() > self.deadline:
            from .local import SolverTimeout
            raise SolverTimeout()
        return idx, True

    def sink(self, owner: int) -> int:
        """A dead end owned by ``owner``, hence lost by ``owner``."""
        label = "stuck_e" if owner == EXISTS else "stuck_a"
        return self.position(("stuck", owner), owner, 0, label)[0]


def _counting(gb: GameBuilder, entry: int, key, items, n: int, chooser: int,
              target: Callable[[int], int]) -> None:
    """Layered counting game: ``chooser`` must collect weight above ``n``.

    At layer ``i`` the chooser may include successor ``items[i]`` or skip
    it; an inclusion can be challenged by the other player, who then moves
    to that successor's position, or accepted, which adds its weight to a
    counter saturating at ``n + 1``.  Only reachable layers are built; the
    entry position doubles as layer ``(0, 0)``.
    """
    other = 1 - chooser
    m = len(items)
    work = []

    def layer(i, cnt):
        if cnt > n:
            return gb.sink(other)
        if i == m:
            return gb.sink(chooser)
        if i == 0 and cnt == 0:
            return entry
        idx, new = gb.position(("layer", key, i, cnt), chooser)
        if new:
            work.append((idx, i, cnt))
        return idx

    if m == 0:
        return
    work.append((entry, 0, 0))
    while work:
        idx, i, cnt = work.pop()
        d, w = items[i]
        inc, _ = gb.position(("include", key, i, cnt), other)
        gb.game.moves[idx] = [inc, layer(i + 1, cnt)]
        gb.game.moves[inc] = [target(d), layer(i + 1, min(cnt + w, n + 1))]


def modal_owner(op: ModalOp) -> int:
    return EXISTS if op.kind in _DIAMOND_KINDS else FORALL


def add_modal(gb: GameBuilder, entry: int, key, model: CoalgebraModel, c: int,
              op: ModalOp, target: Callable[[int], int]) -> None:
    """Attach the one-step game of ``op`` at state ``c`` to ``entry``.

    ``entry`` must be owned by :func:`modal_owner`; ``target(d)`` returns
    the position standing for the operand at successor ``d``.
    """
    g = gb.game
    row = model.rows[c]
    k = op.kind
    chooser = modal_owner(op)
    if k in ("dia", "box"):
        g.moves[entry] = [target(d) for d in row]
    elif k in ("mdia", "mbox"):
        moves = []
        for t, nb in enumerate(row):
            idx, new = gb.position(("nb", key, t), 1 - chooser)
            if new:
                g.moves[idx] = [target(d) for d in nb]
            moves.append(idx)
        g.moves[entry] = moves
    elif k in ("gdia", "gbox"):
        _counting(gb, entry, key, list(row), op.param, chooser, target)
    elif k in ("pdia", "pbox"):
        p = op.param
        scale = math.lcm(p.denominator, *(q.denominator for _, q in row))
        items = [(d, int(q * scale)) for d, q in row]
        _counting(gb, entry, key, items, int(p * scale), chooser, target)
    else:
        ours = [i for i, a in enumerate(model.agents) if a in op.param]
        groups: dict = {}
        for joint, succ in row.delta.items():
            groups.setdefault(tuple(joint[i] for i in ours), set()).add(succ)
        moves = []
        for mine, outcomes in sorted(groups.items()):
            idx, new = gb.position(("coalition", key, mine), 1 - chooser)
            if new:
                g.moves[idx] = [target(d) for d in sorted(outcomes)]
            moves.append(idx)
        g.moves[entry] = moves


def _owner(model: CoalgebraModel, cl: ClosureGraph, c: int, j: int) -> int:
    info = cl.nodes[j]
    k = info.kind
    if k in ("top", "and"):
        return FORALL
    if k in ("bot", "or", "mu", "nu"):
        return EXISTS
    if k == "atom":
        return FORALL if model.holds(info.name, c) else EXISTS
    if k == "natom":
        return EXISTS if model.holds(info.name, c) else FORALL
    return modal_owner(info.op)


def build_mc_game(model: CoalgebraModel, cl: ClosureGraph, states=None,
                  deadline: Optional[float] = None):
    """The model checking game for ``cl`` rooted at the given states.

    Returns the game and a dict mapping each root state to its position
    ``(c, root)``.  Only positions reachable from the roots are built.
    """
    for info in cl.nodes:
        if info.op is not None:
            check_functor(info.op, model)
    if states is None:
        states = range(len(model.states))
    gb = GameBuilder(deadline)
    queue = deque()

    def main(c, j):
        idx, new = gb.position((c, j), _owner(model, cl, c, j), cl.priority[j],
                               f"{model.states[c]}|{j}")
        if new:
            queue.append((idx, c, j))
        return idx

    roots = {}
    for s in states:
        c = model.state_id(s)
        roots[c] = main(c, cl.root)
    while queue:
        idx, c, j = queue.popleft()
        info = cl.nodes[j]
        if info.kind in ("and", "or", "mu", "nu"):
            gb.game.moves[idx] = list(dict.fromkeys(main(c, k) for k in info.children))
        elif info.kind == "modal":
            child = info.children[0]
            add_modal(gb, idx, (c, j), model, c, info.op, lambda d: main(d, child))
    if roots:
        gb.game.init = next(iter(roots.values()))
    return gb.game, roots


@dataclass
class GameResult:
    holds: bool
    positions: int


def check_game(model: CoalgebraModel, state, phi: Formula,
               deadline: Optional[float] = None,
               cl: Optional[ClosureGraph] = None) -> GameResult:
    """Decide ``model, state |= phi`` by building and solving the game."""
    cl = cl if cl is not None else closure(phi)
    c = model.state_id(state)
    game, roots = build_mc_game(model, cl, [c], deadline)
    sol = solve_zielonka(game, deadline)
    return GameResult(roots[c] in sol.win_e, len(game))


def satisfying_states_game(model: CoalgebraModel, phi: Formula,
                           deadline: Optional[float] = None) -> set:
    cl = closure(phi)
    game, roots = build_mc_game(model, cl, None, deadline)
    sol = solve_zielonka(game, deadline)
    return {c for c, v in roots.items() if v in sol.win_e}
