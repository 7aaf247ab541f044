"""Benchmark families.

Parity games (clique, ladder, Jurdzinski-style lattice, Towers of Hanoi,
language inclusion), their conversion into coalgebraic models under four
branching types, the lazy transform, the formula ``chi_k`` that expresses
winning a parity game, and two multi-agent game structures (modulo,
castles).  Every generator is a pure function of its parameters.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .formula import (BOX, DIAMOND, MON_BOX, MON_DIA, And, Atom, Formula, Modal,
                      Mu, NegAtom, Nu, Or, Var, coal_dia, conj, disj, graded_box,
                      graded_dia, prob_box, prob_dia)
from .games import EXISTS, FORALL, ParityGame
from .model import CoalgebraModel, GameRow

PARITY_FAMILIES = ("clique", "ladder", "jurdzinski", "hanoi", "langincl")
AGENT_FAMILIES = ("modulo", "castle")
FAMILIES = PARITY_FAMILIES + AGENT_FAMILIES
LIFTS = ("none", "monotone", "graded", "probabilistic")

GRADED_TOTAL = 10
GRADE = 5
THRESHOLD = Fraction(1, 2)


# ---------------------------------------------------------------------------
# parity games


def clique(n: int) -> ParityGame:
    """n positions; i has priority i, owner i mod 2 and moves to all others."""
    _require(n >= 1, "clique needs n >= 1")
    g = ParityGame()
    for i in range(n):
        g.add(i % 2, i, [j for j in range(n) if j != i])
    return g


def ladder(n: int) -> ParityGame:
    _require(n >= 1, "ladder needs n >= 1")
    size = 2 * n
    g = ParityGame()
    for i in range(size):
        g.add(i % 2, i % 2, list(dict.fromkeys([(i + 1) % size, (i + 2) % size])))
    return g


def jurdzinski(d: int, w: Optional[int] = None) -> ParityGame:
    """A lattice of ``d`` levels with ``w`` blocks each.

    Level ``i`` is a ring ``u_0 v_0 u_1 v_1 ... u_w`` where the ``u`` are
    existential with odd priority ``2i + 1`` and the ``v`` universal with
    even priority ``2i + 2``; every ``v`` may drop to the level below and
    every ``u`` of a lower level may climb back up.
    """
    w = d if w is None else w
    _require(d >= 1 and w >= 1, "jurdzinski needs d, w >= 1")
    g = ParityGame()
    u = {}
    v = {}
    for i in range(d):
        for j in range(w + 1):
            u[i, j] = g.add(EXISTS, 2 * i + 1, label=f"u{i}_{j}")
            if j < w:
                v[i, j] = g.add(FORALL, 2 * i + 2, label=f"v{i}_{j}")
    for i in range(d):
        for j in range(w + 1):
            moves = [v[i, j]] if j < w else [u[i, 0]]
            if i > 0:
                moves.append(u[i - 1, j])
            g.moves[u[i, j]] = moves
            if j < w:
                moves = [u[i, j + 1]]
                if i + 1 < d:
                    moves.append(u[i + 1, j])
                g.moves[v[i, j]] = moves
    return g


def hanoi(n: int) -> ParityGame:
    """Towers of Hanoi with ``n`` disks as a reachability game.

    Position ``sum(peg[k] * 3**k)`` is the configuration where disk ``k``
    (0 is the smallest) sits on ``peg[k]``.  The entry has every disk on
    peg 0; the target has every disk on peg 2, is absorbing and has
    priority 0.  All other positions have priority 1 and everything is
    owned by the existential player.
    """
    _require(n >= 1, "hanoi needs n >= 1")
    count = 3 ** n
    target = count - 1
    g = ParityGame()
    for code in range(count):
        pegs = [(code // 3 ** k) % 3 for k in range(n)]
        label = "".join(str(p) for p in reversed(pegs))
        if code == target:
            g.add(EXISTS, 0, [code], label)
            continue
        top = [None, None, None]
        for k in reversed(range(n)):
            top[pegs[k]] = k
        moves = []
        for src in range(3):
            disk = top[src]
            if disk is None:
                continue
            for dst in range(3):
                if dst != src and (top[dst] is None or top[dst] > disk):
                    moves.append(code + (dst - src) * 3 ** disk)
        g.add(EXISTS, 1, sorted(moves), label)
    g.init = 0
    return g


def langincl(n: int) -> ParityGame:
    """A Buchi-inclusion simulation game between two automata with ``n``
    states over the letters ``a`` and ``b``.

    The universal player reads a letter and moves the first automaton,
    the existential player answers with the second; acceptance of the
    second automaton gives priority 2, acceptance of the first only
    priority 1.  Only positions reachable from ``(0, 0)`` are built.
    """
    _require(n >= 1, "langincl needs n >= 1")

    def step_a(p, letter):
        return [(p + 1) % n] if letter == "a" else sorted({p, (p + 1) % n})

    def step_b(q, letter):
        return sorted({(q + 1) % n, (2 * q) % n}) if letter == "a" else [q]

    def prio(p, q):
        if q == n - 1:
            return 2
        return 1 if p == 0 else 0

    g = ParityGame()
    index = {}
    queue = deque()

    def pos(key):
        if key not in index:
            if len(key) == 2:
                index[key] = g.add(FORALL, prio(*key), label=f"p{key[0]}_q{key[1]}")
            else:
                index[key] = g.add(EXISTS, 0, label=f"p{key[0]}_q{key[1]}_{key[2]}")
            queue.append(key)
        return index[key]

    pos((0, 0))
    while queue:
        key = queue.popleft()
        if len(key) == 2:
            p, q = key
            moves = [pos((p2, q, letter)) for letter in "ab" for p2 in step_a(p, letter)]
        else:
            p2, q, letter = key
            moves = [pos((p2, q2)) for q2 in step_b(q, letter)]
        g.moves[index[key]] = moves
    return g


def gen_parity(family: str, size: int) -> ParityGame:
    gens = {"clique": clique, "ladder": ladder, "jurdzinski": jurdzinski,
            "hanoi": hanoi, "langincl": langincl}
    if family not in gens:
        raise ValueError(f"unknown parity game family {family!r}")
    return gens[family](size)


def random_parity_game(seed: int, n_positions: int, n_priorities: int,
                       max_moves: int = 3) -> ParityGame:
    """Random game without dead ends, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    g = ParityGame()
    for _ in range(n_positions):
        k = int(rng.integers(1, max_moves + 1))
        succ = sorted(set(rng.integers(0, n_positions, size=k).tolist()))
        g.add(int(rng.integers(0, 2)), int(rng.integers(0, n_priorities)), succ)
    return g


def _require(cond, message):
    if not cond:
        raise ValueError(message)


# ---------------------------------------------------------------------------
# transforms


def totalize(g: ParityGame):
    """Copy of ``g`` with a self-loop on every dead end, plus the list of
    positions that received one."""
    out = ParityGame(list(g.owner), list(g.priority), [list(m) for m in g.moves],
                     list(g.labels), g.init)
    added = [v for v in range(len(g)) if not g.moves[v]]
    for v in added:
        out.moves[v] = [v]
    return out, added


def make_lazy(g: ParityGame) -> ParityGame:
    """Append an existential root that may enter ``g`` or escape to a
    priority-0 self-loop.  The new root becomes the initial position."""
    _require(len(g) > 0, "cannot make an empty game lazy")
    out = ParityGame(list(g.owner), list(g.priority), [list(m) for m in g.moves],
                     list(g.labels), g.init)
    root = out.add(EXISTS, 0, label="root")
    loop = out.add(EXISTS, 0, label="loop")
    out.moves[root] = [g.init, loop]
    out.moves[loop] = [loop]
    out.init = root
    return out


def _state_names(g: ParityGame):
    if len(set(g.labels)) == len(g.labels):
        return tuple(g.labels)
    return tuple(f"v{i}" for i in range(len(g)))


def _minimal_sets(sets):
    sets = sorted(set(frozenset(s) for s in sets), key=len)
    keep = []
    for s in sets:
        if not any(k < s for k in keep):
            keep.append(s)
    return [tuple(sorted(s)) for s in keep]


def lift_game(g: ParityGame, lift: str = "none") -> CoalgebraModel:
    """The game as a coalgebra with atoms ``prio_i``, ``owner_e``, ``owner_a``."""
    if lift not in LIFTS:
        raise ValueError(f"unknown lift {lift!r}")
    if any(not m for m in g.moves):
        raise ValueError("every position needs a move; apply totalize first")
    n = len(g)
    valuation: dict = {}
    for v in range(n):
        valuation.setdefault(f"prio_{g.priority[v]}", set()).add(v)
    valuation["owner_e"] = {v for v in range(n) if g.owner[v] == EXISTS}
    valuation["owner_a"] = {v for v in range(n) if g.owner[v] == FORALL}
    moves = [list(dict.fromkeys(m)) for m in g.moves]
    if lift == "none":
        functor, rows = "powerset", [tuple(m) for m in moves]
    elif lift == "graded":
        functor = "multiset"
        rows = [tuple((d, math.ceil(GRADED_TOTAL / len(m))) for d in m) for m in moves]
    elif lift == "probabilistic":
        functor = "distribution"
        rows = [tuple((d, Fraction(1, len(m))) for d in m) for m in moves]
    else:
        functor = "monotone"
        rows = []
        for v in range(n):
            outcomes = []
            for u in moves[v]:
                if g.owner[u] == g.owner[v]:
                    outcomes.extend((w,) for w in moves[u])
                else:
                    outcomes.append(tuple(moves[u]))
            rows.append(tuple(_minimal_sets(outcomes)))
    return CoalgebraModel(functor, _state_names(g), valuation, tuple(rows), initial=g.init)


_MODALITIES = {
    "none": (DIAMOND, BOX),
    "monotone": (MON_DIA, MON_BOX),
    "graded": (graded_dia(GRADE), graded_box(GRADE)),
    "probabilistic": (prob_dia(THRESHOLD), prob_box(THRESHOLD)),
}


def chi_formula(k: int, lift: str = "none") -> Formula:
    """Formula true exactly at the positions won by the existential
    player in a game with priorities at most ``k`` (padded to odd)."""
    if lift not in _MODALITIES:
        raise ValueError(f"unknown lift {lift!r}")
    k = max(k, 1)
    if k % 2 == 0:
        k += 1
    dia, box = _MODALITIES[lift]
    cases = []
    for i in range(k + 1):
        x = Var(f"X{i}")
        choice = Or(And(Atom("owner_e"), Modal(dia, x)), And(Atom("owner_a"), Modal(box, x)))
        cases.append(And(Atom(f"prio_{i}"), choice))
    phi = disj(cases)
    for i in range(k + 1):
        phi = (Mu if i % 2 else Nu)(f"X{i}", phi)
    return phi


# ---------------------------------------------------------------------------
# multi-agent games


def gen_modulo(agents: int, moves: int) -> CoalgebraModel:
    """Ten positions ``p0..p9``; every agent plays a number in ``1..moves``
    and the play advances by their sum modulo 10."""
    _require(agents >= 1 and moves >= 1, "modulo needs agents, moves >= 1")
    names = tuple(f"a{i + 1}" for i in range(agents))
    move_names = tuple(str(h) for h in range(1, moves + 1))
    rows = []
    for j in range(10):
        delta = {joint: (j + sum(int(h) for h in joint)) % 10
                 for joint in itertools.product(move_names, repeat=agents)}
        rows.append(GameRow(tuple(move_names for _ in names), delta))
    states = tuple(f"p{j}" for j in range(10))
    valuation = {f"p{j}": {j} for j in range(10)}
    return CoalgebraModel("game", states, valuation, tuple(rows), names)


def modulo_formulas(coalition) -> tuple:
    """Reachability of every position, and visiting ``p0`` and ``p5``
    infinitely often, both enforced by ``coalition``."""
    op = coal_dia(coalition)
    phi1 = conj(Mu(f"X{i}", Or(Atom(f"p{i}"), Modal(op, Var(f"X{i}")))) for i in range(10))
    y = Modal(op, Var("Y"))
    phi2 = Nu("X", Mu("Y", And(Var("X"), And(Or(Atom("p0"), y), Or(Atom("p5"), y)))))
    return phi1, phi2


def _castle_step(state, actions):
    n = len(state)
    attacks = [0] * n
    for a in actions:
        if a.startswith("attack_"):
            attacks[int(a[7:]) - 1] += 1
    out = []
    for k, ((ready, hp), a) in enumerate(zip(state, actions)):
        blocked = 1 if a in ("defend", "rest") else 0
        hp = max(0, hp - max(0, attacks[k] - blocked))
        if a == "rest":
            ready = True
        elif a.startswith("attack_"):
            ready = False
        out.append((ready, hp))
    return tuple(out)


def _castle_moves(state, k):
    ready, hp = state[k]
    if hp == 0:
        return ("dead",)
    if not ready:
        return ("rest",)
    return ("defend",) + tuple(f"attack_{j + 1}" for j in range(len(state)) if j != k)


def gen_castle(castles: int, hp: int) -> CoalgebraModel:
    """Castle game restricted to the states reachable from the start,
    where every knight is ready and every castle has ``hp`` points.

    State names list ``r``/``n`` (ready or not) and the health of each
    castle; the start state is the first one.
    """
    _require(castles >= 2 and hp >= 1, "castle needs castles >= 2, hp >= 1")
    start = tuple((True, hp) for _ in range(castles))
    index = {start: 0}
    order = [start]
    rows = []
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        move_sets = tuple(_castle_moves(state, k) for k in range(castles))
        delta = {}
        for joint in itertools.product(*move_sets):
            succ = _castle_step(state, joint)
            if succ not in index:
                index[succ] = len(order)
                order.append(succ)
            delta[joint] = index[succ]
        rows.append(GameRow(move_sets, delta))
    names = tuple("_".join(f"{'r' if r else 'n'}{h}" for r, h in s) for s in order)
    valuation = {f"lost_{k + 1}": {j for j, s in enumerate(order) if s[k][1] == 0}
                 for k in range(castles)}
    agents = tuple(f"a{k + 1}" for k in range(castles))
    return CoalgebraModel("game", names, valuation, tuple(rows), agents)


def castle_formulas(castles: int) -> list:
    """``(name, formula)`` pairs: one safety formula per knight and one
    elimination formula per coalition size (the first ``s`` knights)."""
    out = []
    for k in range(1, castles + 1):
        phi = Nu("X", And(NegAtom(f"lost_{k}"), Modal(coal_dia([f"a{k}"]), Var("X"))))
        out.append((f"safe_{k}", phi))
    for s in range(1, castles + 1):
        members = range(1, s + 1)
        goal = And(conj(NegAtom(f"lost_{k}") for k in members),
                   conj(Atom(f"lost_{k}") for k in range(s + 1, castles + 1)))
        op = coal_dia([f"a{k}" for k in members])
        out.append((f"win_{s}", Mu("X", Or(goal, Modal(op, Var("X"))))))
    return out


# ---------------------------------------------------------------------------
# benchmark instances


@dataclass
class Instance:
    """A model with the formulas to check and the states to check them at."""

    family: str
    lift: str
    size: int
    model: CoalgebraModel
    formulas: list  # (name, Formula)
    initial: list  # state indices
    game: Optional[ParityGame] = None
    lazy: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def stem(self) -> str:
        family = f"lazy{self.family}" if self.lazy else self.family
        return f"{family}-{self.lift}-{self.size}"


def make_instance(family: str, size: int, lift: str = "none", lazy: bool = False,
                  agents: int = 2, castles: int = 2) -> Instance:
    """Build a benchmark instance.

    For the parity families ``size`` is the generator parameter; for
    ``modulo`` it is the number of moves per agent and for ``castle`` the
    initial health.  Multi-agent families use every coalition of the
    first ``s`` agents and only ``lift="none"``.
    """
    if family in PARITY_FAMILIES:
        g = gen_parity(family, size)
        if lazy:
            g = make_lazy(g)
        g, added = totalize(g)
        model = lift_game(g, lift)
        phi = chi_formula(g.max_priority(), lift)
        inst = Instance(family, lift, size, model, [("chi", phi)], [g.init], g, lazy)
        if added:
            inst.notes["self_loops_added"] = added
        return inst
    if family not in AGENT_FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if lift != "none" or lazy:
        raise ValueError(f"{family} only supports lift=none without the lazy transform")
    if family == "modulo":
        model = gen_modulo(agents, size)
        formulas = []
        for s in range(agents + 1):
            coalition = [f"a{k}" for k in range(1, s + 1)]
            phi1, phi2 = modulo_formulas(coalition)
            formulas += [(f"phi1_c{s}", phi1), (f"phi2_c{s}", phi2)]
        return Instance(family, lift, size, model, formulas, [0])
    model = gen_castle(castles, size)
    return Instance(family, lift, size, model, castle_formulas(castles), [0])
