"""Parity games: representation, Zielonka's algorithm, PGSolver format.

Players are ``EXISTS = 0`` and ``FORALL = 1``.  An infinite play is won
by the existential player iff the largest priority seen infinitely often
is even; a player who cannot move loses.
"""
from __future__ import annotations

import re
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

EXISTS, FORALL = 0, 1


class PGSolverFormatError(ValueError):
    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class ParityGame:
    owner: list = field(default_factory=list)
    priority: list = field(default_factory=list)
    moves: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    init: int = 0

    def __len__(self):
        return len(self.owner)

    def add(self, owner: int, priority: int, moves=(), label: Optional[str] = None) -> int:
        i = len(self.owner)
        self.owner.append(owner)
        self.priority.append(priority)
        self.moves.append(list(moves))
        self.labels.append(label if label is not None else f"n{i}")
        return i

    def validate(self) -> None:
        n = len(self.owner)
        if not (len(self.priority) == len(self.moves) == len(self.labels) == n):
            raise ValueError("inconsistent field lengths")
        for v in range(n):
            if self.owner[v] not in (EXISTS, FORALL):
                raise ValueError(f"position {v}: owner must be 0 or 1")
            if self.priority[v] < 0:
                raise ValueError(f"position {v}: negative priority")
            for w in self.moves[v]:
                if not 0 <= w < n:
                    raise ValueError(f"position {v}: dangling successor {w}")
        if n and not 0 <= self.init < n:
            raise ValueError("initial position out of range")

    def predecessors(self) -> list:
        preds = [[] for _ in self.owner]
        for v, succ in enumerate(self.moves):
            for w in succ:
                preds[w].append(v)
        return preds

    def max_priority(self) -> int:
        return max(self.priority, default=0)


@dataclass
class Solution:
    """Winning regions and history-free winning strategies."""

    win: tuple  # (positions won by EXISTS, positions won by FORALL)
    strategy: tuple  # (dict for EXISTS, dict for FORALL)

    @property
    def win_e(self) -> set:
        return self.win[EXISTS]

    @property
    def win_a(self) -> set:
        return self.win[FORALL]


class _Zielonka:
    def __init__(self, game: ParityGame, deadline):
        self.owner = game.owner
        self.prio = game.priority
        self.moves = [list(dict.fromkeys(m)) for m in game.moves]
        self.preds = [[] for _ in self.owner]
        for v, succ in enumerate(self.moves):
            for w in succ:
                self.preds[w].append(v)
        self.deadline = deadline
        self.ticks = 0

    def tick(self):
        self.ticks += 1
        if self.deadline is not None and self.ticks % 4096 == 0:
            if time.monotonic() > self.deadline:
                from .local import SolverTimeout
                raise SolverTimeout()

    def attractor(self, G, target, player):
        attr = set(target)
        strat = {}
        count = {}
        queue = deque(sorted(attr))
        owner, moves, preds = self.owner, self.moves, self.preds
        while queue:
            u = queue.popleft()
            for v in preds[u]:
                if v in attr or v not in G:
                    continue
                self.tick()
                if owner[v] == player:
                    attr.add(v)
                    strat[v] = u
                    queue.append(v)
                else:
                    c = count.get(v)
                    if c is None:
                        c = sum(1 for w in moves[v] if w in G)
                    c -= 1
                    count[v] = c
                    if c == 0:
                        attr.add(v)
                        queue.append(v)
        return attr, strat

    def solve(self, G):
        W = (set(), set())
        S = ({}, {})
        while G:
            d = max(self.prio[v] for v in G)
            p = d % 2
            top = {v for v in G if self.prio[v] == d}
            A, sA = self.attractor(G, top, p)
            Wsub, Ssub = self.solve(G - A)
            if not Wsub[1 - p]:
                W[p].update(G)
                S[p].update(Ssub[p])
                S[p].update(sA)
                for v in sorted(top):
                    if self.owner[v] == p:
                        S[p][v] = next(w for w in self.moves[v] if w in G)
                break
            B, sB = self.attractor(G, Wsub[1 - p], 1 - p)
            W[1 - p].update(B)
            S[1 - p].update(Ssub[1 - p])
            S[1 - p].update(sB)
            G = G - B
        return W, S


def solve_zielonka(game: ParityGame, deadline: Optional[float] = None) -> Solution:
    """Solve ``game`` with Zielonka's recursive algorithm.

    Dead ends are handled by redirecting them to a fresh losing sink for
    their owner; the sinks are removed from the result.
    """
    n = len(game)
    dead = [v for v in range(n) if not game.moves[v]]
    if dead:
        work = ParityGame(list(game.owner), list(game.priority),
                          [list(m) for m in game.moves], list(game.labels))
        sink_e = work.add(EXISTS, 0)  # won by EXISTS
        sink_a = work.add(EXISTS, 1)  # won by FORALL
        work.moves[sink_e] = [sink_e]
        work.moves[sink_a] = [sink_a]
        for v in dead:
            work.moves[v] = [sink_a if game.owner[v] == EXISTS else sink_e]
    else:
        work = game
    solver = _Zielonka(work, deadline)
    W, S = solver.solve(set(range(len(work))))
    if dead:
        dead_set = set(dead)
        extra = {n, n + 1}
        W = (W[0] - extra, W[1] - extra)
        S = tuple({v: w for v, w in s.items() if v not in dead_set and v < n} for s in S)
    return Solution(W, S)


def winner_at(game: ParityGame, v: int) -> int:
    sol = solve_zielonka(game)
    return EXISTS if v in sol.win_e else FORALL


def verify_strategy(game: ParityGame, region, strategy: dict, player: int) -> bool:
    """Exact check that ``strategy`` wins every position of ``region``.

    Fixes ``player``'s moves by the strategy, lets the opponent choose
    freely, and requires that plays stay in ``region``, that ``player`` is
    never stuck, and that no reachable cycle has a maximal priority of the
    opponent's parity.
    """
    region = set(region)
    if not region:
        return True
    idx = {v: i for i, v in enumerate(sorted(region))}
    rows, cols = [], []
    for v in region:
        if game.owner[v] == player:
            w = strategy.get(v)
            if w is None or w not in game.moves[v] or w not in region:
                return False
            succ = [w]
        else:
            succ = game.moves[v]
            if any(w not in region for w in succ):
                return False
        for w in succ:
            rows.append(idx[v])
            cols.append(idx[w])
    order = sorted(region)
    prio = np.array([game.priority[v] for v in order])
    m = len(order)
    graph = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    loops = np.zeros(m, dtype=bool)
    for r, c in zip(rows, cols):
        if r == c:
            loops[r] = True
    for q in sorted(set(prio.tolist())):
        if q % 2 == player:
            continue
        keep = np.flatnonzero(prio <= q)
        sub = graph[keep][:, keep]
        _, labels = csgraph.connected_components(sub, directed=True, connection="strong")
        sizes = np.bincount(labels)
        for local, v in enumerate(keep):
            if prio[v] == q and (sizes[labels[local]] > 1 or loops[v]):
                return False
    return True


# ---------------------------------------------------------------------------
# PGSolver text format

_HEADER_RE = re.compile(r"^\s*parity\s+(-?\d+)\s*;\s*$")
_START_RE = re.compile(r"^\s*start\s+(\d+)\s*;\s*$")
_LINE_RE = re.compile(
    r'^\s*(\d+)\s+(\d+)\s+(\d+)(?:\s+(\d+(?:\s*,\s*\d+)*))?(?:\s+"([^"\n]*)")?\s*;\s*$')


def export_pgsolver(game: ParityGame) -> str:
    """PGSolver text for ``game``; a ``start`` line is written only when
    the initial position is not 0."""
    out = [f"parity {len(game) - 1};\n"]
    if game.init:
        out.append(f"start {game.init};\n")
    for v in range(len(game)):
        label = game.labels[v]
        if '"' in label or "\n" in label:
            raise ValueError(f"label of position {v} cannot be written: {label!r}")
        succ = ",".join(str(w) for w in game.moves[v])
        succ = f" {succ}" if succ else ""
        out.append(f'{v} {game.priority[v]} {game.owner[v]}{succ} "{label}";\n')
    return "".join(out)


def import_pgsolver(text: str) -> ParityGame:
    lines = text.splitlines()
    entries = {}
    header = None
    init = 0
    for lineno, raw in enumerate(lines, 1):
        if not raw.strip():
            continue
        if header is None:
            m = _HEADER_RE.match(raw)
            if not m:
                raise PGSolverFormatError("expected 'parity <maxindex>;'", lineno)
            header = int(m.group(1))
            continue
        m = _START_RE.match(raw)
        if m:
            init = int(m.group(1))
            continue
        m = _LINE_RE.match(raw)
        if not m:
            raise PGSolverFormatError(f"cannot parse {raw.strip()!r}", lineno)
        v, prio, owner = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if owner not in (EXISTS, FORALL):
            raise PGSolverFormatError(f"owner must be 0 or 1, got {owner}", lineno)
        if v in entries:
            raise PGSolverFormatError(f"position {v} defined twice", lineno)
        succ = [int(x) for x in m.group(4).split(",")] if m.group(4) else []
        label = m.group(5) if m.group(5) is not None else f"n{v}"
        entries[v] = (prio, owner, succ, label, lineno)
    if header is None:
        raise PGSolverFormatError("empty document")
    n = header + 1
    if sorted(entries) != list(range(n)):
        raise PGSolverFormatError(f"expected positions 0..{header}, got {len(entries)} entries")
    game = ParityGame(init=init)
    for v in range(n):
        prio, owner, succ, label, lineno = entries[v]
        for w in succ:
            if not 0 <= w < n:
                raise PGSolverFormatError(f"dangling successor {w}", lineno)
        game.add(owner, prio, succ, label)
    if n and not 0 <= init < n:
        raise PGSolverFormatError(f"start position {init} out of range")
    return game
