"""Finite coalgebras and predicate liftings.

Five branching types are supported:

``powerset``      successor sets (Kripke frames)
``multiset``      successors with positive integer multiplicities
``distribution``  rational probability distributions over successors
``monotone``      families of neighbourhoods
``game``          concurrent game structures (joint moves of agents)

States are referred to by index; ``model.states[i]`` is the name of state
``i``.  Predicates passed to :func:`lift` are sets of state indices.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy import sparse

from .formula import ModalOp

Rational = Fraction

FUNCTORS = ("powerset", "multiset", "distribution", "monotone", "game")


class ModelFormatError(ValueError):
    """Malformed or inconsistent model description."""


class FunctorMismatch(ValueError):
    """A modality was evaluated over a model of the wrong branching type."""


@dataclass(frozen=True)
class GameRow:
    """Moves available at one state of a game model and the outcome map.

    ``moves[a]`` lists the move names of the ``a``-th agent (in the model's
    agent order); ``delta`` maps joint moves (tuples of move names, one per
    agent) to successor indices.
    """

    moves: tuple
    delta: dict = field(hash=False)

    def joint_moves(self):
        return itertools.product(*self.moves)


def _fraction(value) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ModelFormatError(f"bad rational {value!r}") from exc


@dataclass(eq=False)
class CoalgebraModel:
    """A finite coalgebra together with an atom valuation.

    ``rows[c]`` holds the transition structure of state ``c``:

    * powerset: tuple of successor indices
    * multiset: tuple of ``(successor, multiplicity)`` pairs
    * distribution: tuple of ``(successor, Fraction)`` pairs
    * monotone: tuple of neighbourhoods, each a tuple of indices
    * game: a :class:`GameRow`

    The constructor canonicalizes and validates; instances are treated as
    immutable afterwards.
    """

    functor: str
    states: tuple
    valuation: dict
    rows: tuple
    agents: tuple = ()
    initial: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.functor not in FUNCTORS:
            raise ModelFormatError(f"unknown functor {self.functor!r}")
        self.states = tuple(self.states)
        if len(set(self.states)) != len(self.states):
            raise ModelFormatError("duplicate state names")
        n = len(self.states)
        if len(self.rows) != n:
            raise ModelFormatError("need exactly one transition row per state")
        self.index = {s: i for i, s in enumerate(self.states)}
        if n and not (isinstance(self.initial, (int, np.integer)) and 0 <= self.initial < n):
            raise ModelFormatError(f"initial state {self.initial!r} out of range")

        val = {}
        for atom, members in self.valuation.items():
            members = frozenset(members)
            if any(not 0 <= m < n for m in members):
                raise ModelFormatError(f"valuation of {atom!r} names unknown states")
            val[atom] = members
        self.valuation = val

        def check(i):
            if not isinstance(i, (int, np.integer)) or not 0 <= i < n:
                raise ModelFormatError(f"dangling state reference {i!r}")
            return int(i)

        f = self.functor
        rows = []
        if f != "game" and self.agents:
            raise ModelFormatError("agents are only allowed in game models")
        for c, row in enumerate(self.rows):
            if f == "powerset":
                rows.append(tuple(sorted({check(d) for d in row})))
            elif f == "multiset":
                acc: dict = {}
                for d, w in row:
                    if not isinstance(w, (int, np.integer)) or isinstance(w, bool) or w < 1:
                        raise ModelFormatError(f"multiplicity must be a positive integer, got {w!r}")
                    d = check(d)
                    acc[d] = acc.get(d, 0) + int(w)
                rows.append(tuple(sorted(acc.items())))
            elif f == "distribution":
                acc = {}
                for d, p in row:
                    p = _fraction(p)
                    if p <= 0:
                        raise ModelFormatError(f"probabilities must be positive, got {p}")
                    d = check(d)
                    acc[d] = acc.get(d, 0) + p
                if sum(acc.values(), Fraction(0)) != 1:
                    raise ModelFormatError(
                        f"distribution of state {self.states[c]!r} sums to "
                        f"{sum(acc.values(), Fraction(0))}, not 1")
                rows.append(tuple(sorted(acc.items())))
            elif f == "monotone":
                fam = {tuple(sorted({check(d) for d in nb})) for nb in row}
                rows.append(tuple(sorted(fam)))
            else:
                rows.append(self._check_game_row(c, row, check))
        self.rows = tuple(rows)

    def _check_game_row(self, c, row, check):
        name = self.states[c]
        if len(row.moves) != len(self.agents):
            raise ModelFormatError(f"state {name!r}: need a move set for every agent")
        moves = tuple(tuple(m) for m in row.moves)
        for a, ms in zip(self.agents, moves):
            if not ms or len(set(ms)) != len(ms):
                raise ModelFormatError(
                    f"state {name!r}: agent {a!r} needs a nonempty set of distinct moves")
        delta = {}
        for joint in itertools.product(*moves):
            if joint not in row.delta:
                raise ModelFormatError(
                    f"state {name!r}: missing transition for joint move {joint}")
            delta[joint] = check(row.delta[joint])
        if len(row.delta) != len(delta):
            raise ModelFormatError(f"state {name!r}: transition for an unavailable move")
        return GameRow(moves, delta)

    def __eq__(self, other):
        if not isinstance(other, CoalgebraModel):
            return NotImplemented
        return (self.functor == other.functor and self.states == other.states
                and self.agents == other.agents and self.rows == other.rows
                and self.valuation == other.valuation and self.initial == other.initial)

    def __len__(self):
        return len(self.states)

    def state_id(self, state) -> int:
        """Index of ``state`` given by name or index."""
        if isinstance(state, (int, np.integer)):
            if not 0 <= state < len(self.states):
                raise KeyError(f"no state with index {state}")
            return int(state)
        try:
            return self.index[state]
        except KeyError:
            raise KeyError(f"unknown state {state!r}") from None

    def holds(self, atom: str, state: int) -> bool:
        return state in self.valuation.get(atom, ())

    # -- derived structures used by the vectorized evaluator -----------------

    def _weights(self):
        """CSR matrix of integer weights and the per-row scale.

        For distributions, row ``c`` is multiplied by the lcm ``L_c`` of its
        denominators so that ``mu_c(D) = (W @ 1_D)[c] / L_c`` exactly.
        Returns None when some lcm is too large for int64 arithmetic.
        """
        if "weights" in self._cache:
            return self._cache["weights"]
        n = len(self.states)
        indptr = [0]
        indices, data = [], []
        scale = np.ones(n, dtype=np.int64)
        for c, row in enumerate(self.rows):
            if self.functor == "powerset":
                indices.extend(row)
                data.extend([1] * len(row))
            elif self.functor == "multiset":
                for d, w in row:
                    indices.append(d)
                    data.append(w)
            else:
                lcm = 1
                for _, p in row:
                    lcm = lcm * p.denominator // math.gcd(lcm, p.denominator)
                if lcm > 2 ** 40:
                    self._cache["weights"] = None
                    return None
                scale[c] = lcm
                for d, p in row:
                    indices.append(d)
                    data.append(int(p * lcm))
            indptr.append(len(indices))
        mat = sparse.csr_matrix(
            (np.asarray(data, dtype=np.int64), np.asarray(indices, dtype=np.int64),
             np.asarray(indptr, dtype=np.int64)), shape=(n, n))
        self._cache["weights"] = (mat, scale)
        return mat, scale

    def _families(self, coalition=None):
        """Set families: neighbourhoods, or per coalition move the outcomes.

        Returns ``(owner, members, sizes)``: ``owner`` is a states x sets
        incidence matrix, ``members`` a sets x states incidence matrix.
        """
        key = ("families", coalition)
        if key in self._cache:
            return self._cache[key]
        sets_per_state = []
        if self.functor == "monotone":
            sets_per_state = [list(row) for row in self.rows]
        else:
            pos = [self.agents.index(a) for a in sorted(coalition)]
            for row in self.rows:
                groups: dict = {}
                for joint, target in row.delta.items():
                    groups.setdefault(tuple(joint[p] for p in pos), set()).add(target)
                sets_per_state.append([tuple(sorted(g)) for _, g in sorted(groups.items())])
        n = len(self.states)
        o_ptr, o_idx = [0], []
        m_ptr, m_idx = [0], []
        k = 0
        for fam in sets_per_state:
            for s in fam:
                o_idx.append(k)
                m_idx.extend(s)
                m_ptr.append(len(m_idx))
                k += 1
            o_ptr.append(len(o_idx))
        owner = sparse.csr_matrix(
            (np.ones(len(o_idx), dtype=np.int64), np.asarray(o_idx, dtype=np.int64),
             np.asarray(o_ptr, dtype=np.int64)), shape=(n, k))
        members = sparse.csr_matrix(
            (np.ones(len(m_idx), dtype=np.int64), np.asarray(m_idx, dtype=np.int64),
             np.asarray(m_ptr, dtype=np.int64)), shape=(k, n))
        sizes = np.diff(members.indptr)
        self._cache[key] = (owner, members, sizes)
        return self._cache[key]


# ---------------------------------------------------------------------------
# Predicate liftings


def check_functor(op: ModalOp, model: CoalgebraModel) -> None:
    if op.functor != model.functor:
        raise FunctorMismatch(
            f"modality {op} needs a {op.functor} model, got {model.functor}")
    if op.kind in ("cdia", "cbox") and not op.param <= set(model.agents):
        unknown = sorted(op.param - set(model.agents))
        raise FunctorMismatch(f"unknown agents in coalition: {unknown}")


def lift(op: ModalOp, model: CoalgebraModel, state: int, pred: Iterable[int]) -> bool:
    """Does the transition structure of ``state`` lie in the lifting of
    ``pred`` under ``op``?"""
    check_functor(op, model)
    pred = pred if isinstance(pred, (set, frozenset)) else set(pred)
    row = model.rows[state]
    k = op.kind
    if k == "dia":
        return any(d in pred for d in row)
    if k == "box":
        return all(d in pred for d in row)
    if k == "gdia":
        return sum(w for d, w in row if d in pred) > op.param
    if k == "gbox":
        return sum(w for d, w in row if d not in pred) <= op.param
    if k == "pdia":
        return sum((p for d, p in row if d in pred), Fraction(0)) > op.param
    if k == "pbox":
        return sum((p for d, p in row if d in pred), Fraction(0)) >= 1 - op.param
    if k == "mdia":
        return any(all(d in pred for d in nb) for nb in row)
    if k == "mbox":
        return all(any(d in pred for d in nb) for nb in row)
    # coalition modalities
    agents = model.agents
    ours = [i for i, a in enumerate(agents) if a in op.param]
    theirs = [i for i, a in enumerate(agents) if a not in op.param]

    def outcome(mine, other):
        joint = [None] * len(agents)
        for i, m in zip(ours, mine):
            joint[i] = m
        for i, m in zip(theirs, other):
            joint[i] = m
        return row.delta[tuple(joint)]

    my_choices = list(itertools.product(*(row.moves[i] for i in ours)))
    their_choices = list(itertools.product(*(row.moves[i] for i in theirs)))
    if k == "cdia":
        return any(all(outcome(m, o) in pred for o in their_choices) for m in my_choices)
    return all(any(outcome(m, o) in pred for o in their_choices) for m in my_choices)


def modal_base(model: CoalgebraModel, state: int) -> tuple:
    """States the liftings at ``state`` can depend on, in index order."""
    row = model.rows[state]
    f = model.functor
    if f == "powerset":
        return row
    if f in ("multiset", "distribution"):
        return tuple(d for d, _ in row)
    if f == "monotone":
        return tuple(sorted({d for nb in row for d in nb}))
    return tuple(sorted(set(row.delta.values())))


class StepEvaluator:
    """Vectorized predicate liftings for a fixed subset of states.

    ``evaluate(op, inside)`` takes a boolean vector aligned with ``rows``
    (membership of each of those states in the predicate; all other states
    count as outside) and returns, aligned with ``rows``, whether each
    state's structure lies in the lifted predicate.
    """

    def __init__(self, model: CoalgebraModel, rows=None):
        n = len(model.states)
        self.model = model
        self.rows = np.arange(n) if rows is None else np.asarray(rows, dtype=np.int64)
        self._pos = np.full(n, -1, dtype=np.int64)
        self._pos[self.rows] = np.arange(len(self.rows))
        self._prepared: dict = {}

    def _gather(self, inside, cols_pos):
        out = np.zeros((len(cols_pos),) + inside.shape[1:], dtype=np.int64)
        mask = cols_pos >= 0
        out[mask] = inside[cols_pos[mask]]
        return out

    def _restrict_cols(self, mat):
        cols, inv = np.unique(mat.indices, return_inverse=True)
        sub = sparse.csr_matrix((mat.data, inv.astype(np.int64), mat.indptr),
                                shape=(mat.shape[0], len(cols)))
        return sub, self._pos[cols]

    def _weighted(self):
        if "w" not in self._prepared:
            weights = self.model._weights()
            if weights is None:
                self._prepared["w"] = None
            else:
                mat, scale = weights
                sub, cols_pos = self._restrict_cols(mat[self.rows])
                total = np.asarray(sub.sum(axis=1)).ravel()
                self._prepared["w"] = (sub, cols_pos, total, scale[self.rows])
        return self._prepared["w"]

    def _slow(self, op, inside):
        inside = np.asarray(inside, dtype=bool)
        if inside.ndim == 2:
            return np.stack([self._slow(op, inside[:, i]) for i in range(inside.shape[1])],
                            axis=1).reshape(len(self.rows), inside.shape[1])
        pred = set(self.rows[inside].tolist())
        return np.array([lift(op, self.model, int(c), pred) for c in self.rows], dtype=bool)

    def _family(self, coalition):
        key = ("f", coalition)
        if key not in self._prepared:
            owner, members, sizes = self.model._families(coalition)
            own = owner[self.rows]
            used, inv = np.unique(own.indices, return_inverse=True)
            own = sparse.csr_matrix((own.data, inv.astype(np.int64), own.indptr),
                                    shape=(own.shape[0], len(used)))
            mem, cols_pos = self._restrict_cols(members[used])
            self._prepared[key] = (own, mem, cols_pos, sizes[used])
        return self._prepared[key]

    def evaluate(self, op: ModalOp, inside: np.ndarray) -> np.ndarray:
        """Lift one predicate (a vector) or several at once (a matrix with
        one column per predicate)."""
        check_functor(op, self.model)
        k = op.kind
        extra = (slice(None),) + (None,) * (np.ndim(inside) - 1)
        if k in ("mdia", "mbox", "cdia", "cbox"):
            coalition = op.param if k in ("cdia", "cbox") else None
            own, mem, cols_pos, sizes = self._family(coalition)
            cnt = mem @ self._gather(inside, cols_pos)
            if k in ("mdia", "cdia"):
                return (own @ (cnt == sizes[extra]).astype(np.int64)) > 0
            return (own @ (cnt == 0).astype(np.int64)) == 0
        prepared = self._weighted()
        if prepared is None:
            return self._slow(op, inside)
        sub, cols_pos, total, scale = prepared
        s = sub @ self._gather(inside, cols_pos)
        if k == "dia":
            return s > 0
        if k == "box":
            return s == total[extra]
        if k == "gdia":
            return s > op.param
        if k == "gbox":
            return total[extra] - s <= op.param
        p = op.param
        if len(scale) and int(scale.max()) * p.denominator > 2 ** 62:
            s, scale = s.astype(object), scale.astype(object)
        if k == "pdia":
            return s * p.denominator > p.numerator * scale[extra]
        return s * p.denominator >= (p.denominator - p.numerator) * scale[extra]


# ---------------------------------------------------------------------------
# File format


def model_to_dict(model: CoalgebraModel) -> dict:
    names = model.states
    f = model.functor
    if f == "powerset":
        trans = {names[c]: [names[d] for d in row] for c, row in enumerate(model.rows)}
    elif f == "multiset":
        trans = {names[c]: {names[d]: w for d, w in row} for c, row in enumerate(model.rows)}
    elif f == "distribution":
        trans = {names[c]: {names[d]: str(p) for d, p in row}
                 for c, row in enumerate(model.rows)}
    elif f == "monotone":
        trans = {names[c]: [[names[d] for d in nb] for nb in row]
                 for c, row in enumerate(model.rows)}
    else:
        moves = {}
        delta = []
        for c, row in enumerate(model.rows):
            moves[names[c]] = {a: list(ms) for a, ms in zip(model.agents, row.moves)}
            for joint in row.joint_moves():
                delta.append({"state": names[c],
                              "move": dict(zip(model.agents, joint)),
                              "target": names[row.delta[joint]]})
        trans = {"moves": moves, "delta": delta}
    out = {
        "functor": f,
        "states": list(names),
        "valuation": {a: [names[s] for s in sorted(m)] for a, m in model.valuation.items()},
        "transitions": trans,
    }
    if f == "game":
        out["agents"] = list(model.agents)
    if model.initial:
        out["initial"] = names[model.initial]
    return out


def serialize_model(model: CoalgebraModel) -> str:
    """Canonical JSON text: sorted keys, reduced rationals."""
    return json.dumps(model_to_dict(model), sort_keys=True, indent=1) + "\n"


def model_from_dict(doc) -> CoalgebraModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be an object")
    for key in ("functor", "states", "transitions"):
        if key not in doc:
            raise ModelFormatError(f"missing key {key!r}")
    f = doc["functor"]
    if f not in FUNCTORS:
        raise ModelFormatError(f"unknown functor {f!r}")
    states = doc["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise ModelFormatError("'states' must be an array of strings")
    index = {s: i for i, s in enumerate(states)}

    def ref(name):
        try:
            return index[name]
        except (KeyError, TypeError):
            raise ModelFormatError(f"dangling state reference {name!r}") from None

    valuation = {}
    for atom, members in doc.get("valuation", {}).items():
        if not isinstance(members, list):
            raise ModelFormatError(f"valuation of {atom!r} must be an array")
        valuation[atom] = {ref(m) for m in members}

    trans = doc["transitions"]
    if not isinstance(trans, dict):
        raise ModelFormatError("'transitions' must be an object")
    agents = ()
    try:
        if f == "game":
            agents = tuple(doc.get("agents", ()))
            moves = trans["moves"]
            delta_recs = trans["delta"]
            deltas = [dict() for _ in states]
            for rec in delta_recs:
                c = ref(rec["state"])
                joint = tuple(rec["move"][a] for a in agents)
                if joint in deltas[c]:
                    raise ModelFormatError(
                        f"duplicate transition for {rec['state']!r} and {joint}")
                deltas[c][joint] = ref(rec["target"])
            rows = []
            for c, s in enumerate(states):
                if s not in moves:
                    raise ModelFormatError(f"no moves for state {s!r}")
                rows.append(GameRow(tuple(tuple(moves[s][a]) for a in agents), deltas[c]))
        else:
            for s in trans:
                ref(s)
            rows = []
            for s in states:
                row = trans.get(s, [] if f in ("powerset", "monotone") else {})
                if f == "powerset":
                    rows.append([ref(d) for d in row])
                elif f == "multiset":
                    rows.append([(ref(d), w) for d, w in row.items()])
                elif f == "distribution":
                    rows.append([(ref(d), _fraction(p)) for d, p in row.items()])
                else:
                    rows.append([[ref(d) for d in nb] for nb in row])
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelFormatError(f"malformed transitions: {exc!r}") from exc
    initial = ref(doc["initial"]) if "initial" in doc else 0
    return CoalgebraModel(f, tuple(states), valuation, tuple(rows), agents, initial)


def parse_model(text: str) -> CoalgebraModel:
    """Parse and validate a model document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a JSON document: {exc}") from exc
    return model_from_dict(doc)
