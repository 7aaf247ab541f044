import random

import numpy as np
import pytest

from mucheck import benchgen
from mucheck.formula import closure, dual_closure, negate, parse_formula
from mucheck.local import (LocalResult, ProductRegion, check_local, eval_step,
                           exploration_quotient, satisfying_states, solve_nested)
from mucheck.model import CoalgebraModel
from mucheck.reduction import satisfying_states_game

from oracles import denote
from randgen import random_formula, random_model

FUNCTORS = ("powerset", "multiset", "distribution", "monotone", "game")


@pytest.fixture
def chain():
    # a -> b -> c, p only at c
    return CoalgebraModel("powerset", ("a", "b", "c"), {"p": {2}}, ([1], [2], []))


def _region(model, cl, pairs=()):
    return ProductRegion.from_pairs(pairs, len(model.states), len(cl))


def test_product_region_basics():
    r = ProductRegion.from_pairs([(0, 1), (2, 0)], 3, 2)
    s = ProductRegion.from_pairs([(0, 1)], 3, 2)
    assert (0, 1) in r and (1, 1) not in r
    assert len(r) == 2 and sorted(r) == [(0, 1), (2, 0)]
    assert s <= r and (r & s) == s and (r | s) == r
    assert ProductRegion.empty(3, 2).isdisjoint(r)
    assert len(ProductRegion.full(3, 2)) == 6


# -- one-step evaluation ----------------------------------------------------------

def test_eval_step_bottom(chain):
    cl = closure(parse_formula("false"))
    full = ProductRegion.full(3, len(cl))
    assert len(eval_step(chain, cl, 0, full, full)) == 0


def test_eval_step_disjunction(chain):
    cl = closure(parse_formula("p | q"))
    full = ProductRegion.full(3, len(cl))
    p = next(i for i, n in enumerate(cl.nodes) if n.name == "p")
    X = _region(chain, cl, [(1, p)])
    assert (1, cl.root) in eval_step(chain, cl, cl.root, X, full)
    assert (0, cl.root) not in eval_step(chain, cl, cl.root, X, full)


def test_eval_step_diamond(chain):
    cl = closure(parse_formula("<> p"))
    full = ProductRegion.full(3, len(cl))
    # (b, p) is not in X, so (a, <>p) fails even though ...
    X = _region(chain, cl, [(2, 1)])
    out = eval_step(chain, cl, 0, X, full)
    assert (0, 0) not in out and (1, 0) in out


def test_eval_step_respects_scope(chain):
    cl = closure(parse_formula("true"))
    scope = _region(chain, cl, [(1, 0)])
    assert sorted(eval_step(chain, cl, 0, ProductRegion.empty(3, 1), scope)) == [(1, 0)]


# -- nested fixpoints -------------------------------------------------------------

@pytest.mark.parametrize("warm", [True, False])
def test_identity_fixpoints(chain, warm):
    for text, expect in [("nu X. X", {0, 1, 2}), ("mu X. X", set())]:
        cl = closure(parse_formula(text))
        win = solve_nested(chain, cl, ProductRegion.full(3, len(cl)), warm_start=warm)
        assert {c for c, j in win if j == cl.root} == expect


def _backward_reach(model, goal):
    won = set(goal)
    changed = True
    while changed:
        changed = False
        for c, row in enumerate(model.rows):
            if c not in won and won & set(row):
                won.add(c)
                changed = True
    return won


def test_reachability_on_chain(chain):
    phi = parse_formula("mu X. p | <> X")
    assert _backward_reach(chain, {2}) == {0, 1, 2}
    assert satisfying_states(chain, phi) == {0, 1, 2}
    assert satisfying_states(chain, parse_formula("mu X. q | <> X")) == set()


def test_lazy_and_eager_agree_on_chain(chain):
    phi = parse_formula("mu X. p | <> X")
    for c in range(3):
        assert check_local(chain, c, phi, lazy=True).holds
        assert check_local(chain, c, phi).holds


def test_top_needs_one_pair():
    m = CoalgebraModel("powerset", ("a", "b"), {}, ([1], [0]))
    res = check_local(m, 0, parse_formula("true"), lazy=True)
    assert res.holds and res.explored == 1


def test_eager_quotient_is_one(chain):
    res = check_local(chain, 0, parse_formula("mu X. p | <> X"))
    assert res.quotient == 1
    assert exploration_quotient(LocalResult(True, 3, 12)) == exploration_quotient(
        LocalResult(True, 1, 4))


def test_lazy_root_stops_early_regardless_of_game_size():
    counts = set()
    for n in (2, 4, 6):
        inst = benchgen.make_instance("hanoi", n, lazy=True)
        res = check_local(inst.model, inst.initial[0], inst.formulas[0][1], lazy=True)
        assert res.holds
        counts.add(res.explored)
    assert len(counts) == 1 and counts.pop() <= 64


def test_state_given_by_name(chain):
    assert check_local(chain, "b", parse_formula("<> p")).holds


# -- properties against oracles ---------------------------------------------------

def _instances(seed, count, functor="powerset"):
    rng = random.Random(seed)
    for _ in range(count):
        f = functor or rng.choice(FUNCTORS)
        m = random_model(rng, f, n=rng.randint(1, 5))
        yield m, random_formula(rng, f, max_nodes=12, max_ad=2)


def test_denotational_oracle_powerset():
    for m, phi in _instances(1, 150):
        expect = denote(m, phi)
        assert satisfying_states(m, phi) == expect
        for c in range(len(m.states)):
            assert check_local(m, c, phi, lazy=True).holds == (c in expect)


def test_denotational_oracle_all_functors():
    for m, phi in _instances(2, 150, functor=None):
        expect = denote(m, phi)
        assert satisfying_states(m, phi) == expect
        assert satisfying_states_game(m, phi) == expect


def test_warm_start_does_not_change_the_fixpoint():
    for m, phi in _instances(3, 100, functor=None):
        cl = closure(phi)
        full = ProductRegion.full(len(m.states), len(cl))
        assert solve_nested(m, cl, full, warm_start=True) == solve_nested(m, cl, full, warm_start=False)


def test_partial_solutions_are_sound_lower_bounds():
    rng = random.Random(4)
    for m, phi in _instances(5, 120, functor=None):
        cl = closure(phi)
        dcl = dual_closure(cl)
        n, k = len(m.states), len(cl)
        full_e = solve_nested(m, cl, ProductRegion.full(n, k))
        full_a = solve_nested(m, dcl, ProductRegion.full(n, k))
        # at exhaustion exactly one side wins every pair
        assert full_e.isdisjoint(full_a)
        assert len(full_e) + len(full_a) == n * k
        for _ in range(4):
            scope = ProductRegion(np.array([[rng.random() < 0.6 for _ in range(k)]
                                            for _ in range(n)], dtype=bool))
            low_e = solve_nested(m, cl, scope)
            low_a = solve_nested(m, dcl, scope)
            assert low_e <= full_e and low_a <= full_a
            assert low_e.isdisjoint(low_a)


def test_dual_closure_is_closure_of_negation():
    for _, phi in _instances(6, 100, functor=None):
        cl = closure(phi)
        d = dual_closure(cl)
        neg = closure(negate(phi))
        assert [n.kind for n in d.nodes] == [n.kind for n in neg.nodes]
        assert [n.children for n in d.nodes] == [n.children for n in neg.nodes]


def test_repeated_lazy_runs_are_identical():
    inst = benchgen.make_instance("ladder", 3)
    runs = [check_local(inst.model, 0, inst.formulas[0][1], lazy=True) for _ in range(2)]
    assert runs[0] == runs[1]
