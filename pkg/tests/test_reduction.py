import itertools
import random
from fractions import Fraction

import pytest

from mucheck import benchgen
from mucheck.formula import ModalOp, closure, graded_dia, parse_formula, prob_dia
from mucheck.games import EXISTS, FORALL, solve_zielonka
from mucheck.local import check_local
from mucheck.model import CoalgebraModel, lift
from mucheck.reduction import (GameBuilder, add_modal, build_mc_game, check_game,
                               modal_owner)

from randgen import random_formula, random_model


def subgame(model, c, op, D):
    """Winner and size of the one-step game for ``op`` at ``c`` when the
    operand positions are labelled by membership in ``D``."""
    gb = GameBuilder()
    entry, _ = gb.position("entry", modal_owner(op))

    def target(d):
        # a dead end for the player who should lose it
        return gb.position(("leaf", d), FORALL if d in D else EXISTS)[0]

    add_modal(gb, entry, "m", model, c, op, target)
    sol = solve_zielonka(gb.game)
    inner = sum(1 for key in gb.index if key != "entry" and key[0] not in ("leaf", "stuck"))
    return entry in sol.win_e, inner


def all_labellings(model, c):
    succ = sorted({d for d, _ in model.rows[c]})
    for bits in itertools.product((False, True), repeat=len(succ)):
        yield {d for d, b in zip(succ, bits) if b}


def test_top_is_a_single_forall_deadlock():
    m = CoalgebraModel("powerset", ("a", "b"), {}, ([1], [0]))
    game, roots = build_mc_game(m, closure(parse_formula("true")), [0])
    assert len(game) == 1 and game.owner[0] == FORALL and game.moves[0] == []
    assert check_game(m, 0, parse_formula("true")).holds


def test_graded_example():
    # three successors of multiplicity 4, grade 5: two included psi-successors suffice
    m = CoalgebraModel("multiset", tuple("cxyz"), {}, ([(1, 4), (2, 4), (3, 4)], [], [], []))
    for D in all_labellings(m, 0):
        won, inner = subgame(m, 0, graded_dia(5), D)
        assert won == (len(D) >= 2)
        assert inner <= (3 + 1) * 7 + 2


def test_probabilistic_uniform_example():
    q = Fraction(1, 4)
    m = CoalgebraModel("distribution", tuple("cwxyz"), {},
                       ([(1, q), (2, q), (3, q), (4, q)], [(1, 1)], [(2, 1)], [(3, 1)], [(4, 1)]))
    for D in all_labellings(m, 0):
        won, _ = subgame(m, 0, prob_dia(Fraction(1, 2)), D)
        assert won == (len(D) >= 3)


def _weighted_row(rng, functor, m_succ):
    names = ("c",) + tuple(f"d{i}" for i in range(m_succ))
    others = [[(i, 1)] for i in range(1, m_succ + 1)]
    if functor == "multiset":
        row = [(i, rng.randint(1, 6)) for i in range(1, m_succ + 1)]
        others = [[] for _ in range(m_succ)]
    else:
        weights = [rng.randint(1, 5) for _ in range(m_succ)]
        row = [(i, Fraction(w, sum(weights))) for i, w in zip(range(1, m_succ + 1), weights)]
    return CoalgebraModel(functor, names, {}, tuple([row] + others))


@pytest.mark.parametrize("functor", ["multiset", "distribution"])
def test_counting_subgames_match_lift_exhaustively(functor):
    rng = random.Random(functor)
    for _ in range(60):
        m = _weighted_row(rng, functor, rng.randint(0 if functor == "multiset" else 1, 6))
        for dia in (True, False):
            if functor == "multiset":
                n = rng.randint(0, 10)
                op = ModalOp("gdia" if dia else "gbox", n)
            else:
                den = rng.randint(1, 6)
                op = ModalOp("pdia" if dia else "pbox", Fraction(rng.randint(0, den), den))
            for D in all_labellings(m, 0):
                won, inner = subgame(m, 0, op, D)
                assert won == lift(op, m, 0, D)


def test_graded_subgame_stays_polynomial():
    names = ("c",) + tuple(f"d{i}" for i in range(6))
    m = CoalgebraModel("multiset", names, {},
                       tuple([[(i, 3) for i in range(1, 7)]] + [[] for _ in range(6)]))
    for n in (0, 3, 10, 1000):
        _, inner = subgame(m, 0, graded_dia(n), set())
        # a layer and an include position per (successor, counter) pair
        assert inner <= 2 * 6 * (n + 2)
        # only multiples of 3 up to 18 are reachable counter values
        assert inner <= 2 * 6 * 7


@pytest.mark.parametrize("functor", ["monotone", "game", "powerset"])
def test_other_subgames_match_lift(functor):
    rng = random.Random(functor)
    for _ in range(100):
        m = random_model(rng, functor, agents=rng.randint(1, 3))
        c = rng.randrange(len(m.states))
        if functor == "monotone":
            ops = [ModalOp("mdia"), ModalOp("mbox")]
        elif functor == "powerset":
            ops = [ModalOp("dia"), ModalOp("box")]
        else:
            coalition = frozenset(a for a in m.agents if rng.random() < 0.5)
            ops = [ModalOp("cdia", coalition), ModalOp("cbox", coalition)]
        for op in ops:
            for bits in itertools.product((False, True), repeat=len(m.states)):
                D = {d for d, b in enumerate(bits) if b}
                assert subgame(m, c, op, D)[0] == lift(op, m, c, D)


# -- whole games -------------------------------------------------------------------

def test_game_positions_carry_closure_priorities():
    m = CoalgebraModel("powerset", ("a",), {}, ([0],))
    cl = closure(parse_formula("nu X. mu Y. <> X | <> Y"))
    game, roots = build_mc_game(m, cl, [0])
    prios = {game.labels[v]: game.priority[v] for v in range(len(game))}
    assert prios["a|0"] == 2 and prios["a|1"] == 1 and prios["a|2"] == 0


def test_chain_cross_check():
    chain = CoalgebraModel("powerset", ("a", "b", "c"), {"p": {2}}, ([1], [2], []))
    for text in ["mu X. p | <> X", "nu X. X", "mu X. X", "[] false", "<> <> p"]:
        phi = parse_formula(text)
        for c in range(3):
            assert check_game(chain, c, phi).holds == check_local(chain, c, phi).holds


@pytest.mark.parametrize("functor", ["powerset", "multiset", "distribution", "monotone", "game"])
def test_engines_agree_on_random_instances(functor):
    rng = random.Random(functor)
    for _ in range(60):
        m = random_model(rng, functor)
        phi = random_formula(rng, functor, max_nodes=14, max_ad=3)
        cl = closure(phi)
        for c in range(len(m.states)):
            assert check_game(m, c, phi, cl=cl).holds == check_local(m, c, phi, cl=cl).holds


def test_exported_game_is_deterministic():
    inst = benchgen.make_instance("ladder", 2, "graded")
    cl = closure(inst.formulas[0][1])
    a, _ = build_mc_game(inst.model, cl, [0])
    b, _ = build_mc_game(inst.model, cl, [0])
    assert a == b
