import random

import pytest

from mucheck import benchgen
from mucheck.games import (EXISTS, FORALL, ParityGame, PGSolverFormatError, export_pgsolver,
                           import_pgsolver, solve_zielonka, verify_strategy, winner_at)

from oracles import brute_force_winners


def loop(priority, owner=EXISTS):
    g = ParityGame()
    g.add(owner, priority, [0])
    return g


def test_self_loops():
    assert winner_at(loop(0), 0) == EXISTS
    assert winner_at(loop(1), 0) == FORALL
    assert winner_at(loop(2, FORALL), 0) == EXISTS


def test_deadlocks_lose_for_their_owner():
    g = ParityGame()
    g.add(EXISTS, 0)
    g.add(FORALL, 0)
    g.add(EXISTS, 1, [0, 1])
    sol = solve_zielonka(g)
    assert sol.win_e == {1, 2} and sol.win_a == {0}
    assert sol.strategy[EXISTS] == {2: 1}


def test_ladder_two_against_exhaustive_strategies():
    g = benchgen.ladder(2)
    assert len(g) == 4
    sol = solve_zielonka(g)
    assert sol.win_e == brute_force_winners(g)


def _random_game(rng, n, prios, deadlocks=True):
    g = ParityGame()
    for _ in range(n):
        k = rng.randint(0 if deadlocks else 1, 3)
        g.add(rng.randint(0, 1), rng.randrange(prios), rng.sample(range(n), min(k, n)))
    return g


def test_random_games_against_exhaustive_strategies():
    rng = random.Random(0)
    for _ in range(300):
        g = _random_game(rng, rng.randint(1, 7), rng.randint(1, 5))
        sol = solve_zielonka(g)
        assert sol.win_e | sol.win_a == set(range(len(g)))
        assert not sol.win_e & sol.win_a
        assert sol.win_e == brute_force_winners(g)


def test_strategies_verify_exactly():
    rng = random.Random(1)
    for _ in range(300):
        g = _random_game(rng, rng.randint(1, 12), rng.randint(1, 6))
        sol = solve_zielonka(g)
        for p in (EXISTS, FORALL):
            assert verify_strategy(g, sol.win[p], sol.strategy[p], p)


def test_verifier_rejects_losing_strategy():
    g = ParityGame()
    g.add(EXISTS, 1, [0, 1])
    g.add(EXISTS, 2, [1])
    assert verify_strategy(g, {0, 1}, {0: 1, 1: 1}, EXISTS)
    assert not verify_strategy(g, {0, 1}, {0: 0, 1: 1}, EXISTS)
    # leaving the region is not allowed either
    assert not verify_strategy(g, {0}, {0: 1}, EXISTS)


def _playouts(g, sol, rng, plays=1000):
    n = len(g)
    for p in (EXISTS, FORALL):
        region = sorted(sol.win[p])
        for _ in range(plays if region else 0):
            v = rng.choice(region)
            for _ in range(4 * n):
                assert v in sol.win[p]
                if g.owner[v] == p:
                    v = sol.strategy[p][v]
                elif g.moves[v]:
                    v = rng.choice(g.moves[v])
                else:
                    break  # opponent is stuck, p wins


def test_random_playouts_on_larger_games():
    rng = random.Random(2)
    for g in [benchgen.jurdzinski(3), benchgen.clique(8), benchgen.hanoi(3),
              _random_game(rng, 60, 8)]:
        _playouts(g, solve_zielonka(g), rng)


@pytest.mark.parametrize("n", range(1, 6))
def test_small_families_against_exhaustive_strategies(n):
    for g in (benchgen.clique(n), benchgen.ladder(min(n, 3)), benchgen.hanoi(1)):
        assert solve_zielonka(g).win_e == brute_force_winners(g)


# -- PGSolver format ----------------------------------------------------------------

def test_export_single_loop():
    assert export_pgsolver(loop(0)) == 'parity 0;\n0 0 0 0 "n0";\n'


def test_export_start_line_and_deadlock():
    g = ParityGame(init=1)
    g.add(FORALL, 3, [], "dead")
    g.add(EXISTS, 0, [0, 1])
    text = export_pgsolver(g)
    assert text == 'parity 1;\nstart 1;\n0 3 1 "dead";\n1 0 0 0,1 "n1";\n'
    assert import_pgsolver(text) == g


@pytest.mark.parametrize("family", benchgen.PARITY_FAMILIES)
def test_generated_games_round_trip(family):
    for size in (1, 2, 3):
        g = benchgen.gen_parity(family, size)
        text = export_pgsolver(g)
        assert import_pgsolver(text) == g
        assert export_pgsolver(import_pgsolver(text)) == text


def test_import_tolerates_whitespace_and_missing_labels():
    g = import_pgsolver("parity 1 ;\n\n 0 1 0 1 ;\n1  2 1 0, 1 \"x\";\n")
    assert g.moves == [[1], [0, 1]] and g.labels == ["n0", "x"]


@pytest.mark.parametrize("text, message, line", [
    ('parity 0;\n0 0 2 0 "n0";\n', "owner", 2),
    ('parity 0;\n0 0 0 3 "n0";\n', "dangling", 2),
    ('parity 1;\n0 0 0 0;\n0 0 0 0;\n', "twice", 3),
    ('parity 1;\n0 0 0 0;\n', "expected positions", 0),
    ('0 0 0 0;\n', "parity", 1),
    ('parity 0;\n0 0 0 0 "n0"\n', "cannot parse", 2),
    ('', "empty", 0),
])
def test_import_errors(text, message, line):
    with pytest.raises(PGSolverFormatError, match=message) as info:
        import_pgsolver(text)
    assert info.value.line == line


def test_export_rejects_unwritable_label():
    g = ParityGame()
    g.add(EXISTS, 0, [0], 'a"b')
    with pytest.raises(ValueError):
        export_pgsolver(g)
