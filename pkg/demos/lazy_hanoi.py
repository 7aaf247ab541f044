"""
Lazy exploration on Towers of Hanoi
===================================

The lazy transform puts an escape hatch in front of a game: the first
player may walk into a trivially won loop.  A local solver that explores
from the root finds that answer after a handful of pairs, however large
the game behind it is.
"""
import time

from mucheck import benchgen
from mucheck.local import check_local
from mucheck.reduction import check_game

print(f"{'n':>3} {'worlds':>7} {'pairs':>9} {'explored':>9} {'quotient':>9} "
      f"{'lazy s':>8} {'game s':>8}")
for n in range(1, 9):
    inst = benchgen.make_instance("hanoi", n, lazy=True)
    phi, c = inst.formulas[0][1], inst.initial[0]

    start = time.perf_counter()
    res = check_local(inst.model, c, phi, lazy=True)
    lazy_s = time.perf_counter() - start

    start = time.perf_counter()
    assert check_game(inst.model, c, phi).holds == res.holds
    game_s = time.perf_counter() - start

    print(f"{n:>3} {len(inst.model.states):>7} {res.total:>9} {res.explored:>9} "
          f"{float(res.quotient):>9.5f} {lazy_s:>8.3f} {game_s:>8.3f}")

# the same holds for the lifted variants
for lift in ("monotone", "graded", "probabilistic"):
    inst = benchgen.make_instance("hanoi", 5, lift, lazy=True)
    res = check_local(inst.model, inst.initial[0], inst.formulas[0][1], lazy=True)
    print(f"{lift:>13}: holds={res.holds} explored={res.explored} "
          f"quotient={float(res.quotient):.4f}")
