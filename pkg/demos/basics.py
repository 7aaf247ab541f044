"""
Checking a few formulas on small models
=======================================

A tour of the library on hand-built models: a plain transition system,
a weighted one and a probabilistic one.
"""
from fractions import Fraction

from mucheck.formula import closure, parse_formula
from mucheck.local import check_local, satisfying_states
from mucheck.model import CoalgebraModel
from mucheck.reduction import check_game

# three states in a row, the last one labelled p
chain = CoalgebraModel("powerset", ("a", "b", "c"), {"p": {2}}, ([1], [2], []))

# "p is reachable"
reach = parse_formula("mu X. p | <> X")
print("reach p:", sorted(chain.states[c] for c in satisfying_states(chain, reach)))

# the closure graph is what both engines work on; variables point back
# at their binder
cl = closure(reach)
for i, node in enumerate(cl.nodes):
    print(f"  node {i}: {cl.describe(i):<20} kind={node.kind:<6} prio={cl.priority[i]}")

# "there is an infinite path" fails everywhere, c is a dead end
print("infinite path at a:", check_local(chain, "a", parse_formula("nu X. <> X")).holds)

# the same question through the parity game reduction
print("game engine agrees:", check_game(chain, "a", reach).holds)

# Graded modalities count successors with multiplicity.  Here state s
# has two p-successors of weight 3 each.
bag = CoalgebraModel("multiset", ("s", "t", "u", "v"), {"p": {1, 2}},
                     ([(1, 3), (2, 3), (3, 1)], [], [], []))
for n in (4, 5, 6):
    phi = parse_formula(f"<g {n}> p")
    print(f"more than {n} p-successors at s:", check_local(bag, "s", phi).holds)

# Probabilistic modalities compare exact rationals.
coin = CoalgebraModel("distribution", ("flip", "heads", "tails"), {"win": {1}},
                      ([(1, Fraction(1, 2)), (2, Fraction(1, 2))], [(1, 1)], [(2, 1)]))
print("win with prob > 1/2:", check_local(coin, "flip", parse_formula("<p 1/2> win")).holds)
print("win with prob > 1/3:", check_local(coin, "flip", parse_formula("<p 1/3> win")).holds)

# reaching win needs more than half of the mass at every step; flip only
# sends exactly half to heads
print("mu X. win | <p 1/2> X:",
      check_local(coin, "flip", parse_formula("mu X. win | <p 1/2> X")).holds)
