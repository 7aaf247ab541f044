"""
Coalitions in concurrent games
==============================

Two small multi-agent games.  In the modulo game every agent picks a
number and the position moves on by their sum; in the castle game
knights attack, defend and rest.
"""
from mucheck import benchgen
from mucheck.local import satisfying_states

m = benchgen.gen_modulo(agents=2, moves=2)
print("modulo: p0 under joint move (1, 1) goes to", m.states[m.rows[0].delta[("1", "1")]])

for coalition in ([], ["a1"], ["a1", "a2"]):
    phi1, _ = benchgen.modulo_formulas(coalition)
    won = satisfying_states(m, phi1)
    print(f"  {coalition or 'no agents'} can reach every position from:",
          sorted(m.states[c] for c in won))

castle = benchgen.gen_castle(castles=2, hp=2)
print(f"castle game: {len(castle.states)} reachable states, start {castle.states[0]}")
for name, phi in benchgen.castle_formulas(2):
    print(f"  {name}: holds at start = {0 in satisfying_states(castle, phi)}")
