"""
Swapping tiles toward balance
=============================

The balancing environment only ever swaps two tiles, so the tile counts of a
level never change. Swaps that would cut the spawns apart are refused, and so
are swaps of two tiles of the same kind; neither costs a simulation.
"""

# %% a generated level and its starting balance
import numpy as np

from swapbalance import EnvConfig, SwapEnv, render_ascii
from swapbalance.generator import GenConfig, generate

level = generate(GenConfig(seed=3))
env = SwapEnv(EnvConfig(representation="swap-narrow"))
env.reset(level, seed=0)
print(render_ascii(level))
print("b0 =", round(env.state.b_current, 3))

# %% say "swap" at every presented pair and watch b move
while not env.state.done:
    a, b = env.state.cursors
    _, reward, done, info = env.step([1])
    print(f"step {info['steps']:>2} ({a.row},{a.col})<->({b.row},{b.col}) {info['outcome']:<11} "
          f"b={info['b']:.3f} reward={reward:+.3f}")
print("finished:", env.state.reason, "| simulations requested:", env.oracle.calls)

# %% the three action layouts
for rep in ("swap-narrow", "swap-turtle", "swap-wide"):
    cfg = EnvConfig(representation=rep)
    print(f"{rep:<12} components {cfg.action_components}  total {int(np.prod(cfg.action_components))}")

# %% the swapped level: same tiles, new places
moved = {tuple(s["a"]) for s in env.record["swaps"]} | {tuple(s["b"]) for s in env.record["swaps"]}
print(render_ascii(env.state.level, highlight=moved))
print("same tiles:", sorted(env.state.level.cells) == sorted(level.cells))
