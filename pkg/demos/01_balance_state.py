"""
Measuring how balanced a level is
=================================

A level is a small grid of grass, forest, stone, water and two player
spawns. Two scripted foragers play it many times; the balancing state b is
the share of wins that went to the second player.
"""

# %% a hand-made level and its rendering
from swapbalance import Level, SimConfig, estimate_balance, render_ascii, run_match
from swapbalance.balance import RewardConfig, calibrate_n, compute_reward
from swapbalance.generator import GenConfig, generate

level = Level.from_rows(["PGGFGG",
                         "GFGGSG",
                         "GGWWGG",
                         "FGSSGF",
                         "GGGGFG",
                         "GFGGGP"])
print(render_ascii(level))

# %% one match, then a batch of them
sim = SimConfig()
outcome = run_match(level, sim, seed=0)
print("winners", sorted(outcome.winners), "after", outcome.ticks, "ticks by", outcome.reason)

est = estimate_balance(level, sim, n=14, seed_base=0)
print(f"b = {est.b:.3f} from wins {est.wins}")  # 0.5 would be perfectly fair

# %% the reward a swap earns: distance to 0.5 shrinks, plus a bonus on reaching it
cfg = RewardConfig()
for before, after in [(0.2, 0.4), (0.4, 0.2), (0.3, 0.5), (0.6, 0.6)]:
    print(f"{before} -> {after}: reward {compute_reward(before, after, cfg):+.2f}")

# %% how many matches are enough? the win rate settles as n grows
levels = [generate(GenConfig(seed=s)) for s in range(40)]
cal = calibrate_n(levels, sim, n_max=20, threshold=0.05)
print(cal.to_table())
