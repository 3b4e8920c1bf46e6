"""
Training a balancing policy and comparing it with random swapping
=================================================================

A short run for illustration; the acceptance suite trains for 50k steps.
Expect the trained and random numbers to be close: with these simulator
settings a single swap barely predicts the change in b from the tiles alone.
"""

# %% datasets: levels to train on and unseen levels to score
from swapbalance import EnvConfig, GenConfig
from swapbalance.evaluation import (GreedyPolicy, RandomPolicy, build_dataset, evaluate,
                                    swap_frequency)
from swapbalance.ppo import TrainConfig, train
from swapbalance.swap_env import LevelPoolEnv

env_cfg = EnvConfig(representation="swap-narrow")
train_set = build_dataset(GenConfig(), 200, env_cfg.n_sims, seed=1)
test_set = build_dataset(GenConfig(), 60, env_cfg.n_sims, seed=2)

# %% a few thousand PPO steps
result = train(lambda: LevelPoolEnv(train_set.levels, env_cfg, seed=0),
               TrainConfig(total_steps=4096, seed=0))
for row in result.curve[::4]:
    print(f"update {row['update']:>2}  mean episode reward {row['mean_reward']:+.3f}  "
          f"entropy {row['entropy']:.3f}")

# %% greedy policy vs uniformly random swapping on the same levels
trained, trained_eps = evaluate(GreedyPolicy(result.params), test_set, env_cfg)
random, random_eps = evaluate(RandomPolicy(env_cfg.action_components), test_set, env_cfg)
print(trained.to_table("trained"))
print(random.to_table("random"))

# %% which tile pairs the policy prefers to swap, relative to random
for row in swap_frequency(trained_eps, random_eps, test_set.levels)[:5]:
    print(f"{row.pair[0]}-{row.pair[1]}  model {row.model_count:>3}  random {row.random_count:>3}  "
          f"rel. diff {row.rel_diff:+.2f}")
