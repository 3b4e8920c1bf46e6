"""Clipped-surrogate policy optimisation (PPO) written directly against numpy."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Protocol

import numpy as np

from .policy import (PolicyParams, forward_batch, head_actions, init_params, log_softmax,
                     sample_action)

log = logging.getLogger(__name__)


class Env(Protocol):
    action_components: tuple[int, ...]
    obs_length: int

    def reset(self) -> np.ndarray: ...
    def step(self, action) -> tuple[np.ndarray, float, bool, dict]: ...


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_ratio: float = 0.2
    learning_rate: float = 2.5e-4
    rollout_length: int = 256
    epochs: int = 4
    minibatch_size: int = 64
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    total_steps: int = 50_000
    hidden: tuple[int, int] = (64, 64)
    joint_head: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("gamma", "gae_lambda"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        for name in ("clip_ratio", "learning_rate", "rollout_length", "epochs",
                     "minibatch_size", "total_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.entropy_coef < 0 or self.value_coef < 0:
            raise ValueError("loss coefficients must be non-negative")
        if self.rollout_length % self.minibatch_size:
            raise ValueError("minibatch_size must divide rollout_length")


@dataclass
class Trajectory:
    obs: np.ndarray  # (T, obs_length)
    actions: np.ndarray  # (T, n_components)
    logprobs: np.ndarray
    rewards: np.ndarray
    values: np.ndarray
    dones: np.ndarray  # dones[t]: the episode ended with step t
    last_value: float = 0.0  # V(s_T) for bootstrapping a non-terminal tail


@dataclass(frozen=True)
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float
    mean_episode_reward: float = float("nan")


def compute_gae(traj: Trajectory, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalised advantage estimates and value targets (advantages + values)."""
    T = len(traj.rewards)
    adv = np.zeros(T)
    next_value, next_adv = traj.last_value, 0.0
    for t in range(T - 1, -1, -1):
        live = 1.0 - float(traj.dones[t])
        delta = traj.rewards[t] + gamma * next_value * live - traj.values[t]
        next_adv = delta + gamma * lam * live * next_adv
        adv[t] = next_adv
        next_value = traj.values[t]
    return adv, adv + np.asarray(traj.values, dtype=np.float64)


def clipped_surrogate(ratio, advantages, clip_ratio: float) -> np.ndarray:
    """Per-sample ``min(r * A, clip(r, 1 - eps, 1 + eps) * A)``."""
    ratio = np.asarray(ratio, dtype=np.float64)
    adv = np.asarray(advantages, dtype=np.float64)
    return np.minimum(ratio * adv, np.clip(ratio, 1 - clip_ratio, 1 + clip_ratio) * adv)


def loss_and_grad(params: PolicyParams, obs, actions, old_logprobs, advantages, returns,
                  cfg: TrainConfig) -> tuple[float, dict[str, np.ndarray], dict[str, float]]:
    """Full PPO loss ``-surrogate + c_v * mse - c_e * entropy`` and its exact gradient."""
    logits, values, (x, h1, h2) = forward_batch(params, obs)
    B = x.shape[0]
    acts = head_actions(params, actions)
    rows = np.arange(B)
    adv = np.asarray(advantages, dtype=np.float64)
    ret = np.asarray(returns, dtype=np.float64)

    logp = np.zeros(B)
    logps, probs, ents = [], [], []
    for k, lg in enumerate(logits):
        lp = log_softmax(lg)
        p = np.exp(lp)
        logp += lp[rows, acts[:, k]]
        ent = -(p * lp).sum(axis=1)
        logps.append(lp)
        probs.append(p)
        ents.append(ent)
    entropy = np.sum(ents, axis=0)

    ratio = np.exp(logp - np.asarray(old_logprobs, dtype=np.float64))
    eps = cfg.clip_ratio
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1 - eps, 1 + eps) * adv
    policy_loss = -np.mean(clipped_surrogate(ratio, adv, eps))
    value_loss = np.mean((values - ret) ** 2)
    mean_entropy = entropy.mean()
    loss = policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * mean_entropy
    if not np.isfinite(loss):
        raise FloatingPointError(
            f"non-finite PPO loss (policy={policy_loss}, value={value_loss}, entropy={mean_entropy})"
        )

    # d loss / d logp: only the unclipped branch carries gradient
    dlogp = -np.where(surr1 <= surr2, surr1, 0.0) / B
    a = params.arrays
    grads: dict[str, np.ndarray] = {}
    dh2 = np.zeros_like(h2)
    for k, (lp, p, ent) in enumerate(zip(logps, probs, ents)):
        onehot = np.zeros_like(p)
        onehot[rows, acts[:, k]] = 1.0
        dz = dlogp[:, None] * (onehot - p)
        # dH/dz_j = -p_j (log p_j + H)
        dz += (cfg.entropy_coef / B) * p * (lp + ent[:, None])
        grads[f"Wh{k}"] = h2.T @ dz
        grads[f"bh{k}"] = dz.sum(axis=0)
        dh2 += dz @ a[f"Wh{k}"].T
    dv = (2.0 * cfg.value_coef / B) * (values - ret)
    grads["Wv"] = h2.T @ dv[:, None]
    grads["bv"] = np.array([dv.sum()])
    dh2 += dv[:, None] @ a["Wv"].T
    dz2 = dh2 * (1.0 - h2 ** 2)
    grads["W2"] = h1.T @ dz2
    grads["b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ a["W2"].T) * (1.0 - h1 ** 2)
    grads["W1"] = x.T @ dz1
    grads["b1"] = dz1.sum(axis=0)

    stats = {
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(mean_entropy),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > eps)),
        "approx_kl": float(np.mean((ratio - 1.0) - np.log(ratio))),
    }
    return float(loss), {k: grads[k] for k in a}, stats


class Adam:
    def __init__(self, params: PolicyParams, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr, self.betas, self.eps = lr, betas, eps
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.t = 0

    def step(self, params: PolicyParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.betas
        c1, c2 = 1 - b1 ** self.t, 1 - b2 ** self.t
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            params.arrays[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


def ppo_update(params: PolicyParams, batch: Trajectory, cfg: TrainConfig,
               optimizer: Adam | None = None,
               rng: np.random.Generator | None = None) -> tuple[PolicyParams, UpdateStats]:
    """Several epochs of minibatch Adam steps on the clipped objective.

    Returns updated parameters (a new object; ``params`` is not modified).
    """
    params = params.copy()
    optimizer = optimizer or Adam(params, cfg.learning_rate)
    rng = rng or np.random.default_rng(cfg.seed)
    advantages, returns = compute_gae(batch, cfg.gamma, cfg.gae_lambda)
    T = len(advantages)
    mb = min(cfg.minibatch_size, T)
    totals: dict[str, list[float]] = {}
    for _ in range(cfg.epochs):
        order = rng.permutation(T)
        for start in range(0, T - mb + 1, mb):
            idx = order[start:start + mb]
            adv = advantages[idx]
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
            _, grads, stats = loss_and_grad(params, batch.obs[idx], batch.actions[idx],
                                            batch.logprobs[idx], adv, returns[idx], cfg)
            clip_grad_norm(grads, cfg.max_grad_norm)
            optimizer.step(params, grads)
            for k, v in stats.items():
                totals.setdefault(k, []).append(v)
    return params, UpdateStats(**{k: float(np.mean(v)) for k, v in totals.items()})


CURVE_FIELDS = ("update", "steps", "episodes", "mean_reward", "policy_loss", "value_loss",
                "entropy", "clip_fraction", "approx_kl")


@dataclass
class TrainResult:
    params: PolicyParams
    curve: list[dict] = field(default_factory=list)

    def curve_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CURVE_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in self.curve:
            writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def collect_rollout(env: Env, params: PolicyParams, obs: np.ndarray, length: int,
                    rng: np.random.Generator, episode_state: dict) -> tuple[Trajectory, np.ndarray]:
    n_comp = len(params.action_components)
    buf_obs = np.zeros((length, params.obs_length))
    buf_act = np.zeros((length, n_comp), dtype=np.int64)
    buf_logp, buf_rew, buf_val, buf_done = (np.zeros(length) for _ in range(4))
    for t in range(length):
        action, logp, value = sample_action(params, obs, rng)
        buf_obs[t], buf_act[t], buf_logp[t], buf_val[t] = obs, action, logp, value
        obs, reward, done, _ = env.step(action)
        buf_rew[t], buf_done[t] = reward, float(done)
        episode_state["return"] += reward
        if done:
            episode_state["finished"].append(episode_state["return"])
            episode_state["return"] = 0.0
            obs = env.reset()
    _, last_value, _ = forward_batch(params, obs[None, :])
    traj = Trajectory(buf_obs, buf_act, buf_logp, buf_rew, buf_val, buf_done, float(last_value[0]))
    return traj, obs


def train(env_factory: Callable[[], Env], cfg: TrainConfig = TrainConfig(),
          params: PolicyParams | None = None,
          on_update: Callable[[int, dict], None] | None = None) -> TrainResult:
    """Alternate rollouts and updates for ``total_steps // rollout_length`` iterations."""
    env = env_factory()
    rng = np.random.default_rng(cfg.seed)
    if params is None:
        params = init_params(env.obs_length, env.action_components, rng, cfg.hidden, cfg.joint_head)
    optimizer = Adam(params, cfg.learning_rate)
    result = TrainResult(params)
    episode_state = {"return": 0.0, "finished": []}
    obs = env.reset()
    steps = 0
    for update in range(1, cfg.total_steps // cfg.rollout_length + 1):
        traj, obs = collect_rollout(env, params, obs, cfg.rollout_length, rng, episode_state)
        steps += cfg.rollout_length
        finished = episode_state["finished"]
        mean_reward = float(np.mean(finished)) if finished else float("nan")
        params, stats = ppo_update(params, traj, cfg, optimizer, rng)
        row = {"update": update, "steps": steps, "episodes": len(finished),
               "mean_reward": mean_reward}
        row.update({k: v for k, v in asdict(stats).items() if k != "mean_episode_reward"})
        result.curve.append(row)
        episode_state["finished"] = []
        if on_update is not None:
            on_update(update, row)
        log.debug("update %d steps %d reward %.4f", update, steps, mean_reward)
    result.params = params
    return result
