"""Feed-forward policy/value network with factorised categorical heads (numpy, float64).

Architecture: ``obs -> tanh(64) -> tanh(64)`` shared trunk, then one linear
head of logits per action component plus a scalar value head. With
``joint_head=True`` a single head covers the product of all components.

Checkpoint layout (JSON)::

    {"format": "swapbalance-policy", "version": 1,
     "obs_length": int, "action_components": [int, ...], "hidden": [int, int],
     "joint_head": bool, "meta": {...},
     "params": {name: {"shape": [...], "data": [float, ...]}, ...}}

``data`` is the C-order flattening; floats are written with full precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "swapbalance-policy"
CHECKPOINT_VERSION = 1


@dataclass
class PolicyParams:
    obs_length: int
    action_components: tuple[int, ...]
    hidden: tuple[int, int] = (64, 64)
    joint_head: bool = False
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def head_sizes(self) -> tuple[int, ...]:
        if self.joint_head:
            return (math.prod(self.action_components),)
        return tuple(self.action_components)

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.obs_length, self.action_components, self.hidden,
                            self.joint_head, {k: v.copy() for k, v in self.arrays.items()})

    def num_parameters(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays.values()])

    def set_flat(self, vec: np.ndarray) -> None:
        i = 0
        for k, a in self.arrays.items():
            self.arrays[k] = np.asarray(vec[i:i + a.size], dtype=np.float64).reshape(a.shape)
            i += a.size


def _orthogonal(rng: np.random.Generator, shape: tuple[int, int], gain: float) -> np.ndarray:
    a = rng.standard_normal(shape)
    transpose = shape[0] < shape[1]
    q, r = np.linalg.qr(a.T if transpose else a)
    q = q * np.sign(np.diag(r))
    return gain * (q.T if transpose else q)


def init_params(obs_length: int, action_components, rng: np.random.Generator,
                hidden=(64, 64), joint_head: bool = False) -> PolicyParams:
    params = PolicyParams(obs_length, tuple(int(c) for c in action_components),
                          tuple(hidden), joint_head)
    h1, h2 = hidden
    arr = params.arrays
    arr["W1"] = _orthogonal(rng, (obs_length, h1), math.sqrt(2))
    arr["b1"] = np.zeros(h1)
    arr["W2"] = _orthogonal(rng, (h1, h2), math.sqrt(2))
    arr["b2"] = np.zeros(h2)
    for k, size in enumerate(params.head_sizes):
        arr[f"Wh{k}"] = _orthogonal(rng, (h2, size), 0.01)
        arr[f"bh{k}"] = np.zeros(size)
    arr["Wv"] = _orthogonal(rng, (h2, 1), 1.0)
    arr["bv"] = np.zeros(1)
    return params


def zero_params(obs_length: int, action_components, hidden=(64, 64),
                joint_head: bool = False) -> PolicyParams:
    params = init_params(obs_length, action_components, np.random.default_rng(0), hidden, joint_head)
    for k in params.arrays:
        params.arrays[k] = np.zeros_like(params.arrays[k])
    return params


def forward_batch(params: PolicyParams, obs: np.ndarray):
    """Return ``(logits list, values, cache)`` for a batch of observations."""
    x = np.asarray(obs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.obs_length:
        raise ValueError(f"expected observations of length {params.obs_length}, got shape {x.shape}")
    a = params.arrays
    h1 = np.tanh(x @ a["W1"] + a["b1"])
    h2 = np.tanh(h1 @ a["W2"] + a["b2"])
    logits = [h2 @ a[f"Wh{k}"] + a[f"bh{k}"] for k in range(len(params.head_sizes))]
    values = (h2 @ a["Wv"] + a["bv"])[:, 0]
    return logits, values, (x, h1, h2)


def policy_forward(params: PolicyParams, obs: np.ndarray) -> tuple[list[np.ndarray], float]:
    """Single observation: per-head logits and the value estimate."""
    logits, values, _ = forward_batch(params, np.asarray(obs, dtype=np.float64)[None, :])
    return [lg[0] for lg in logits], float(values[0])


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def head_actions(params: PolicyParams, actions: np.ndarray) -> np.ndarray:
    """Map ``(B, n_components)`` actions to ``(B, n_heads)`` head indices."""
    actions = np.asarray(actions, dtype=np.int64).reshape(-1, len(params.action_components))
    if params.joint_head:
        return np.ravel_multi_index(actions.T, params.action_components)[:, None]
    return actions


def _split(params: PolicyParams, head_idx: np.ndarray) -> np.ndarray:
    if params.joint_head:
        return np.array(np.unravel_index(head_idx, params.action_components), dtype=np.int64)
    return np.asarray(head_idx, dtype=np.int64)


def sample_action(params: PolicyParams, obs: np.ndarray, rng: np.random.Generator):
    """Sample an action; returns ``(action, logprob, value)``."""
    logits, value = policy_forward(params, obs)
    picks, logp = [], 0.0
    for lg in logits:
        lp = log_softmax(lg)
        p = np.exp(lp)
        idx = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
        idx = min(idx, len(p) - 1)
        picks.append(idx)
        logp += float(lp[idx])
    return _split(params, np.array(picks)), logp, value


def act_greedy(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Per-head argmax; ties go to the lowest index."""
    logits, _ = policy_forward(params, obs)
    return _split(params, np.array([int(np.argmax(lg)) for lg in logits]))


def save_checkpoint(params: PolicyParams, path: str | Path, meta: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "obs_length": params.obs_length,
        "action_components": list(params.action_components),
        "hidden": list(params.hidden),
        "joint_head": params.joint_head,
        "meta": meta or {},
        "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                   for k, v in params.arrays.items()},
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path) -> tuple[PolicyParams, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version-{CHECKPOINT_VERSION} policy checkpoint")
    params = PolicyParams(doc["obs_length"], tuple(doc["action_components"]),
                          tuple(doc["hidden"]), bool(doc["joint_head"]))
    for k, entry in doc["params"].items():
        params.arrays[k] = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    return params, doc.get("meta", {})
