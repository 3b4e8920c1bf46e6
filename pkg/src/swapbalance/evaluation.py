"""Evaluation protocol: level datasets, balancing metrics, tile-impact and histograms."""
from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .balance import BalanceOracle, estimate_balance, reachable_b_values
from .generator import GenConfig, generate, validate
from .level import Level, TileKind
from .policy import PolicyParams, act_greedy, sample_action
from .rng import derive_seed
from .sim import SimConfig
from .swap_env import EnvConfig, SwapEnv

TERMINATION_REASONS = ("balanced", "change_cap", "step_cap")
SWAP_KINDS = (TileKind.GRASS, TileKind.FOREST, TileKind.STONE, TileKind.WATER,
              TileKind.PLAYER_SPAWN)
SWAP_PAIRS = tuple(itertools.combinations(SWAP_KINDS, 2))


# -- datasets ---------------------------------------------------------------

@dataclass(frozen=True)
class DatasetEntry:
    level: Level
    seed: int
    b0: float


@dataclass
class Dataset:
    entries: list[DatasetEntry]
    n_sims: int
    sim_seed: int = 0

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def levels(self) -> list[Level]:
        return [e.level for e in self.entries]

    def to_jsonl(self) -> str:
        lines = []
        for e in self.entries:
            lines.append(json.dumps({"level": e.level.to_json(), "seed": e.seed, "b0": e.b0,
                                     "n_sims": self.n_sims, "sim_seed": self.sim_seed},
                                    sort_keys=True))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        entries = []
        n_sims = sim_seed = None
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                level = Level.from_json(doc["level"])
                entries.append(DatasetEntry(level, int(doc["seed"]), float(doc["b0"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed dataset line ({exc})") from None
            n_sims, sim_seed = int(doc["n_sims"]), int(doc["sim_seed"])
        if not entries:
            raise ValueError(f"{path}: empty dataset")
        return cls(entries, n_sims, sim_seed)


def _dataset_job(args) -> DatasetEntry:
    gen_cfg, seed, sim_config, n_sims, sim_seed = args
    level = generate(replace(gen_cfg, seed=seed))
    return DatasetEntry(level, seed, estimate_balance(level, sim_config, n_sims, sim_seed).b)


def build_dataset(gen_cfg: GenConfig, count: int, n_sims: int, seed: int,
                  sim_config: SimConfig = SimConfig(), sim_seed: int = 0,
                  workers: int = 1) -> Dataset:
    """Generate ``count`` levels with per-index seeds and record their initial balance.

    Level i is generated from ``derive_seed(seed, i)``; the same number seeds
    the episode later run on it, so the whole dataset is a function of the
    arguments only.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    jobs = [(gen_cfg, derive_seed(seed, i), sim_config, n_sims, sim_seed) for i in range(count)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            entries = list(pool.map(_dataset_job, jobs, chunksize=max(1, count // (8 * workers))))
    else:
        entries = [_dataset_job(j) for j in jobs]
    return Dataset(entries, n_sims, sim_seed)


# -- policies ---------------------------------------------------------------

class Policy(Protocol):
    action_components: tuple[int, ...]

    def reset(self, seed: int) -> None: ...

    def act(self, obs: np.ndarray) -> Sequence[int]: ...


@dataclass
class GreedyPolicy:
    params: PolicyParams

    @property
    def action_components(self):
        return self.params.action_components

    def reset(self, seed: int) -> None:
        pass

    def act(self, obs):
        return act_greedy(self.params, obs)


@dataclass
class SamplingPolicy:
    params: PolicyParams
    _rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @property
    def action_components(self):
        return self.params.action_components

    def reset(self, seed: int) -> None:
        self._rng = np.random.default_rng([seed, 1])

    def act(self, obs):
        return sample_action(self.params, obs, self._rng)[0]


@dataclass
class RandomPolicy:
    """Uniform actions over the full action space (the random-swap baseline)."""

    action_components: tuple[int, ...]
    _rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    def reset(self, seed: int) -> None:
        self._rng = np.random.default_rng([seed, 2])

    def act(self, obs):
        return [int(self._rng.integers(n)) for n in self.action_components]


@dataclass
class NeverSwapPolicy:
    action_components: tuple[int, ...]

    def reset(self, seed: int) -> None:
        pass

    def act(self, obs):
        return [0] * len(self.action_components)


# -- evaluation -------------------------------------------------------------

def _mean_std(xs: Sequence[float]) -> tuple[float, float]:
    if not xs:
        return 0.0, 0.0
    arr = np.asarray(xs, dtype=float)
    return float(arr.mean()), float(arr.std())


@dataclass
class EvalReport:
    episodes: int
    excluded: int  # initially balanced levels, not scored
    balanced_pct: float
    improved_pct: float
    avg_changes: float
    std_changes: float
    avg_length: float
    std_length: float
    reasons: dict[str, int]
    b_initial: list[float]
    b_final: list[float]

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self, label: str = "policy") -> str:
        rows = [
            ("episodes", f"{self.episodes} (+{self.excluded} initially balanced, skipped)"),
            ("balanced", f"{self.balanced_pct:.1f}%"),
            ("improved", f"{self.improved_pct:.1f}%"),
            ("avg changes", f"{self.avg_changes:.2f} +- {self.std_changes:.2f}"),
            ("avg episode length", f"{self.avg_length:.2f} +- {self.std_length:.2f}"),
        ]
        rows += [(f"ended by {r}", str(self.reasons.get(r, 0))) for r in TERMINATION_REASONS]
        width = max(len(k) for k, _ in rows)
        return "\n".join([label] + [f"  {k:<{width}}  {v}" for k, v in rows]) + "\n"


def run_episode(env: SwapEnv, policy: Policy, level: Level, seed: int) -> dict:
    obs = env.reset(level, seed=seed)
    policy.reset(seed)
    while not env.state.done:
        obs, _, _, _ = env.step(policy.act(obs))
    return dict(env.record)


def _episode_job(args):
    policy, env_cfg, entries = args
    env = SwapEnv(env_cfg)
    return [run_episode(env, policy, e.level, e.seed) for e in entries]


def summarize(records: Iterable[dict]) -> EvalReport:
    """Aggregate episode records; episodes that started balanced are excluded."""
    excluded = 0
    kept = []
    for r in records:
        if r["steps"] == 0 and r["reason"] == "balanced":
            excluded += 1
        else:
            kept.append(r)
    n = len(kept)
    balanced = sum(r["b_final"] == 0.5 for r in kept)
    improved = sum(abs(r["b_final"] - 0.5) < abs(r["b0"] - 0.5) for r in kept)
    changes = _mean_std([r["changes"] for r in kept])
    lengths = _mean_std([r["steps"] for r in kept])
    reasons = {k: sum(r["reason"] == k for r in kept) for k in TERMINATION_REASONS}
    pct = (lambda x: 100.0 * x / n) if n else (lambda x: 0.0)
    return EvalReport(n, excluded, pct(balanced), pct(improved), changes[0], changes[1],
                      lengths[0], lengths[1], reasons,
                      [r["b0"] for r in kept], [r["b_final"] for r in kept])


def evaluate(policy: Policy, dataset: Dataset | Sequence[DatasetEntry], env_cfg: EnvConfig,
             limit: int | None = None, workers: int = 1) -> tuple[EvalReport, list[dict]]:
    """One episode per level that is not initially balanced.

    ``limit`` caps how many scored (not initially balanced) levels are used,
    taken in dataset order. Returns the report and the episode records of
    scored levels.
    """
    if tuple(policy.action_components) != tuple(env_cfg.action_components):
        raise ValueError(
            f"policy heads {tuple(policy.action_components)} do not match "
            f"{env_cfg.representation.value} action space {env_cfg.action_components}"
        )
    entries = list(dataset)
    for e in entries:
        if not validate(e.level).valid:
            raise ValueError(f"dataset level with seed {e.seed} is not playable")
    # initial balance is decided by the env's own oracle, not the stored b0
    oracle = BalanceOracle(env_cfg.sim, env_cfg.n_sims, env_cfg.sim_seed)
    excluded = 0
    todo = []
    for e in entries:
        if oracle(e.level).b == 0.5:
            excluded += 1
            continue
        todo.append(e)
        if limit is not None and len(todo) >= limit:
            break
    if workers > 1 and len(todo) > 1:
        chunks = [todo[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_episode_job, [(policy, env_cfg, c) for c in chunks]))
        records = [None] * len(todo)
        for i, part in enumerate(parts):
            records[i::workers] = part
    else:
        env = SwapEnv(env_cfg, oracle)
        records = [run_episode(env, policy, e.level, e.seed) for e in todo]
    report = summarize(records)
    report.excluded = excluded
    return report, records


# -- tile impact ------------------------------------------------------------

@dataclass(frozen=True)
class SwapPairStat:
    pair: tuple[str, str]
    model_count: int
    random_count: int
    model_freq: float
    random_freq: float
    rel_diff: float  # (model - random) / random over weighted frequencies


def tile_probabilities(levels: Iterable[Level]) -> dict[TileKind, float]:
    counts = {k: 0 for k in SWAP_KINDS}
    total = 0
    for lv in levels:
        for c in lv.cells:
            if c in counts:
                counts[c] += 1
            total += 1
    return {k: v / total for k, v in counts.items()}


def _pair_counts(records: Iterable[dict]) -> dict[tuple[TileKind, TileKind], int]:
    index = {k: i for i, k in enumerate(SWAP_KINDS)}
    counts = {p: 0 for p in SWAP_PAIRS}
    for rec in records:
        for swap in rec["swaps"]:
            a, b = (TileKind.from_code(c) for c in swap["kinds"])
            key = (a, b) if index[a] < index[b] else (b, a)
            counts[key] += 1
    return counts


def _weighted(counts, probs) -> dict:
    raw = {}
    for (a, b), c in counts.items():
        pa, pb = probs[a], probs[b]
        raw[(a, b)] = c / (pa * pb) if pa > 0 and pb > 0 else 0.0
    total = sum(raw.values())
    return {k: (v / total if total else 0.0) for k, v in raw.items()}


def swap_frequency(model_records: Sequence[dict], random_records: Sequence[dict],
                   levels: Iterable[Level]) -> list[SwapPairStat]:
    """Occurrence-normalised swap-pair frequencies of a model relative to random swapping.

    Each pair count is divided by the product of the two kinds' occurrence
    probabilities over ``levels`` and the result is normalised to sum to one.
    Rows come back sorted by descending relative difference.
    """
    probs = tile_probabilities(levels)
    m_counts, r_counts = _pair_counts(model_records), _pair_counts(random_records)
    m_freq, r_freq = _weighted(m_counts, probs), _weighted(r_counts, probs)
    rows = []
    for pair in SWAP_PAIRS:
        mf, rf = m_freq[pair], r_freq[pair]
        rel = (mf - rf) / rf if rf > 0 else (0.0 if mf == 0 else float("inf"))
        rows.append(SwapPairStat((pair[0].code, pair[1].code), m_counts[pair], r_counts[pair],
                                 mf, rf, rel))
    rows.sort(key=lambda s: (-s.rel_diff, s.pair))
    return rows


def swap_frequency_csv(rows: Sequence[SwapPairStat]) -> str:
    lines = ["pair,model_count,random_count,model_freq,random_freq,rel_diff"]
    for s in rows:
        lines.append(f"{s.pair[0]}-{s.pair[1]},{s.model_count},{s.random_count},"
                     f"{s.model_freq:.6f},{s.random_freq:.6f},{s.rel_diff:.6f}")
    return "\n".join(lines) + "\n"


# -- histograms -------------------------------------------------------------

@dataclass(frozen=True)
class HistogramTable:
    bins: tuple[Fraction, ...]
    before: tuple[int, ...]
    after: tuple[int, ...]

    def to_csv(self) -> str:
        lines = ["b,before,after"]
        lines += [f"{float(b):.6f},{x},{y}" for b, x, y in zip(self.bins, self.before, self.after)]
        return "\n".join(lines) + "\n"

    def to_ascii(self, width: int = 30) -> str:
        peak = max(max(self.before, default=0), max(self.after, default=0), 1)
        lines = [f"{'b':>6}  {'before':<{width}} {'after':<{width}}"]
        for b, x, y in zip(self.bins, self.before, self.after):
            if x == 0 and y == 0:
                continue
            bx = "#" * round(width * x / peak)
            by = "#" * round(width * y / peak)
            lines.append(f"{float(b):6.3f}  {bx:<{width}} {by:<{width}} {x:>5} {y:>5}")
        return "\n".join(lines) + "\n"


def compare_histograms(before: Sequence[float], after: Sequence[float], n: int) -> HistogramTable:
    """Count balancing states per reachable value of b for n simulations."""
    if len(before) != len(after):
        raise ValueError("before and after must have equal lengths")
    bins = tuple(reachable_b_values(n))
    centers = np.array([float(b) for b in bins])

    def count(values):
        out = [0] * len(bins)
        for v in values:
            out[int(np.argmin(np.abs(centers - v)))] += 1
        return tuple(out)

    return HistogramTable(bins, count(before), count(after))
