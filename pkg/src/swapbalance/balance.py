"""Balancing state of a level from repeated simulation, swap reward, and n calibration."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .level import Level
from .rng import derive_seed
from .sim import SimConfig, prepare_level, run_match

WinRecord = Sequence[frozenset[int]]


@dataclass(frozen=True)
class BalanceEstimate:
    b: float
    n: int
    wins: tuple[int, int]
    seed_base: int


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.5
    mode: str = "distance"  # or "literal"
    balance_tolerance: float = 0.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.mode not in ("distance", "literal"):
            raise ValueError(f"unknown reward mode {self.mode!r}")
        if self.balance_tolerance < 0:
            raise ValueError("balance_tolerance must be >= 0")


def _check_record(record: WinRecord) -> None:
    if len(record) == 0:
        raise ValueError("win record is empty")
    for winners in record:
        if not winners or not set(winners) <= {0, 1}:
            raise ValueError(f"invalid winner set {set(winners)!r}")


def compute_b(record: WinRecord, exact: bool = False) -> float | Fraction:
    """Sum of all winner indices over the total number of winners.

    0 means the first player (index 0) won every match, 1 the second.
    """
    _check_record(record)
    total = sum(len(w) for w in record)
    index_sum = sum(sum(w) for w in record)
    if exact:
        return Fraction(index_sum, total)
    return index_sum / total


def is_balanced(b: float, cfg: RewardConfig = RewardConfig()) -> bool:
    if cfg.balance_tolerance == 0.0:
        return b == 0.5
    return abs(b - 0.5) <= cfg.balance_tolerance


def compute_reward(b_prev: float, b_now: float, cfg: RewardConfig = RewardConfig()) -> float:
    if cfg.mode == "literal":
        r = b_prev - b_now
    else:
        r = abs(b_prev - 0.5) - abs(b_now - 0.5)
    if is_balanced(b_now, cfg):
        r += cfg.alpha
    return r


def simulate_record(level: Level, sim_config: SimConfig, n: int, seed_base: int,
                    start: int = 0) -> list[frozenset[int]]:
    """Winner sets of matches ``start .. n-1`` with seeds ``derive_seed(seed_base, i)``."""
    prepare_level(level)
    return [run_match(level, sim_config, derive_seed(seed_base, i)).winners
            for i in range(start, n)]


def estimate_balance(level: Level, sim_config: SimConfig, n: int, seed_base: int) -> BalanceEstimate:
    if n < 2 or n % 2:
        raise ValueError(f"simulation count must be even and >= 2, got {n}")
    record = simulate_record(level, sim_config, n, seed_base)
    wins = (sum(1 for w in record if 0 in w), sum(1 for w in record if 1 in w))
    return BalanceEstimate(compute_b(record), n, wins, seed_base)


class BalanceOracle:
    """Memoising ``estimate_balance`` front-end with a call counter.

    Every call is counted in ``calls`` even when served from the cache, so the
    counter reflects how often the balancing state was requested.
    """

    def __init__(self, sim_config: SimConfig = SimConfig(), n: int = 14, seed_base: int = 0,
                 cache_size: int = 200_000):
        if n < 2 or n % 2:
            raise ValueError(f"simulation count must be even and >= 2, got {n}")
        self.sim_config = sim_config
        self.n = n
        self.seed_base = seed_base
        self.cache_size = cache_size
        self.calls = 0
        self._cache: dict[Level, BalanceEstimate] = {}

    def __call__(self, level: Level) -> BalanceEstimate:
        self.calls += 1
        est = self._cache.get(level)
        if est is None:
            est = estimate_balance(level, self.sim_config, self.n, self.seed_base)
            if len(self._cache) >= self.cache_size:
                self._cache.clear()
            self._cache[level] = est
        return est


@dataclass(frozen=True)
class CalibrationResult:
    n: int | None  # None when no candidate met the threshold
    ns: tuple[int, ...]
    mu: tuple[float, ...]
    sigma: tuple[float, ...]
    threshold: float

    def to_csv(self) -> str:
        lines = ["n,mu,sigma"]
        lines += [f"{n},{m:.6f},{s:.6f}" for n, m, s in zip(self.ns, self.mu, self.sigma)]
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        lines = [f"{'n':>4} {'mu':>9} {'sigma':>9} {'mu+sigma':>9}"]
        for n, m, s in zip(self.ns, self.mu, self.sigma):
            mark = "  <- chosen" if n == self.n else ""
            lines.append(f"{n:>4} {m:9.4f} {s:9.4f} {m + s:9.4f}{mark}")
        if self.n is None:
            lines.append(f"no n <= {self.ns[-1] if self.ns else '?'} met mu+sigma < {self.threshold}")
        return "\n".join(lines) + "\n"


def first_player_rates(record: WinRecord) -> list[float]:
    """Win rate of player index 0 (``1 - b``) over each even-length prefix 2, 4, ..."""
    rates = []
    total = index_sum = 0
    for i, w in enumerate(record, start=1):
        total += len(w)
        index_sum += sum(w)
        if i % 2 == 0:
            rates.append(1.0 - index_sum / total)
    return rates


def _record_job(args):
    level, sim_config, n_max, seed = args
    return simulate_record(level, sim_config, n_max, seed)


def calibrate_n(levels: Iterable[Level], sim_config: SimConfig, n_max: int,
                threshold: float = 0.05, seed: int = 0, workers: int = 1) -> CalibrationResult:
    """Pick the smallest even n whose mean win-rate fluctuation plus one std is below threshold.

    For every level, ``n_max`` matches are simulated once; the win rate over
    the first n matches is compared with the rate over the first n-2.
    """
    if n_max < 4 or n_max % 2:
        raise ValueError(f"n_max must be even and >= 4, got {n_max}")
    levels = list(levels)
    if not levels:
        raise ValueError("calibration needs at least one level")
    jobs = [(lv, sim_config, n_max, seed) for lv in levels]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_record_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_record_job(j) for j in jobs]

    rates = np.array([first_player_rates(r) for r in records])  # (s, n_max/2) for n=2,4,..
    diffs = np.abs(rates[:, 1:] - rates[:, :-1])  # column j -> n = 2j + 4
    ns = tuple(range(4, n_max + 1, 2))
    mu = diffs.mean(axis=0)
    sigma = diffs.std(axis=0)
    chosen = None
    for n, m, s in zip(ns, mu, sigma):
        if m + s < threshold:
            chosen = n
            break
    return CalibrationResult(chosen, ns, tuple(float(x) for x in mu),
                             tuple(float(x) for x in sigma), threshold)


def reachable_b_values(n: int) -> list[Fraction]:
    """All balancing states reachable with n matches (draws allowed)."""
    values = set()
    for wl in range(n, 2 * n + 1):
        draws = wl - n
        for s in range(0, wl + 1):
            # s = index-1 wins; feasible iff draws <= s <= n
            if draws <= s <= n:
                values.add(Fraction(s, wl))
    return sorted(values)
