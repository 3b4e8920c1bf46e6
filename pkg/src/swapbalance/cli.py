"""Command-line pipeline: generate -> calibrate -> train -> balance -> evaluate -> analyze.

Exit codes: 0 success, 1 runtime failure, 2 configuration or validation error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .balance import calibrate_n
from .config import ConfigError, RunConfig, apply_overrides, load_config
from .evaluation import (Dataset, GreedyPolicy, NeverSwapPolicy, RandomPolicy, SamplingPolicy,
                         build_dataset, compare_histograms, evaluate, run_episode,
                         swap_frequency, swap_frequency_csv)
from .generator import generate, validate
from .level import LevelParseError, parse_level, render_ascii
from .policy import load_checkpoint, save_checkpoint
from .ppo import train
from .rng import derive_seed
from .sim import InvalidLevelError, format_trace_line, init_match, run_match, _advance, _decide
from .swap_env import LevelPoolEnv, Representation, SwapEnv

log = logging.getLogger("swapbalance")


class UsageError(ValueError):
    pass


# -- helpers ----------------------------------------------------------------

def _config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides: dict[str, dict[str, str]] = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        overrides.setdefault(section.strip(), {})[name.strip()] = value
    run = {}
    if args.seed is not None:
        run["seed"] = str(args.seed)
    if args.workers is not None:
        run["workers"] = str(args.workers)
    if args.out_dir is not None:
        run["out_dir"] = args.out_dir
    if run:
        overrides.setdefault("run", {}).update(run)
    return apply_overrides(cfg, overrides, "command line") if overrides else cfg


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.run.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _echo_config(cfg: RunConfig, out: Path, name: str) -> None:
    (out / f"{name}.config.ini").write_text(cfg.to_ini())


def _read_level(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read level file: {exc}") from None
    level = parse_level(text)
    report = validate(level)
    if not report.player_count_ok:
        raise InvalidLevelError(f"{path}: level must contain exactly two player spawns (P)")
    if not report.connected_ok:
        raise InvalidLevelError(f"{path}: player spawns are not connected by a passable path")
    return level


def _load_dataset(path: str) -> Dataset:
    try:
        return Dataset.load(path)
    except OSError as exc:
        raise UsageError(f"cannot read dataset: {exc}") from None


def _policy_for(args, cfg: RunConfig, env_cfg):
    comps = env_cfg.action_components
    if args.checkpoint:
        params, _ = load_checkpoint(args.checkpoint)
        return SamplingPolicy(params) if cfg.eval.sampling else GreedyPolicy(params)
    if args.policy == "random":
        return RandomPolicy(comps)
    if args.policy == "never":
        return NeverSwapPolicy(comps)
    raise UsageError("give --checkpoint or --policy {random,never}")


def _checkpoint_repr(args, cfg: RunConfig) -> RunConfig:
    """Take the representation from a checkpoint when one is given."""
    if getattr(args, "checkpoint", None):
        _, meta = load_checkpoint(args.checkpoint)
        if "representation" in meta:
            cfg = replace(cfg, env=replace(cfg.env, representation=meta["representation"]))
    return cfg


# -- commands ---------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _config(args)
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    out = _out_dir(cfg)
    path = Path(args.out) if args.out else out / "dataset.jsonl"
    env_cfg = cfg.env_config()
    ds = build_dataset(cfg.gen_config(), args.count, env_cfg.n_sims, cfg.run.seed, env_cfg.sim,
                       env_cfg.sim_seed, cfg.run.workers)
    path.parent.mkdir(parents=True, exist_ok=True)
    ds.save(path)
    _echo_config(cfg, out, "generate")
    b0 = [e.b0 for e in ds]
    n = len(b0)
    print(f"wrote {n} levels to {path}")
    print(f"initially balanced: {100 * sum(b == 0.5 for b in b0) / n:.1f}%  "
          f"b0 in {{0, 1}}: {100 * sum(b in (0.0, 1.0) for b in b0) / n:.1f}%")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    if args.n_max is not None:
        cfg = apply_overrides(cfg, {"calibrate": {"n_max": str(args.n_max)}}, "command line")
    if args.threshold is not None:
        cfg = apply_overrides(cfg, {"calibrate": {"threshold": str(args.threshold)}}, "command line")
    cal = cfg.calibrate
    if cal.n_max < 4 or cal.n_max % 2:
        raise UsageError(f"--n-max must be even and >= 4, got {cal.n_max}")
    if args.dataset:
        levels = _load_dataset(args.dataset).levels[:cal.levels]
    else:
        gen = cfg.gen_config()
        levels = [generate(replace(gen, seed=derive_seed(cfg.run.seed, i))) for i in range(cal.levels)]
    out = _out_dir(cfg)
    res = calibrate_n(levels, cfg.sim, cal.n_max, cal.threshold, cfg.env.sim_seed, cfg.run.workers)
    (out / "calibration.csv").write_text(res.to_csv())
    _echo_config(cfg, out, "calibrate")
    print(res.to_table(), end="")
    if res.n is None:
        print(f"no n found up to {cal.n_max}")
    else:
        print(f"chosen n = {res.n}")
    print(f"curve written to {out / 'calibration.csv'}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    changes = {}
    if args.repr is not None:
        changes["env"] = {"representation": args.repr}
    if args.steps is not None:
        changes["train"] = {"total_steps": str(args.steps)}
    if changes:
        cfg = apply_overrides(cfg, changes, "command line")
    ds = _load_dataset(args.dataset)
    env_cfg = cfg.env_config()
    tcfg = cfg.train_config()
    out = _out_dir(cfg)
    levels = ds.levels
    every = max(1, (tcfg.total_steps // tcfg.rollout_length) // 20)

    def progress(update, row):
        if update % every == 0:
            log.info("update %d  steps %d  mean episode reward %.4f  entropy %.3f",
                     update, row["steps"], row["mean_reward"], row["entropy"])

    result = train(lambda: LevelPoolEnv(levels, env_cfg, seed=tcfg.seed), tcfg,
                   on_update=progress)
    meta = {"representation": env_cfg.representation.value, "total_steps": tcfg.total_steps,
            "seed": tcfg.seed, "dataset": str(args.dataset)}
    save_checkpoint(result.params, out / "checkpoint.json", meta)
    (out / "curve.csv").write_text(result.curve_csv())
    _echo_config(cfg, out, "train")
    print(f"checkpoint: {out / 'checkpoint.json'}")
    print(f"learning curve: {out / 'curve.csv'} ({len(result.curve)} updates)")
    return 0


def cmd_balance(args) -> int:
    cfg = _checkpoint_repr(args, _config(args))
    env_cfg = cfg.env_config()
    level = _read_level(args.level)
    if (level.width, level.height) != (env_cfg.width, env_cfg.height):
        raise UsageError(f"level is {level.width}x{level.height}, "
                         f"configured size is {env_cfg.width}x{env_cfg.height}")
    params, _ = load_checkpoint(args.checkpoint)
    policy = SamplingPolicy(params) if cfg.eval.sampling else GreedyPolicy(params)
    if tuple(params.action_components) != env_cfg.action_components:
        raise UsageError("checkpoint heads do not match the configured representation")
    env = SwapEnv(env_cfg)
    record = run_episode(env, policy, level, cfg.run.seed)
    if record["steps"] == 0:
        print(f"already balanced (b = {record['b0']:.4f}); no swaps made")
        print(render_ascii(level), end="")
        return 0
    moved = set()
    for s in record["swaps"]:
        moved.update([tuple(s["a"]), tuple(s["b"])])
    print(f"before: b = {record['b0']:.4f}")
    print(render_ascii(level, highlight=moved), end="")
    print(f"after {record['changes']} swaps in {record['steps']} steps "
          f"({record['reason']}): b = {record['b_final']:.4f}")
    print(render_ascii(env.state.level, highlight=moved), end="")
    if args.out:
        Path(args.out).write_text(json.dumps(record, sort_keys=True) + "\n")
    return 0


def _evaluate(args, cfg):
    env_cfg = cfg.env_config()
    ds = _load_dataset(args.dataset)
    policy = _policy_for(args, cfg, env_cfg)
    return evaluate(policy, ds, env_cfg, limit=cfg.eval.levels, workers=cfg.run.workers), ds


def cmd_evaluate(args) -> int:
    cfg = _checkpoint_repr(args, _config(args))
    if args.levels is not None:
        cfg = apply_overrides(cfg, {"eval": {"levels": str(args.levels)}}, "command line")
    if args.sampling:
        cfg = apply_overrides(cfg, {"eval": {"sampling": "true"}}, "command line")
    (report, records), _ = _evaluate(args, cfg)
    out = _out_dir(cfg)
    (out / "report.json").write_text(report.to_json())
    (out / "episodes.jsonl").write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    hist = compare_histograms(report.b_initial, report.b_final, cfg.env.n_sims)
    (out / "histogram.csv").write_text(hist.to_csv())
    _echo_config(cfg, out, "evaluate")
    label = args.checkpoint or f"{args.policy} policy"
    print(report.to_table(label), end="")
    print(hist.to_ascii(), end="")
    return 0


def cmd_analyze(args) -> int:
    cfg = _checkpoint_repr(args, _config(args))
    if args.levels is not None:
        cfg = apply_overrides(cfg, {"eval": {"levels": str(args.levels)}}, "command line")
    (_, model_records), ds = _evaluate(args, cfg)
    env_cfg = cfg.env_config()
    _, random_records = evaluate(RandomPolicy(env_cfg.action_components), ds, env_cfg,
                                 limit=cfg.eval.levels, workers=cfg.run.workers)
    rows = swap_frequency(model_records, random_records, ds.levels)
    out = _out_dir(cfg)
    (out / "swap_frequency.csv").write_text(swap_frequency_csv(rows))
    _echo_config(cfg, out, "analyze")
    print(f"{'pair':<6} {'model':>6} {'random':>6} {'rel. diff':>10}")
    for s in rows:
        print(f"{s.pair[0]}-{s.pair[1]:<4} {s.model_count:>6} {s.random_count:>6} {s.rel_diff:>+10.3f}")
    return 0


def cmd_render(args) -> int:
    level = parse_level(Path(args.level).read_text())
    marks = []
    for item in args.highlight or []:
        try:
            r, c = (int(x) for x in item.split(","))
        except ValueError:
            raise UsageError(f"--highlight expects row,col, got {item!r}") from None
        marks.append((r, c))
    print(render_ascii(level, highlight=marks or None), end="")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    level = _read_level(args.level)
    if args.trace:
        state = init_match(level, cfg.sim, args.match_seed)
        while True:
            _advance(state, cfg.sim, None)
            print(format_trace_line(state))
            if _decide(state, cfg.sim) is not None:
                break
    outcome = run_match(level, cfg.sim, args.match_seed)
    winners = ",".join(str(i) for i in sorted(outcome.winners))
    print(f"winners={{{winners}}} reason={outcome.reason} ticks={outcome.ticks}")
    for i, p in enumerate(outcome.players):
        print(f"  player {i}: health={p.health} food={p.food} water={p.water} "
              f"collected={p.food_collected} alive={p.alive}")
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("--seed", type=int, help="global seed")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="swapbalance",
                                     description="Balance two-player tile levels by swapping tiles.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a level dataset (JSON lines)")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--out", help="dataset path (default OUT_DIR/dataset.jsonl)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("calibrate", parents=[common], help="choose the simulation count n")
    p.add_argument("--dataset")
    p.add_argument("--n-max", type=int)
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", parents=[common], help="train a balancing policy")
    p.add_argument("--repr", choices=[r.value for r in Representation], metavar="REPR",
                   help="swap-narrow, swap-turtle or swap-wide")
    p.add_argument("--dataset", required=True)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("balance", parents=[common], help="balance one level with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--level", required=True)
    p.add_argument("--out", help="write the episode record (JSON)")
    p.set_defaults(func=cmd_balance)

    for name, func, text in (("evaluate", cmd_evaluate, "balancing metrics on a dataset"),
                             ("analyze", cmd_analyze, "swap-pair frequencies vs random swapping")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--dataset", required=True)
        who = p.add_mutually_exclusive_group(required=True)
        who.add_argument("--checkpoint")
        who.add_argument("--policy", choices=["random", "never"])
        p.add_argument("--levels", type=int, help="number of scored levels")
        if name == "evaluate":
            p.add_argument("--sampling", action="store_true", help="sample instead of argmax")
        p.set_defaults(func=func)

    p = sub.add_parser("render", parents=[common], help="print a level file")
    p.add_argument("--level", required=True)
    p.add_argument("--highlight", nargs="*", metavar="ROW,COL")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", parents=[common], help="run one match")
    p.add_argument("--level", required=True)
    p.add_argument("--match-seed", type=int, default=0)
    p.add_argument("--trace", action="store_true", help="print one line per tick")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, UsageError, LevelParseError, InvalidLevelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
