"""Command-line entry point: ``retake-move <command>``.

Every flag can also come from the matching section of a ``--config`` JSON
file, e.g. ``{"map": "...", "train": {"epochs": 5}}``.  Precedence is CLI
flag, then config file, then the built-in default listed in ``--help``.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .bots import BotConfig, BotConfigError, run_round
from .dataset import (
    DatasetSplit,
    PackError,
    build_samples,
    curate_paths,
    load_dataset,
    normalization,
    split_rounds,
    split_samples,
    write_manifest,
    write_pack,
)
from .eval import EMDError, evaluate, write_heatmaps, write_metrics_table, write_report_json, write_teamwork_table
from .eval.report import ReferenceStats
from .model import (
    DESK_TRAIN,
    CheckpointError,
    ConfigError,
    ModelConfig,
    MovePolicy,
    TrainConfig,
    TrainingError,
    load,
    preset,
    save,
    train,
    write_metrics,
    write_timing,
)
from .numerics import NumericError
from .ranking import ConvergenceError, RankingError, RankingFileError, analyze, read_rankings, write_analysis
from .world import LogFormatError, MapError, WorldConfig, load_map, read_logs, write_log
from .world.logs import log_paths
from .world.state import DEFENSE, OFFENSE

log = logging.getLogger("retake_move")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DATA_ERRORS = (LogFormatError, PackError, CheckpointError, RankingFileError, EMDError, MapError, OSError)
NUMERIC_ERRORS = (NumericError, TrainingError, ConvergenceError)
CONFIG_ERRORS = (ConfigError, BotConfigError, RankingError)

# Policy queries per simulator tick interval; latency is amortized over it.
TICKS_PER_QUERY = 16
LATENCY_BUDGET_MS = 0.5


class CliConfigError(ValueError):
    pass


# Built-in defaults per command; argparse flags default to None so the config file can fill gaps.
DEFAULTS = {
    "gen-data": {"rounds": 200, "seed": 0, "archetype_mix": None, "out": "data/logs"},
    "curate": {"logs": "data/logs", "out": "data/dataset", "history_depth": None, "ratio": 0.8, "split_seed": 0},
    "train": {
        "data": None,
        "logs": None,
        "out": "runs/model",
        "preset": "desk",
        "variant": "standard",
        "epochs": None,
        "batch_size": None,
        "learning_rate": None,
        "seed": 0,
        "split_seed": 0,
    },
    "selfplay": {
        "offense": "mlmove",
        "defense": "mlmove",
        "checkpoint": None,
        "rounds": 100,
        "iterations": 5,
        "seed": 0,
        "out": "runs/selfplay",
        "archetype_mix": None,
    },
    "eval": {"reference": None, "logs": None, "labels": None, "out": "runs/eval", "cadence_ticks": 16},
    "bench": {"checkpoint": None, "preset": "default", "queries": 200, "warmup": 20, "threads": 1, "seed": 0, "out": None},
    "rank": {"rankings": None, "out": None},
}


def worker_count():
    """Pool size: available cores, capped by RETAKE_MOVE_THREADS."""
    n = os.cpu_count() or 1
    cap = os.environ.get("RETAKE_MOVE_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise CliConfigError(f"RETAKE_MOVE_THREADS must be an integer, got {cap!r}") from None
    return n


def _parse_mix(text):
    """Archetype mix as JSON or ``name=weight,...``."""
    if text is None or isinstance(text, dict):
        return text
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    mix = {}
    for part in text.split(","):
        name, _, w = part.partition("=")
        try:
            mix[name.strip()] = float(w)
        except ValueError:
            raise CliConfigError(f"bad archetype weight in {part!r}") from None
    return mix


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


# Round playing, shared by gen-data and selfplay.  Workers cache maps and models per process.
_CACHE = {}


def _cached(kind, key, factory):
    k = (kind, key)
    if k not in _CACHE:
        _CACHE[k] = factory()
    return _CACHE[k]


def _play(task):
    map_path, configs, seed, iteration, index, prefix = task
    geometry = _cached("map", map_path, lambda: load_map(map_path))
    teams = {team: BotConfig.from_dict(c) for team, c in configs.items()}
    policies = {}
    for c in teams.values():
        if c.checkpoint:
            policies[c.checkpoint] = _cached("model", c.checkpoint, lambda c=c: load(c.checkpoint)[0])
    return run_round(geometry, teams, seed, iteration, index, policies, WorldConfig(), prefix)


def play_rounds(tasks, on_done):
    """Run rounds, in a process pool when more than one worker is allowed; ``on_done`` sees logs in task order."""
    workers = min(worker_count(), max(1, len(tasks)))
    if workers <= 1:
        for t in tasks:
            on_done(_play(t))
        return
    with ProcessPoolExecutor(workers) as pool:
        for result in pool.map(_play, tasks, chunksize=4):
            on_done(result)


def coverage_report(logs, geometry, cell=100.0):
    """Start-position density per team, alive-count histograms at spawn, and round-length histogram."""
    x0, y0, x1, y1 = geometry.bounds
    cols, rows = int(np.ceil((x1 - x0) / cell)), int(np.ceil((y1 - y0) / cell))
    density = {OFFENSE: np.zeros((rows, cols), int), DEFENSE: np.zeros((rows, cols), int)}
    alive = {OFFENSE: {}, DEFENSE: {}}
    sites, outcomes = {}, {}
    lengths = np.zeros(20, int)
    for lg in logs:
        first = lg.snapshots[0]
        for team in (OFFENSE, DEFENSE):
            ps = [p for p in first.players if p.team == team]
            alive[team][str(len(ps))] = alive[team].get(str(len(ps)), 0) + 1
            for p in ps:
                r = min(int((p.y - y0) // cell), rows - 1)
                c = min(int((p.x - x0) // cell), cols - 1)
                density[team][r, c] += 1
        sites[lg.bombsite] = sites.get(lg.bombsite, 0) + 1
        outcomes[lg.outcome] = outcomes.get(lg.outcome, 0) + 1
        lengths[min(int(lg.duration_s // 2.0), 19)] += 1
    return {
        "rounds": len(logs),
        "start_density_cell": cell,
        "start_density": {t: d.tolist() for t, d in density.items()},
        "alive_at_start": {t: dict(sorted(v.items())) for t, v in alive.items()},
        "bombsites": dict(sorted(sites.items())),
        "outcomes": dict(sorted(outcomes.items())),
        "round_length_bins_s": list(range(0, 42, 2)),
        "round_length_hist": lengths.tolist(),
    }


def cmd_gen_data(a):
    if a.rounds < 0:
        raise CliConfigError("--rounds must be >= 0")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = {"kind": "scripted_expert"}
    if a.archetype_mix is not None:
        cfg["archetype_mix"] = _parse_mix(a.archetype_mix)
    BotConfig.from_dict(cfg)  # validate before spawning workers
    configs = {OFFENSE: cfg, DEFENSE: cfg}
    tasks = [(a.map, configs, a.seed, 0, i, "g") for i in range(a.rounds)]
    logs, names = [], []

    def done(lg):
        write_log(lg, out / f"{lg.round_id}.jsonl")
        logs.append(lg)
        names.append(f"{lg.round_id}.jsonl")

    play_rounds(tasks, done)
    geometry = load_map(a.map)
    _write_json(out / "manifest.json", {"kind": "scripted_expert", "seed": a.seed, "rounds": names, "bots": configs})
    _write_json(out / "coverage.json", coverage_report(logs, geometry))
    print(f"wrote {len(logs)} rounds to {out}")
    return EXIT_OK


def _curate_to(logs_dir, out, geometry, history_depth, ratio, split_seed):
    rounds, coverage = curate_paths(log_paths(logs_dir))
    if not rounds:
        raise LogFormatError(f"no usable logs in {logs_dir}")
    samples = build_samples(rounds, geometry, history_depth)
    split = split_rounds([r.round_id for r in rounds], ratio, split_seed)
    out.mkdir(parents=True, exist_ok=True)
    write_pack(out / "samples.mlds", samples)
    write_manifest(out / "manifest.json", samples, split, normalization(geometry), coverage, history_depth)
    return samples, split, coverage


def _history_depth(variant, value):
    if value is not None:
        return int(value)
    return ModelConfig(variant=variant).input_history


def cmd_curate(a):
    geometry = load_map(a.map)
    depth = _history_depth("standard", a.history_depth)
    samples, split, coverage = _curate_to(a.logs, Path(a.out), geometry, depth, a.ratio, a.split_seed)
    print(
        f"curated {coverage.rounds_kept} rounds ({len(coverage.rejected)} rejected), {len(samples)} samples; "
        f"split {len(split.train_rounds)}/{len(split.test_rounds)} rounds"
    )
    return EXIT_OK


def cmd_train(a):
    geometry = load_map(a.map)
    out = Path(a.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliConfigError(f"cannot create output directory {out}: {exc}") from None
    x0, y0, x1, y1 = geometry.bounds
    mcfg = preset(a.preset, variant=a.variant, position_scale=(x1 - x0, y1 - y0))
    recipe = dict(DESK_TRAIN) if a.preset == "desk" else {}
    for key in ("epochs", "batch_size", "learning_rate"):
        if getattr(a, key) is not None:
            recipe[key] = getattr(a, key)
    tcfg = TrainConfig(seed=a.seed, **recipe)
    if a.data:
        samples, manifest = load_dataset(Path(a.data) / "samples.mlds", Path(a.data) / "manifest.json")
        split = DatasetSplit(tuple(manifest["split"]["train"]), tuple(manifest["split"]["test"]))
    elif a.logs:
        samples, split, _ = _curate_to(a.logs, out / "dataset", geometry, mcfg.input_history, 0.8, a.split_seed)
    else:
        raise CliConfigError("train needs --data (curated directory) or --logs (raw round logs)")
    train_set, test_set = split_samples(samples, split)
    if train_set.width != mcfg.token_width:
        raise CliConfigError(f"dataset token width {train_set.width} does not fit variant {a.variant!r}; re-curate with matching history depth")
    t0 = time.perf_counter()
    with threadpool_limits(limits=1):
        policy, metrics = train(train_set, test_set, mcfg, tcfg, log=print)
    save(out / "model.mlmv", policy, {"train": vars(tcfg), "train_samples": len(train_set), "test_samples": len(test_set)})
    write_metrics(out / "metrics.csv", metrics)
    write_timing(out / "timing.csv", metrics)
    last = metrics[-1] if metrics else None
    if last:
        print(f"final train loss {last.train_loss:.6f} test loss {last.test_loss:.6f} ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK


def _team_config(kind, checkpoint, mix):
    d = {"kind": kind}
    if kind == "mlmove":
        if not checkpoint:
            raise CliConfigError("mlmove needs --checkpoint")
        d["checkpoint"] = str(checkpoint)
    if kind == "scripted_expert" and mix is not None:
        d["archetype_mix"] = _parse_mix(mix)
    BotConfig.from_dict(d)
    return d


def cmd_selfplay(a):
    if a.iterations < 1:
        raise CliConfigError("--iterations must be >= 1")
    if a.rounds < 0:
        raise CliConfigError("--rounds must be >= 0")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    configs = {
        OFFENSE: a.offense if isinstance(a.offense, dict) else _team_config(a.offense, a.checkpoint, a.archetype_mix),
        DEFENSE: a.defense if isinstance(a.defense, dict) else _team_config(a.defense, a.checkpoint, a.archetype_mix),
    }
    for c in configs.values():
        BotConfig.from_dict(c)
    campaign = {"bots": configs, "rounds": a.rounds, "iterations": a.iterations, "seed": a.seed, "map": a.map}
    manifest_path = out / "manifest.json"
    manifest = {"campaign": campaign, "done": {}}
    if manifest_path.exists():
        prev = json.loads(manifest_path.read_text())
        if prev.get("campaign") != campaign:
            raise CliConfigError(f"{out} holds a different campaign; use a fresh output directory")
        manifest = prev
    played = 0
    for it in range(a.iterations):
        it_dir = out / f"iter_{it:02d}"
        it_dir.mkdir(exist_ok=True)
        done = set(manifest["done"].get(str(it), []))
        tasks = [(a.map, configs, a.seed, it, i, "r") for i in range(a.rounds) if f"r{it:02d}_{i:05d}" not in done or not (it_dir / f"r{it:02d}_{i:05d}.jsonl").exists()]

        def finish(lg, it=it, it_dir=it_dir):
            nonlocal played
            write_log(lg, it_dir / f"{lg.round_id}.jsonl")
            manifest["done"].setdefault(str(it), [])
            if lg.round_id not in manifest["done"][str(it)]:
                manifest["done"][str(it)].append(lg.round_id)
                manifest["done"][str(it)].sort()
            tmp = manifest_path.with_name("manifest.json.tmp")
            tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
            tmp.replace(manifest_path)
            played += 1

        play_rounds(tasks, finish)
    print(f"played {played} rounds ({a.iterations} iterations x {a.rounds}) into {out}")
    return EXIT_OK


def _iteration_dirs(path):
    p = Path(path)
    iters = sorted(d for d in p.iterdir() if d.is_dir() and d.name.startswith("iter_"))
    return iters or [p]


def cmd_eval(a):
    if not a.reference or not a.logs:
        raise CliConfigError("eval needs --reference and at least one --logs directory")
    geometry = load_map(a.map)
    errors = []
    ref_logs = read_logs(a.reference, errors)
    if not ref_logs:
        raise LogFormatError(f"no readable reference logs in {a.reference}")
    ref = ReferenceStats.from_logs(ref_logs, geometry, a.cadence_ticks)
    labels = a.labels or [Path(p).name for p in a.logs]
    if len(labels) != len(a.logs):
        raise CliConfigError("--labels must match --logs one to one")
    out = Path(a.out)
    heat = out / "heatmaps"
    reports = []
    write_heatmaps(heat, "reference", ref_logs, geometry)
    for label, path in zip(labels, a.logs):
        iterations = [read_logs(d, errors) for d in _iteration_dirs(path)]
        rep = evaluate(iterations, ref_logs, geometry, label, a.cadence_ticks, ref=ref)
        reports.append(rep)
        write_heatmaps(heat, label, [lg for it in iterations for lg in it], geometry)
        for w in rep.warnings:
            log.warning("%s: %s", label, w)
    write_report_json(out / "report.json", reports)
    write_metrics_table(out / "metrics.csv", reports)
    if ref.teamwork:
        write_teamwork_table(out / "teamwork.csv", reports)
    for e in errors:
        log.warning("skipped log: %s", e)
    for rep in reports:
        s = rep.summary
        print(
            f"{rep.label}: occupancy {s['occupancy_mean']['median']:.4f} "
            f"kills {s['kill_locations']['median']:.4f} lifetimes {s['lifetimes']['median']:.4f} "
            f"shots/kill {s['shots_per_kill']['median']:.4f}"
        )
    return EXIT_OK


def bench_latency(policy, queries, warmup=20, seed=0):
    """Per-query forward latency (ms) of one 10-token query; returns the report dict."""
    if queries <= 0:
        raise CliConfigError("--queries must be positive")
    rng = np.random.default_rng(seed)
    cfg = policy.config
    tokens = rng.uniform(-1.0, 1.0, (1, cfg.num_players, cfg.token_width)).astype(np.float32)
    alive = np.ones((1, cfg.num_players), dtype=bool)
    for _ in range(warmup):
        policy.probabilities(tokens, alive)
    samples = []
    for _ in range(queries):
        t0 = time.perf_counter()
        policy.probabilities(tokens, alive)
        samples.append((time.perf_counter() - t0) * 1e3)
    return latency_report(samples, cfg)


def latency_report(samples_ms, config=None):
    arr = np.asarray(samples_ms, dtype=np.float64)
    p25, median, p75 = np.percentile(arr, [25, 50, 75])
    amortized = median / TICKS_PER_QUERY
    return {
        "queries": int(arr.size),
        "median_ms": float(median),
        "iqr_ms": float(p75 - p25),
        "amortized_ms_per_tick": float(amortized),
        "budget_ms_per_tick": LATENCY_BUDGET_MS,
        "over_budget": bool(amortized > LATENCY_BUDGET_MS),
        "model": None if config is None else {"embed_dim": config.embed_dim, "num_layers": config.num_layers},
    }


def cmd_bench(a):
    if a.threads != 1:
        raise CliConfigError("bench runs on exactly one pinned thread (--threads 1)")
    if a.queries <= 0:
        raise CliConfigError("--queries must be positive")
    if a.checkpoint:
        policy, _ = load(a.checkpoint)
    else:
        policy = MovePolicy(preset(a.preset), seed=a.seed)
    with threadpool_limits(limits=1):
        rep = bench_latency(policy, a.queries, a.warmup, a.seed)
    rep["flag"] = "amortized latency exceeds 0.5 ms per tick" if rep["over_budget"] else ""
    if a.out:
        _write_json(a.out, rep)
    print(
        f"median {rep['median_ms']:.3f} ms  IQR {rep['iqr_ms']:.3f} ms  "
        f"amortized {rep['amortized_ms_per_tick']:.4f} ms/tick  {'OVER 0.5 ms budget' if rep['over_budget'] else 'within 0.5 ms budget'}"
    )
    return EXIT_OK


def cmd_rank(a):
    if not a.rankings:
        raise CliConfigError("rank needs a rankings CSV")
    records, rejects = read_rankings(a.rankings)
    for lineno, reason in rejects:
        print(f"{a.rankings}:{lineno}: rejected: {reason}", file=sys.stderr)
    result = analyze(records)
    result["rejected_lines"] = [ln for ln, _ in rejects]
    if a.out:
        write_analysis(a.out, result)
    for r in result["ratings"]:
        print(f"{r['entity']:>20s}  mu {r['mu']:.3f} +- {r['sigma']:.3f}  (mu-3sigma {r['conservative']:.3f})")
    kw = result["kruskal_wallis"]
    print(f"Kruskal-Wallis H {kw['H']:.4f} p {kw['p']:.3g}")
    for d in result["dunn"]:
        print(f"  Dunn {d['a']} vs {d['b']}: z {d['z']:.4f} p_adj {d['p_adjusted']:.3g}")
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "curate": cmd_curate,
    "train": cmd_train,
    "selfplay": cmd_selfplay,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "rank": cmd_rank,
}


def build_parser():
    p = argparse.ArgumentParser(prog="retake-move", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file with per-command sections")
    p.add_argument("--map", default=None, help="map JSON (default: built-in desk_dust)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_)

    g = add("gen-data", "scripted-expert self-play logs plus a coverage report")
    g.add_argument("--rounds", type=int, help="number of rounds (default 200)")
    g.add_argument("--seed", type=int, help="base seed (default 0)")
    g.add_argument("--archetype-mix", help="JSON or name=weight,... over rusher/flanker/lurker/anchor/rotator")
    g.add_argument("--out", help="output directory (default data/logs)")

    c = add("curate", "round logs to a labeled sample pack with a round-level split")
    c.add_argument("--logs", help="directory of round logs")
    c.add_argument("--out", help="output directory")
    c.add_argument("--history-depth", type=int, help="past-position snapshots per token (default: standard model's)")
    c.add_argument("--ratio", type=float, help="train fraction of rounds (default 0.8)")
    c.add_argument("--split-seed", type=int)

    t = add("train", "train a movement model")
    t.add_argument("--data", help="curated dataset directory")
    t.add_argument("--logs", help="raw logs; curated into OUT/dataset first")
    t.add_argument("--out", help="output directory for model.mlmv and metrics.csv")
    t.add_argument("--preset", choices=["desk", "default"])
    t.add_argument("--variant", choices=["standard", "no_attn", "history"])
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--learning-rate", "--lr", type=float)
    t.add_argument("--seed", type=int)
    t.add_argument("--split-seed", type=int)

    s = add("selfplay", "paired-seed campaign of rounds per iteration")
    s.add_argument("--offense", choices=["mlmove", "rulemove", "scripted_expert", "random_walk"])
    s.add_argument("--defense", choices=["mlmove", "rulemove", "scripted_expert", "random_walk"])
    s.add_argument("--checkpoint", help="model for mlmove teams")
    s.add_argument("--rounds", type=int, help="rounds per iteration (default 100)")
    s.add_argument("--iterations", type=int, help="default 5")
    s.add_argument("--seed", type=int)
    s.add_argument("--archetype-mix")
    s.add_argument("--out")

    e = add("eval", "behavior-similarity report against reference logs")
    e.add_argument("--reference", help="reference log directory")
    e.add_argument("--logs", nargs="+", help="one directory per configuration (iter_* subdirectories are iterations)")
    e.add_argument("--labels", nargs="+")
    e.add_argument("--out")
    e.add_argument("--cadence-ticks", type=int, help="detector step in ticks (default 16)")

    b = add("bench", "policy query latency on one pinned thread")
    b.add_argument("--checkpoint", help="model to time (default: freshly initialized --preset)")
    b.add_argument("--preset", choices=["desk", "default"])
    b.add_argument("--queries", type=int)
    b.add_argument("--warmup", type=int)
    b.add_argument("--threads", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--out", help="write the report as JSON")

    r = add("rank", "TrueSkill ratings and rank statistics from a rankings CSV")
    r.add_argument("rankings", nargs="?", help="CSV rows evaluator,round,rank1..rankK")
    r.add_argument("--out", help="write ratings and statistics as JSON")
    return p


def resolve(args):
    """Fill unset flags from the config file section, then from built-in defaults."""
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise CliConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise CliConfigError("config file must hold a JSON object")
    section = file_cfg.get(args.command, {})
    defaults = DEFAULTS[args.command]
    unknown = set(section) - set(defaults)
    if unknown:
        raise CliConfigError(f"unknown keys in config section {args.command!r}: {sorted(unknown)}")
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, section.get(key, default))
    if args.map is None:
        args.map = file_cfg.get("map")
    return args


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        resolve(args)
        with threadpool_limits(limits=1):
            return COMMANDS[args.command](args)
    except (CliConfigError, *CONFIG_ERRORS, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
