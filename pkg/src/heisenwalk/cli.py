"""Command-line experiment runner.

Every subcommand reads a parameter block from ``--config`` (YAML or JSON),
applies environment overrides (``HEISENWALK_SEED`` and friends) and then flag
overrides, and writes one CSV table plus a JSON sidecar into ``--out``.  The
sidecar embeds the resolved config, so ``--config run.json`` replays a run.

Exit codes: 0 ok, 2 bad config, 3 dense cap exceeded, 4 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .checks import FAULTS, GROUPS, run_checks
from .entropic import t_star
from .geometry import (
    ball_size,
    bfs_distances,
    counting_bound_check,
    default_omega,
    m_k,
    m_star,
    typical_distance,
)
from .group import HeisenbergGroup, is_prime, word_product, word_stats
from .walk import DEFAULT_DENSE_CAP, CapExceeded, sample_generators, tv_curve

ENV_PREFIX = "HEISENWALK_"
SCHEMA_VERSION = 1

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# Defaults double as the schema: a key's default fixes its type.
DEFAULTS: dict[str, dict] = {
    "entropic": {"p": 5, "d": 3, "k": [2, 4, 8, 16, 32, 64], "alpha": [0.0], "regime_bounds": [0.5, 2.0]},
    "tv-curve": {
        "p": 3,
        "d": 3,
        "k": 4,
        "times": list(range(0, 21)),
        "time_model": "discrete",
        "replicas": 1,
    },
    "typdist": {"p": [11], "d": 3, "k": 6, "beta": [0.5], "replicas": 1},
    "ball": {"k": [2, 3, 4], "p": 0, "d": 3, "R": [0, 5, 10], "omega": None},
    "verify": {"trials": 200, "groups": list(GROUPS), "faults": []},
    "word-stats": {"word": [0, 1, 0, 1], "k": 0, "p": 0, "d": 3},
}

COLUMNS = {
    "entropic": [
        "k", "p", "d", "alpha", "s0", "t0", "t_diam", "t_star", "t_alpha", "branch",
        "threshold", "above_threshold", "regime", "kappa", "asymptotic",
        "cross_sub", "cross_crit", "cross_super", "cross_super_above_threshold",
    ],
    "tv-curve": ["replica", "t", "tv_full", "tv_abelianized", "l2", "support"],
    "typdist": [
        "p", "d", "k", "replica", "n", "unreachable", "generates", "radius",
        "beta", "D", "m_star", "m_k", "ratio_m_star", "ratio_m_k", "counting_bound",
    ],
    "ball": ["k", "p", "d", "R", "volume", "omega", "m_star", "m_k", "m_k_over_m_star", "within_1_3"],
    "verify": ["group", "passed", "cases", "seed", "counterexample"],
    "word-stats": ["letter", "w", "c_row", "product"],
}


# -- config ----------------------------------------------------------------------


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def _coerce(command: str, key: str, value):
    default = DEFAULTS[command][key]
    try:
        if isinstance(default, list):
            if isinstance(value, str):
                value = [v for v in value.replace(",", " ").split()]
            items = _as_list(value)
            if key in ("groups", "faults"):
                return [str(v) for v in items]
            proto = default[0] if default else 0
            if isinstance(proto, float) or key in ("times", "beta", "alpha", "regime_bounds"):
                return [float(v) for v in items]
            return [int(v) for v in items]
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if default is None:
            return None if value is None else float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{command}.{key}: cannot interpret {value!r} like {default!r}") from None


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML/JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    # a run sidecar carries its resolved config under "config"
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    return data


def resolve_config(command: str, raw: dict, overrides: dict) -> dict:
    """Merge defaults, the file block and overrides; validate field by field.

    The file may hold the block at top level or under the command name.
    """
    block = raw.get(command, raw) if isinstance(raw.get(command), dict) else raw
    params = {k: v for k, v in block.items() if k not in ("seed", "cap", "threads", "command")}
    unknown = sorted(set(params) - set(DEFAULTS[command]))
    if unknown:
        raise ConfigError(f"{command}: unknown field(s) {unknown}; allowed {sorted(DEFAULTS[command])}")
    merged = {**DEFAULTS[command], **params}
    cfg = {key: _coerce(command, key, value) for key, value in merged.items()}
    run = {"seed": block.get("seed", 0), "cap": block.get("cap", DEFAULT_DENSE_CAP), "threads": block.get("threads", 1)}
    for key, value in overrides.items():
        if value is not None:
            run[key] = value
    for key in run:
        try:
            run[key] = int(run[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected an integer, got {run[key]!r}") from None
    if not 0 <= run["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if run["threads"] < 1:
        raise ConfigError("threads must be positive")
    if run["cap"] < 1:
        raise ConfigError("cap must be positive")
    _validate(command, cfg)
    return {"command": command, **run, **cfg}


def canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def _need_prime(name, p):
    if not is_prime(p):
        raise ConfigError(f"{name}: {p} is not prime")


def _validate(command: str, cfg: dict) -> None:
    if command in ("entropic", "tv-curve", "typdist") and cfg["d"] < 3:
        raise ConfigError(f"{command}.d must be at least 3")
    if command == "entropic":
        _need_prime("entropic.p", cfg["p"])
        if min(cfg["k"], default=2) < 2:
            raise ConfigError("entropic.k: every k must be at least 2")
    elif command == "tv-curve":
        _need_prime("tv-curve.p", cfg["p"])
        if cfg["time_model"] not in ("discrete", "poissonized"):
            raise ConfigError("tv-curve.time_model must be 'discrete' or 'poissonized'")
        if cfg["k"] < 1 or cfg["replicas"] < 1:
            raise ConfigError("tv-curve.k and tv-curve.replicas must be positive")
        if any(t < 0 for t in cfg["times"]):
            raise ConfigError("tv-curve.times must be nonnegative")
        if cfg["time_model"] == "discrete" and any(t != int(t) for t in cfg["times"]):
            raise ConfigError("tv-curve.times must be integers for the discrete model")
    elif command == "typdist":
        for p in cfg["p"]:
            _need_prime("typdist.p", p)
        if not all(0 < b < 1 for b in cfg["beta"]):
            raise ConfigError("typdist.beta values must lie in (0, 1)")
        if cfg["k"] < 1 or cfg["replicas"] < 1:
            raise ConfigError("typdist.k and typdist.replicas must be positive")
    elif command == "ball":
        if min(cfg["k"], default=1) < 1:
            raise ConfigError("ball.k must be positive")
        if cfg["p"]:
            _need_prime("ball.p", cfg["p"])
        elif not cfg["R"]:
            raise ConfigError("ball: give R (volumes) or p (radii)")
        if cfg["omega"] is not None and cfg["omega"] < 0:
            raise ConfigError("ball.omega must be nonnegative")
        if any(r < 0 for r in cfg["R"]):
            raise ConfigError("ball.R must be nonnegative")
    elif command == "verify":
        for g in cfg["groups"]:
            if g not in GROUPS:
                raise ConfigError(f"verify.groups: unknown group {g!r}; known {list(GROUPS)}")
        for f in cfg["faults"]:
            if f not in FAULTS:
                raise ConfigError(f"verify.faults: unknown fault {f!r}; known {list(FAULTS)}")
    elif command == "word-stats":
        k = cfg["k"] or (max(cfg["word"], default=-1) + 1)
        if any(not 0 <= x < max(k, 1) for x in cfg["word"]):
            raise ConfigError(f"word-stats.word: letters must lie in [0, {k})")
        if cfg["p"]:
            _need_prime("word-stats.p", cfg["p"])


# -- commands --------------------------------------------------------------------


def _replica_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def _rng(ss: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(ss))


def _map(fn, items, threads: int):
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # map keeps replica order


def cmd_entropic(cfg: dict) -> list[dict]:
    rows = []
    for k in cfg["k"]:
        for alpha in cfg["alpha"]:
            rep = t_star(k, cfg["p"], cfg["d"], alpha=alpha, regime_bounds=tuple(cfg["regime_bounds"]))
            rows.append(
                {
                    "k": k,
                    "p": cfg["p"],
                    "d": cfg["d"],
                    "alpha": alpha,
                    "s0": rep.s0,
                    "t0": rep.t0,
                    "t_diam": rep.t_diam,
                    "t_star": rep.t_star,
                    "t_alpha": rep.t_alpha,
                    "branch": rep.branch,
                    "threshold": rep.threshold,
                    "above_threshold": rep.above_threshold,
                    "regime": rep.regime,
                    "kappa": rep.kappa,
                    "asymptotic": rep.asymptotic,
                    **{f"cross_{name}": v for name, v in rep.cross_checks.items()},
                }
            )
    return rows


def cmd_tv_curve(cfg: dict) -> list[dict]:
    G = HeisenbergGroup(cfg["p"], cfg["d"])

    def one(item):
        idx, ss = item
        Z = sample_generators(G, cfg["k"], _rng(ss))
        recs = tv_curve(Z, cfg["times"], cfg["time_model"], cap=cfg["cap"])
        return [
            {"replica": idx, "t": r.t, "tv_full": r.tv, "tv_abelianized": r.tv_abelianized, "l2": r.l2, "support": r.support}
            for r in recs
        ]

    if G.n > cfg["cap"]:
        raise CapExceeded(
            f"group order {G.n} exceeds the dense cap {cfg['cap']}; exact TV is unavailable, "
            "use Monte-Carlo trajectory mode (e.g. the collision experiments) instead"
        )
    seeds = list(enumerate(_replica_seeds(cfg["seed"], cfg["replicas"])))
    return [row for rows in _map(one, seeds, cfg["threads"]) for row in rows]


def cmd_typdist(cfg: dict) -> list[dict]:
    rows = []
    for p in cfg["p"]:
        G = HeisenbergGroup(p, cfg["d"])
        if G.n > cfg["cap"]:
            raise CapExceeded(f"group order {G.n} (p={p}) exceeds the BFS cap {cfg['cap']}")
        k = cfg["k"]
        ms, mk = m_star(k, p, cfg["d"]), m_k(k, p, cfg["d"])

        def one(item, G=G):
            idx, ss = item
            Z = sample_generators(G, k, _rng(ss))
            hist = bfs_distances(Z, cap=cfg["cap"])
            bound = all(r.ok for r in counting_bound_check(Z, hist=hist))
            out = []
            for beta in cfg["beta"]:
                try:
                    D = typical_distance(hist, beta)
                except ValueError:
                    D = math.nan
                out.append(
                    {
                        "p": p,
                        "d": cfg["d"],
                        "k": k,
                        "replica": idx,
                        "n": G.n,
                        "unreachable": hist.unreachable,
                        "generates": hist.unreachable == 0,
                        "radius": hist.radius,
                        "beta": beta,
                        "D": D,
                        "m_star": ms,
                        "m_k": mk,
                        "ratio_m_star": abs(D - ms) / ms,
                        "ratio_m_k": abs(D - mk) / mk,
                        "counting_bound": bound,
                    }
                )
            return out

        seeds = list(enumerate(_replica_seeds([cfg["seed"], p], cfg["replicas"])))
        rows += [r for rs in _map(one, seeds, cfg["threads"]) for r in rs]
    return rows


def cmd_ball(cfg: dict) -> list[dict]:
    rows = []
    for k in cfg["k"]:
        if cfg["p"]:
            p, d = cfg["p"], cfg["d"]
            omega = default_omega(k, p, d) if cfg["omega"] is None else cfg["omega"]
            ms, mk = m_star(k, p, d), m_k(k, p, d, omega)
            rows.append(
                {
                    "k": k, "p": p, "d": d, "R": mk, "volume": ball_size(k, mk), "omega": omega,
                    "m_star": ms, "m_k": mk, "m_k_over_m_star": mk / ms,
                    "within_1_3": mk <= math.ceil(1.3 * ms),
                }
            )
        for R in cfg["R"]:
            rows.append({"k": k, "R": R, "volume": ball_size(k, R)})
    return rows


def cmd_verify(cfg: dict) -> list[dict]:
    results = run_checks(cfg["seed"], cfg["trials"], cfg["faults"], cfg["groups"])
    return [
        {"group": r.group, "passed": r.passed, "cases": r.cases, "seed": f"{r.seed[0]}:{r.seed[1]}", "counterexample": r.counterexample}
        for r in results
    ]


def cmd_word_stats(cfg: dict) -> list[dict]:
    word = cfg["word"]
    k = cfg["k"] or (max(word, default=-1) + 1) or 1
    st = word_stats(word, k)
    product = ""
    if cfg["p"]:
        G = HeisenbergGroup(cfg["p"], cfg["d"])
        Z = sample_generators(G, k, cfg["seed"])
        product = " ".join(map(str, word_product(Z, word).entries))
    return [
        {"letter": i, "w": int(st.w[i]), "c_row": " ".join(map(str, st.c[i])), "product": product}
        for i in range(k)
    ]


COMMANDS = {
    "entropic": cmd_entropic,
    "tv-curve": cmd_tv_curve,
    "typdist": cmd_typdist,
    "ball": cmd_ball,
    "verify": cmd_verify,
    "word-stats": cmd_word_stats,
}


# -- output ----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    if v is None:
        return ""
    return str(v)


def to_csv(command: str, rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = COLUMNS[command]
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def run(command: str, cfg: dict) -> tuple[str, dict]:
    """Execute one resolved config; return CSV text and sidecar metadata."""
    start = time.perf_counter()
    rows = COMMANDS[command](cfg)
    text = to_csv(command, rows)
    meta = {
        "schema": f"heisenwalk/{command}/v{SCHEMA_VERSION}",
        "columns": COLUMNS[command],
        "config": cfg,
        "seed": cfg["seed"],
        "version": __version__,
        "wall_clock_s": time.perf_counter() - start,
        "rows": len(rows),
    }
    return text, meta


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML or JSON parameter file (or a run sidecar)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit master seed")
    common.add_argument("--out", metavar="DIR", help="write <command>.csv and <command>.json here")
    common.add_argument("--threads", type=int, help="worker threads for replicas")
    common.add_argument("--cap", type=int, help="largest group order for dense work")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config field")
    parser = argparse.ArgumentParser(prog="heisenwalk", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    return parser


def _env_overrides() -> dict:
    out = {}
    for key in ("seed", "threads", "cap", "out", "config"):
        value = os.environ.get(ENV_PREFIX + key.upper())
        if value not in (None, ""):
            out[key] = value
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    env = _env_overrides()
    pick = lambda key: getattr(args, key) if getattr(args, key) is not None else env.get(key)  # noqa: E731
    try:
        raw = load_config_file(pick("config"))
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            block = raw.setdefault(args.command, {}) if isinstance(raw.get(args.command), dict) else raw
            block[key.strip()] = yaml.safe_load(value)
        cfg = resolve_config(args.command, raw, {k: pick(k) for k in ("seed", "threads", "cap")})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text, meta = run(args.command, cfg)
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = pick("out")
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        stem = args.command.replace("-", "_")
        (d / f"{stem}.csv").write_text(text)
        (d / f"{stem}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
    if args.command == "verify":
        failed = [r for r in csv.DictReader(io.StringIO(text)) if r["passed"] != "true"]
        for r in failed:
            print(f"FAILED {r['group']} (seed {r['seed']}): {r['counterexample']}", file=sys.stderr)
        if failed:
            return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
