"""Command-line interface.

Subcommands: layout (one graph -> TSV/SVG), train (config -> checkpoint +
history CSV), eval (two layout sets -> metrics JSON + comparison table),
pareto (config -> frontier CSV), convert (edge list <-> GraphML).

Exit codes: 0 success, 1 runtime error, 2 configuration error. All outputs
are deterministic for a fixed seed and config; the GDLAB_OUTPUT_DIR
environment variable overrides the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import errors, io
from .baselines import PivotMDS, StressMajorization
from .config import RunConfig
from .descent import DescentConfig, optimize_layout
from .graphs import (
    SYNTHETIC_KINDS,
    Graph,
    format_edge_list,
    format_graphml,
    parse_edge_list,
    parse_graphml,
    shortest_paths,
    synthetic_dataset,
)
from .losses import CRITERIA
from .metrics import evaluate_layout, pareto_sweep, spc
from .model import ModelConfig, TrainConfig, infer, train
from .svg import render_svg
from .weighting import CriterionSpec

ENV_OUTPUT_DIR = "GDLAB_OUTPUT_DIR"

_DATASET_KEYS = {"dataset_dir", "synthetic_kinds", "synthetic_count", "synthetic_n_min", "synthetic_n_max"}
_MODEL_KEYS = {
    "criteria",
    "gamma",
    "strategy",
    "beta",
    "tau",
    "batch_size",
    "epochs",
    "lr0",
    "decay",
    "weight_decay",
    "init",
    "max_nodes",
    "n_interior_blocks",
    "layers_per_block",
    "hidden_dim",
    "edge_hidden",
    "hidden_activation",
    "use_residual",
    "use_virtual_edges",
    "block_features",
}
TRAIN_KEYS = {"seed", "output_dir", "checkpoint_name", "history_name"} | _DATASET_KEYS | _MODEL_KEYS
PARETO_KEYS = (
    {"seed", "output_dir", "frontier_name", "engine", "criterion_a", "criterion_b", "strategies", "gamma_grid"}
    | {"steps", "step_size", "optimizer", "steps_per_epoch", "restarts"}
    | _DATASET_KEYS
    | (_MODEL_KEYS - {"criteria", "gamma", "strategy"})
)


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def load_graph(path) -> Graph:
    text = _read_text(path)
    if str(path).endswith(".graphml"):
        return parse_graphml(text)
    return parse_edge_list(text)


def save_graph(g: Graph, path) -> None:
    text = format_graphml(g) if str(path).endswith(".graphml") else format_edge_list(g)
    Path(path).write_text(text, encoding="utf-8")


def _resolve_outdir(configured: str | None) -> Path:
    env = os.environ.get(ENV_OUTPUT_DIR)
    out = Path(env) if env else Path(configured or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_dataset(cfg: RunConfig) -> list[Graph]:
    if "dataset_dir" in cfg.values:
        root = Path(cfg.get_str("dataset_dir"))
        files = sorted(p for p in root.iterdir() if p.is_file())
        graphs = [load_graph(p) for p in files]
        if not graphs:
            raise errors.EmptyInput(f"no graph files in {root}")
        return graphs
    kinds = cfg.get_str_list("synthetic_kinds", ["random_tree", "random_connected"])
    for kind in kinds:
        if kind not in SYNTHETIC_KINDS:
            raise errors.ConfigError(f"unknown synthetic kind {kind!r}")
    return synthetic_dataset(
        kinds,
        cfg.get_int("synthetic_count", 50),
        cfg.get_int("synthetic_n_min", 10),
        cfg.get_int("synthetic_n_max", 30),
        cfg.get_int("seed", 0),
    )


def _model_config(cfg: RunConfig) -> ModelConfig:
    return ModelConfig(
        n_interior_blocks=cfg.get_int("n_interior_blocks", 9),
        layers_per_block=cfg.get_int("layers_per_block", 3),
        hidden_dim=cfg.get_int("hidden_dim", 8),
        edge_hidden=cfg.get_int("edge_hidden", 8),
        hidden_activation=cfg.get_str("hidden_activation", "leaky_relu"),
        use_residual=cfg.get_bool("use_residual", True),
        use_virtual_edges=cfg.get_bool("use_virtual_edges", True),
        block_features=cfg.get_str("block_features", "both"),
    )


def _train_config(cfg: RunConfig) -> TrainConfig:
    criteria = cfg.get_str_list("criteria", ["stress"])
    gamma = cfg.get_float_list("gamma", [1.0] * len(criteria))
    return TrainConfig(
        spec=CriterionSpec.normalized(criteria, gamma),
        strategy=cfg.get_str("strategy", "adaptive"),
        beta=cfg.get_float("beta", 0.1),
        tau=cfg.get_float("tau", 0.9),
        batch_size=cfg.get_int("batch_size", 16),
        epochs=cfg.get_int("epochs", 50),
        lr0=cfg.get_float("lr0", 0.01),
        decay=cfg.get_float("decay", 0.99),
        weight_decay=cfg.get_float("weight_decay", 0.01),
        init=cfg.get_str("init", "pivotmds"),
        seed=cfg.get_int("seed", 0),
        max_nodes=cfg.get_int("max_nodes", 100),
        model=_model_config(cfg),
    )


def _pivot_layout(g: Graph, seed: int) -> np.ndarray:
    d = shortest_paths(g).astype(np.float64)
    return PivotMDS(random_state=seed).fit(d).embedding_


def _cmd_layout(args) -> int:
    g = load_graph(args.graph)
    seed = args.seed
    if args.method == "pivotmds":
        x = _pivot_layout(g, seed)
    elif args.method == "majorization":
        d = shortest_paths(g).astype(np.float64)
        x = StressMajorization(tol=args.tol, max_sweeps=args.max_sweeps, random_state=seed).fit(
            d, init=PivotMDS(random_state=seed).fit(d).embedding_
        ).embedding_
    elif args.method == "direct":
        criteria = [c.strip() for c in args.criteria.split(",") if c.strip()]
        gamma = [float(v) for v in args.gamma.split(",")] if args.gamma else [1.0] * len(criteria)
        cfg = DescentConfig(
            spec=CriterionSpec.normalized(criteria, gamma),
            strategy=args.strategy,
            steps=args.steps,
            step_size=args.step_size,
            optimizer=args.optimizer,
            restarts=args.restarts,
            seed=seed,
        )
        x, _ = optimize_layout(g, _pivot_layout(g, seed), cfg)
    else:  # model
        if not args.checkpoint:
            raise errors.ConfigError("--checkpoint is required with --method model")
        params = io.load_checkpoint(args.checkpoint)
        x = infer(g, params, init="pivotmds", seed=seed)

    out = Path(args.out) if args.out else _resolve_outdir(args.out_dir) / (Path(args.graph).stem + ".layout.tsv")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(io.format_layout(x), encoding="utf-8")
    print(f"wrote {out}")
    if args.svg:
        Path(args.svg).write_text(render_svg(g, x), encoding="utf-8")
        print(f"wrote {args.svg}")
    return 0


def _cmd_train(args) -> int:
    cfg = RunConfig.parse(_read_text(args.config))
    cfg.require_known(TRAIN_KEYS)
    tc = _train_config(cfg)
    dataset = _load_dataset(cfg)
    params, history = train(dataset, tc)
    outdir = _resolve_outdir(cfg.values.get("output_dir"))
    ckpt = outdir / cfg.get_str("checkpoint_name", "checkpoint.json")
    hist = outdir / cfg.get_str("history_name", "history.csv")
    io.save_checkpoint(params, ckpt)
    hist.write_text(io.format_history_csv(history), encoding="utf-8")
    print(f"model parameters: {params.n_parameters()}")
    print(f"wrote {ckpt}")
    print(f"wrote {hist}")
    return 0


def _find_layout(d: Path, stem: str) -> Path:
    for cand in (d / f"{stem}.tsv", d / f"{stem}.layout.tsv"):
        if cand.is_file():
            return cand
    raise errors.EmptyInput(f"no layout for {stem!r} in {d}")


def _cmd_eval(args) -> int:
    root = Path(args.graphs)
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise errors.EmptyInput(f"no graph files in {root}")
    names, reports_a, reports_b = [], [], []
    for p in files:
        g = load_graph(p)
        xa = io.parse_layout(_read_text(_find_layout(Path(args.layouts_a), p.stem)))
        xb = io.parse_layout(_read_text(_find_layout(Path(args.layouts_b), p.stem)))
        names.append(p.name)
        reports_a.append(evaluate_layout(g, xa))
        reports_b.append(evaluate_layout(g, xb))

    doc = {"graphs": names, "criteria": {}}
    print(f"{'criterion':<10} {'mean_a':>12} {'mean_b':>12} {'spc_pct':>9}")
    for name in CRITERIA:
        va = [r.value(name) for r in reports_a]
        vb = [r.value(name) for r in reports_b]
        try:
            pct = spc(va, vb)
        except errors.NonPositiveValue:
            pct = None  # criterion hit exactly 0 somewhere; SPC undefined
        doc["criteria"][name] = {"a": va, "b": vb, "spc": pct}
        shown = f"{pct:9.3f}" if pct is not None else "      n/a"
        print(f"{name:<10} {float(np.mean(va)):12.6g} {float(np.mean(vb)):12.6g} {shown}")
    out = Path(args.out) if args.out else _resolve_outdir(args.out_dir) / "metrics.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(io.format_metrics_json(doc), encoding="utf-8")
    print(f"wrote {out}")
    return 0


def _cmd_pareto(args) -> int:
    cfg = RunConfig.parse(_read_text(args.config))
    cfg.require_known(PARETO_KEYS)
    engine = cfg.get_str("engine", "direct")
    pair = (cfg.get_str("criterion_a"), cfg.get_str("criterion_b"))
    strategies = cfg.get_str_list("strategies", ["fixed", "adaptive", "softadapt"])
    grid = cfg.get_pair_grid("gamma_grid")
    seed = cfg.get_int("seed", 0)
    dataset = _load_dataset(cfg)
    if engine == "direct":
        engine_config = DescentConfig(
            steps=cfg.get_int("steps", 500),
            step_size=cfg.get_float("step_size", 0.05),
            optimizer=cfg.get_str("optimizer", "adam"),
            steps_per_epoch=cfg.get_int("steps_per_epoch", 50),
            restarts=cfg.get_int("restarts", 1),
            beta=cfg.get_float("beta", 0.1),
            tau=cfg.get_float("tau", 0.9),
            seed=seed,
        )
    elif engine == "model":
        rc = RunConfig(values={k: v for k, v in cfg.values.items() if k in _MODEL_KEYS or k == "seed"})
        engine_config = _train_config(rc)
    else:
        raise errors.ConfigError(f"unknown engine {engine!r}")
    points = pareto_sweep(dataset, pair, strategies, grid, engine=engine, engine_config=engine_config, seed=seed)
    outdir = _resolve_outdir(cfg.values.get("output_dir"))
    out = outdir / cfg.get_str("frontier_name", "pareto.csv")
    out.write_text(io.format_pareto_csv(points), encoding="utf-8")
    print(f"wrote {out}")
    return 0


def _cmd_convert(args) -> int:
    g = load_graph(args.input)
    save_graph(g, args.output)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gdlab", description="Graph layout laboratory: spectral and neural layouts, aesthetic criteria, comparisons.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="lay out one graph and write a TSV (and optional SVG)")
    p.add_argument("graph", help="edge-list or .graphml file")
    p.add_argument("--method", required=True, choices=["pivotmds", "majorization", "direct", "model"])
    p.add_argument("--out", help="layout TSV path (default: <stem>.layout.tsv in the output dir)")
    p.add_argument("--out-dir", default=None, help="output directory for derived paths")
    p.add_argument("--svg", help="also render an SVG to this path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint", help="trained model checkpoint (method=model)")
    p.add_argument("--criteria", default="stress", help="comma list for method=direct")
    p.add_argument("--gamma", default=None, help="comma list of importance factors")
    p.add_argument("--strategy", default="adaptive", choices=["fixed", "adaptive", "softadapt"])
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--step-size", type=float, default=0.05)
    p.add_argument("--optimizer", default="adam", choices=["plain", "adam"])
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-7, help="majorization stop tolerance")
    p.add_argument("--max-sweeps", type=int, default=300)
    p.set_defaults(func=_cmd_layout)

    p = sub.add_parser("train", help="train the neural layout model from a config file")
    p.add_argument("config")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="compare two layout sets over a graph directory")
    p.add_argument("--graphs", required=True)
    p.add_argument("--layouts-a", required=True)
    p.add_argument("--layouts-b", required=True)
    p.add_argument("--out", help="metrics JSON path (default: metrics.json in the output dir)")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("pareto", help="sweep weight settings and emit the frontier CSV")
    p.add_argument("config")
    p.set_defaults(func=_cmd_pareto)

    p = sub.add_parser("convert", help="convert between edge-list and GraphML")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=_cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except errors.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except errors.GDLabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
