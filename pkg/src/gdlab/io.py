"""Text formats: layout TSV, history/trajectory/frontier CSV, metrics JSON,
and the model checkpoint document.

All floats are written with repr semantics (shortest string that parses back
to the same double), so every format round-trips bit-exactly and identical
runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import errors
from .descent import Trajectory
from .metrics import ParetoPoint
from .model import LayoutModelParams, EdgeFeatureNetParams, LayerParams, ModelConfig, TrainHistory
from .nn import BatchNormState, DenseParams
from .autodiff import Tensor
from .validation import check_layout

CHECKPOINT_FORMAT = "gdlab-checkpoint"
CHECKPOINT_VERSION = 1


def _f(v: float) -> str:
    return repr(float(v))


def format_layout(x) -> str:
    """One `node_id<TAB>x<TAB>y` line per node, ids in order."""
    x = check_layout(x)
    return "".join(f"{i}\t{_f(row[0])}\t{_f(row[1])}\n" for i, row in enumerate(x))


def parse_layout(text: str) -> np.ndarray:
    """Inverse of format_layout; ids must be a permutation of 0..n-1."""
    rows = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise errors.MalformedLine(f"line {ln}: expected 3 tab-separated fields")
        try:
            i, xv, yv = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as e:
            raise errors.MalformedLine(f"line {ln}: {e}") from None
        if i in rows:
            raise errors.MalformedLine(f"line {ln}: duplicate node id {i}")
        rows[i] = (xv, yv)
    if not rows:
        raise errors.EmptyInput("no layout rows")
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise errors.UnknownNodeRef("node ids must be exactly 0..n-1")
    return check_layout(np.array([rows[i] for i in range(n)], dtype=np.float64))


def format_history_csv(h: TrainHistory) -> str:
    cols = ["epoch"] + [f"loss_{c}" for c in h.criteria] + [f"alpha_{c}" for c in h.criteria] + ["lr"]
    out = [",".join(cols)]
    for r in h.rows:
        cells = [str(r.epoch)] + [_f(v) for v in r.mean_losses] + [_f(a) for a in r.alpha] + [_f(r.lr)]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def format_trajectory_csv(t: Trajectory) -> str:
    cols = ["step"] + [f"loss_{c}" for c in t.criteria] + ["composite"] + [f"alpha_{c}" for c in t.criteria]
    out = [",".join(cols)]
    for r in t.rows:
        cells = [str(r.step)] + [_f(v) for v in r.values] + [_f(r.composite)] + [_f(a) for a in r.alpha]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def format_pareto_csv(points: list[ParetoPoint]) -> str:
    out = ["strategy,gamma_a,gamma_b,mean_loss_a,mean_loss_b"]
    for p in points:
        out.append(f"{p.strategy},{_f(p.gamma_a)},{_f(p.gamma_b)},{_f(p.mean_loss_a)},{_f(p.mean_loss_b)}")
    return "\n".join(out) + "\n"


def format_metrics_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _dense_to_doc(p: DenseParams) -> dict:
    return {"w": p.w.data.tolist(), "b": p.b.data.tolist()}


def _dense_from_doc(doc: dict) -> DenseParams:
    return DenseParams(
        w=Tensor(np.array(doc["w"], dtype=np.float64), requires_grad=True),
        b=Tensor(np.array(doc["b"], dtype=np.float64), requires_grad=True),
    )


def _layer_to_doc(lp: LayerParams) -> dict:
    doc = {
        "w": _dense_to_doc(lp.w),
        "edge_net": {
            "hidden": _dense_to_doc(lp.edge_net.hidden),
            "out": _dense_to_doc(lp.edge_net.out),
            "f_in": lp.edge_net.f_in,
            "f_out": lp.edge_net.f_out,
            "hidden_activation": lp.edge_net.hidden_activation,
        },
        "bn": None,
    }
    if lp.bn is not None:
        doc["bn"] = {
            "scale": lp.bn.scale.data.tolist(),
            "shift": lp.bn.shift.data.tolist(),
            "running_mean": lp.bn.running_mean.tolist(),
            "running_var": lp.bn.running_var.tolist(),
            "momentum": lp.bn.momentum,
            "eps": lp.bn.eps,
        }
    return doc


def _layer_from_doc(doc: dict) -> LayerParams:
    en = doc["edge_net"]
    bn = None
    if doc["bn"] is not None:
        b = doc["bn"]
        bn = BatchNormState(
            scale=Tensor(np.array(b["scale"], dtype=np.float64), requires_grad=True),
            shift=Tensor(np.array(b["shift"], dtype=np.float64), requires_grad=True),
            running_mean=np.array(b["running_mean"], dtype=np.float64),
            running_var=np.array(b["running_var"], dtype=np.float64),
            momentum=float(b["momentum"]),
            eps=float(b["eps"]),
        )
    return LayerParams(
        w=_dense_from_doc(doc["w"]),
        edge_net=EdgeFeatureNetParams(
            hidden=_dense_from_doc(en["hidden"]),
            out=_dense_from_doc(en["out"]),
            f_in=int(en["f_in"]),
            f_out=int(en["f_out"]),
            hidden_activation=str(en["hidden_activation"]),
        ),
        bn=bn,
    )


def format_checkpoint(p: LayoutModelParams) -> str:
    cfg = p.config
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model": {
            "n_interior_blocks": cfg.n_interior_blocks,
            "layers_per_block": cfg.layers_per_block,
            "hidden_dim": cfg.hidden_dim,
            "edge_hidden": cfg.edge_hidden,
            "hidden_activation": cfg.hidden_activation,
            "use_residual": cfg.use_residual,
            "use_virtual_edges": cfg.use_virtual_edges,
            "block_features": cfg.block_features,
            "bn_momentum": cfg.bn_momentum,
            "bn_eps": cfg.bn_eps,
        },
        "blocks": {
            "input": [_layer_to_doc(lp) for lp in p.input_block],
            "interior": [[_layer_to_doc(lp) for lp in blk] for blk in p.interior],
            "output": [_layer_to_doc(lp) for lp in p.output_block],
        },
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def parse_checkpoint(text: str) -> LayoutModelParams:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise errors.ConfigError(f"checkpoint is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise errors.ConfigError("not a layout-model checkpoint document")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise errors.ConfigError(f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        cfg = ModelConfig(**doc["model"])
        blocks = doc["blocks"]
        return LayoutModelParams(
            config=cfg,
            input_block=[_layer_from_doc(d) for d in blocks["input"]],
            interior=[[_layer_from_doc(d) for d in blk] for blk in blocks["interior"]],
            output_block=[_layer_from_doc(d) for d in blocks["output"]],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise errors.ConfigError(f"malformed checkpoint: {e}") from None


def save_checkpoint(p: LayoutModelParams, path) -> None:
    Path(path).write_text(format_checkpoint(p), encoding="utf-8")


def load_checkpoint(path) -> LayoutModelParams:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise errors.ConfigError(f"cannot read checkpoint {path}: {e}") from None
    return parse_checkpoint(text)
