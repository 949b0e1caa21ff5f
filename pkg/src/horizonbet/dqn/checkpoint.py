"""Checkpoint format: JSON manifest sidecar + float64 weight payload (.npz).

The manifest pins the layer sizes and the feature-schema hash; loading
verifies both so a checkpoint can only drive the feature layout it was
trained on.  Round trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .features import FEATURE_DIM, feature_schema_hash
from .net import QNet

__all__ = ["CheckpointError", "save_checkpoint", "load_checkpoint"]

FORMAT_NAME = "horizonbet-qnet"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Manifest missing, malformed, or inconsistent with this build."""


def _paths(path) -> tuple[Path, Path]:
    base = Path(path)
    if base.suffix in (".json", ".npz"):
        base = base.with_suffix("")
    return base.with_suffix(".json"), base.with_suffix(".npz")


def save_checkpoint(net: QNet, path, extra: dict | None = None) -> Path:
    """Write `<path>.json` + `<path>.npz`; returns the manifest path."""
    manifest_path, weights_path = _paths(path)
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "layer_sizes": list(net.sizes),
        "feature_dim": FEATURE_DIM,
        "feature_schema": feature_schema_hash(),
        "extra": extra or {},
    }
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    arrays = {f"p{i}": p.astype(np.float64) for i, p in enumerate(net.params)}
    np.savez(weights_path, **arrays)
    return manifest_path


def load_checkpoint(path) -> tuple[QNet, dict]:
    manifest_path, weights_path = _paths(path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except FileNotFoundError as exc:
        raise CheckpointError(f"manifest not found: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupted manifest {manifest_path}: {exc}") from exc
    if manifest.get("format") != FORMAT_NAME:
        raise CheckpointError(f"not a {FORMAT_NAME} checkpoint: {manifest_path}")
    if manifest.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('version')}")
    if manifest.get("feature_schema") != feature_schema_hash():
        raise CheckpointError(
            "feature schema mismatch: checkpoint "
            f"{manifest.get('feature_schema')} vs current {feature_schema_hash()}")
    sizes = manifest.get("layer_sizes")
    try:
        with np.load(weights_path) as payload:
            params = [payload[f"p{i}"] for i in range(2 * (len(sizes) - 1))]
    except (FileNotFoundError, KeyError) as exc:
        raise CheckpointError(f"weight payload unreadable: {weights_path}: {exc}") from exc
    net = QNet.__new__(QNet)
    net.sizes = tuple(sizes)
    net.params = [np.array(p, dtype=np.float64) for p in params]
    expected = [(a, b) for a, b in zip(net.sizes, net.sizes[1:])]
    for layer, (fan_in, fan_out) in enumerate(expected):
        if net.params[2 * layer].shape != (fan_in, fan_out) or \
                net.params[2 * layer + 1].shape != (fan_out,):
            raise CheckpointError(f"weight shapes inconsistent with manifest at layer {layer}")
    return net, manifest
