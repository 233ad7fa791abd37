"""Versioned checkpoint archive.

Layout: 8-byte magic, uint32 version, uint64 header length, a canonical
JSON header (config snapshot plus per-group tensor index), then raw
little-endian tensor bytes. Writing the same state twice produces
byte-identical files; the exported inference archive simply omits the
"dan" group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from dadet.errors import CheckpointError

MAGIC = b"DADETCKP"
VERSION = 1
DETECTOR_GROUPS = ("backbone", "neck", "head")
FULL_GROUPS = DETECTOR_GROUPS + ("dan",)


@dataclass
class Checkpoint:
    config: dict
    groups: dict[str, dict[str, torch.Tensor]]


def save_checkpoint(path: str | Path, config: dict, groups: dict[str, dict[str, torch.Tensor]]) -> None:
    index: dict[str, list[dict]] = {}
    blobs: list[bytes] = []
    offset = 0
    for group in sorted(groups):
        entries = []
        for name, tensor in groups[group].items():
            arr = np.ascontiguousarray(tensor.detach().cpu().numpy())
            raw = arr.tobytes()
            entries.append(
                {
                    "name": name,
                    "dtype": str(arr.dtype),
                    "shape": list(arr.shape),
                    "offset": offset,
                    "nbytes": len(raw),
                }
            )
            blobs.append(raw)
            offset += len(raw)
        index[group] = entries
    header = json.dumps({"config": config, "groups": index}, sort_keys=True, separators=(",", ":")).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(VERSION.to_bytes(4, "little"))
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path: str | Path, required_groups: tuple[str, ...] = DETECTOR_GROUPS) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if len(data) < len(MAGIC) + 12 or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint archive (bad magic)")
    version = int.from_bytes(data[8:12], "little")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}, expected {VERSION}")
    header_len = int.from_bytes(data[12:20], "little")
    try:
        header = json.loads(data[20 : 20 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header in {path}: {exc}") from exc
    payload = data[20 + header_len :]

    for group in required_groups:
        if group not in header["groups"]:
            raise CheckpointError(f"checkpoint {path} is missing parameter group '{group}'")

    groups: dict[str, dict[str, torch.Tensor]] = {}
    for group, entries in header["groups"].items():
        tensors: dict[str, torch.Tensor] = {}
        for entry in entries:
            start, nbytes = entry["offset"], entry["nbytes"]
            if start + nbytes > len(payload):
                raise CheckpointError(
                    f"checkpoint {path} payload truncated at tensor '{group}.{entry['name']}'"
                )
            arr = np.frombuffer(payload[start : start + nbytes], dtype=entry["dtype"]).reshape(entry["shape"])
            tensors[entry["name"]] = torch.from_numpy(arr.copy())
        groups[group] = tensors
    return Checkpoint(config=header["config"], groups=groups)


def export_inference_model(checkpoint_path: str | Path, out_path: str | Path) -> None:
    """Strip the adaptation network: the exported archive carries detector groups only."""
    ckpt = load_checkpoint(checkpoint_path, required_groups=FULL_GROUPS)
    detector_only = {g: ckpt.groups[g] for g in DETECTOR_GROUPS}
    save_checkpoint(out_path, ckpt.config, detector_only)


def detector_state_groups(model: torch.nn.Module) -> dict[str, dict[str, torch.Tensor]]:
    return {
        "backbone": model.backbone.state_dict(),
        "neck": model.neck.state_dict(),
        "head": model.head.state_dict(),
    }


def load_detector_state(model: torch.nn.Module, groups: dict[str, dict[str, torch.Tensor]]) -> None:
    try:
        model.backbone.load_state_dict(groups["backbone"])
        model.neck.load_state_dict(groups["neck"])
        model.head.load_state_dict(groups["head"])
    except (KeyError, RuntimeError) as exc:
        raise CheckpointError(f"checkpoint does not match the configured detector: {exc}") from exc
