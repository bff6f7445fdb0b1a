"""Run directories: deterministic tables, checkpoints, sealed manifests."""

from __future__ import annotations

import json
import os
import stat
import time

import numpy as np

from .params import EstimateRecord, ValidationError

CHECKPOINT_EVERY = 10_000  # paths between checkpoints

_FMT = "%.17g"  # round-trips every float64 exactly


def format_float(x) -> str:
    return _FMT % float(x)


def _jsonable(obj):
    if isinstance(obj, EstimateRecord):
        return {"__estimate__": True, "fingerprint": obj.fingerprint,
                "seed": obj.seed, "chunks": [list(c) for c in obj.chunks]}
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def record_from_dict(payload: dict) -> EstimateRecord:
    return EstimateRecord(
        fingerprint=payload["fingerprint"], seed=payload["seed"],
        chunks=tuple((int(i), int(n), float(s), float(ss))
                     for i, n, s, ss in payload["chunks"]))


class ResultStore:
    """One experiment run on disk.

    The directory name is derived from the run name and the config
    fingerprint, so identical configurations land in the same place and
    their numeric tables are byte-identical across reruns. seal() writes
    the manifest and drops write permission on every artifact; a sealed
    run refuses further writes.
    """

    def __init__(self, root: str, name: str, config_fingerprint: str,
                 resume: bool = False, force: bool = False):
        self.root = root
        self.name = name
        self.config_fingerprint = config_fingerprint
        self.run_id = f"{name}-{config_fingerprint}"
        self.path = os.path.join(root, self.run_id)
        self._t0 = time.monotonic()
        self._artifacts: list[str] = []
        manifest = os.path.join(self.path, "manifest.json")
        if os.path.exists(manifest) and not force:
            raise ValidationError(
                f"run {self.run_id} is already sealed at {self.path} "
                f"(use force to redo it)")
        if os.path.exists(self.path) and not resume:
            for entry in sorted(os.listdir(self.path)):
                os.chmod(os.path.join(self.path, entry), 0o644)
                os.remove(os.path.join(self.path, entry))
        os.makedirs(self.path, exist_ok=True)

    @property
    def sealed(self) -> bool:
        return os.path.exists(os.path.join(self.path, "manifest.json"))

    def _target(self, filename: str) -> str:
        if self.sealed:
            raise ValidationError(f"run {self.run_id} is sealed")
        if filename not in self._artifacts:
            self._artifacts.append(filename)
        return os.path.join(self.path, filename)

    def write_table(self, filename: str, header: list[str], rows) -> str:
        """CSV numeric table; every float rendered with 17 significant
        digits so a rerun reproduces the file byte for byte."""
        target = self._target(filename)
        with open(target, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(
                    str(v) if isinstance(v, (int, np.integer, str))
                    else format_float(v) for v in row) + "\n")
        return target

    def write_json(self, filename: str, payload: dict) -> str:
        target = self._target(filename)
        with open(target, "w") as fh:
            json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return target

    def checkpoint(self, paths_done: int, state: dict) -> str:
        """Progress snapshot; paths_done must increase monotonically."""
        prev = self.load_checkpoint()
        if prev is not None and paths_done <= prev["paths_done"]:
            raise ValidationError(
                f"checkpoint counter went backwards: {paths_done} after "
                f"{prev['paths_done']}")
        return self.write_json("checkpoint.json",
                               {"paths_done": paths_done, "state": state})

    def load_checkpoint(self) -> dict | None:
        target = os.path.join(self.path, "checkpoint.json")
        if not os.path.exists(target):
            return None
        with open(target) as fh:
            return json.load(fh)

    def seal(self) -> str:
        manifest = {
            "run_id": self.run_id,
            "config_fingerprint": self.config_fingerprint,
            "artifacts": sorted(self._artifacts),
            "elapsed_seconds": float(format_float(
                time.monotonic() - self._t0)),
        }
        target = self._target("manifest.json")
        self._artifacts.remove("manifest.json")
        with open(target, "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        ro = stat.S_IRUSR | stat.S_IRGRP | stat.S_IROTH
        for entry in os.listdir(self.path):
            os.chmod(os.path.join(self.path, entry), ro)
        return target
