"""Run directories: manifest, binary snapshots, diagnostics CSV.

Everything is written to a private temporary directory next to the target
and renamed into place at the end, so readers never see half a run.  A
failed run keeps whatever it produced plus a ``FAILED`` marker.
"""

from __future__ import annotations

import csv
import json
import os
import shutil
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from fnls_lab import __version__
from fnls_lab.spectral import SpectralField

MANIFEST = "manifest.json"
DIAGNOSTICS_CSV = "diagnostics.csv"
FAILED = "FAILED"


def fmt(x) -> str:
    """Round-trip float formatting used for every CSV number."""
    return "%.17g" % float(x)


class RunDirectory:
    """Context manager yielding a temporary directory that becomes ``target`` on exit.

    On an exception the partial contents are still moved into place, with a
    ``FAILED`` file holding the error message.
    """

    def __init__(self, target):
        self.target = Path(target)
        self.tmp: Optional[Path] = None

    def __enter__(self) -> Path:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        self.tmp = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.", dir=self.target.parent))
        return self.tmp

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            (self.tmp / FAILED).write_text(f"{exc_type.__name__}: {exc}\n", encoding="utf-8")
        if self.target.exists():
            old = Path(tempfile.mkdtemp(prefix=f".{self.target.name}.old.", dir=self.target.parent))
            os.replace(self.target, old / "run")
            shutil.rmtree(old)
        os.replace(self.tmp, self.target)
        return False


def manifest(command: str, config_raw: dict, **extra) -> dict:
    m = {"command": command, "code_version": __version__, "config": config_raw}
    m.update(extra)
    return m


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_trajectory(directory, traj, manifest_data: dict):
    """Snapshots, diagnostics and manifest of a (possibly partial) trajectory."""
    d = Path(directory)
    snaps = d / "snapshots"
    snaps.mkdir(exist_ok=True)
    for k, s in enumerate(traj.snapshots):
        (snaps / f"{k:06d}.fnls").write_bytes(s.to_bytes())
    names = list(traj.diagnostics)
    with open(d / DIAGNOSTICS_CSV, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["time"] + names)
        cols = [np.asarray(traj.diagnostics[n]) for n in names]
        for k, s in enumerate(traj.snapshots):
            if any(k >= len(c) for c in cols):
                break
            w.writerow([fmt(s.time)] + [fmt(c[k]) for c in cols])
    write_json(d / MANIFEST, dict(manifest_data, snapshots=len(traj.snapshots)))


def read_diagnostics(directory) -> dict:
    """Columns of ``diagnostics.csv`` as float arrays keyed by header name."""
    with open(Path(directory) / DIAGNOSTICS_CSV, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(head)}


def read_snapshots(directory, dealias_fraction: float = 2.0 / 3.0) -> list:
    files = sorted((Path(directory) / "snapshots").glob("*.fnls"))
    return [SpectralField.from_bytes(f.read_bytes(), dealias_fraction) for f in files]


def read_manifest(directory) -> dict:
    return json.loads((Path(directory) / MANIFEST).read_text(encoding="utf-8"))
