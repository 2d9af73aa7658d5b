"""Rating-matrix CSV files and their ground-truth sidecars."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import rating_matrix


def write_matrix_csv(path, m: np.ndarray, subject_ids: Optional[Sequence[str]] = None) -> None:
    m = np.asarray(m)
    ids = subject_ids or [f"s{i + 1}" for i in range(m.shape[0])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject"] + [f"stim_{j + 1}" for j in range(m.shape[1])])
        for sid, row in zip(ids, m.tolist()):
            w.writerow([sid] + row)


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0] or rows[0][0].strip() != "subject":
        raise ValueError(f"{path}: header must start with 'subject'")
    n_items = len(rows[0]) - 1
    cells = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) - 1 != n_items:
            raise ValueError(f"{path}:{lineno}: expected {n_items} ratings, got {len(row) - 1}")
        try:
            cells.append([int(c) for c in row[1:]])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: ratings must be integers") from None
    return rating_matrix(cells)


def truth_path(matrix_path) -> Path:
    p = Path(matrix_path)
    return p.with_name(p.stem + ".truth.json")


def write_truth(matrix_path, truth, bias=None, inconsistency=None, seed=None) -> Path:
    payload = {"truth": list(map(float, truth))}
    if bias is not None:
        payload["bias"] = list(map(float, bias))
        payload["inconsistency"] = list(map(float, inconsistency))
    if seed is not None:
        payload["seed"] = int(seed)
    out = truth_path(matrix_path)
    out.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return out


def read_truth(path) -> np.ndarray:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    values = data["truth"] if isinstance(data, dict) else data
    return np.asarray(values, dtype=float)


def read_mask(path) -> list[bool]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        data = data["inlier_mask"]
    return [bool(x) for x in data]
