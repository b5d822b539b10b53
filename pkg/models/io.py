"""
File formats shared by every pipeline stage:
 - matrices as CSV with row/column headers (pandas)
 - manifests and reports as sorted, indented JSON
 - hulls as ASCII PLY for external 3D viewers
"""

from __future__ import annotations
import json
import os
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from solver.errors import DataError


def _ensure_parent(path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)


def matrix_frame(
    matrix: NDArray,
    row_labels: Optional[Sequence[str]] = None,
    col_labels: Optional[Sequence[str]] = None,
) -> pd.DataFrame:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {matrix.shape}")
    rows = list(row_labels) if row_labels is not None else [f"P{i}" for i in range(matrix.shape[0])]
    cols = list(col_labels) if col_labels is not None else [f"c{j}" for j in range(matrix.shape[1])]
    return pd.DataFrame(matrix, index=rows, columns=cols)


def design_columns(n_cols: int, unit_column: bool = True) -> List[str]:
    """Column headers: 'u' for the unit effect, then M1..Mn."""
    if unit_column:
        return ["u"] + [f"M{j}" for j in range(1, n_cols)]
    return [f"M{j}" for j in range(1, n_cols + 1)]


def write_matrix_csv(
    path: str,
    matrix: NDArray,
    row_labels: Optional[Sequence[str]] = None,
    col_labels: Optional[Sequence[str]] = None,
) -> None:
    _ensure_parent(path)
    matrix_frame(matrix, row_labels, col_labels).to_csv(path)


def read_matrix_csv(path: str, dtype: Any = float) -> NDArray:
    if not os.path.exists(path):
        raise DataError(f"missing matrix file {path}")
    try:
        frame = pd.read_csv(path, index_col=0)
    except (ValueError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    return frame.to_numpy(dtype=dtype)


def write_json(path: str, obj: Any) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise DataError(f"missing file {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise DataError(f"cannot parse {path}: {exc}") from exc


def complex_to_pairs(arr: NDArray) -> Any:
    """Nested lists with every complex entry written as [re, im]."""
    arr = np.asarray(arr, dtype=np.complex128)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def pairs_to_complex(obj: Any) -> NDArray[np.complex128]:
    arr = np.asarray(obj, dtype=float)
    if arr.shape[-1] != 2:
        raise DataError("complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def write_ply(path: str, points: NDArray, faces: Iterable[Sequence[int]]) -> None:
    points = np.asarray(points, dtype=float)
    faces = [list(map(int, f)) for f in faces]
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(points)}\n")
        f.write("property float x\nproperty float y\nproperty float z\n")
        f.write(f"element face {len(faces)}\n")
        f.write("property list uchar int vertex_indices\nend_header\n")
        for p in points:
            f.write(" ".join(repr(float(c)) for c in p) + "\n")
        for face in faces:
            f.write(f"{len(face)} " + " ".join(str(v) for v in face) + "\n")
