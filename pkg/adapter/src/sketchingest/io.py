"""Reading H5AD files and writing validated sketch JSON.

The reader is built directly on h5py and covers the subset of the
format the sketch builders need: the X matrix (dense dataset or a
CSR/CSC group), plus the obs and var frames with their index and plain
or categorical columns. Layers, obsm, raw and uns are ignored on
purpose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Union

import h5py
import numpy as np
from scipy import sparse

from sketchbench.sketches import load_sketch

from .errors import InputFormatError

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ExpressionMatrix:
    """Cells x genes matrix with decoded identifiers and cell metadata."""

    matrix: np.ndarray
    cell_names: tuple[str, ...]
    gene_names: tuple[str, ...]
    obs: Mapping[str, np.ndarray]

    @property
    def n_cells(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_genes(self) -> int:
        return self.matrix.shape[1]


def _as_str(value: Any) -> str:
    if isinstance(value, bytes):
        return value.decode("utf-8")
    return str(value)


def _decode(arr: np.ndarray) -> np.ndarray:
    """Byte strings become str; numeric columns pass through unchanged."""
    arr = np.asarray(arr)
    if arr.dtype.kind in ("S", "O"):
        return np.array([_as_str(v) for v in arr], dtype=object)
    return arr


def _read_column(node, path: str) -> np.ndarray:
    if isinstance(node, h5py.Dataset):
        return _decode(node[()])
    if isinstance(node, h5py.Group) and "codes" in node and "categories" in node:
        codes = np.asarray(node["codes"][()], dtype=int)
        cats = _decode(node["categories"][()])
        # code -1 is the categorical missing value
        return np.array(
            [cats[c] if c >= 0 else "" for c in codes], dtype=object
        )
    raise InputFormatError(f"{path}: unsupported column encoding")


def _read_frame(group: h5py.Group, path: str) -> tuple[tuple[str, ...], dict]:
    index_key = _as_str(group.attrs.get("_index", "_index"))
    if index_key not in group:
        raise InputFormatError(f"{path}: missing index column {index_key!r}")
    names = tuple(_as_str(v) for v in _decode(group[index_key][()]))
    columns: dict[str, np.ndarray] = {}
    for key in group:
        if key == index_key or key.startswith("__"):
            continue
        columns[key] = _read_column(group[key], f"{path}/{key}")
    return names, columns


def _read_matrix(node, path: str) -> np.ndarray:
    if isinstance(node, h5py.Dataset):
        return np.asarray(node[()], dtype=float)
    if not isinstance(node, h5py.Group):
        raise InputFormatError(f"{path}: X must be a dataset or a sparse group")
    for key in ("data", "indices", "indptr"):
        if key not in node:
            raise InputFormatError(f"{path}: sparse X lacks {key!r}")
    fmt = _as_str(
        node.attrs.get("encoding-type", node.attrs.get("h5sparse_format", ""))
    )
    shape = node.attrs.get("shape", node.attrs.get("h5sparse_shape"))
    if shape is None:
        raise InputFormatError(f"{path}: sparse X lacks a shape attribute")
    shape = tuple(int(s) for s in np.asarray(shape))
    args = (node["data"][()], node["indices"][()], node["indptr"][()])
    if fmt.startswith("csr"):
        mat = sparse.csr_matrix(args, shape=shape)
    elif fmt.startswith("csc"):
        mat = sparse.csc_matrix(args, shape=shape)
    else:
        raise InputFormatError(f"{path}: unknown sparse encoding {fmt!r}")
    return np.asarray(mat.toarray(), dtype=float)


def read_h5ad(path: PathLike) -> ExpressionMatrix:
    """Load X, obs and var; dimensions are checked against identifiers."""
    path = Path(path)
    try:
        handle = h5py.File(path, "r")
    except (OSError, IOError) as exc:
        raise InputFormatError(f"{path}: cannot open ({exc})") from None
    with handle as f:
        for key in ("X", "obs", "var"):
            if key not in f:
                raise InputFormatError(f"{path}: missing {key!r} group")
        matrix = _read_matrix(f["X"], f"{path}:/X")
        cell_names, obs = _read_frame(f["obs"], f"{path}:/obs")
        gene_names, _ = _read_frame(f["var"], f"{path}:/var")
    if matrix.ndim != 2:
        raise InputFormatError(f"{path}: X must be two-dimensional")
    if matrix.shape != (len(cell_names), len(gene_names)):
        raise InputFormatError(
            f"{path}: X is {matrix.shape}, obs lists {len(cell_names)} cells "
            f"and var lists {len(gene_names)} genes"
        )
    return ExpressionMatrix(matrix, cell_names, gene_names, obs)


def write_sketch(sketch: dict, out_path: PathLike) -> Path:
    """Serialize a sketch dict, then gate it through the benchmark loader.

    load_sketch re-reads the written file and raises on any schema or
    invariant violation, so a file that lands on disk without an
    exception is known-consumable by the benchmark.
    """
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(sketch, indent=2, ensure_ascii=False) + "\n"
    out_path.write_text(text, encoding="utf-8")
    load_sketch(out_path)
    return out_path
