"""File formats: CSV with '.' decimals and ',' separators, JSON reports,
and the compact binary layouts for profiles and operator matrices.

Binary profile layout (little-endian): int32 d, int32 N, float64 L,
then N^d float64 node values in row-major axis order.

Binary matrix layout (little-endian): int32 kind (0 real, 1 complex),
int32 n, then n*n float64 entries row-major; complex matrices store
interleaved (re, im) pairs.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from . import __version__
from .linop import LinearOperatorMatrix
from .velocity_grid import Distribution, GridSpec


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def header_comments(config_hash: str) -> list[str]:
    return [f"# config_hash = {config_hash}", f"# version = {__version__}"]


def write_csv(path, columns: dict, config_hash: str) -> Path:
    """columns: ordered mapping name -> 1-D sequence (equal lengths)."""
    path = Path(path)
    names = list(columns)
    cols = [np.asarray(columns[k]) for k in names]
    n = len(cols[0])
    lines = header_comments(config_hash)
    lines.append(",".join(names))
    for i in range(n):
        row = []
        for c in cols:
            v = c[i]
            row.append(str(v) if isinstance(v, (str, np.str_)) else
                       (str(int(v)) if np.issubdtype(type(v), np.integer) else _fmt(v)))
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, payload: dict, config_hash: str) -> Path:
    path = Path(path)
    body = {"meta": {"config_hash": config_hash, "version": __version__}}
    body.update(payload)
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj)}")


def write_profile_csv(path, f: Distribution, config_hash: str) -> Path:
    g = f.grid
    cols = {f"v{i+1}": g.nodes[:, i] for i in range(g.d)}
    cols["value"] = f.values
    return write_csv(path, cols, config_hash)


def write_profile_binary(path, f: Distribution) -> Path:
    path = Path(path)
    g = f.grid
    with open(path, "wb") as fh:
        fh.write(struct.pack("<iid", g.d, g.N, g.L))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return path


def read_profile_binary(path) -> Distribution:
    path = Path(path)
    raw = path.read_bytes()
    d, N, L = struct.unpack_from("<iid", raw)
    vals = np.frombuffer(raw, dtype="<f8", offset=16)
    grid = GridSpec(d=d, L=L, N=N)
    return Distribution(grid, vals.copy())


def write_matrix_binary(path, A: LinearOperatorMatrix) -> Path:
    path = Path(path)
    kind = 0 if A.is_real else 1
    with open(path, "wb") as fh:
        fh.write(struct.pack("<ii", kind, A.n))
        if kind == 0:
            fh.write(np.ascontiguousarray(A.matrix, dtype="<f8").tobytes())
        else:
            inter = np.empty((A.n, A.n, 2))
            inter[..., 0] = A.matrix.real
            inter[..., 1] = A.matrix.imag
            fh.write(np.ascontiguousarray(inter, dtype="<f8").tobytes())
    return path


def read_matrix_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    kind, n = struct.unpack_from("<ii", raw)
    data = np.frombuffer(raw, dtype="<f8", offset=8)
    if kind == 0:
        return data.reshape(n, n).copy()
    inter = data.reshape(n, n, 2)
    return (inter[..., 0] + 1j * inter[..., 1]).copy()


def write_branches_csv(path, branches, config_hash: str) -> Path:
    """Branch samples with the columns (j, omega_*, rho, alpha,
    re_lambda, im_lambda, residual)."""
    rows = {"j": [], "rho": [], "alpha": [],
            "re_lambda": [], "im_lambda": [], "residual": []}
    d = len(branches[0].omega) if branches else 2
    for i in range(d):
        rows[f"omega_{'xyz'[i]}"] = []
    for br in branches:
        for s in br.samples:
            rows["j"].append(br.label)
            for i in range(d):
                rows[f"omega_{'xyz'[i]}"].append(br.omega[i])
            rows["rho"].append(s.rho)
            rows["alpha"].append(s.alpha)
            rows["re_lambda"].append(s.value.real)
            rows["im_lambda"].append(s.value.imag)
            rows["residual"].append(s.residual)
    ordered = ["j"] + [f"omega_{'xyz'[i]}" for i in range(d)] + \
        ["rho", "alpha", "re_lambda", "im_lambda", "residual"]
    return write_csv(path, {k: rows[k] for k in ordered}, config_hash)
