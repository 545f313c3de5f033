"""
Plain-text data files

Complex vectors: first line `N`, then one `re,im` per line.
Complex matrices: first line `M N`, then M*N `re,im` lines in row-major order.
Real vectors (weights, priors): first line `N`, then one value per line.
Values are written with 17 significant digits so they read back bit-exact.
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from utils.errors import DataFileError

logger = logging.getLogger(__name__)

FMT = "%.17g"


def _read_header(path: Path) -> Tuple[int, ...]:
    try:
        with open(path, "r") as f:
            first = f.readline()
    except OSError as e:
        raise DataFileError(f"cannot read {path}: {e}")
    try:
        dims = tuple(int(tok) for tok in first.split())
    except ValueError:
        raise DataFileError(f"{path}: bad dimension header {first.strip()!r}")
    if not dims or any(d < 0 for d in dims):
        raise DataFileError(f"{path}: bad dimension header {first.strip()!r}")
    return dims


def _read_body(path: Path, columns: int) -> np.ndarray:
    try:
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, dtype=float)
    except ValueError as e:
        raise DataFileError(f"{path}: {e}")
    if body.size == 0:
        return np.zeros((0, columns))
    if body.shape[1] != columns:
        raise DataFileError(f"{path}: expected {columns} column(s) per line, got {body.shape[1]}")
    return body


def save_complex_vector(path, values):
    values = np.asarray(values, dtype=complex).ravel()
    data = np.column_stack([values.real, values.imag])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=f"{values.shape[0]}", comments="")


def load_complex_vector(path) -> np.ndarray:
    path = Path(path)
    dims = _read_header(path)
    if len(dims) != 1:
        raise DataFileError(f"{path}: vector header must hold one dimension, got {dims}")
    body = _read_body(path, 2)
    if body.shape[0] != dims[0]:
        raise DataFileError(f"{path}: header says {dims[0]} entries, found {body.shape[0]}")
    return body[:, 0] + 1j * body[:, 1]


def save_complex_matrix(path, matrix):
    matrix = np.asarray(matrix, dtype=complex)
    M, N = matrix.shape
    flat = matrix.reshape(-1)
    data = np.column_stack([flat.real, flat.imag])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=f"{M} {N}", comments="")


def load_complex_matrix(path) -> np.ndarray:
    path = Path(path)
    dims = _read_header(path)
    if len(dims) != 2:
        raise DataFileError(f"{path}: matrix header must be 'M N', got {dims}")
    M, N = dims
    body = _read_body(path, 2)
    if body.shape[0] != M * N:
        raise DataFileError(f"{path}: header says {M}x{N}, found {body.shape[0]} entries")
    return (body[:, 0] + 1j * body[:, 1]).reshape(M, N)


def save_real_vector(path, values):
    values = np.asarray(values, dtype=float).ravel()
    np.savetxt(path, values, fmt=FMT, header=f"{values.shape[0]}", comments="")


def load_real_vector(path) -> np.ndarray:
    path = Path(path)
    dims = _read_header(path)
    if len(dims) != 1:
        raise DataFileError(f"{path}: vector header must hold one dimension, got {dims}")
    body = _read_body(path, 1)[:, 0]
    if body.shape[0] != dims[0]:
        raise DataFileError(f"{path}: header says {dims[0]} entries, found {body.shape[0]}")
    return body


def dump_scene(directory, A, y, x0, weights, prior=None) -> dict:
    """Write a scene as y.txt, A.txt, x0.txt, weights.txt (and prior.txt)"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "A": directory / "A.txt",
        "y": directory / "y.txt",
        "x0": directory / "x0.txt",
        "weights": directory / "weights.txt",
    }
    save_complex_matrix(paths["A"], A)
    save_complex_vector(paths["y"], y)
    save_complex_vector(paths["x0"], x0)
    save_real_vector(paths["weights"], weights)
    if prior is not None:
        paths["prior"] = directory / "prior.txt"
        save_real_vector(paths["prior"], prior)
    logger.info(f"Scene files written to {directory}")
    return paths
