"""File output: atomic CSV/JSON writers and phase space grid formats."""

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from typing import Any, Dict, IO, Iterable, Iterator, Sequence

import numpy as np

from src import __version__
from src.errors import ConfigError
from src.fock import FockDensityMatrix
from src.phasespace import GridSpec, PhaseSpaceGrid


logger = logging.getLogger(__name__)

VERSION_LINE = f"# eightport-homodyne {__version__}"
GRID_FORMAT = "eightport-grid"


@contextmanager
def atomic_open(path: str, binary: bool = False) -> Iterator[IO]:
    """
    Open a temporary file next to path and move it into place on success.

    Nothing is left at path when the body raises.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb" if binary else "w", newline=None if binary else "") as handle:
            yield handle
        os.replace(temp_path, path)
        logger.debug(f"Wrote {path}")
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write rows under a version line and a header row, floats with 17 significant digits."""
    with atomic_open(path) as handle:
        handle.write(VERSION_LINE + "\n")
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(format_value(v) for v in row) + "\n")


def read_csv(path: str) -> Dict[str, np.ndarray]:
    """Read a CSV written by write_csv into named float columns."""
    with open(path, "r") as handle:
        lines = [line.strip() for line in handle if line.strip() and not line.startswith("#")]
    if not lines:
        raise ConfigError(f"{path} contains no CSV header")
    columns = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]], dtype=float)
    data = data.reshape(-1, len(columns))
    return {name: data[:, i] for i, name in enumerate(columns)}


def write_json(path: str, data: Dict[str, Any]) -> None:
    with atomic_open(path) as handle:
        json.dump(data, handle, indent=2, default=_json_default)
        handle.write("\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_grid_csv(path: str, grid: PhaseSpaceGrid, plot_data: bool = False) -> None:
    """
    Write q,p,value rows in q-major order.

    With plot_data a blank line separates consecutive q blocks, the layout
    gnuplot's splot expects for gridded data.
    """
    q, p = grid.spec.mesh()
    with atomic_open(path) as handle:
        handle.write(VERSION_LINE + "\n")
        handle.write("q,p,value\n")
        for i in range(grid.spec.n_q):
            for j in range(grid.spec.n_p):
                handle.write(
                    f"{format_value(q[i, j])},{format_value(p[i, j])},{format_value(grid.values[i, j])}\n"
                )
            if plot_data:
                handle.write("\n")


def _grid_header(spec: GridSpec) -> Dict[str, Any]:
    return {
        "format": GRID_FORMAT,
        "version": __version__,
        "q_min": spec.q_min,
        "q_max": spec.q_max,
        "p_min": spec.p_min,
        "p_max": spec.p_max,
        "n_q": spec.n_q,
        "n_p": spec.n_p,
        "dtype": "<f8",
        "order": "C",
    }


def write_grid_binary(path: str, grid: PhaseSpaceGrid) -> None:
    """One JSON header line followed by little-endian float64 values in row-major order."""
    header = json.dumps(_grid_header(grid.spec)).encode("utf-8")
    with atomic_open(path, binary=True) as handle:
        handle.write(header + b"\n")
        handle.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes())


def write_grid(path: str, grid: PhaseSpaceGrid, binary: bool = False, plot_data: bool = False) -> None:
    if binary:
        write_grid_binary(path, grid)
    else:
        write_grid_csv(path, grid, plot_data=plot_data)


def _read_grid_binary(path: str) -> PhaseSpaceGrid:
    with open(path, "rb") as handle:
        header = json.loads(handle.readline().decode("utf-8"))
        payload = handle.read()
    if header.get("format") != GRID_FORMAT:
        raise ConfigError(f"{path} is not an {GRID_FORMAT} file")
    spec = GridSpec(
        header["q_min"], header["q_max"], header["p_min"], header["p_max"], header["n_q"], header["n_p"]
    )
    values = np.frombuffer(payload, dtype=header.get("dtype", "<f8"))
    if values.size != spec.n_q * spec.n_p:
        raise ConfigError(f"{path} holds {values.size} values, header announces {spec.n_q * spec.n_p}")
    return PhaseSpaceGrid(spec, values.reshape(spec.shape).astype(float))


def _axis_spec(values: np.ndarray) -> tuple:
    axis = np.unique(values)
    if len(axis) < 2:
        raise ConfigError("Grid needs at least two distinct points per axis")
    step = float(np.mean(np.diff(axis)))
    return float(axis[0]), float(axis[0] + step * len(axis)), len(axis)


def _read_grid_csv(path: str) -> PhaseSpaceGrid:
    columns = read_csv(path)
    missing = {"q", "p", "value"} - set(columns)
    if missing:
        raise ConfigError(f"{path} lacks grid columns {sorted(missing)}")
    q_min, q_max, n_q = _axis_spec(columns["q"])
    p_min, p_max, n_p = _axis_spec(columns["p"])
    spec = GridSpec(q_min, q_max, p_min, p_max, n_q, n_p)
    if len(columns["value"]) != n_q * n_p:
        raise ConfigError(f"{path} is not a complete {n_q}x{n_p} grid")
    order = np.lexsort((columns["p"], columns["q"]))
    return PhaseSpaceGrid(spec, columns["value"][order].reshape(n_q, n_p))


def read_grid(path: str) -> PhaseSpaceGrid:
    """Read a grid in either format; binary files start with their JSON header."""
    with open(path, "rb") as handle:
        first = handle.read(1)
    if first == b"{":
        return _read_grid_binary(path)
    return _read_grid_csv(path)


def write_density(path: str, rho: FockDensityMatrix) -> None:
    write_json(path, rho.to_dict())


def read_density(path: str) -> FockDensityMatrix:
    with open(path, "r") as handle:
        return FockDensityMatrix.from_dict(json.load(handle))
