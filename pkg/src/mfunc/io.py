"""Serialisation of tables, density grids, sample batches and reports.

JSON floats use Python's shortest round-trip representation; CSV columns are
written with 17 significant digits. Non-finite metadata becomes ``null``.
"""

from __future__ import annotations

import io
import json
import math
import struct
from pathlib import Path

import numpy as np

from .core import PrimeSet, SymPowerParams
from .density import DensityGrid
from .fourier import FourierTable
from .montecarlo import SampleBatch

BATCH_MAGIC = b"MFSB"
BATCH_VERSION = 1


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _finite(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float):
        return _finite(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True, allow_nan=False) + "\n"


def _grid_spec(x: np.ndarray) -> dict:
    return {"min": float(x[0]), "max": float(x[-1]), "n": int(x.size)}


def _grid_from_spec(spec: dict) -> np.ndarray:
    return np.linspace(spec["min"], spec["max"], spec["n"])


# ---------------------------------------------------------------------------
# Fourier tables
# ---------------------------------------------------------------------------

def table_to_dict(table: FourierTable) -> dict:
    return {
        "params": table.params.to_dict(),
        "primes": list(table.prime_set.primes),
        "excluded": table.prime_set.excluded,
        "x_grid": _grid_spec(table.x_grid),
        "values": [[float(v.real), float(v.imag)] for v in table.values],
        "tail": {"y": table.cutoff, "bound": table.truncation_bound},
        "tail_bound_x": table.tail_bound_x,
        "tail_tol": table.tail_tol,
        "quad_tol": table.quad_tol,
    }


def table_from_dict(d: dict) -> FourierTable:
    vals = np.array([complex(re, im) for re, im in d["values"]])
    table = FourierTable(
        SymPowerParams(d["params"]["r"], d["params"]["sigma"]),
        PrimeSet(tuple(d["primes"]), d.get("excluded")),
        _grid_from_spec(d["x_grid"]), vals,
        tail_tol=d.get("tail_tol", 1e-8), quad_tol=d.get("quad_tol", 1e-11))
    tail = d.get("tail") or {}
    table.cutoff = tail.get("y")
    table.truncation_bound = tail.get("bound") or 0.0
    return table


def table_to_csv(table: FourierTable) -> str:
    buf = io.StringIO()
    meta = table_to_dict(table)
    del meta["values"]
    buf.write("# " + json.dumps(_clean(meta), sort_keys=True) + "\n")
    data = np.column_stack((table.x_grid, table.values.real, table.values.imag))
    np.savetxt(buf, data, fmt="%.17g", delimiter=",", header="x,re,im", comments="")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# density grids
# ---------------------------------------------------------------------------

def density_meta(grid: DensityGrid) -> dict:
    return {
        "params": grid.params.to_dict(),
        "primes": list(grid.prime_set.primes),
        "excluded": grid.prime_set.excluded,
        "u_grid": _grid_spec(grid.u_grid),
        "mass": grid.mass,
        "support_hint": list(grid.support_hint) if grid.support_hint else None,
        "meta": grid.meta,
    }


def density_to_dict(grid: DensityGrid) -> dict:
    d = density_meta(grid)
    d["values"] = [float(v) for v in grid.values]
    return d


def density_from_dict(d: dict) -> DensityGrid:
    return DensityGrid(
        SymPowerParams(d["params"]["r"], d["params"]["sigma"]),
        PrimeSet(tuple(d["primes"]), d.get("excluded")),
        _grid_from_spec(d["u_grid"]), np.asarray(d["values"], dtype=np.float64),
        support_hint=tuple(d["support_hint"]) if d.get("support_hint") else None,
        meta=d.get("meta") or {})


def density_to_csv(grid: DensityGrid) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_clean(density_meta(grid)), sort_keys=True) + "\n")
    data = np.column_stack((grid.u_grid, grid.values))
    np.savetxt(buf, data, fmt="%.17g", delimiter=",", header="u,value", comments="")
    return buf.getvalue()


def density_from_csv(text: str) -> DensityGrid:
    lines = text.splitlines()
    meta = json.loads(lines[0][2:])
    data = np.loadtxt(lines[2:], delimiter=",", ndmin=2)
    return DensityGrid(
        SymPowerParams(meta["params"]["r"], meta["params"]["sigma"]),
        PrimeSet(tuple(meta["primes"]), meta.get("excluded")),
        data[:, 0], data[:, 1],
        support_hint=tuple(meta["support_hint"]) if meta.get("support_hint") else None,
        meta=meta.get("meta") or {})


# ---------------------------------------------------------------------------
# sample batches
# ---------------------------------------------------------------------------

def _batch_header(batch: SampleBatch) -> dict:
    return {
        "params": batch.params.to_dict(),
        "primes": list(batch.prime_set.primes),
        "excluded": batch.prime_set.excluded,
        "seed": batch.seed,
        "n": batch.n_samples,
    }


def batch_to_bytes(batch: SampleBatch) -> bytes:
    """``MFSB`` | u16 version | u32 header length | JSON header | f64 LE payload."""
    header = json.dumps(_batch_header(batch), sort_keys=True).encode("utf-8")
    return (BATCH_MAGIC + struct.pack("<HI", BATCH_VERSION, len(header)) + header
            + np.asarray(batch.values, dtype="<f8").tobytes())


def batch_from_bytes(data: bytes) -> SampleBatch:
    if data[:4] != BATCH_MAGIC:
        raise ValueError("not a sample batch file")
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != BATCH_VERSION:
        raise ValueError(f"unsupported batch version {version}")
    start = 4 + struct.calcsize("<HI")
    header = json.loads(data[start:start + hlen].decode("utf-8"))
    values = np.frombuffer(data, dtype="<f8", offset=start + hlen).astype(np.float64)
    if values.size != header["n"]:
        raise ValueError(f"payload holds {values.size} values, header says {header['n']}")
    return SampleBatch(
        SymPowerParams(header["params"]["r"], header["params"]["sigma"]),
        PrimeSet(tuple(header["primes"]), header.get("excluded")),
        header["seed"], header["n"], values)


def batch_to_csv(batch: SampleBatch) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_batch_header(batch), sort_keys=True) + "\n")
    np.savetxt(buf, batch.values, fmt="%.17g", header="value", comments="")
    return buf.getvalue()


def write_text(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_bytes(path: Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
