"""On-disk formats: binary field dumps and the diagnostics CSV.

Dump layout: magic "CPE1", then four little-endian u64 (nx1, nx2, nz,
field count), then per field a 32-byte zero-padded ASCII name followed by
the values as little-endian f64 in x1-major order (x1 slowest, then x2,
then the vertical index). The field name fixes the vertical extent: xi is
a plan field, u1 and u2 carry nz levels, w carries nz+1 faces.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Tuple, Union

import numpy as np

from .grid import GridSpec
from .states import ModelState

if TYPE_CHECKING:
    from .solver import RunResult

MAGIC = b"CPE1"
_NAME_BYTES = 32
_HEADER = struct.Struct("<4sQQQQ")


class DumpFormatError(Exception):
    """Raised when a dump file does not match the format."""


def _field_levels(name: str, nz: int) -> int:
    levels = {"xi": 1, "u1": nz, "u2": nz, "w": nz + 1}
    if name not in levels:
        raise DumpFormatError(f"unknown field name {name!r}")
    return levels[name]


def write_state_dump(path: Union[str, Path], state: ModelState) -> None:
    """Write the state fields in the fixed order xi, u1, u2, w."""
    g = state.grid
    fields = (
        ("xi", state.xi.values[:, :, None]),
        ("u1", state.u1.values),
        ("u2", state.u2.values),
        ("w", state.w.values),
    )
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.nx1, g.nx2, g.nz, len(fields)))
        for name, values in fields:
            fh.write(name.encode("ascii").ljust(_NAME_BYTES, b"\0"))
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_state_dump(path: Union[str, Path]) -> Tuple[Tuple[int, int, int], Dict[str, np.ndarray]]:
    """Read a dump back into (dims, name -> array)."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise DumpFormatError("truncated header")
    magic, nx1, nx2, nz, count = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise DumpFormatError(f"bad magic {magic!r}")
    offset = _HEADER.size
    fields: Dict[str, np.ndarray] = {}
    for _ in range(count):
        if len(blob) < offset + _NAME_BYTES:
            raise DumpFormatError("truncated field name")
        name = blob[offset : offset + _NAME_BYTES].rstrip(b"\0").decode("ascii")
        offset += _NAME_BYTES
        levels = _field_levels(name, nz)
        n = nx1 * nx2 * levels
        if len(blob) < offset + 8 * n:
            raise DumpFormatError(f"truncated values for field {name!r}")
        arr = np.frombuffer(blob, dtype="<f8", count=n, offset=offset)
        fields[name] = arr.reshape(nx1, nx2, levels).astype(float)
        offset += 8 * n
    if offset != len(blob):
        raise DumpFormatError("trailing bytes after the last field")
    return (int(nx1), int(nx2), int(nz)), fields


def state_from_dump(path: Union[str, Path], grid: GridSpec, t: float = 0.0) -> ModelState:
    """Rebuild a model state from a dump on a matching grid."""
    dims, fields = read_state_dump(path)
    if dims != (grid.nx1, grid.nx2, grid.nz):
        raise DumpFormatError(f"dump dims {dims} do not match grid")
    missing = {"xi", "u1", "u2", "w"} - set(fields)
    if missing:
        raise DumpFormatError(f"dump is missing fields: {', '.join(sorted(missing))}")
    return ModelState.from_values(
        grid, t, fields["xi"][:, :, 0], fields["u1"], fields["u2"], fields["w"]
    )


CSV_COLUMNS = (
    "t",
    "dt",
    "E",
    "D_visc",
    "D_fric",
    "E_residual",
    "B",
    "B_residual",
    "mass",
    "sqrt_xi_u_l2",
    "cbrt_xi_u_l3",
    "sqrt_xi_dzu_l2",
    "sqrt_xi_strain_l2",
    "entropy_l1",
    "grad_sqrt_xi_l2",
    "sqrt_xi_dzw_l2",
    "sqrt_xi_vorticity_l2",
    "sqrt_xi_w_l2",
    "xi_min",
    "max_speed",
    "floor_activations",
)


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def diagnostics_rows(result: "RunResult"):
    """CSV rows (as string tuples) for a finished run."""
    rows = []
    for snap in result.snapshots:
        e = snap.energy
        b = snap.entropy
        row = (
            [snap.t, snap.dt, e.E, e.D_visc, e.D_fric, e.balance_residual]
            + [b.B, b.balance_residual, snap.mass]
            + list(snap.norms.as_tuple())
            + [
                float(np.min(snap.state.xi.values)),
                snap.state.max_speed(),
                snap.floor_activations,
            ]
        )
        rows.append(tuple(_fmt(v) for v in row))
    return rows


def write_diagnostics_csv(path: Union[str, Path], result: "RunResult") -> None:
    """Write the diagnostics series; byte-deterministic for a given run."""
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(row) for row in diagnostics_rows(result)]
    Path(path).write_text("\n".join(lines) + "\n")
