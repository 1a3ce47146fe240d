"""Space-time fields, location tables, forecast containers, and file I/O.

A field stores hourly (or other fixed-step) values on a fixed set of planar
locations as a dense T x n matrix.  Two on-disk formats are supported: a CSV
layout for interchange and a flat binary layout that round-trips bit exactly.
All containers are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, ShapeError

_MAGIC = b"STFBIN01"
_VERSION = 1
_HEADER = struct.Struct("<8sII QQ dd")  # magic, version, flags, T, n, t0, dt
_HEADER_SIZE = 64
_FLAG_MASK = 1

FORMATS = ("csv", "flat-binary")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LocationTable:
    """Planar coordinates of the n spatial locations, in file order."""

    coords: np.ndarray  # (n, 2) float
    ids: np.ndarray = None  # (n,) int

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ShapeError(f"coords must be (n, 2), got {coords.shape}")
        if coords.shape[0] < 1:
            raise ShapeError("location table needs at least one location")
        if not np.all(np.isfinite(coords)):
            raise SchemaError("location coordinates must be finite")
        if np.unique(coords, axis=0).shape[0] != coords.shape[0]:
            raise SchemaError("duplicate coordinates in location table")
        ids = self.ids
        if ids is None:
            ids = np.arange(coords.shape[0])
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (coords.shape[0],):
            raise ShapeError("ids must have one entry per location")
        object.__setattr__(self, "coords", _readonly(coords))
        object.__setattr__(self, "ids", _readonly(ids))

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.coords[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.coords[:, 1]

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the table."""
        return (
            float(self.x.min()),
            float(self.x.max()),
            float(self.y.min()),
            float(self.y.max()),
        )

    def subset(self, indices) -> "LocationTable":
        indices = np.asarray(indices, dtype=np.int64)
        return LocationTable(self.coords[indices], self.ids[indices])


@dataclass(frozen=True)
class SpaceTimeField:
    """Dense T x n matrix of values with time metadata and locations.

    Missing cells are flagged in ``mask`` and hold NaN in ``values``; all
    unmasked cells are finite.
    """

    values: np.ndarray  # (T, n)
    locations: LocationTable
    t0: float = 0.0  # start time, hours
    dt: float = 1.0  # step, hours
    mask: np.ndarray = None  # (T, n) bool, True = missing

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[1] != len(self.locations):
            raise ShapeError(
                f"{values.shape[1]} value columns but {len(self.locations)} locations"
            )
        mask = self.mask
        if mask is None:
            mask = np.zeros(values.shape, dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != values.shape:
                raise ShapeError("mask shape must match values shape")
        bad = ~np.isfinite(values) & ~mask
        if bad.any():
            t, i = np.argwhere(bad)[0]
            raise SchemaError(f"non-finite unmasked value at row {t}, column {i}")
        if self.dt <= 0:
            raise ShapeError("dt must be positive")
        values = values.copy()
        values[mask] = np.nan
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "mask", _readonly(mask))

    @property
    def n_times(self) -> int:
        return self.values.shape[0]

    @property
    def n_locations(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        """Absolute times in hours, t0 + dt * [0 .. T-1]."""
        return self.t0 + self.dt * np.arange(self.n_times)

    def replace_values(self, values: np.ndarray, mask: np.ndarray = None) -> "SpaceTimeField":
        """New field with the same locations and time axis."""
        return SpaceTimeField(values, self.locations, self.t0, self.dt, mask)

    def time_slice(self, start: int, stop: int) -> "SpaceTimeField":
        return SpaceTimeField(
            self.values[start:stop],
            self.locations,
            self.t0 + self.dt * start,
            self.dt,
            self.mask[start:stop],
        )


@dataclass(frozen=True)
class ForecastSet:
    """Rolling forecasts for one lead time.

    ``point[j]`` is the forecast issued at time index ``origins[j]`` for time
    ``origins[j] + lead``.  ``ensemble`` optionally stacks the per-member
    forecasts the point forecast averages over, and ``half_width`` optionally
    carries calibrated Gaussian interval half-widths.
    """

    lead: int
    origins: np.ndarray  # (n_origins,) int time indices
    point: np.ndarray  # (n_origins, n_loc)
    ensemble: np.ndarray = None  # (n_members, n_origins, n_loc)
    half_width: np.ndarray = None  # (n_loc,) or (n_origins, n_loc)

    def __post_init__(self):
        if self.lead < 1:
            raise ShapeError("lead must be >= 1")
        origins = np.asarray(self.origins, dtype=np.int64)
        point = np.asarray(self.point, dtype=float)
        if point.shape[0] != origins.shape[0]:
            raise ShapeError("one point-forecast row per origin required")
        object.__setattr__(self, "origins", _readonly(origins))
        object.__setattr__(self, "point", _readonly(point))
        if self.ensemble is not None:
            ens = np.asarray(self.ensemble, dtype=float)
            if ens.ndim != 3 or ens.shape[1:] != point.shape:
                raise ShapeError("ensemble members must share the point-forecast shape")
            object.__setattr__(self, "ensemble", _readonly(ens))
        if self.half_width is not None:
            hw = np.asarray(self.half_width, dtype=float)
            if hw.shape not in ((point.shape[1],), point.shape):
                raise ShapeError("half_width must be (n_loc,) or match point shape")
            object.__setattr__(self, "half_width", _readonly(hw))

    @property
    def target_times(self) -> np.ndarray:
        return self.origins + self.lead


# ---------------------------------------------------------------------------
# field I/O


def write_field(fld: SpaceTimeField, path, fmt: str = "flat-binary") -> None:
    """Write a field; see ``read_field`` for the formats."""
    if fmt == "flat-binary":
        _write_binary(fld, path)
    elif fmt == "csv":
        _write_csv(fld, path)
    else:
        raise SchemaError(f"unknown field format {fmt!r}; expected one of {FORMATS}")


def read_field(path, fmt: str = "flat-binary", locations: LocationTable = None) -> SpaceTimeField:
    """Read a field written by ``write_field``.

    CSV carries no coordinates, so ``locations`` may be supplied; otherwise
    unit-spaced placeholder coordinates are attached.
    """
    if fmt == "flat-binary":
        return _read_binary(path, locations)
    if fmt == "csv":
        return _read_csv(path, locations)
    raise SchemaError(f"unknown field format {fmt!r}; expected one of {FORMATS}")


def _write_binary(fld: SpaceTimeField, path) -> None:
    t, n = fld.values.shape
    flags = _FLAG_MASK if fld.mask.any() else 0
    header = _HEADER.pack(_MAGIC, _VERSION, flags, t, n, fld.t0, fld.dt)
    header += b"\x00" * (_HEADER_SIZE - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(fld.values, dtype="<f8").tobytes())
        if flags & _FLAG_MASK:
            fh.write(np.packbits(fld.mask.ravel()).tobytes())


def _read_binary(path, locations: LocationTable = None) -> SpaceTimeField:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_SIZE)
        if len(header) < _HEADER_SIZE:
            raise SchemaError(f"{path}: truncated header")
        magic, version, flags, t, n, t0, dt = _HEADER.unpack(header[: _HEADER.size])
        if magic != _MAGIC:
            raise SchemaError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise SchemaError(f"{path}: unsupported version {version}")
        payload = fh.read(t * n * 8)
        if len(payload) != t * n * 8:
            raise SchemaError(f"{path}: truncated value payload")
        values = np.frombuffer(payload, dtype="<f8").reshape(t, n).copy()
        mask = None
        if flags & _FLAG_MASK:
            nbytes = (t * n + 7) // 8
            raw = fh.read(nbytes)
            if len(raw) != nbytes:
                raise SchemaError(f"{path}: truncated mask payload")
            mask = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=t * n)
            mask = mask.astype(bool).reshape(t, n)
    if locations is None:
        locations = _placeholder_locations(n)
    return SpaceTimeField(values, locations, t0, dt, mask)


def _write_csv(fld: SpaceTimeField, path) -> None:
    times = fld.times
    with open(path, "w") as fh:
        fh.write("t," + ",".join(f"loc{i}" for i in range(fld.n_locations)) + "\n")
        for r in range(fld.n_times):
            row = fld.values[r]
            cells = ["nan" if fld.mask[r, i] else f"{row[i]:.17g}" for i in range(len(row))]
            fh.write(f"{times[r]:.17g}," + ",".join(cells) + "\n")


def _read_csv(path, locations: LocationTable = None) -> SpaceTimeField:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        cols = header.split(",")
        if len(cols) < 2 or cols[0] != "t":
            raise SchemaError(f"{path}: malformed header {header!r}; expected 't,loc0,...'")
        n = len(cols) - 1
        rows, times = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != n + 1:
                raise SchemaError(
                    f"{path}: row {lineno} has {len(parts) - 1} value fields, expected {n}"
                )
            try:
                times.append(float(parts[0]))
                rows.append([float(p) if p != "" else np.nan for p in parts[1:]])
            except ValueError as exc:
                raise SchemaError(f"{path}: row {lineno}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    values = np.array(rows, dtype=float)
    mask = ~np.isfinite(values)
    if np.isinf(values).any():
        t, i = np.argwhere(np.isinf(values))[0]
        raise SchemaError(f"{path}: non-finite unmasked value at row {t}, column {i}")
    t0 = times[0]
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    if locations is None:
        locations = _placeholder_locations(values.shape[1])
    return SpaceTimeField(values, locations, t0, dt, mask)


def _placeholder_locations(n: int) -> LocationTable:
    return LocationTable(np.column_stack([np.arange(n, dtype=float), np.zeros(n)]))


# ---------------------------------------------------------------------------
# location-table I/O


def write_locations(table: LocationTable, path) -> None:
    with open(path, "w") as fh:
        fh.write("id,x,y\n")
        for i in range(len(table)):
            fh.write(f"{table.ids[i]},{table.x[i]:.17g},{table.y[i]:.17g}\n")


def read_locations(path) -> LocationTable:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "id,x,y":
            raise SchemaError(f"{path}: malformed header {header!r}; expected 'id,x,y'")
        ids, xs, ys = [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise SchemaError(f"{path}: row {lineno} has {len(parts)} fields, expected 3")
            try:
                ids.append(int(parts[0]))
                xs.append(float(parts[1]))
                ys.append(float(parts[2]))
            except ValueError as exc:
                raise SchemaError(f"{path}: row {lineno}: {exc}") from exc
    if not ids:
        raise SchemaError(f"{path}: no locations")
    return LocationTable(np.column_stack([xs, ys]), np.array(ids))


def write_forecasts(fs: ForecastSet, path) -> None:
    """Plot-ready CSV: one row per (origin, location)."""
    with open(path, "w") as fh:
        fh.write("origin,target,location,forecast\n")
        for j, origin in enumerate(fs.origins):
            target = origin + fs.lead
            for i in range(fs.point.shape[1]):
                fh.write(f"{origin},{target},{i},{fs.point[j, i]:.17g}\n")
