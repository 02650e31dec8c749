"""3D scalar volumes: validation, file I/O, resampling, thresholding, norms.

A :class:`Volume` holds a likelihood function sampled on a voxel grid as a
C-contiguous float64 array (last axis varies fastest in memory). All
operations in this module are pure functions of immutable inputs.
"""

from __future__ import annotations

import ast
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateInput,
    FormatError,
    InvalidParameter,
    InvalidValue,
    SizeMismatch,
)

_NPY_MAGIC = b"\x93NUMPY"
_OTSU_BINS = 256


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar grid with an optional declared value range.

    Parameters
    ----------
    data : np.ndarray
        3D array of finite scalars; converted to C-contiguous float64.
    value_range : (float, float) or None
        Declared range of the field. ``None`` means unconstrained. The
        default ``(0.0, 1.0)`` matches likelihood volumes.
    """

    data: np.ndarray
    value_range: tuple[float, float] | None = (0.0, 1.0)

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise InvalidValue(f"expected a 3D array, got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise InvalidValue(f"empty volume dimension in shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        if not np.isfinite(arr).all():
            raise InvalidValue("volume contains NaN or Inf")
        if self.value_range is not None:
            lo, hi = self.value_range
            amin, amax = float(arr.min()), float(arr.max())
            if amin < lo or amax > hi:
                raise InvalidValue(
                    f"values [{amin}, {amax}] outside declared range [{lo}, {hi}]"
                )
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size


@dataclass(frozen=True, eq=False)
class BinaryVolume:
    """A 3D mask; only values 0 and 1 occur."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data))
        if arr.ndim != 3:
            raise InvalidValue(f"expected a 3D array, got ndim={arr.ndim}")
        if arr.dtype != np.uint8:
            if not np.isin(arr, (0, 1)).all():
                raise InvalidValue("binary volume contains values other than 0/1")
            arr = arr.astype(np.uint8)
        elif not np.isin(arr, (0, 1)).all():
            raise InvalidValue("binary volume contains values other than 0/1")
        object.__setattr__(self, "data", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape


def volume_from_array(arr: np.ndarray, value_range="auto") -> Volume:
    """Wrap an array in a Volume.

    ``value_range="auto"`` declares (0, 1) when every value already lies
    inside the unit interval and leaves the range unconstrained otherwise.
    """
    if value_range == "auto":
        a = np.asarray(arr)
        if a.size and np.isfinite(a).all() and a.min() >= 0.0 and a.max() <= 1.0:
            value_range = (0.0, 1.0)
        else:
            value_range = None
    return Volume(arr, value_range=value_range)


def _read_npy(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != _NPY_MAGIC:
            raise FormatError(f"{path}: not an NPY file")
        ver = fh.read(2)
        if len(ver) != 2:
            raise FormatError(f"{path}: truncated NPY version field")
        major = ver[0]
        if major == 1:
            raw_len = fh.read(2)
            if len(raw_len) != 2:
                raise FormatError(f"{path}: truncated NPY header length")
            (hlen,) = struct.unpack("<H", raw_len)
        elif major in (2, 3):
            raw_len = fh.read(4)
            if len(raw_len) != 4:
                raise FormatError(f"{path}: truncated NPY header length")
            (hlen,) = struct.unpack("<I", raw_len)
        else:
            raise FormatError(f"{path}: unsupported NPY version {major}")
        header = fh.read(hlen)
        if len(header) != hlen:
            raise FormatError(f"{path}: truncated NPY header")
        try:
            meta = ast.literal_eval(header.decode("latin1").strip())
            descr = meta["descr"]
            fortran = bool(meta["fortran_order"])
            shape = tuple(int(s) for s in meta["shape"])
        except Exception as exc:
            raise FormatError(f"{path}: malformed NPY header ({exc})") from exc
        if descr not in ("<f4", "<f8"):
            raise FormatError(f"{path}: unsupported dtype {descr!r} (need <f4 or <f8)")
        if fortran:
            raise FormatError(f"{path}: Fortran-order arrays are not supported")
        if len(shape) != 3:
            raise FormatError(f"{path}: expected a 3D array, header shape {shape}")
        payload = fh.read()
    itemsize = 4 if descr == "<f4" else 8
    expected = itemsize * int(np.prod(shape))
    if len(payload) != expected:
        raise SizeMismatch(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
        )
    arr = np.frombuffer(payload, dtype=descr).reshape(shape)
    return arr.astype(np.float64)


def load_volume(path, format: str = "npy", dims: tuple[int, int, int] | None = None) -> Volume:
    """Load a volume from disk.

    ``format="npy"`` reads NPY files (little-endian f4/f8, C-order, 3D).
    ``format="raw"`` reads little-endian float32 with ``dims`` supplied by
    the caller.
    """
    path = Path(path)
    if format == "npy":
        arr = _read_npy(path)
    elif format == "raw":
        if dims is None:
            raise InvalidParameter("raw format requires explicit dims")
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or min(dims) < 1:
            raise InvalidParameter(f"invalid raw dims {dims}")
        payload = path.read_bytes()
        expected = 4 * dims[0] * dims[1] * dims[2]
        if len(payload) != expected:
            raise SizeMismatch(
                f"{path}: payload holds {len(payload)} bytes, dims imply {expected}"
            )
        arr = np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)
    else:
        raise InvalidParameter(f"unknown volume format {format!r}")
    if not np.isfinite(arr).all():
        raise InvalidValue(f"{path}: volume contains NaN or Inf")
    return volume_from_array(arr)


def save_volume(volume: Volume, path, format: str = "npy") -> None:
    """Write a volume to disk (NPY float64, or raw little-endian float32)."""
    path = Path(path)
    if format == "npy":
        with open(path, "wb") as fh:  # file object: np.save keeps the exact name
            np.save(fh, volume.data, allow_pickle=False)
    elif format == "raw":
        path.write_bytes(volume.data.astype("<f4").tobytes())
    else:
        raise InvalidParameter(f"unknown volume format {format!r}")


def _axis_weights(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) linear interpolation matrix, align-corners.

    Output sample i reads input coordinate i*(n_in-1)/(n_out-1); rows are
    convex combinations of at most two adjacent input samples.
    """
    w = np.zeros((n_out, n_in))
    pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    i0 = np.minimum(pos.astype(np.int64), n_in - 2)
    t = pos - i0
    rows = np.arange(n_out)
    w[rows, i0] = 1.0 - t
    w[rows, i0 + 1] += t
    return w


def resample_weights(dims: tuple[int, int, int], m: int) -> list[np.ndarray]:
    """Per-axis interpolation matrices mapping ``dims`` onto an m^3 grid."""
    if m < 2:
        raise InvalidParameter(f"target side must be >= 2, got {m}")
    if min(dims) < 2:
        raise InvalidParameter(f"every input dimension must be >= 2, got {dims}")
    return [_axis_weights(n, m) for n in dims]


def downsample_trilinear(volume: Volume, m: int) -> Volume:
    """Resample a volume onto an m x m x m grid by trilinear interpolation.

    Align-corners convention: output index i along an axis of length n maps
    to input coordinate i*(n-1)/(m-1), so corner voxels are reproduced
    exactly and ``m`` equal to the side length of a cubic volume is the
    identity. Output values are convex combinations of input values.
    """
    w1, w2, w3 = resample_weights(volume.dims, m)
    out = np.einsum("ai,bj,ck,ijk->abc", w1, w2, w3, volume.data, optimize=True)
    return Volume(np.ascontiguousarray(out), value_range=volume.value_range)


def resample_transpose(grad: np.ndarray, dims: tuple[int, int, int], m: int) -> np.ndarray:
    """Adjoint of :func:`downsample_trilinear` as a map on gradients."""
    w1, w2, w3 = resample_weights(dims, m)
    out = np.einsum("ai,bj,ck,abc->ijk", w1, w2, w3, grad, optimize=True)
    return np.ascontiguousarray(out)


def upsample_repeat(volume: Volume, a: int) -> Volume:
    """Replicate every voxel into an a x a x a block."""
    if a < 1:
        raise InvalidParameter(f"replication factor must be >= 1, got {a}")
    out = volume.data
    for axis in range(3):
        out = np.repeat(out, a, axis=axis)
    return Volume(np.ascontiguousarray(out), value_range=volume.value_range)


def otsu_threshold(volume: Volume) -> tuple[float, BinaryVolume]:
    """Threshold maximising between-class variance over a 256-bin histogram.

    Returns the threshold (a bin edge over the observed value range) and the
    mask ``volume >= threshold``. Raises DegenerateInput for constant input.
    """
    x = volume.data.ravel()
    mn, mx = float(x.min()), float(x.max())
    if mn == mx:
        raise DegenerateInput("Otsu threshold of a constant volume is undefined")
    width = (mx - mn) / _OTSU_BINS
    bins = np.minimum(((x - mn) / (mx - mn) * _OTSU_BINS).astype(np.int64), _OTSU_BINS - 1)
    counts = np.bincount(bins, minlength=_OTSU_BINS).astype(np.float64)
    centers = mn + (np.arange(_OTSU_BINS) + 0.5) * width

    # split after bin k: class 0 = bins 0..k, class 1 = bins k+1..255
    w0 = np.cumsum(counts)[:-1]
    w1 = counts.sum() - w0
    s0 = np.cumsum(counts * centers)[:-1]
    s1 = (counts * centers).sum() - s0
    valid = (w0 > 0) & (w1 > 0)
    mu0 = s0 / np.maximum(w0, 1.0)
    mu1 = s1 / np.maximum(w1, 1.0)
    var = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -np.inf)
    k = int(np.argmax(var))
    threshold = mn + (k + 1) * width
    mask = (volume.data >= threshold).astype(np.uint8)
    return float(threshold), BinaryVolume(mask)


def p_norm_diff(f: Volume, g: Volume, p: float = 2.0) -> float:
    """p-norm of the voxelwise difference; ``p=inf`` gives the sup norm."""
    if f.dims != g.dims:
        raise SizeMismatch(f"volume dims differ: {f.dims} vs {g.dims}")
    if p != np.inf and p < 1:
        raise InvalidParameter(f"p must be >= 1 or inf, got {p}")
    d = np.abs(f.data - g.data)
    if p == np.inf:
        return float(d.max())
    return float((d**p).sum() ** (1.0 / p))
