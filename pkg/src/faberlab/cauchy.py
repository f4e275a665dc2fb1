"""Cauchy integrals, the singular operator S_Gamma and Plemelj traces."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .curve import DiscretizedCurve
from .errors import AccuracyWarning, DataError, NearBoundaryError, SizingError

__all__ = [
    "BoundaryFunction",
    "cauchy_integral",
    "singular_op",
    "plemelj_values",
    "as_samples",
]


def as_samples(curve: DiscretizedCurve, f) -> np.ndarray:
    """Validate boundary samples (array, callable of z, or BoundaryFunction)."""
    if isinstance(f, BoundaryFunction):
        f = f.samples
    elif callable(f):
        f = f(curve.z)
    f = np.asarray(f, dtype=complex)
    if f.shape != (curve.n,):
        f = np.broadcast_to(f, (curve.n,)).copy() if f.ndim == 0 else f
    if f.shape != (curve.n,):
        raise DataError(f"expected {curve.n} samples, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise DataError("boundary samples contain NaN or infinite values")
    return f


@dataclass(frozen=True, eq=False)
class BoundaryFunction:
    """Samples of a function on the nodes of a discretized curve."""

    curve: DiscretizedCurve
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", as_samples(self.curve, self.samples))

    def to_csv(self, path, header_comment: str | None = None):
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh)
            w.writerow(["s", "re", "im"])
            for s, v in zip(self.curve.s, self.samples):
                w.writerow([repr(float(s)), repr(float(v.real)), repr(float(v.imag))])

    @classmethod
    def from_csv(cls, curve: DiscretizedCurve, path) -> "BoundaryFunction":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(x) for x in row[:3]])
                except ValueError:
                    continue  # header
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        if arr.shape[0] != curve.n or np.max(np.abs(arr[:, 0] - curve.s)) > 1e-9 * curve.length:
            raise DataError("tabulated arc parameters do not match the curve grid")
        return cls(curve, arr[:, 1] + 1j * arr[:, 2])


def cauchy_matrix(curve: DiscretizedCurve, points) -> np.ndarray:
    """Trapezoid weights of ``(1/2 pi i) int f(xi) dxi / (xi - z)`` for each point."""
    points = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    dist = np.abs(curve.z[None, :] - points[:, None]).min(axis=1)
    if np.any(dist < curve.h):
        raise NearBoundaryError(
            f"evaluation point within one grid spacing (h = {curve.h:.3g}) of the curve; "
            "use plemelj_values for boundary traces"
        )
    if np.any(dist < 2 * curve.h):
        warnings.warn("evaluation point within two grid spacings of the curve", AccuracyWarning, stacklevel=3)
    return (curve.h / (2j * np.pi)) * curve.dz[None, :] / (curve.z[None, :] - points[:, None])


def cauchy_integral(curve: DiscretizedCurve, f, z):
    """Cauchy-type integral of boundary data at points off the curve.

    Parameters
    ----------
    curve : DiscretizedCurve
    f : array_like or callable
        Samples at the curve nodes, or a function of ``z`` sampled there.
    z : complex or array_like
        Evaluation points with distance at least ``h`` from the curve.

    Returns
    -------
    complex or ndarray
        ``(1/2 pi i) int_Gamma f(xi) / (xi - z) dxi`` by the trapezoid rule.
    """
    f = as_samples(curve, f)
    zarr = np.asarray(z, dtype=complex)
    out = cauchy_matrix(curve, zarr) @ f
    return out[0] if zarr.ndim == 0 else out.reshape(zarr.shape)


def singular_op(curve: DiscretizedCurve, f) -> np.ndarray:
    """Principal-value Cauchy operator ``S_Gamma f`` at the nodes.

    Uses the parity-staggered trapezoid rule: the value at node ``j`` sums
    over nodes ``j +- 1, j +- 3, ...`` with weight ``2h``.
    """
    if curve.n % 2:
        raise SizingError("the staggered principal-value rule needs an even node count")
    f = as_samples(curve, f)
    return curve.pv_matrix @ f


def plemelj_values(curve: DiscretizedCurve, f):
    """Interior and exterior boundary values ``F+ = f/2 + S f``, ``F- = -f/2 + S f``."""
    f = as_samples(curve, f)
    sf = singular_op(curve, f)
    return 0.5 * f + sf, -0.5 * f + sf
