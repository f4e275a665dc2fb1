"""Power weights on a curve, admissibility exponents and A_p diagnostics.

The weight is ``rho(s) = prod_k |s - t_k| ** alpha_k`` in the arc parameter.
Grid nodes that fall on (or within h/4 of) a singular point take the weight
value half a step away, which keeps the trapezoid rule defined for
integrable singularities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .curve import DiscretizedCurve, geometric_radii
from .errors import DataError, ParameterError, SingularityError

__all__ = [
    "WeightSpec",
    "AdmissibilityReport",
    "MuckenhouptReport",
    "weight_eval",
    "weighted_norm",
    "muckenhoupt_scan",
    "beta_exponents",
    "condition_alpha",
]


def _check_p(p):
    if not (np.isfinite(p) and p > 1):
        raise ParameterError(f"exponent p must satisfy 1 < p < inf, got {p}")


@dataclass(frozen=True)
class WeightSpec:
    """Power weight ``prod |s - t_k|^alpha_k`` with the ambient exponent ``p``."""

    points: tuple = ()
    alphas: tuple = ()
    p: float = 2.0

    def __post_init__(self):
        pts = tuple(float(t) for t in np.atleast_1d(self.points))
        als = tuple(float(a) for a in np.atleast_1d(self.alphas))
        if len(pts) != len(als):
            raise ParameterError("points and alphas must have equal length")
        if len(set(pts)) != len(pts):
            raise ParameterError("singular points must be distinct")
        _check_p(self.p)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "alphas", als)
        object.__setattr__(self, "p", float(self.p))

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)

    @classmethod
    def from_json(cls, obj) -> "WeightSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(obj.get("points", ())), tuple(obj.get("alphas", ())), obj.get("p", 2.0))

    def to_json(self) -> dict:
        return {"points": list(self.points), "alphas": list(self.alphas), "p": self.p}

    def __call__(self, s):
        return weight_eval(self, s)

    def node_values(self, curve: DiscretizedCurve) -> np.ndarray:
        """Weight at the nodes, with singular nodes shifted by half a step."""
        s = curve.s.copy()
        h = curve.h
        for t in self.points:
            near = np.abs(s - t) < h / 4
            # step away from t toward the side that stays inside [0, S)
            shift = np.where(t + h / 2 < curve.length, 0.5 * h, -0.5 * h)
            s[near] = t + shift
        return weight_eval(self, s)

    def cell_values(self, curve: DiscretizedCurve, exponent: float = 1.0) -> np.ndarray:
        """Representative values of ``rho ** exponent`` on the grid cells.

        Cells within three steps of a singular point carry the exact mean of
        that power factor over ``[s_j - h/2, s_j + h/2]`` (``inf`` when it is
        not integrable there); other factors and cells use node values.
        """
        s, h = curve.s, curve.h
        out = np.ones(curve.n)
        for t, a in zip(self.points, self.alphas):
            b = a * exponent
            near = np.abs(s - t) < 3 * h
            with np.errstate(divide="ignore"):
                vals = np.abs(s - t) ** b
            vals[near] = _power_mean(s[near] - h / 2 - t, s[near] + h / 2 - t, b)
            out = out * vals
        return out


def _power_mean(u1, u2, b):
    """Mean of ``|u|^b`` over ``[u1, u2]``."""
    u1, u2 = np.asarray(u1, dtype=float), np.asarray(u2, dtype=float)
    out = np.empty(u1.shape)
    crosses = (u1 < 0) & (u2 > 0)
    if b <= -1:
        out[crosses] = np.inf
        same = ~crosses
        lo = np.minimum(np.abs(u1[same]), np.abs(u2[same]))
        hi = np.maximum(np.abs(u1[same]), np.abs(u2[same]))
        with np.errstate(divide="ignore"):
            if b == -1:
                out[same] = np.log(hi / lo)
            else:
                out[same] = (hi ** (b + 1) - lo ** (b + 1)) / (b + 1)
    else:
        def prim(u):
            return np.sign(u) * np.abs(u) ** (b + 1) / (b + 1)

        out = prim(u2) - prim(u1)
    return out / (u2 - u1)


def weight_eval(w: WeightSpec, s):
    """Evaluate ``prod_k |s - t_k|^alpha_k``.

    Returns 0 at a singular point with positive exponent and raises
    :class:`SingularityError` at one with negative exponent.
    """
    s = np.asarray(s, dtype=float)
    out = np.ones_like(s)
    for t, a in zip(w.points, w.alphas):
        d = np.abs(s - t)
        if a < 0 and np.any(d == 0):
            raise SingularityError(f"weight is infinite at its singular point s = {t}")
        with np.errstate(divide="ignore"):
            out = out * d**a
    return out if out.ndim else float(out)


def weighted_norm(f, curve: DiscretizedCurve, w: WeightSpec | None = None, p: float | None = None):
    """``(int |f|^p rho |dz|)^(1/p)`` by the trapezoid rule on the curve grid."""
    f = np.asarray(f, dtype=complex)
    if f.shape != (curve.n,):
        raise DataError(f"expected {curve.n} samples, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise DataError("samples contain NaN or infinite values")
    if p is None:
        p = w.p if w is not None else 2.0
    if not p >= 1:
        raise ParameterError("norm exponent must be >= 1")
    rho = np.ones(curve.n) if w is None else w.node_values(curve)
    return float((curve.h * np.sum(np.abs(f) ** p * rho * curve.speed)) ** (1.0 / p))


@dataclass(frozen=True)
class MuckenhouptReport:
    ap_estimate: float
    in_class: bool
    refined_estimate: float
    growth: float


def _ap_quotient(w, curve, p, centers, radii):
    if hasattr(w, "cell_values"):
        rho, dual = w.cell_values(curve), w.cell_values(curve, -1.0 / (p - 1))
    else:
        rho = w.node_values(curve)
        dual = rho ** (-1.0 / (p - 1))
    arc = curve.h * curve.speed
    best = 0.0
    for c in centers:
        inside = np.abs(curve.z - curve.z[c])[None, :] < radii[:, None]
        length = (inside * arc).sum(axis=1)
        m1 = np.where(inside, rho * arc, 0.0).sum(axis=1) / length
        m2 = np.where(inside, dual * arc, 0.0).sum(axis=1) / length
        best = max(best, float(np.max(m1 * m2 ** (p - 1))))
    return best


def muckenhoupt_scan(w, curve: DiscretizedCurve, centers=None, radii=None, p=None, growth_limit=0.10):
    """Scan the A_p quotient over discs centered on the curve.

    The quotient ``(mean rho)(mean rho^(-1/(p-1)))^(p-1)`` over the arc cut
    out by each disc is maximized over sampled centers and radii; node sums replace the
    integrals.  The weight counts as in class when the maximum grows by
    less than ``growth_limit`` after doubling the grid.

    ``w`` may be any object with ``node_values(curve)`` and a ``p``
    attribute (or an explicit ``p``).
    """
    if p is None:
        p = w.p
    _check_p(p)
    if radii is None:
        radii = geometric_radii(curve.h, curve.diameter)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ParameterError("radius grid is empty")
    if centers is None:
        step = max(1, curve.n // 64)
        centers = np.arange(0, curve.n, step)
        # always probe the nodes closest to the singular points
        sing = [int(np.argmin(np.abs(curve.s - t))) for t in getattr(w, "points", ())]
        centers = np.unique(np.concatenate([centers, np.array(sing, dtype=int)]))
    centers = np.asarray(centers, dtype=int)
    coarse = _ap_quotient(w, curve, p, centers, radii)
    fine_curve = curve.refine()
    fine = _ap_quotient(w, fine_curve, p, 2 * centers, radii)
    if np.isfinite(coarse) and np.isfinite(fine) and coarse > 0:
        growth = fine / coarse - 1.0
    else:
        growth = np.inf
    ok = bool(np.isfinite(coarse) and np.isfinite(fine) and growth < growth_limit)
    return MuckenhouptReport(coarse, ok, fine, float(growth))


@dataclass(frozen=True)
class AdmissibilityReport:
    """Merged singular points with their exponents and window checks."""

    points: list
    betas: list
    window_ok: bool
    jump_at: list = field(default_factory=list)
    alpha_at: list = field(default_factory=list)
    disjoint: bool = True
    corollary_ok: bool | None = None
    corollary_violations: list = field(default_factory=list)
    ap_estimate: float | None = None

    def to_json(self) -> dict:
        return {
            "points": self.points,
            "betas": self.betas,
            "window_ok": self.window_ok,
            "jumps": self.jump_at,
            "alphas": self.alpha_at,
            "disjoint": self.disjoint,
            "corollary_ok": self.corollary_ok,
            "corollary_violations": self.corollary_violations,
            "ap_estimate": self.ap_estimate,
        }

    def violations(self, p) -> list:
        q = p / (p - 1)
        return [
            {"point": t, "beta": b, "window": [-1.0, p / q]}
            for t, b in zip(self.points, self.betas)
            if not (-1 < b < p / q)
        ]


def beta_exponents(w: WeightSpec, jumps=(), p=None, length=None, literal_corollary=False):
    """Merge weight and jump points and compute their exponents.

    ``beta = -(p / 2 pi) h + alpha`` at each merged point, where ``h`` is the
    phase jump (0 if none) and ``alpha`` the weight exponent (0 if none).
    Points closer than ``1e-9 * length`` coincide.  The window requires
    ``-1 < beta < p/q`` everywhere.

    When no jump point coincides with a weight point the separate conditions
    ``-1/q < h/2pi < 1/p`` and ``-1 < alpha < p/q`` are also checked; with
    ``literal_corollary`` the weight bound ``q/p`` is used instead of ``p/q``.
    """
    if p is None:
        p = w.p
    _check_p(p)
    q = p / (p - 1)
    if length is None:
        cand = [abs(t) for t in w.points] + [abs(s) for s, _ in jumps] + [1.0]
        length = max(cand)
    tol = 1e-9 * length
    merged = []  # [point, h, alpha, has_jump, has_weight]
    for s, h in jumps:
        merged.append([float(s), float(h), 0.0, True, False])
    for t, a in zip(w.points, w.alphas):
        for m in merged:
            if abs(m[0] - t) <= tol:
                m[2] += a
                m[4] = True
                break
        else:
            merged.append([float(t), 0.0, float(a), False, True])
    merged.sort(key=lambda m: m[0])
    betas = [-(p / (2 * np.pi)) * m[1] + m[2] for m in merged]
    window_ok = all(-1 < b < p / q for b in betas)
    disjoint = not any(m[3] and m[4] for m in merged)
    cor_ok, bad = None, []
    if disjoint:
        upper = q / p if literal_corollary else p / q
        for m in merged:
            if m[3] and not (-1 / q < m[1] / (2 * np.pi) < 1 / p):
                bad.append({"point": m[0], "h_over_2pi": m[1] / (2 * np.pi), "window": [-1 / q, 1 / p]})
            if m[4] and not (-1 < m[2] < upper):
                bad.append({"point": m[0], "alpha": m[2], "window": [-1.0, upper]})
        cor_ok = not bad
    return AdmissibilityReport(
        points=[m[0] for m in merged],
        betas=[float(b) for b in betas],
        window_ok=bool(window_ok),
        jump_at=[m[1] for m in merged],
        alpha_at=[m[2] for m in merged],
        disjoint=disjoint,
        corollary_ok=cor_ok,
        corollary_violations=bad,
    )


def condition_alpha(report: AdmissibilityReport, p, candidates=(1.05, 1.1, 1.25, 1.5)):
    """Decide the existence condition on ``p1, p2`` from the local exponents.

    Near a merged point ``sigma^p rho`` behaves like ``|s - tau|^beta``, so the
    two integrals are finite iff ``p1 * beta > -1`` and ``p2 * (q/p) * beta < 1``
    at every point.  Returns the first candidate ``p1 = p2`` that works, or None.
    """
    q = p / (p - 1)
    for c in candidates:
        if all(c * b > -1 and c * (q / p) * b < 1 for b in report.betas):
            return c
    return None
