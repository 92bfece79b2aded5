"""Integrability diagnostics: distance integrals, resolvent-norm integrals,
truncation studies and the existence of the boundary limit."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .calculus import cfc_boundary_limit, smooth_fc
from .contour import Contour, ContourSequence, DistanceField, extract_level_set
from .errors import NonCauchy
from .functions import FunctionSpec
from .matrix import Spectrum, as_matrix, resolvent_batch, spectral_norm
from .quadrature import region_quadrature
from .reduce import weighted_sum

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"


def epsilon_ladder(first: float = 0.4, steps: int = 7, floor: float = 0.0) -> np.ndarray:
    """``first * 2^-k`` for ``k < steps``, dropping rungs below ``floor``."""
    eps = first * 0.5 ** np.arange(steps)
    return eps[eps >= floor]


# -- length profiles ---------------------------------------------------------


def length_profile(field: DistanceField, levels, nodes: int = 256) -> np.ndarray:
    """Total length of the level set ``{d = t}`` for each ``t``."""
    return np.array([extract_level_set(field, float(t), nodes).length for t in levels])


def _level_grid(eps_min: float, top: float, extra=(), count: int = 48) -> np.ndarray:
    t = np.concatenate([np.geomspace(eps_min, top, count), np.asarray(extra, dtype=float)])
    return np.unique(t[(t >= eps_min) & (t <= top)])


def _cumulative_from_top(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``int_{t_i}^{t_max} g`` for every grid point by the composite trapezoid."""
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(t)
    return np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])


def distance_integral(field: DistanceField, band: tuple, count: int = 48,
                      nodes: int = 256) -> float:
    """``int_eps^T l(gamma_t) / t dt``, the coarea form of ``iint_{eps<d<T} 1/d``."""
    eps, top = (float(b) for b in band)
    if not 0 < eps < top:
        raise ValueError("band must satisfy 0 < eps < T")
    t = _level_grid(eps, top, count=count)
    g = length_profile(field, t, nodes) / t
    return float(_cumulative_from_top(t, g)[0])


def truncation_samples(field: DistanceField, eps: Sequence[float], top: float,
                       count: int = 48, nodes: int = 256) -> np.ndarray:
    """``I(eps_k)`` for a whole ladder from one shared set of level integrals."""
    eps = np.asarray(eps, dtype=float)
    t = _level_grid(float(eps.min()), top, extra=eps, count=count)
    cum = _cumulative_from_top(t, length_profile(field, t, nodes) / t)
    return cum[np.searchsorted(t, eps)]


# -- resolvent norms ---------------------------------------------------------


def resolvent_norm_integral(a, spec: Spectrum, region: Contour, exclusion: float,
                            resolution: int = 512, **quad) -> float:
    """``iint ||R(z)|| dx dy`` over ``int region`` minus the ``exclusion``-tubes.

    When the tubes are disjoint disks they are cut out exactly by annular
    patches; otherwise nodes closer than ``exclusion`` to the spectrum are
    masked.
    """
    a = as_matrix(a)
    gap = spec.min_gap()
    if exclusion < 0.45 * gap:
        q = region_quadrature(region, spec.eigenvalues, resolution=resolution,
                              exclusion=exclusion, **quad)
        pts, w = q.points, q.weights
    else:
        q = region_quadrature(region, spec.eigenvalues, resolution=resolution, **quad)
        keep = spec.distance(q.points) > exclusion
        pts, w = q.points[keep], q.weights[keep]
    total = weighted_sum(lambda z: spectral_norm(resolvent_batch(a, z)), pts, w)
    return float(np.real(total))


# -- truncation study --------------------------------------------------------


@dataclass
class IntegrabilityReport:
    """Verdict on ``lim_{eps -> 0} I(eps)`` from samples on a geometric ladder."""

    epsilons: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    verdict: str
    extrapolated: Optional[float] = None
    slope: Optional[float] = None
    slope_stderr: Optional[float] = None
    monotone: bool = True
    details: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "I", "residual"])
        for k, (e, v) in enumerate(zip(self.epsilons, self.values)):
            w.writerow([repr(float(e)), repr(float(v)), "" if k == 0 else repr(float(self.residuals[k - 1]))])
        return buf.getvalue()

    def verdict_json(self) -> dict:
        return {"verdict": self.verdict, "extrapolated": self.extrapolated, "slope": self.slope,
                "slope_stderr": self.slope_stderr, "monotone": self.monotone,
                "last_residual": float(self.residuals[-1]) if self.residuals.size else 0.0}


def aitken(values: np.ndarray) -> np.ndarray:
    """Aitken delta-squared extrapolants of consecutive triples."""
    v = np.asarray(values, dtype=float)
    d2 = v[2:] - 2 * v[1:-1] + v[:-2]
    out = v[2:].copy()
    ok = np.abs(d2) > 1e-14 * np.maximum(np.abs(v[2:]), 1.0)
    out[ok] = v[2:][ok] - (v[2:][ok] - v[1:-1][ok]) ** 2 / d2[ok]
    return out


def truncation_study(epsilons, values, rtol: float = 1e-3, ratio: float = 0.9,
                     sigma: float = 3.0) -> IntegrabilityReport:
    """Classify the truncation samples ``I(eps_k)``.

    convergent: the Cauchy residuals shrink by at least ``ratio`` per rung
    (or vanish), and consecutive Aitken extrapolants agree within
    ``rtol * |I(eps_last)|``. divergent: the residuals do not shrink and a
    fit ``I = c1 + c2 |log eps|`` has ``c2 > sigma`` standard errors above
    0. inconclusive: anything else. Log growth has constant increments on a
    geometric ladder, so shrinking residuals never read as divergence.
    """
    eps = np.asarray(epsilons, dtype=float)
    vals = np.asarray(values, dtype=float)
    if eps.size < 4 or eps.size != vals.size:
        raise ValueError("need at least 4 matching ladder samples")
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("epsilons must be positive and strictly decreasing")
    res = np.abs(np.diff(vals))
    scale = max(float(np.abs(vals[-1])), 1e-300)
    floor = 1e-13 * scale
    shrinking = all(r1 <= ratio * r0 or r1 <= floor for r0, r1 in zip(res[:-1], res[1:]))
    ext = aitken(vals)
    settled = bool(abs(ext[-1] - ext[-2]) < rtol * scale) if ext.size >= 2 else False
    # every sample should be nonincreasing in eps for a nonnegative integrand
    monotone = bool(np.all(np.diff(vals) >= -floor))

    x = np.abs(np.log(eps))
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    dof = max(len(x) - 2, 1)
    resid = vals - A @ coef
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    slope, se = float(coef[1]), float(np.sqrt(max(cov[1, 1], 0.0)))

    if shrinking and settled:
        verdict, extrap = CONVERGENT, float(ext[-1])
    elif not shrinking and slope > 0 and slope > sigma * se:
        verdict, extrap = DIVERGENT, None
    else:
        verdict, extrap = INCONCLUSIVE, None
    return IntegrabilityReport(eps, vals, res, verdict, extrap, slope, se, monotone,
                               {"aitken": ext.tolist(), "shrinking": shrinking, "settled": settled})


# -- boundary limit ----------------------------------------------------------


@dataclass
class BoundaryLimitReport:
    levels: np.ndarray
    residuals: np.ndarray
    extrapolated: np.ndarray
    cauchy: bool
    two_term: list
    two_term_spread: float


def boundary_limit_existence(a, spec: Spectrum, f: FunctionSpec, cs: ContourSequence,
                             noise: float = 1e-9, resolution: int = 512,
                             **quad) -> BoundaryLimitReport:
    """Check that the boundary-only integrals form a Cauchy sequence.

    Residuals must not grow once they are above ``noise`` (relative to the
    size of the values); otherwise :class:`NonCauchy` is raised. The
    two-term combination (boundary minus area) is evaluated on every level
    and its spread reported: it should not depend on the level.
    """
    bl = cfc_boundary_limit(a, spec, f, cs)
    size = max(float(spectral_norm(bl.values[-1])), 1.0)
    r = bl.residuals
    for k in range(1, len(r)):
        if r[k] > r[k - 1] and r[k] > noise * size:
            raise NonCauchy(f"boundary residuals grow at level {k + 1}: {r.tolist()}",
                            operation="boundary_limit_existence")
    two = [smooth_fc(a, spec, f, c, resolution=resolution, **quad) for c in cs.contours]
    spread = max(float(spectral_norm(t - two[-1])) for t in two)
    return BoundaryLimitReport(bl.levels, r, bl.extrapolated, True, two, spread)
