"""Holomorphic, smooth and continuous functional calculi for matrices.

All three are built from two quadratures of the resolvent
``R(z) = (zI - A)^{-1}``:

    f(A) = (1/2 pi i) oint f(z) R(z) dz  -  (1/pi) iint dbar f(z) R(z) dx dy.

For holomorphic ``f`` the area term vanishes identically and is skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contour import Contour, ContourSequence
from .errors import (DisagreeOnSpectrum, NonConvergent, OnSpectrum, PointTooClose,
                     SpectrumNotEnclosed)
from .functions import CONTINUOUS, FunctionSpec, MollifierSequence
from .matrix import Spectrum, as_matrix, resolvent_batch, spectral_norm
from .quadrature import (RegionQuadrature, _checked, contour_integral, region_integral,
                         region_quadrature)
from .reduce import weighted_sum

DEFAULT_RESOLUTION = 512
ON_SPECTRUM_TOL = 1e-12


def _check_enclosed(spec: Spectrum, c: Contour) -> None:
    w = c.winding_number(spec.eigenvalues)
    if np.any(w != 1):
        bad = spec.eigenvalues[np.flatnonzero(w != 1)[0]]
        raise SpectrumNotEnclosed(f"eigenvalue {bad:.6g} has winding number "
                                  f"{int(w[np.flatnonzero(w != 1)[0]])} w.r.t. the contour")


def _check_poles(f: FunctionSpec, c: Contour) -> None:
    if f.poles:
        p = np.asarray(f.poles, dtype=complex)
        inside = c.winding_number(p) != 0
        near = c.distance_to(p) < 1e-8
        if np.any(inside | near):
            raise ValueError(f"{f.name} has a pole inside or on the contour")


def _on_nodes(spec: Spectrum, z: np.ndarray, what: str) -> None:
    d = spec.distance(z)
    if d.size and d.min() <= ON_SPECTRUM_TOL * max(1.0, float(np.abs(spec.eigenvalues).max())):
        raise OnSpectrum(f"a {what} lies on the spectrum (distance {d.min():.3g})",
                         operation="resolvent")


def _weighted_resolvent(a: np.ndarray, scalar, label: str):
    """Integrand ``scalar(z) R(z)``; ``R`` is only formed where the weight is nonzero."""
    n = a.shape[0]
    check = _checked(scalar, label)

    def evaluate(z):
        s = check(z)
        out = np.zeros((len(z), n, n), dtype=complex)
        nz = np.flatnonzero(s != 0)
        if nz.size:
            out[nz] = s[nz, None, None] * resolvent_batch(a, z[nz])
        return out

    return evaluate


def _as_matrix_sum(value, n):
    return np.zeros((n, n), dtype=complex) if np.ndim(value) == 0 else np.asarray(value)


def boundary_term(a, f: FunctionSpec, c: Contour) -> np.ndarray:
    """``(1/2 pi i) oint f(z) R(z) dz``."""
    a = as_matrix(a)
    total = weighted_sum(_weighted_resolvent(a, f, "contour node"), c.nodes, c.dz)
    return _as_matrix_sum(total, a.shape[0]) / (2j * np.pi)


def area_term(a, f: FunctionSpec, q: RegionQuadrature) -> np.ndarray:
    """``(1/pi) iint dbar f(z) R(z) dx dy`` (enters the calculus with a minus sign)."""
    a = as_matrix(a)
    total = weighted_sum(_weighted_resolvent(a, f.d, "region point"), q.points, q.weights)
    return _as_matrix_sum(total, a.shape[0]) / np.pi


# -- scalar ------------------------------------------------------------------


def scalar_cauchy_pompeiu(u: FunctionSpec, c: Contour, lam: complex,
                          q: Optional[RegionQuadrature] = None,
                          resolution: int = DEFAULT_RESOLUTION, **quad) -> complex:
    """Reconstruct ``u(lam)`` from boundary values and ``dbar u`` inside ``c``.

    A polar patch is placed at ``lam``. If ``q`` is given, its settings and
    patch centres are reused and ``lam`` is added to the centres.
    """
    lam = complex(lam)
    if c.winding_number([lam])[0] == 0:
        raise PointTooClose(f"{lam:.6g} is not inside the contour", operation="scalar_cauchy_pompeiu")
    centers = []
    if q is not None:
        resolution = q.settings.get("resolution", resolution)
        quad = {k: v for k, v in q.settings.items() if k != "resolution"} | quad
        centers = [z for z in q.centers if z != lam]
    x0, x1, y0, y1 = c.bbox()
    h = max(x1 - x0, y1 - y0) / resolution
    if float(c.distance_to([lam])[0]) < 2 * h:
        raise PointTooClose(f"{lam:.6g} is within two cells of the boundary",
                            operation="scalar_cauchy_pompeiu")
    if centers and float(np.min(np.abs(np.asarray(centers) - lam))) < 2 * h:
        raise PointTooClose(f"{lam:.6g} is within two cells of a patch centre",
                            operation="scalar_cauchy_pompeiu")
    bd = contour_integral(c, lambda z: u(z) / (z - lam)) / (2j * np.pi)
    if u.is_holomorphic:
        return complex(bd)
    rq = region_quadrature(c, [lam] + centers, resolution=resolution, **quad)
    ar = region_integral(rq, lambda z: u.d(z) / (z - lam)) / np.pi
    return complex(bd - ar)


# -- matrix calculi ----------------------------------------------------------


def holomorphic_fc(a, spec: Spectrum, f: FunctionSpec, c: Contour) -> np.ndarray:
    """``(1/2 pi i) oint f(z) R(z) dz`` for ``f`` holomorphic inside ``c``."""
    if not f.is_holomorphic:
        raise ValueError(f"{f.name} is not tagged holomorphic; use smooth_fc")
    _on_nodes(spec, c.nodes, "contour node")
    _check_enclosed(spec, c)
    _check_poles(f, c)
    return boundary_term(a, f, c)


def default_quadrature(spec: Spectrum, c: Contour, resolution: int = DEFAULT_RESOLUTION,
                       **quad) -> RegionQuadrature:
    """Region rule over ``int c`` with one patch per distinct eigenvalue."""
    return region_quadrature(c, spec.eigenvalues, resolution=resolution, **quad)


def smooth_fc_terms(a, spec: Spectrum, f: FunctionSpec, c: Contour,
                    q: Optional[RegionQuadrature] = None, resolution: int = DEFAULT_RESOLUTION,
                    **quad) -> tuple:
    """``(boundary, area)`` with ``smooth_fc = boundary - area``."""
    a = as_matrix(a)
    if f.smoothness == CONTINUOUS:
        raise ValueError(f"{f.name} is only continuous; use continuous_fc")
    _on_nodes(spec, c.nodes, "contour node")
    _check_enclosed(spec, c)
    _check_poles(f, c)
    bd = boundary_term(a, f, c)
    if f.is_holomorphic:
        return bd, np.zeros_like(bd)
    if q is None:
        q = default_quadrature(spec, c, resolution, **quad)
    _on_nodes(spec, q.points, "region point")
    return bd, area_term(a, f, q)


def smooth_fc(a, spec: Spectrum, f: FunctionSpec, c: Contour,
              q: Optional[RegionQuadrature] = None, resolution: int = DEFAULT_RESOLUTION,
              **quad) -> np.ndarray:
    """Cauchy-Pompeiu calculus: boundary term minus area term."""
    bd, ar = smooth_fc_terms(a, spec, f, c, q, resolution, **quad)
    return bd - ar


@dataclass
class BoundaryLimit:
    """Boundary-only integrals along a contour sequence.

    ``residuals[k] = ||values[k+1] - values[k]||``. ``extrapolated`` is the
    Richardson value from the last two levels assuming an error ``C t^order``.
    """

    levels: np.ndarray
    values: list
    residuals: np.ndarray
    extrapolated: np.ndarray
    order: float = 2.0

    @property
    def last(self) -> np.ndarray:
        return self.values[-1]


def richardson(t1: float, v1, t2: float, v2, order: float = 2.0):
    """Eliminate ``C t^order`` from values at ``t1 > t2``."""
    w1, w2 = t1 ** order, t2 ** order
    return (w1 * np.asarray(v2) - w2 * np.asarray(v1)) / (w1 - w2)


def cfc_boundary_limit(a, spec: Spectrum, f: FunctionSpec, cs: ContourSequence,
                       order: float = 2.0) -> BoundaryLimit:
    """Boundary-only values ``(1/2 pi i) oint_{gamma_t} f R dz`` as ``t -> 0``."""
    a = as_matrix(a)
    if len(cs) == 0:
        raise ValueError("empty contour sequence")
    values = []
    for c in cs.contours:
        _on_nodes(spec, c.nodes, "contour node")
        _check_enclosed(spec, c)
        _check_poles(f, c)
        values.append(boundary_term(a, f, c))
    res = np.array([spectral_norm(values[k + 1] - values[k]) for k in range(len(values) - 1)])
    levels = np.asarray(cs.levels, dtype=float)
    if len(values) >= 2:
        ext = richardson(levels[-2], values[-2], levels[-1], values[-1], order)
    else:
        ext = values[-1]
    return BoundaryLimit(levels, values, res, np.asarray(ext), order)


@dataclass
class ContinuousResult:
    value: np.ndarray
    iterates: list
    differences: np.ndarray
    widths: tuple = field(default=())


def continuous_fc(a, spec: Spectrum, m: MollifierSequence, c: Contour,
                  q: Optional[RegionQuadrature] = None, resolution: int = DEFAULT_RESOLUTION,
                  tol: float = 5e-2, **quad) -> ContinuousResult:
    """Limit of ``smooth_fc`` over the mollified members of ``m``.

    Raises :class:`NonConvergent` unless the successive differences
    decrease strictly and the last one is below ``tol``.
    """
    a = as_matrix(a)
    if q is None:
        q = default_quadrature(spec, c, resolution, **quad)
    its = [smooth_fc(a, spec, g, c, q) for g in m.members()]
    diffs = np.array([spectral_norm(its[k + 1] - its[k]) for k in range(len(its) - 1)])
    if diffs.size and (np.any(np.diff(diffs) >= 0) or diffs[-1] > tol):
        raise NonConvergent(f"mollified iterates are not Cauchy: differences {diffs.tolist()}",
                            operation="continuous_fc")
    return ContinuousResult(its[-1], its, diffs, m.widths)


def restriction_check(a, spec: Spectrum, F: FunctionSpec, G: FunctionSpec, c: Contour,
                      q: Optional[RegionQuadrature] = None, resolution: int = DEFAULT_RESOLUTION,
                      tol: float = 1e-10, **quad) -> float:
    """``||smooth_fc(F) - smooth_fc(G)||`` for ``F``, ``G`` equal on the spectrum."""
    gap = np.abs(F(spec.eigenvalues) - G(spec.eigenvalues))
    if np.any(gap > tol):
        k = int(np.argmax(gap))
        raise DisagreeOnSpectrum(f"F and G differ by {gap[k]:.3g} at {spec.eigenvalues[k]:.6g}",
                                 operation="restriction_check")
    if q is None and not (F.is_holomorphic and G.is_holomorphic):
        q = default_quadrature(spec, c, resolution, **quad)
    fa = smooth_fc(a, spec, F, c, q)
    ga = smooth_fc(a, spec, G, c, q)
    return float(spectral_norm(fa - ga))


def resolvent_constants(a, spec: Spectrum, c: Contour, q: RegionQuadrature) -> tuple:
    """``((1/2 pi) oint ||R|| |dz|, (1/pi) iint ||R|| dA)``.

    ``||smooth_fc(f) - smooth_fc(g)||`` is at most the first constant times
    ``sup |f - g|`` on ``c`` plus the second times ``sup |dbar(f - g)|``.
    """
    a = as_matrix(a)

    def norms(z):
        return spectral_norm(resolvent_batch(a, z))

    kb = float(np.real(weighted_sum(norms, c.nodes, c.weights))) / (2 * np.pi)
    ka = float(np.real(weighted_sum(norms, q.points, q.weights))) / np.pi
    return kb, ka
