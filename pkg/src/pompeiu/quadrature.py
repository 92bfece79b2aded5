"""Quadrature on closed contours and on the planar regions they enclose.

Region rules combine a Cartesian midpoint grid with polar patches centred on
singular points. In a patch the ``r dr dtheta`` Jacobian cancels a ``1/r``
singularity, so integrands like ``g(z) / (z - c)`` are sampled only where
they are bounded. Cells near the contour or a patch disk are split into
``refine x refine`` sub-cells. A sub-cell crossed by the contour is cut
along the nearest polyline edge and each piece is weighted by its own
winding number; a sub-cell crossed by a patch circle keeps only the piece
outside the disk (the circle is replaced by its tangent line there). Both
pieces are sampled at their centroids, so coverage errors are second order
in the sub-cell size.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .contour import Contour, DistanceField, extract_level_set
from .errors import NonFiniteSample
from .matrix import LinearFunctional
from .reduce import weighted_sum


@dataclass
class RegionQuadrature:
    """Points and signed weights for integrals over the inside of a contour.

    Background points come first (``n_background`` of them), followed by
    the polar patch nodes. Weights carry the winding number of the region,
    so a clockwise contour integrates with the opposite sign.
    """

    points: np.ndarray
    weights: np.ndarray
    n_background: int
    cell: float
    centers: np.ndarray
    patch_radii: np.ndarray
    exclusion: float
    contour: Contour = field(repr=False)
    settings: dict = field(default_factory=dict)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def sliver(self) -> float:
        """Region area minus the weight carried by nodes (ideally ~0)."""
        excluded = np.pi * self.exclusion ** 2 * len(self.centers)
        return self.contour.area() - excluded - self.total_weight

    @property
    def sliver_bound(self) -> float:
        """Worst-case uncovered area for the configured sub-cell size."""
        sub = self.cell / self.settings.get("refine", 1)
        rim = self.contour.length + 2 * np.pi * float(np.sum(self.patch_radii))
        return rim * np.sqrt(2.0) * sub

    def patch_mask(self) -> np.ndarray:
        m = np.zeros(len(self.points), dtype=bool)
        m[self.n_background:] = True
        return m


def _square_disk_gap(cx, cy, half, c):
    """Distance from ``c`` to axis-aligned squares centred at (cx, cy)."""
    dx = np.maximum(np.abs(cx - c.real) - half, 0.0)
    dy = np.maximum(np.abs(cy - c.imag) - half, 0.0)
    return np.hypot(dx, dy)


def _square_far(cx, cy, half, c):
    return np.hypot(np.abs(cx - c.real) + half, np.abs(cy - c.imag) + half)


_CORNERS = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)


def _clip_halfplane(cx, cy, half, px, py, ux, uy):
    """Clip squares to the half-planes ``(v - p) . u >= 0``.

    All arguments are arrays of equal length. Returns the clipped areas and
    centroids (as complex numbers).
    """
    vx = cx[:, None] + half * _CORNERS[:, 0]
    vy = cy[:, None] + half * _CORNERS[:, 1]
    f = (vx - px[:, None]) * ux[:, None] + (vy - py[:, None]) * uy[:, None]
    vx2, vy2, f2 = (np.roll(q, -1, axis=1) for q in (vx, vy, f))
    inside = f >= 0
    cut = inside != (f2 >= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(cut, f / (f - f2), 0.0)
    qx = np.stack([vx, vx + s * (vx2 - vx)], axis=2).reshape(len(cx), 8)
    qy = np.stack([vy, vy + s * (vy2 - vy)], axis=2).reshape(len(cx), 8)
    valid = np.stack([inside, cut], axis=2).reshape(len(cx), 8)
    # drop invalid slots by repeating a valid neighbour; repeated vertices
    # add nothing to the shoelace sums
    idx = np.where(valid, np.arange(8), -1)
    idx = np.maximum.accumulate(idx, axis=1)
    first = np.argmax(valid, axis=1)
    idx = np.where(idx < 0, first[:, None], idx)
    rows = np.arange(len(cx))[:, None]
    qx, qy = qx[rows, idx], qy[rows, idx]
    nx_, ny_ = np.roll(qx, -1, axis=1), np.roll(qy, -1, axis=1)
    cr = qx * ny_ - nx_ * qy
    area = 0.5 * cr.sum(axis=1)
    area = np.where(valid.any(axis=1), area, 0.0)
    ok = area > 0
    safe = np.where(ok, 6 * area, 1.0)
    gx = np.where(ok, ((qx + nx_) * cr).sum(axis=1) / safe, cx)
    gy = np.where(ok, ((qy + ny_) * cr).sum(axis=1) / safe, cy)
    g = gx + 1j * gy
    return np.maximum(area, 0.0), g


@dataclass
class _Background:
    h: float
    sub_size: float
    xc: np.ndarray
    yc: np.ndarray
    coarse: np.ndarray      # winding number at coarse cell centres
    whole: np.ndarray       # coarse cells usable whole (clear of the contour)
    cell_id: np.ndarray     # per split sub-cell: flat index of its coarse cell
    centre: np.ndarray      # split sub-cell centres
    sub: np.ndarray         # split sub-cell nodes, left part when cut
    area: np.ndarray
    wn: np.ndarray
    other_pt: np.ndarray    # right part of sub-cells cut by the contour
    other: np.ndarray
    other_wn: np.ndarray


def _subcells(bg: _Background, cells: np.ndarray):
    refine = int(round(bg.h / bg.sub_size))
    ny, nx = bg.coarse.shape
    si, sj = np.divmod(cells, nx)
    o = (np.arange(refine) + 0.5) * bg.sub_size - 0.5 * bg.h
    sx = (bg.xc[sj][:, None, None] + o[None, None, :]).repeat(refine, axis=1).ravel()
    sy = (bg.yc[si][:, None, None] + o[None, :, None]).repeat(refine, axis=2).ravel()
    return np.repeat(cells, refine * refine), sx, sy


def _background(contour: Contour, resolution: int, refine: int) -> _Background:
    key = ("background", resolution, refine)
    if key in contour.cache:
        return contour.cache[key]
    x0b, x1b, y0b, y1b = contour.bbox()
    h = max(x1b - x0b, y1b - y0b) / resolution
    nx = int(np.ceil((x1b - x0b) / h)) + 2
    ny = int(np.ceil((y1b - y0b) / h)) + 2
    x0 = 0.5 * (x0b + x1b) - 0.5 * nx * h
    y0 = 0.5 * (y0b + y1b) - 0.5 * ny * h
    xc = x0 + (np.arange(nx) + 0.5) * h
    yc = y0 + (np.arange(ny) + 0.5) * h
    a = h / refine
    xf = x0 + (np.arange(nx * refine) + 0.5) * a
    yf = y0 + (np.arange(ny * refine) + 0.5) * a

    # winding number of every sub-cell centre; a coarse cell is used whole
    # when all of its sub-cells agree and no polyline edge comes near it
    fine = contour.winding_grid(xf, yf)
    f4 = fine.reshape(ny, refine, nx, refine)
    coarse = f4[:, 0, :, 0].copy()
    whole = (f4 == coarse[:, None, :, None]).all(axis=(1, 3))
    ea = np.concatenate([lp[:-1] for lp in contour.loops])
    eb = np.concatenate([lp[1:] for lp in contour.loops])
    tree = cKDTree(np.column_stack([(0.5 * (ea + eb)).real, (0.5 * (ea + eb)).imag]))
    X, Y = np.meshgrid(xc, yc)
    reach = 0.5 * h * np.sqrt(2.0) + float(np.abs(eb - ea).max())
    gap, _ = tree.query(np.column_stack([X.ravel(), Y.ravel()]), distance_upper_bound=reach)
    whole &= gap.reshape(X.shape) > reach

    bg = _Background(h, a, xc, yc, coarse, whole, *([np.zeros(0)] * 8))
    cells = np.flatnonzero(~whole)
    cell_id, sx, sy = _subcells(bg, cells)
    fi = np.clip(np.round((sy - yf[0]) / a).astype(int), 0, ny * refine - 1)
    fj = np.clip(np.round((sx - xf[0]) / a).astype(int), 0, nx * refine - 1)
    wn = fine[fi, fj]
    sub = sx + 1j * sy
    area = np.full(sx.shape, a * a)
    other = np.zeros(sx.shape)
    other_pt = sub.copy()
    other_wn = wn.copy()

    # sub-cells cut by the contour: split along the nearest polyline edge;
    # the left of an edge has winding number one more than its right
    if sx.size:
        _, e = tree.query(np.column_stack([sx, sy]))
        t = eb[e] - ea[e]
        t = t / np.abs(t)
        ux, uy = -t.imag, t.real
        d = (sx - ea[e].real) * ux + (sy - ea[e].imag) * uy
        k = np.flatnonzero(np.abs(d) < 0.5 * a * np.sqrt(2.0))
        if k.size:
            pa, pb = ea[e[k]].real, ea[e[k]].imag
            al, gl = _clip_halfplane(sx[k], sy[k], 0.5 * a, pa, pb, ux[k], uy[k])
            ar, gr = _clip_halfplane(sx[k], sy[k], 0.5 * a, pa, pb, -ux[k], -uy[k])
            wl = np.where(d[k] >= 0, wn[k], wn[k] + 1)
            area[k], sub[k], wn[k] = al, gl, wl
            other[k], other_pt[k], other_wn[k] = ar, gr, wl - 1
    bg.centre = sx + 1j * sy
    bg.cell_id, bg.sub, bg.area, bg.wn = cell_id, sub, area, wn.astype(float)
    bg.other_pt, bg.other, bg.other_wn = other_pt, other, other_wn.astype(float)
    contour.cache[key] = bg
    return bg


def region_quadrature(contour: Contour, centers: Sequence[complex] = (),
                      resolution: int = 256, patch_radius_cells: float = 3.0,
                      radial: int = 12, angular: int = 48, exclusion: float = 0.0,
                      refine: int = 4, patch_radius: Optional[float] = None) -> RegionQuadrature:
    """Build a region rule over ``int contour`` with patches at ``centers``.

    ``resolution`` is the number of cells across the longer side of the
    contour's bounding box. Each patch is the annulus
    ``exclusion < |z - c| < exclusion + delta`` with
    ``delta = patch_radius_cells * h`` unless an absolute ``patch_radius`` is
    given, shrunk when necessary to stay clear of other centres and of the
    contour. A fixed ``patch_radius`` gives smooth convergence in refinement
    studies, since the patch rim then stops moving with the grid.
    """
    bg = _background(contour, resolution, refine)
    h, a = bg.h, bg.sub_size

    centers = np.atleast_1d(np.asarray(centers, dtype=complex))
    if centers.size:
        centers = centers[contour.winding_number(centers) != 0]
    radii = np.zeros(len(centers))
    if centers.size:
        to_contour = contour.distance_to(centers)
        for k, c in enumerate(centers):
            r = exclusion + (patch_radius if patch_radius is not None else patch_radius_cells * h)
            others = np.abs(np.delete(centers, k) - c)
            if others.size:
                r = min(r, 0.45 * float(others.min()))
            r = min(r, 0.9 * float(to_contour[k]))
            if r <= exclusion:
                raise ValueError(f"no room for a patch of radius > {exclusion:.3g} around {c}")
            radii[k] = r

    X, Y = np.meshgrid(bg.xc, bg.yc)
    whole = bg.whole.copy()
    for c, r in zip(centers, radii):
        whole &= _square_disk_gap(X, Y, 0.5 * h, c) >= r
    ii, jj = np.nonzero(whole & (bg.coarse != 0))
    pts = [bg.xc[jj] + 1j * bg.yc[ii]]
    wts = [h * h * bg.coarse[ii, jj].astype(float)]

    # whole cells touched by a patch are split too
    extra = np.flatnonzero((bg.whole & ~whole).ravel())
    cid, ex, ey = _subcells(bg, extra)
    ewn = bg.coarse.ravel()[cid].astype(float)
    sub = np.concatenate([bg.sub, ex + 1j * ey])
    area = np.concatenate([bg.area, np.full(ex.shape, a * a)])
    wn = np.concatenate([bg.wn, ewn])
    other_pt = np.concatenate([bg.other_pt, ex + 1j * ey])
    other = np.concatenate([bg.other, np.zeros(ex.shape)])
    other_wn = np.concatenate([bg.other_wn, ewn])
    centre = np.concatenate([bg.centre, ex + 1j * ey])
    sx, sy = centre.real, centre.imag

    # sub-cells cut by a patch circle keep the part outside the disk
    for c, r in zip(centers, radii):
        near = _square_disk_gap(sx, sy, 0.5 * a, c) < r
        inside = near & (_square_far(sx, sy, 0.5 * a, c) <= r)
        area[inside] = 0.0
        other[inside] = 0.0
        k = np.flatnonzero(near & ~inside)
        if k.size:
            u = centre[k] - c
            u = u / np.abs(u)
            p = c + r * u
            ak, gk = _clip_halfplane(sx[k], sy[k], 0.5 * a, p.real, p.imag, u.real, u.imag)
            area[k] = np.minimum(area[k], ak)
            sub[k] = gk
            other[k] = 0.0

    w_all = np.concatenate([area * wn, other * other_wn])
    p_all = np.concatenate([sub, other_pt])
    keep = w_all != 0
    pts.append(p_all[keep])
    wts.append(w_all[keep])

    n_bg = sum(len(p) for p in pts)
    if centers.size:
        wc = contour.winding_number(centers).astype(float)
        th = 2 * np.pi * (np.arange(angular) + 0.5) / angular
        e = np.exp(1j * th)
        for c, r, w in zip(centers, radii, wc):
            dr = (r - exclusion) / radial
            rr = exclusion + (np.arange(radial) + 0.5) * dr
            pts.append((c + rr[:, None] * e[None, :]).ravel())
            wts.append(np.repeat(w * rr * dr * (2 * np.pi / angular), angular))

    settings = dict(resolution=resolution, patch_radius_cells=patch_radius_cells,
                    radial=radial, angular=angular, refine=refine, patch_radius=patch_radius)
    return RegionQuadrature(np.concatenate(pts), np.concatenate(wts), n_bg, h, centers,
                            radii, float(exclusion), contour, settings)


def _checked(g: Callable, points_label: str):
    def evaluate(z):
        vals = np.asarray(g(z))
        if vals.ndim == 0:
            vals = np.full(z.shape, vals)
        finite = np.isfinite(vals).reshape(len(z), -1).all(axis=1)
        if not finite.all():
            bad = z[np.flatnonzero(~finite)[0]]
            raise NonFiniteSample(f"integrand is not finite at {points_label} {bad:.6g}", location=bad)
        return vals
    return evaluate


def contour_integral(c: Contour, g: Callable):
    """Trapezoid rule for ``\\oint g(z) dz`` over every loop of ``c``.

    ``g`` maps an array of nodes to values (scalars, or one matrix per node).
    """
    return weighted_sum(_checked(g, "contour node"), c.nodes, c.dz)


def region_integral(q: RegionQuadrature, g: Callable):
    """``\\iint g dx dy`` over the region of ``q``."""
    return weighted_sum(_checked(g, "region point"), q.points, q.weights)


Rule = Union[Contour, RegionQuadrature]


def _rule_parts(rule: Rule):
    if isinstance(rule, Contour):
        return rule.nodes, rule.dz
    return rule.points, rule.weights


def functional_exchange_check(rule: Rule, F: Callable, functional: LinearFunctional, x) -> float:
    """``|L((\\int F) x) - \\int L(F(.) x)|`` for a finite rule.

    Both sides are computed independently; for any finite rule they agree
    up to rounding.
    """
    pts, w = _rule_parts(rule)
    x = np.asarray(x, dtype=complex)
    whole = weighted_sum(_checked(F, "node"), pts, w)
    lhs = functional(np.asarray(whole) @ x)

    def scalar(z):
        return functional(np.moveaxis(np.asarray(F(z)) @ x, -1, 0))

    rhs = weighted_sum(_checked(scalar, "node"), pts, w)
    return float(abs(lhs - rhs))


def band_quadrature(field: DistanceField, t_low: float, t_high: float,
                    nodes: int = 256, resolution: int = 512, **kw):
    """Region rule for ``{t_low < d < t_high}`` plus an indicator mask.

    With known spectral points and ``t_low`` small enough, the inner
    boundary is realised exactly by annular patches; otherwise points are
    masked by the exact distance.
    """
    outer = extract_level_set(field, t_high, nodes)
    centers = field.points if field.points is not None else ()
    exclusion = 0.0
    if field.points is not None:
        gap = np.inf
        if len(field.points) > 1:
            d = np.abs(field.points[:, None] - field.points[None, :])
            gap = d[~np.eye(len(d), dtype=bool)].min()
        if t_low < 0.45 * gap:
            exclusion = t_low
    q = region_quadrature(outer, centers, resolution=resolution, exclusion=exclusion, **kw)
    mask = field.distance(q.points) > t_low
    return q, mask


def coarea_check(field: DistanceField, f: Callable, levels: Sequence[float],
                 nodes: int = 256, resolution: int = 512) -> tuple:
    """Compare an area integral with its decomposition over level sets.

    ``lhs`` integrates ``f`` over the band between the smallest and largest
    level (the smallest may be 0 for a point spectrum); ``rhs`` integrates
    the level-set integrals ``\\oint_{d=t} f ds`` over ``t`` by the
    composite trapezoid rule. The distance function has unit gradient, so
    no weight appears.
    """
    levels = np.sort(np.asarray(levels, dtype=float))
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    if levels[0] < 0 or (levels[0] == 0 and field.points is None):
        raise ValueError("level 0 is only allowed for a finite point spectrum")
    q, mask = band_quadrature(field, levels[0], levels[-1], nodes, resolution)
    pts = q.points[mask]
    wts = q.weights[mask]
    lhs = float(np.real(weighted_sum(lambda z: np.asarray(f(z), dtype=float) * np.ones(z.shape),
                                     pts, wts)))
    per_level = []
    for t in levels:
        if t == 0:
            # the zero level set of a finite spectrum is a finite set of points
            per_level.append(0.0)
            continue
        c = extract_level_set(field, t, nodes)
        per_level.append(float(weighted_sum(lambda z: np.asarray(f(z), dtype=float) * np.ones(z.shape),
                                            c.nodes, c.weights)))
    rhs = float(np.trapezoid(per_level, levels))
    return lhs, rhs
