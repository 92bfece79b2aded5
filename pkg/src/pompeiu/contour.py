"""Distance-to-spectrum fields and the level-set contours built from them.

The sublevel sets ``{d < t}`` of the distance to a finite spectrum shrink
onto the spectrum as ``t -> 0``; their boundaries are the integration
curves of the boundary-limit formulas. Level sets are traced with marching
squares and then turned into smooth closed curves carrying trapezoid nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BoxTooSmall, DegenerateLevel
from .matrix import Spectrum

DEFAULT_NODES = 256
# dense polylines carry this many vertices per quadrature node
DENSE_FACTOR = 32


# -- distance field ----------------------------------------------------------


@dataclass
class DistanceField:
    """Samples of a distance function on an ``m x m`` grid over ``box``.

    ``values[i, j]`` is the distance at ``xs[j] + 1j * ys[i]``. ``distance``
    evaluates the same function exactly at arbitrary points.
    """

    box: tuple
    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    distance: Callable = field(repr=False)
    points: Optional[np.ndarray] = None
    margin: float = np.inf

    @property
    def spacing(self) -> float:
        return float(max(self.xs[1] - self.xs[0], self.ys[1] - self.ys[0]))

    @property
    def floor(self) -> float:
        """Smallest level the grid resolves."""
        return 2.0 * self.spacing

    @property
    def resolution(self) -> int:
        return len(self.xs)


def _grid(box, resolution):
    x0, x1, y0, y1 = (float(b) for b in box)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate box {box}")
    if resolution < 4:
        raise ValueError("resolution must be at least 4")
    return np.linspace(x0, x1, resolution), np.linspace(y0, y1, resolution)


def _sample(fn, xs, ys):
    out = np.empty((len(ys), len(xs)))
    for i, y in enumerate(ys):
        out[i] = fn(xs + 1j * y)
    return out


def build_distance_field(spec, box=None, resolution: int = 512,
                         max_level: Optional[float] = None) -> DistanceField:
    """Exact distance to a finite point set, sampled on a square grid.

    ``spec`` is a :class:`Spectrum` or a sequence of points. Without a box,
    one is chosen around the points with a margin of ``1.5 * max_level``
    (``max_level`` defaults to 1). Raises :class:`BoxTooSmall` when a point
    sits closer than ``max_level`` to the box edge.
    """
    pts = spec.points if isinstance(spec, Spectrum) else np.atleast_1d(np.asarray(spec, dtype=complex))
    if pts.size == 0:
        raise ValueError("empty point set")
    if box is None:
        pad = 1.5 * (max_level if max_level is not None else 1.0)
        cx = 0.5 * (pts.real.min() + pts.real.max())
        cy = 0.5 * (pts.imag.min() + pts.imag.max())
        half = 0.5 * max(np.ptp(pts.real), np.ptp(pts.imag)) + pad
        box = (cx - half, cx + half, cy - half, cy + half)
    x0, x1, y0, y1 = box
    margin = float(np.min(np.concatenate([pts.real - x0, x1 - pts.real, pts.imag - y0, y1 - pts.imag])))
    if margin <= 0:
        raise BoxTooSmall("a spectral point lies outside the box")
    if max_level is not None and margin < max_level:
        raise BoxTooSmall(f"box margin {margin:.4g} is below the requested max level {max_level:.4g}")
    xs, ys = _grid(box, resolution)

    def dist(z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z[..., None] - pts).min(axis=-1)

    return DistanceField(tuple(float(b) for b in box), xs, ys, _sample(dist, xs, ys),
                         dist, pts, margin)


def filled_disk_field(center: complex, radius: float, box, resolution: int = 512) -> DistanceField:
    """Distance to a closed disk: a synthetic spectrum of positive area."""
    xs, ys = _grid(box, resolution)

    def dist(z):
        return np.maximum(np.abs(np.asarray(z, dtype=complex) - center) - radius, 0.0)

    x0, x1, y0, y1 = box
    margin = min(center.real - radius - x0, x1 - center.real - radius,
                 center.imag - radius - y0, y1 - center.imag - radius)
    if margin <= 0:
        raise BoxTooSmall("disk does not fit in the box")
    return DistanceField(tuple(float(b) for b in box), xs, ys, _sample(dist, xs, ys), dist, None, margin)


# -- winding numbers ---------------------------------------------------------


def _closed(loop: np.ndarray) -> np.ndarray:
    return loop if loop[-1] == loop[0] else np.append(loop, loop[0])


def winding_number(loops: Sequence[np.ndarray], pts, chunk: int = 512) -> np.ndarray:
    """Winding number of closed polylines around each point.

    Points are processed in chunks sorted by imaginary part; a chunk only
    meets the edges whose y-range overlaps its own.
    """
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    flat = pts.ravel()
    out = np.zeros(flat.size, dtype=int)
    if flat.size == 0 or not loops:
        return out.reshape(pts.shape)
    closed = [_closed(lp) for lp in loops]
    a = np.concatenate([lp[:-1] for lp in closed])
    b = np.concatenate([lp[1:] for lp in closed])
    lo = np.minimum(a.imag, b.imag)
    hi = np.maximum(a.imag, b.imag)
    order = np.argsort(flat.imag, kind="stable")
    for s in range(0, flat.size, chunk):
        idx = order[s:s + chunk]
        p = flat[idx]
        sel = (hi > p.imag.min()) & (lo <= p.imag.max())
        if not sel.any():
            continue
        ea, eb = a[sel], b[sel]
        p = p[:, None]
        cross = (eb.real - ea.real) * (p.imag - ea.imag) - (p.real - ea.real) * (eb.imag - ea.imag)
        up = (ea.imag <= p.imag) & (eb.imag > p.imag) & (cross > 0)
        down = (ea.imag > p.imag) & (eb.imag <= p.imag) & (cross < 0)
        out[idx] = up.sum(axis=1) - down.sum(axis=1)
    return out.reshape(pts.shape)


def winding_grid(loops: Sequence[np.ndarray], xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Winding numbers at all points ``xs[j] + 1j ys[i]`` by scanlines."""
    closed = [_closed(lp) for lp in loops]
    a = np.concatenate([lp[:-1] for lp in closed])
    b = np.concatenate([lp[1:] for lp in closed])
    out = np.zeros((len(ys), len(xs)), dtype=int)
    for i, y in enumerate(ys):
        up = (a.imag <= y) & (b.imag > y)
        down = (a.imag > y) & (b.imag <= y)
        hit = up | down
        if not np.any(hit):
            continue
        ah, bh = a[hit], b[hit]
        xc = ah.real + (y - ah.imag) * (bh.real - ah.real) / (bh.imag - ah.imag)
        sign = np.where(up[hit], 1, -1)
        order = np.argsort(xc, kind="stable")
        xc, sign = xc[order], sign[order]
        suffix = np.concatenate([np.cumsum(sign[::-1])[::-1], [0]])
        out[i] = suffix[np.searchsorted(xc, xs, side="right")]
    return out


# -- contours ----------------------------------------------------------------


def _eval_modes(coef: np.ndarray, modes: np.ndarray, n: int):
    spec = np.zeros(n, dtype=complex)
    dspec = np.zeros(n, dtype=complex)
    spec[modes % n] = coef
    dspec[modes % n] = 1j * modes * coef
    return np.fft.ifft(spec) * n, np.fft.ifft(dspec) * n


def smooth_loop(poly: np.ndarray, nodes: int):
    """Smooth closed curve through a polygon by low-pass Fourier filtering.

    The polygon is resampled uniformly in arc length, its Fourier modes are
    damped with an exponential filter of cutoff ``nodes // 4``, and the
    resulting trigonometric curve is evaluated at ``nodes`` equispaced
    parameters. Returns ``(z, dz, dense)``: node positions, the trapezoid
    increments ``z'(theta) dtheta``, and a dense closed polyline of the curve.
    """
    v = np.asarray(poly, dtype=complex)
    if abs(v[0] - v[-1]) == 0:
        v = v[:-1]
    closed = np.append(v, v[0])
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(closed)))])
    length = s[-1]
    if length <= 0:
        raise DegenerateLevel("zero-length loop")
    ns = max(2048, 8 * nodes, 2 * len(v))
    su = length * np.arange(ns) / ns
    zu = np.interp(su, s, closed.real) + 1j * np.interp(su, s, closed.imag)
    c = np.fft.fft(zu) / ns
    cutoff = max(nodes // 4, 2)
    modes = np.arange(-cutoff, cutoff + 1)
    coef = c[modes % ns] * np.exp(-36.0 * (np.abs(modes) / cutoff) ** 8)
    z, dzdt = _eval_modes(coef, modes, nodes)
    dense, _ = _eval_modes(coef, modes, DENSE_FACTOR * nodes)
    return z, dzdt * (2 * np.pi / nodes), np.append(dense, dense[0])


@dataclass
class Contour:
    """Closed, oriented curves with trapezoid nodes.

    ``loops`` are dense closed polylines of the integration curves (used for
    inside tests and export); ``nodes``, ``tangents`` (unit) and ``weights``
    (arc length) define the quadrature, so ``dz = tangents * weights``.
    Orientation keeps the enclosed region on the left.
    """

    loops: list
    nodes: np.ndarray
    tangents: np.ndarray
    weights: np.ndarray
    loop_index: np.ndarray
    level: Optional[float] = None
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dz(self) -> np.ndarray:
        return self.tangents * self.weights

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    def loop_lengths(self) -> np.ndarray:
        return np.bincount(self.loop_index, weights=self.weights, minlength=len(self.loops))

    def winding_number(self, pts) -> np.ndarray:
        return winding_number(self.loops, pts)

    def winding_grid(self, xs, ys) -> np.ndarray:
        return winding_grid(self.loops, xs, ys)

    def area(self) -> float:
        """Signed enclosed area of the dense polylines (shoelace)."""
        total = 0.0
        for lp in self.loops:
            total += 0.5 * float(np.sum(lp[:-1].real * lp[1:].imag - lp[1:].real * lp[:-1].imag))
        return total

    def bbox(self) -> tuple:
        allp = np.concatenate(self.loops)
        return (float(allp.real.min()), float(allp.real.max()),
                float(allp.imag.min()), float(allp.imag.max()))

    def distance_to(self, pts) -> np.ndarray:
        """Distance from points to the dense polylines."""
        pts = np.atleast_1d(np.asarray(pts, dtype=complex))
        flat = pts.ravel()
        best = np.full(flat.shape, np.inf)
        for lp in self.loops:
            a, b = lp[:-1], lp[1:]
            ab = b - a
            l2 = np.maximum(np.abs(ab) ** 2, 1e-300)
            for s in range(0, flat.size, 256):
                p = flat[s:s + 256, None]
                u = np.clip(((p - a) * ab.conj()).real / l2, 0.0, 1.0)
                best[s:s + 256] = np.minimum(best[s:s + 256], np.abs(a + u * ab - p).min(axis=1))
        return best.reshape(pts.shape)

    def to_json(self) -> dict:
        return {"level": self.level,
                "loops": [[{"re": float(z.real), "im": float(z.imag)} for z in lp] for lp in self.loops]}

    @classmethod
    def _assemble(cls, pieces, level):
        loops, nodes, dzs, idx = [], [], [], []
        for k, (z, dz, dense) in enumerate(pieces):
            loops.append(dense)
            nodes.append(z)
            dzs.append(dz)
            idx.append(np.full(len(z), k))
        dz = np.concatenate(dzs)
        w = np.abs(dz)
        return cls(loops, np.concatenate(nodes), dz / w, w, np.concatenate(idx), level)

    @classmethod
    def circle(cls, center: complex = 0.0, radius: float = 1.0, nodes: int = DEFAULT_NODES,
               orientation: int = 1) -> "Contour":
        return cls.circles([center], radius, nodes, orientation)

    @classmethod
    def circles(cls, centers, radius: float, nodes: int = DEFAULT_NODES,
                orientation: int = 1) -> "Contour":
        """Union of circles of a common radius, counterclockwise by default."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        th = 2 * np.pi * np.arange(nodes) / nodes
        thd = 2 * np.pi * np.arange(DENSE_FACTOR * nodes + 1) / (DENSE_FACTOR * nodes)
        pieces = []
        for c in np.atleast_1d(np.asarray(centers, dtype=complex)):
            e = np.exp(orientation * 1j * th)
            z = c + radius * e
            dz = orientation * 1j * radius * e * (2 * np.pi / nodes)
            dense = c + radius * np.exp(orientation * 1j * thd)
            dense[-1] = dense[0]
            pieces.append((z, dz, dense))
        return cls._assemble(pieces, radius)

    @classmethod
    def from_polygons(cls, polys, level: Optional[float] = None,
                      nodes: int = DEFAULT_NODES) -> "Contour":
        """Smooth each closed polygon (see :func:`smooth_loop`)."""
        if not polys:
            raise DegenerateLevel("no loops")
        return cls._assemble([smooth_loop(p, nodes) for p in polys], level)


# -- marching squares --------------------------------------------------------

# corner k -> corner k+1 runs counterclockwise: bottom, right, top, left
_CORNERS = ((0, 0), (0, 1), (1, 1), (1, 0))


def _trace(values: np.ndarray, xs: np.ndarray, ys: np.ndarray, t: float) -> list:
    ny, nx = values.shape
    inside = values < t
    frame = np.concatenate([inside[0], inside[-1], inside[:, 0], inside[:, -1]])
    if np.any(frame):
        raise BoxTooSmall(f"level {t:.4g} reaches the edge of the box")
    b = [inside[di:ny - 1 + di, dj:nx - 1 + dj] for di, dj in _CORNERS]
    code = b[0] + 2 * b[1] + 4 * b[2] + 8 * b[3]
    ci, cj = np.nonzero((code > 0) & (code < 15))
    nh = ny * nx

    def edge_id(i, j, k):
        # horizontal edges (i, j)-(i, j+1); vertical edges (i, j)-(i+1, j)
        if k == 0:
            return i * nx + j
        if k == 1:
            return nh + i * nx + j + 1
        if k == 2:
            return (i + 1) * nx + j
        return nh + i * nx + j

    def edge_point(eid):
        if eid < nh:
            i, j = divmod(eid, nx)
            a, c = values[i, j], values[i, j + 1]
            s = (t - a) / (c - a)
            return complex(xs[j] + s * (xs[j + 1] - xs[j]), ys[i])
        i, j = divmod(eid - nh, nx)
        a, c = values[i, j], values[i + 1, j]
        s = (t - a) / (c - a)
        return complex(xs[j], ys[i] + s * (ys[i + 1] - ys[i]))

    nxt = {}
    for i, j in zip(ci.tolist(), cj.tolist()):
        flags = [bool(inside[i + di, j + dj]) for di, dj in _CORNERS]
        cross = [(k, flags[k]) for k in range(4) if flags[k] != flags[(k + 1) % 4]]
        if len(cross) == 2:
            out_k = cross[0][0] if cross[0][1] else cross[1][0]
            in_k = cross[1][0] if cross[0][1] else cross[0][0]
            nxt[edge_id(i, j, out_k)] = edge_id(i, j, in_k)
            continue
        centre_in = values[i:i + 2, j:j + 2].mean() < t
        step = 1 if centre_in else -1
        for q, (k, leaving) in enumerate(cross):
            if leaving:
                nxt[edge_id(i, j, k)] = edge_id(i, j, cross[(q + step) % 4][0])

    loops = []
    while nxt:
        start, cur = next(iter(nxt.items()))
        del nxt[start]
        chain = [start]
        while cur != start:
            chain.append(cur)
            try:
                cur = nxt.pop(cur)
            except KeyError:
                raise DegenerateLevel(f"open level-set chain at level {t:.4g}", level=t) from None
        pts = np.array([edge_point(e) for e in chain])
        loops.append(np.append(pts, pts[0]))
    return loops


def marching_squares(field: DistanceField, t: float) -> list:
    """Closed polygons of ``{d = t}``, oriented with ``{d < t}`` on the left."""
    return _trace(field.values, field.xs, field.ys, t)


def extract_level_set(field: DistanceField, t: float, nodes: int = DEFAULT_NODES) -> Contour:
    """The contour ``{d = t}`` with quadrature nodes attached.

    Raises :class:`DegenerateLevel` below the grid floor ``2 * spacing`` and
    :class:`BoxTooSmall` when the level set would leave the box.
    """
    t = float(t)
    if not t >= field.floor:
        raise DegenerateLevel(f"level {t:.4g} is below the grid floor {field.floor:.4g}", level=t)
    if t >= field.margin - field.spacing:
        raise BoxTooSmall(f"level {t:.4g} exceeds the box margin {field.margin:.4g}")
    polys = marching_squares(field, t)
    if not polys:
        raise DegenerateLevel(f"empty level set at {t:.4g}", level=t)
    c = Contour.from_polygons(polys, level=t, nodes=nodes)
    if field.points is not None:
        wn = c.winding_number(field.points)
        if np.any(wn != 1):
            raise DegenerateLevel(f"level {t:.4g} does not enclose every spectral point once", level=t)
    return c


@dataclass
class ContourSequence:
    """Contours at strictly decreasing levels, each nested in the previous."""

    levels: list
    contours: list

    def __len__(self):
        return len(self.levels)

    def __iter__(self):
        return iter(zip(self.levels, self.contours))

    @classmethod
    def circles(cls, centers, levels, nodes: int = DEFAULT_NODES) -> "ContourSequence":
        _check_decreasing(levels)
        return cls(list(levels), [Contour.circles(centers, t, nodes) for t in levels])


def _check_decreasing(levels):
    lv = list(levels)
    if any(not (b < a) for a, b in zip(lv, lv[1:])):
        raise ValueError(f"levels must be strictly decreasing, got {lv}")
    if any(t <= 0 for t in lv):
        raise ValueError("levels must be positive")


def contour_sequence(field: DistanceField, levels, nodes: int = DEFAULT_NODES) -> ContourSequence:
    """Extract every level; errors carry the index of the offending level."""
    levels = [float(t) for t in levels]
    _check_decreasing(levels)
    contours = []
    for k, t in enumerate(levels):
        try:
            c = extract_level_set(field, t, nodes)
        except DegenerateLevel as exc:
            raise DegenerateLevel(f"level index {k}: {exc}", level=t, index=k) from exc
        except BoxTooSmall as exc:
            raise BoxTooSmall(f"level index {k}: {exc}") from exc
        if contours:
            inner = np.concatenate(c.loops)
            if np.any(contours[-1].winding_number(inner) < 1):
                raise DegenerateLevel(f"level index {k}: contour not nested in its predecessor",
                                      level=t, index=k)
        contours.append(c)
    return ContourSequence(levels, contours)
