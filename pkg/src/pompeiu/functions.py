"""Scalar functions of a complex variable with an exact Wirtinger derivative.

Every :class:`FunctionSpec` carries ``value`` and ``dbar`` where
``dbar = (d/dx + i d/dy) / 2``. The registry names are addressable from the
command line; mollified and almost-analytic functions are built here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

HOLOMORPHIC = "holomorphic"
SMOOTH = "smooth"
CONTINUOUS = "continuous"
_RANK = {HOLOMORPHIC: 0, SMOOTH: 1, CONTINUOUS: 2}


def _zeros(z):
    return np.zeros(np.shape(z), dtype=complex)


@dataclass
class FunctionSpec:
    """A function with its exact ``d/dzbar`` and smoothness class.

    ``box`` is the ``(x0, x1, y0, y1)`` rectangle where the function is
    meant to be used (``None`` means the whole plane) and ``poles`` lists
    points where it is undefined.
    """

    name: str
    value: Callable
    dbar: Callable
    smoothness: str = SMOOTH
    params: dict = field(default_factory=dict)
    box: Optional[tuple] = None
    poles: tuple = ()

    def __post_init__(self):
        if self.smoothness not in _RANK:
            raise ValueError(f"unknown smoothness class {self.smoothness!r}")

    def __call__(self, z):
        return np.asarray(self.value(np.asarray(z, dtype=complex)), dtype=complex) * np.ones(np.shape(z))

    def d(self, z):
        return np.asarray(self.dbar(np.asarray(z, dtype=complex)), dtype=complex) * np.ones(np.shape(z))

    @property
    def is_holomorphic(self) -> bool:
        return self.smoothness == HOLOMORPHIC

    def _join(self, other, name, value, dbar):
        tag = max(self.smoothness, other.smoothness, key=_RANK.get)
        return FunctionSpec(name, value, dbar, tag, poles=tuple(self.poles) + tuple(other.poles))

    def __add__(self, other: "FunctionSpec") -> "FunctionSpec":
        return self._join(other, f"({self.name} + {other.name})",
                          lambda z: self(z) + other(z), lambda z: self.d(z) + other.d(z))

    def __sub__(self, other: "FunctionSpec") -> "FunctionSpec":
        return self + other.scale(-1.0)

    def __mul__(self, other: "FunctionSpec") -> "FunctionSpec":
        # Leibniz rule for the Wirtinger derivative
        return self._join(other, f"({self.name} * {other.name})",
                          lambda z: self(z) * other(z),
                          lambda z: self.d(z) * other(z) + self(z) * other.d(z))

    def scale(self, c: complex) -> "FunctionSpec":
        return FunctionSpec(f"{c!r}*{self.name}", lambda z: c * self(z), lambda z: c * self.d(z),
                            self.smoothness, poles=self.poles)

    def dbar_residual(self, points, h: float = 1e-5) -> float:
        """Max ``|dbar - central difference|`` over ``points``."""
        z = np.asarray(points, dtype=complex)
        fd = 0.5 * ((self(z + h) - self(z - h)) / (2 * h)
                    + 1j * (self(z + 1j * h) - self(z - 1j * h)) / (2 * h))
        return float(np.max(np.abs(self.d(z) - fd)))

    def sample_points(self, rng: np.random.Generator, n: int = 20, box=None) -> np.ndarray:
        x0, x1, y0, y1 = box or self.box or (-2.0, 2.0, -2.0, 2.0)
        return rng.uniform(x0, x1, n) + 1j * rng.uniform(y0, y1, n)

    def to_json(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


# -- registry ----------------------------------------------------------------


def const(c: complex = 1.0) -> FunctionSpec:
    c = complex(c)
    return FunctionSpec("const", lambda z: np.full(np.shape(z), c), _zeros, HOLOMORPHIC, {"c": c})


def identity() -> FunctionSpec:
    return FunctionSpec("id", lambda z: z, _zeros, HOLOMORPHIC)


def poly(coefficients: Sequence[complex]) -> FunctionSpec:
    """``sum_k coefficients[k] z^k`` (lowest degree first)."""
    coef = np.asarray(coefficients, dtype=complex)
    if coef.size == 0:
        coef = np.zeros(1, dtype=complex)
    return FunctionSpec("poly", lambda z: np.polynomial.polynomial.polyval(z, coef), _zeros,
                        HOLOMORPHIC, {"coefficients": [complex(c) for c in coef]})


def conj() -> FunctionSpec:
    return FunctionSpec("conj", np.conj, lambda z: np.ones(np.shape(z), dtype=complex), SMOOTH)


def absz() -> FunctionSpec:
    def dbar(z):
        r = np.abs(z)
        return np.divide(z, 2 * r, out=np.zeros(np.shape(z), dtype=complex), where=r > 0)
    return FunctionSpec("absz", np.abs, dbar, CONTINUOUS)


def abs2() -> FunctionSpec:
    return FunctionSpec("abs2", lambda z: z * np.conj(z), lambda z: z, SMOOTH)


def re() -> FunctionSpec:
    return FunctionSpec("re", np.real, lambda z: np.full(np.shape(z), 0.5, dtype=complex), SMOOTH)


def gauss_re() -> FunctionSpec:
    return FunctionSpec("gauss_re", lambda z: np.exp(-np.real(z) ** 2),
                        lambda z: -np.real(z) * np.exp(-np.real(z) ** 2), SMOOTH)


def mobius(a: complex, b: complex, c: complex, d: complex) -> FunctionSpec:
    """``(a z + b) / (c z + d)``; the pole ``-d/c`` is recorded."""
    a, b, c, d = (complex(v) for v in (a, b, c, d))
    if a * d - b * c == 0:
        raise ValueError("degenerate Mobius map (ad - bc = 0)")
    poles = (-d / c,) if c != 0 else ()
    return FunctionSpec("mobius", lambda z: (a * z + b) / (c * z + d), _zeros, HOLOMORPHIC,
                        {"a": a, "b": b, "c": c, "d": d}, poles=poles)


def bump(center: complex = 0.0, radius: float = 1.0) -> FunctionSpec:
    """``exp(-1 / (1 - |z - center|^2 / radius^2))`` inside the disk, 0 outside."""
    center = complex(center)
    r2 = float(radius) ** 2
    if r2 <= 0:
        raise ValueError("bump radius must be positive")

    def parts(z):
        s = np.abs(np.asarray(z) - center) ** 2 / r2
        inside = s < 1
        phi = np.zeros(np.shape(s))
        q = 1.0 - s[inside]
        phi[inside] = np.exp(-1.0 / q)
        dphi = np.zeros(np.shape(s))
        dphi[inside] = -phi[inside] / q ** 2 / r2
        return phi, dphi

    return FunctionSpec("bump", lambda z: parts(z)[0],
                        lambda z: parts(z)[1] * (np.asarray(z) - center), SMOOTH,
                        {"center": center, "radius": float(radius)})


REGISTRY = {
    "const": const, "id": identity, "poly": poly, "conj": conj, "absz": absz,
    "re": re, "gauss_re": gauss_re, "mobius": mobius, "abs2": abs2, "bump": bump,
}


def make(name: str, **params) -> FunctionSpec:
    """Build a registry function by name."""
    try:
        builder = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}; known: {sorted(REGISTRY)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name!r}: {exc}") from None


# -- mollification -----------------------------------------------------------


@dataclass
class MollifierSequence:
    """Gaussian smoothings of a continuous function on a grid over ``box``.

    Members are smooth :class:`FunctionSpec` objects whose values and
    ``dbar`` come from the same discrete convolution (derivative-of-Gaussian
    kernels), interpolated with cubic splines.
    """

    base: FunctionSpec
    widths: tuple
    box: tuple
    resolution: int = 512
    _members: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        w = np.asarray(self.widths, dtype=float)
        if w.size == 0 or np.any(w <= 0) or np.any(np.diff(w) >= 0):
            raise ValueError("widths must be positive and strictly decreasing")
        self.widths = tuple(float(x) for x in w)

    @classmethod
    def halving(cls, base: FunctionSpec, box, first: float = 0.2, steps: int = 3,
                resolution: int = 512) -> "MollifierSequence":
        return cls(base, tuple(first * 0.5 ** k for k in range(steps)), tuple(box), resolution)

    def _grid(self):
        x0, x1, y0, y1 = self.box
        h = max(x1 - x0, y1 - y0) / (self.resolution - 1)
        xs = np.arange(x0, x1 + 0.5 * h, h)
        ys = np.arange(y0, y1 + 0.5 * h, h)
        return xs, ys, h

    def members(self) -> list:
        if self._members is not None:
            return self._members
        xs, ys, h = self._grid()
        vals = self.base(xs[None, :] + 1j * ys[:, None])
        out = []
        for w in self.widths:
            sig = w / h
            def filt(order):
                return (ndimage.gaussian_filter(vals.real, sig, order=order, mode="nearest")
                        + 1j * ndimage.gaussian_filter(vals.imag, sig, order=order, mode="nearest"))
            smooth = filt((0, 0))
            dx = filt((0, 1)) / h
            dy = filt((1, 0)) / h
            out.append(self._member(w, xs, ys, h, smooth, 0.5 * (dx + 1j * dy)))
        self._members = out
        return out

    def _member(self, w, xs, ys, h, smooth, dbar):
        coefs = [ndimage.spline_filter(a, order=3, mode="nearest")
                 for a in (smooth.real, smooth.imag, dbar.real, dbar.imag)]

        def interp(k, z):
            z = np.asarray(z, dtype=complex)
            rows = (z.imag - ys[0]) / h
            cols = (z.real - xs[0]) / h
            return ndimage.map_coordinates(coefs[k], [rows.ravel(), cols.ravel()], order=3,
                                           mode="nearest", prefilter=False).reshape(z.shape)

        return FunctionSpec(f"{self.base.name}*G[{w:g}]",
                            lambda z: interp(0, z) + 1j * interp(1, z),
                            lambda z: interp(2, z) + 1j * interp(3, z), SMOOTH,
                            {"width": w}, box=self.box)

    def sup_distances(self, samples: int = 4000, seed: int = 0) -> np.ndarray:
        """Max ``|member - base|`` at random points well inside the box."""
        x0, x1, y0, y1 = self.box
        pad = 3 * self.widths[0]
        rng = np.random.default_rng(seed)
        z = rng.uniform(x0 + pad, x1 - pad, samples) + 1j * rng.uniform(y0 + pad, y1 - pad, samples)
        base = self.base(z)
        return np.array([float(np.max(np.abs(m(z) - base))) for m in self.members()])


# -- almost-analytic extensions ----------------------------------------------


def _bump_step(t):
    out = np.zeros(np.shape(t))
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump_step_prime(t):
    out = np.zeros(np.shape(t))
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos]) / t[pos] ** 2
    return out


def cutoff(s):
    """Smooth even cutoff: 1 for ``|s| <= 1``, 0 for ``|s| >= 2``."""
    a = np.abs(np.asarray(s, dtype=float))
    g1, g2 = _bump_step(2 - a), _bump_step(a - 1)
    return g1 / (g1 + g2)


def cutoff_prime(s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    g1, g2 = _bump_step(2 - a), _bump_step(a - 1)
    d1, d2 = -_bump_step_prime(2 - a), _bump_step_prime(a - 1)
    den = g1 + g2
    return np.sign(s) * (d1 * den - g1 * (d1 + d2)) / den ** 2


def finite_difference(f: Callable, k: int, h: float) -> Callable:
    """k-th derivative by the central stencil on ``k + 1`` points (O(h^2))."""
    if k == 0:
        return f
    w = [(-1) ** j * math.comb(k, j) for j in range(k + 1)]
    off = [(0.5 * k - j) * h for j in range(k + 1)]
    return lambda x: sum(wj * f(np.asarray(x) + oj) for wj, oj in zip(w, off)) / h ** k


def almost_analytic_extension(f: Callable, order: int = 2, width: float = 1.0,
                              derivatives: Sequence[Callable] = (), h: Optional[float] = None,
                              name: str = "aae") -> FunctionSpec:
    """Extend a real-variable function to the plane, analytic to ``order`` at the axis.

    ``F(x + iy) = sum_{k <= m} f^(k)(x) (iy)^k / k! * chi(y / width)``. The
    exact ``dbar F`` is
    ``f^(m+1)(x) (iy)^m / (2 m!) chi + i/(2 width) chi'(y / width) S(x, y)``
    where ``S`` is the Taylor sum. ``derivatives[k]`` is ``f^(k)``; missing
    orders up to ``m + 1`` are finite-differenced with step ``h`` (by default
    ``eps ** (1 / (k + 2))`` for order ``k``, which balances truncation
    against rounding).
    """
    m = int(order)
    if m < 0:
        raise ValueError("order must be >= 0")
    if width <= 0:
        raise ValueError("width must be positive")
    ders = list(derivatives) or [f]
    while len(ders) < m + 2:
        k = len(ders)
        ders.append(finite_difference(f, k, h or np.finfo(float).eps ** (1.0 / (k + 2))))

    def taylor(z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        total = np.zeros(z.shape, dtype=complex)
        for k in range(m + 1):
            total = total + ders[k](x) * (1j * y) ** k / math.factorial(k)
        return total

    def value(z):
        z = np.asarray(z, dtype=complex)
        return taylor(z) * cutoff(z.imag / width)

    def dbar(z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        top = ders[m + 1](x) * (1j * y) ** m / math.factorial(m)
        return 0.5 * top * cutoff(y / width) + 0.5j * taylor(z) * cutoff_prime(y / width) / width

    return FunctionSpec(name, value, dbar, SMOOTH, {"order": m, "width": float(width)})
