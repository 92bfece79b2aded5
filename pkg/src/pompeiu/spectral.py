"""Spectral projectors, atomic spectral measures and the Borel calculus.

Projectors are residues of the resolvent, extracted by the trapezoid rule on
one circle per eigenvalue. Everything downstream (measures, the
operator-valued measure, Borel functions of ``A``) is finite linear algebra
on those projectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .calculus import boundary_term, smooth_fc
from .contour import Contour
from .errors import AtomOnBoundary, ClustersOverlap, NonFiniteSample
from .matrix import (LinearFunctional, Spectrum, as_matrix, matrix_from_json, matrix_to_json,
                     oracle_fc, spectral_norm)
from .functions import const

PROJECTOR_NODES = 256


@dataclass
class SpectralFamily:
    """Atoms ``(lambda_j, P_j)`` of a matrix."""

    eigenvalues: np.ndarray
    projectors: np.ndarray  # (k, n, n)

    @property
    def dim(self) -> int:
        return int(self.projectors.shape[-1])

    @property
    def atoms(self) -> list:
        return list(zip(self.eigenvalues.tolist(), self.projectors))

    def identity_residual(self) -> float:
        return float(spectral_norm(self.projectors.sum(axis=0) - np.eye(self.dim)))

    def idempotence_residual(self) -> float:
        worst = 0.0
        for j, p in enumerate(self.projectors):
            for k, r in enumerate(self.projectors):
                target = p if j == k else np.zeros_like(p)
                worst = max(worst, float(spectral_norm(p @ r - target)))
        return worst

    def reconstruction_residual(self, a) -> float:
        return float(spectral_norm(borel_fc(self, lambda z: z) - as_matrix(a)))

    def to_json(self) -> dict:
        return {"atoms": [{"lambda": {"re": float(l.real), "im": float(l.imag)},
                           "P": matrix_to_json(p)}
                          for l, p in zip(self.eigenvalues, self.projectors)]}

    @classmethod
    def from_json(cls, obj: dict) -> "SpectralFamily":
        try:
            atoms = obj["atoms"]
            lam = np.array([complex(a["lambda"]["re"], a["lambda"]["im"]) for a in atoms])
            ps = np.array([matrix_from_json(a["P"]) for a in atoms])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed spectral family: {exc}") from exc
        if len(atoms) == 0:
            raise ValueError("spectral family has no atoms")
        return cls(lam, ps)


@dataclass
class AtomicMeasure:
    """Finitely many point masses."""

    locations: np.ndarray
    masses: np.ndarray

    def integrate(self, f: Callable) -> complex:
        vals = np.asarray(f(self.locations), dtype=complex) * np.ones(self.locations.shape)
        return complex(np.sum(vals * self.masses))

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.masses)))

    def __call__(self, e: "BorelSet", tol: float = 1e-9) -> complex:
        return complex(np.sum(self.masses[_members(e, self.locations, tol)]))

    def to_json(self) -> list:
        return [{"location": {"re": float(z.real), "im": float(z.imag)},
                 "mass": {"re": float(m.real), "im": float(m.imag)}}
                for z, m in zip(self.locations, self.masses)]


# -- projectors --------------------------------------------------------------


def spectral_projectors(a, spec: Spectrum, radius: Optional[float] = None,
                        nodes: int = PROJECTOR_NODES) -> SpectralFamily:
    """``P_j = (1/2 pi i) oint_{|z - lambda_j| = radius} R(z) dz``.

    The default radius is half the smallest gap between distinct
    eigenvalues (circles may touch but never overlap) or 1 for a single one.
    """
    a = as_matrix(a)
    lam = spec.eigenvalues
    gap = spec.min_gap()
    if radius is None:
        radius = 0.5 * gap if np.isfinite(gap) else 1.0
    if radius <= 0:
        raise ValueError("cluster radius must be positive")
    if np.isfinite(gap) and 2 * radius > gap:
        raise ClustersOverlap(f"eigenvalues {gap:.3g} apart cannot be separated by circles of "
                              f"radius {radius:.3g}", suggested_radius=0.5 * gap)
    one = const(1.0)
    ps = np.array([boundary_term(a, one, Contour.circle(z, radius, nodes)) for z in lam])
    return SpectralFamily(lam.copy(), ps)


def mu(family: SpectralFamily, functional: LinearFunctional, x) -> AtomicMeasure:
    """``mu_{Lambda, x}``: masses ``Lambda(P_j x)`` at the eigenvalues."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (family.dim,) or functional.dim != family.dim:
        raise ValueError("dimension mismatch between family, functional and vector")
    masses = np.array([functional(p @ x) for p in family.projectors], dtype=complex)
    return AtomicMeasure(family.eigenvalues.copy(), masses)


def borel_fc(family: SpectralFamily, f: Callable) -> np.ndarray:
    """``sum_j f(lambda_j) P_j`` for any ``f`` finite at the atoms."""
    vals = np.asarray(f(family.eigenvalues), dtype=complex) * np.ones(family.eigenvalues.shape)
    if not np.all(np.isfinite(vals)):
        bad = family.eigenvalues[np.flatnonzero(~np.isfinite(vals))[0]]
        raise NonFiniteSample(f"f is not finite at the atom {bad:.6g}", location=bad)
    return np.tensordot(vals, family.projectors, axes=1)


# -- Borel sets --------------------------------------------------------------


class BorelSet:
    """Finite unions of disks and rectangles (plus the plane and the empty set)."""

    def contains(self, z) -> np.ndarray:
        raise NotImplementedError

    def boundary_distance(self, z) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass
class Disk(BorelSet):
    center: complex
    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    def boundary_distance(self, z):
        return np.abs(np.abs(np.asarray(z) - self.center) - self.radius)

    def to_json(self):
        return {"disk": {"center": {"re": float(np.real(self.center)), "im": float(np.imag(self.center))},
                         "radius": float(self.radius)}}


@dataclass
class Rect(BorelSet):
    x0: float
    x1: float
    y0: float
    y1: float

    def contains(self, z):
        z = np.asarray(z)
        return (z.real > self.x0) & (z.real < self.x1) & (z.imag > self.y0) & (z.imag < self.y1)

    def boundary_distance(self, z):
        z = np.asarray(z, dtype=complex)
        dx = np.maximum(self.x0 - z.real, z.real - self.x1)
        dy = np.maximum(self.y0 - z.imag, z.imag - self.y1)
        outside = np.hypot(np.maximum(dx, 0), np.maximum(dy, 0))
        inside = -np.maximum(dx, dy)
        return np.where((dx < 0) & (dy < 0), inside, outside)

    def to_json(self):
        return {"rect": [self.x0, self.x1, self.y0, self.y1]}


@dataclass
class Union(BorelSet):
    parts: tuple

    def contains(self, z):
        out = np.zeros(np.shape(z), dtype=bool)
        for p in self.parts:
            out |= p.contains(z)
        return out

    def boundary_distance(self, z):
        # only boundary points of parts not covered by another part count,
        # but the minimum over all parts is a safe (conservative) lower bound
        out = np.full(np.shape(z), np.inf)
        for p in self.parts:
            out = np.minimum(out, p.boundary_distance(z))
        return out

    def to_json(self):
        return {"union": [p.to_json() for p in self.parts]}


class Plane(BorelSet):
    def contains(self, z):
        return np.ones(np.shape(z), dtype=bool)

    def boundary_distance(self, z):
        return np.full(np.shape(z), np.inf)

    def to_json(self):
        return {"plane": True}


class Empty(BorelSet):
    def contains(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def boundary_distance(self, z):
        return np.full(np.shape(z), np.inf)

    def to_json(self):
        return {"empty": True}


def borel_set_from_json(obj) -> BorelSet:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"a set is a one-key object, got {obj!r}")
    (kind, v), = obj.items()
    if kind == "disk":
        return Disk(complex(v["center"]["re"], v["center"]["im"]), float(v["radius"]))
    if kind == "rect":
        return Rect(*(float(t) for t in v))
    if kind == "union":
        return Union(tuple(borel_set_from_json(p) for p in v))
    if kind == "plane":
        return Plane()
    if kind == "empty":
        return Empty()
    raise ValueError(f"unknown set kind {kind!r}")


def _members(e: BorelSet, atoms: np.ndarray, tol: float) -> np.ndarray:
    d = e.boundary_distance(atoms)
    if np.any(d <= tol):
        bad = atoms[np.flatnonzero(d <= tol)[0]]
        raise AtomOnBoundary(f"atom {bad:.6g} lies within {tol:g} of the set boundary",
                             operation="operator_measure")
    return e.contains(atoms)


def operator_measure(family: SpectralFamily, e: BorelSet, tol: float = 1e-9) -> np.ndarray:
    """``nu(E) = sum of P_j over atoms in E``."""
    inside = _members(e, family.eigenvalues, tol)
    return family.projectors[inside].sum(axis=0) if inside.any() else np.zeros((family.dim,) * 2,
                                                                                dtype=complex)


# -- axiom checks ------------------------------------------------------------


def _random_vector(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def bilinearity_residual(family: SpectralFamily, lam: LinearFunctional, phi: LinearFunctional,
                         x, y, c: complex) -> tuple:
    """Atomwise mass residuals of linearity in the functional and in the vector."""
    left = mu(family, lam + phi.scale(c), x).masses
    right = mu(family, lam, x).masses + c * mu(family, phi, x).masses
    first = float(np.max(np.abs(left - right)))
    left = mu(family, lam, np.asarray(x) + c * np.asarray(y)).masses
    right = mu(family, lam, x).masses + c * mu(family, lam, y).masses
    return first, float(np.max(np.abs(left - right)))


def family_axiom_report(family: SpectralFamily, trials: int = 100,
                        rng: Optional[np.random.Generator] = None) -> dict:
    """Bilinearity and boundedness of ``(Lambda, x) -> mu_{Lambda, x}`` on random data."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = rng or np.random.default_rng(0)
    n = family.dim
    worst_f = worst_v = ratio = 0.0
    for _ in range(trials):
        lam = LinearFunctional(_random_vector(rng, n))
        phi = LinearFunctional(_random_vector(rng, n))
        x, y = _random_vector(rng, n), _random_vector(rng, n)
        c = complex(rng.normal(), rng.normal())
        rf, rv = bilinearity_residual(family, lam, phi, x, y, c)
        worst_f, worst_v = max(worst_f, rf), max(worst_v, rv)
        tv = mu(family, lam, x).total_variation()
        ratio = max(ratio, tv / (lam.norm * float(np.linalg.norm(x))))
    return {"trials": trials, "functional_linearity": worst_f, "vector_linearity": worst_v,
            "bilinearity": max(worst_f, worst_v), "mass_bound": ratio}


def cross_validate(a, spec: Spectrum, f, c: Contour, q=None,
                   family: Optional[SpectralFamily] = None, **quad) -> dict:
    """Compare smooth_fc, borel_fc and oracle_fc for the same ``f``."""
    a = as_matrix(a)
    if family is None:
        family = spectral_projectors(a, spec)
    routes = {"smooth": smooth_fc(a, spec, f, c, q, **quad), "borel": borel_fc(family, f)}
    if spec.oracle is not None:
        routes["oracle"] = oracle_fc(spec, f)
    names = list(routes)
    dev = {f"{p}-{r}": float(spectral_norm(routes[p] - routes[r]))
           for i, p in enumerate(names) for r in names[i + 1:]}
    return {"results": routes, "deviations": dev, "max_deviation": max(dev.values())}

