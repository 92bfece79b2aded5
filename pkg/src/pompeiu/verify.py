"""Invariant suite run by ``pompeiu verify``.

Each check maps ``(fixture, tolerances, rng) -> (value, tolerance)`` and
passes when ``value <= tolerance``. Fixtures are JSON files holding an
eigenstructure and, optionally, a precomputed spectral family. When a
family is present it is checked as given, which is how corrupted data is
caught.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .calculus import holomorphic_fc
from .contour import Contour, build_distance_field, extract_level_set
from .errors import ConfigError
from .functions import conj, poly
from .matrix import (LinearFunctional, Spectrum, from_eigenstructure, matrix_from_json,
                     oracle_fc, spectral_norm)
from .spectral import (Disk, Rect, SpectralFamily, borel_fc, cross_validate, family_axiom_report,
                       mu, operator_measure, spectral_projectors)


@dataclass
class Fixture:
    name: str
    a: np.ndarray
    spec: Spectrum
    family: SpectralFamily
    given_family: bool


def load_fixture(path) -> Fixture:
    try:
        obj = json.loads(Path(path).read_text())
        lam = [complex(v["re"], v.get("im", 0.0)) for v in obj["eigenvalues"]]
        v = matrix_from_json(obj["V"])
        a, spec = from_eigenstructure(lam, v)
        family = SpectralFamily.from_json(obj["family"]) if "family" in obj else None
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad fixture {path}: {exc}") from exc
    given = family is not None
    if family is None:
        family = spectral_projectors(a, spec)
    elif family.dim != a.shape[0]:
        raise ConfigError(f"fixture {path}: family dimension does not match the matrix")
    return Fixture(obj.get("name", Path(path).stem), a, spec, family, given)


def shipped_fixtures() -> list:
    root = resources.files("pompeiu") / "fixtures"
    return sorted(str(p) for p in root.iterdir() if p.name.endswith(".json"))


def _rand(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def _rel(x, scale):
    return float(x) / max(float(scale), 1e-300)


# -- checks ------------------------------------------------------------------


def check_identity(fx, tol, rng, quad):
    return fx.family.identity_residual(), tol["identity"]


def check_idempotence(fx, tol, rng, quad):
    return fx.family.idempotence_residual(), tol["idempotence"]


def check_reconstruction(fx, tol, rng, quad):
    return _rel(fx.family.reconstruction_residual(fx.a), spectral_norm(fx.a)), tol["reconstruction"]


def check_spectral_identity(fx, tol, rng, quad):
    """``int lambda dmu_{Lambda,x} = Lambda(A x)``, relative to ``|Lambda| |A| |x|``."""
    n, worst = fx.a.shape[0], 0.0
    scale_a = max(float(spectral_norm(fx.a)), 1.0)
    for _ in range(quad["trials"]):
        lam, x = LinearFunctional(_rand(rng, n)), _rand(rng, n)
        m = mu(fx.family, lam, x)
        err = abs(m.integrate(lambda z: z) - lam(fx.a @ x))
        worst = max(worst, _rel(err, lam.norm * scale_a * np.linalg.norm(x)))
    return worst, tol["spectral_identity"]


def check_bilinearity(fx, tol, rng, quad):
    return family_axiom_report(fx.family, quad["trials"], rng)["bilinearity"], tol["bilinearity"]


def _random_set(rng, lam):
    z = complex(rng.choice(lam)) + complex(rng.normal(), rng.normal())
    if rng.random() < 0.5:
        return Disk(z, float(rng.uniform(0.2, 2.0)))
    w, h = rng.uniform(0.2, 2.0, size=2)
    return Rect(z.real - w, z.real + w, z.imag - h, z.imag + h)


def check_measure(fx, tol, rng, quad):
    """``mu_{Lambda,x}(E) = Lambda(nu(E) x)`` on 20 random disks and rectangles."""
    n, worst, done = fx.a.shape[0], 0.0, 0
    while done < 20:
        e = _random_set(rng, fx.family.eigenvalues)
        if np.min(e.boundary_distance(fx.family.eigenvalues)) <= 1e-6:
            continue
        lam, x = LinearFunctional(_rand(rng, n)), _rand(rng, n)
        left = mu(fx.family, lam, x)(e)
        right = lam(operator_measure(fx.family, e) @ x)
        scale = lam.norm * np.linalg.norm(x) * sum(float(spectral_norm(p)) for p in fx.family.projectors)
        worst = max(worst, _rel(abs(left - right), scale))
        done += 1
    return worst, tol["measure"]


def check_multiplicativity(fx, tol, rng, quad):
    c = _rand(rng, 3)
    f = poly(c)
    g = conj()
    lhs = borel_fc(fx.family, lambda z: f(z) * g(z))
    rhs = borel_fc(fx.family, f) @ borel_fc(fx.family, g)
    return _rel(spectral_norm(lhs - rhs), spectral_norm(lhs) + 1.0), tol["multiplicativity"]


def check_holomorphic(fx, tol, rng, quad):
    """Random degree-4 polynomial by contour integral against the oracle."""
    f = poly(_rand(rng, 5))
    gap = fx.spec.min_gap()
    r = 0.4 * gap if np.isfinite(gap) else 1.0
    got = holomorphic_fc(fx.a, fx.spec, f, Contour.circles(fx.spec.eigenvalues, r, 256))
    ref = oracle_fc(fx.spec, f)
    return _rel(spectral_norm(got - ref), spectral_norm(ref)), tol["holomorphic"]


def check_trajectory(fx, tol, rng, quad):
    """Circle contour and level-set contour give the same holomorphic result."""
    f = poly(_rand(rng, 5))
    gap = fx.spec.min_gap()
    t = 0.4 * gap if np.isfinite(gap) else 0.5
    circ = holomorphic_fc(fx.a, fx.spec, f, Contour.circles(fx.spec.eigenvalues, t, 256))
    fld = build_distance_field(fx.spec, resolution=quad["grid_resolution"], max_level=t)
    lvl = holomorphic_fc(fx.a, fx.spec, f, extract_level_set(fld, t, quad["contour_nodes"]))
    return _rel(spectral_norm(circ - lvl), spectral_norm(circ)), tol["trajectory"]


def check_cross_validation(fx, tol, rng, quad):
    """Smooth calculus of ``conj`` against the Borel and oracle routes."""
    gap = fx.spec.min_gap()
    t = 0.4 * gap if np.isfinite(gap) else 0.5
    c = Contour.circles(fx.spec.eigenvalues, t, quad["contour_nodes"])
    rep = cross_validate(fx.a, fx.spec, conj(), c, family=fx.family,
                         resolution=quad["grid_resolution"],
                         patch_radius_cells=quad["patch_radius_cells"])
    scale = max(float(spectral_norm(rep["results"]["borel"])), 1.0)
    return rep["max_deviation"] / scale, tol["smooth"]


CHECKS: dict = {
    "resolution_of_identity": check_identity,
    "idempotence": check_idempotence,
    "reconstruction": check_reconstruction,
    "spectral_identity": check_spectral_identity,
    "bilinearity": check_bilinearity,
    "measure_consistency": check_measure,
    "multiplicativity": check_multiplicativity,
    "holomorphic_oracle": check_holomorphic,
    "trajectory_independence": check_trajectory,
    "cross_validation": check_cross_validation,
}


def run_suite(fixtures: list, checks: list, tol: dict, quad: dict, seed: int = 0,
              progress: Optional[Callable] = None) -> dict:
    """Run every check on every fixture; ``rows`` is ordered fixture-major."""
    if not checks:
        raise ConfigError("empty check selection")
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}; known: {sorted(CHECKS)}")
    if not fixtures:
        raise ConfigError("no fixtures selected")
    rows = []
    for i, path in enumerate(fixtures):
        fx = load_fixture(path)
        for j, name in enumerate(checks):
            rng = np.random.default_rng([seed, i, j])
            value, bound = CHECKS[name](fx, tol, rng, quad)
            ok = bool(np.isfinite(value) and value <= bound)
            rows.append({"fixture": fx.name, "check": name, "value": float(value),
                         "tolerance": float(bound), "pass": ok})
            if progress:
                progress(rows[-1])
    failed = sum(not r["pass"] for r in rows)
    return {"rows": rows, "passed": len(rows) - failed, "failed": failed}
