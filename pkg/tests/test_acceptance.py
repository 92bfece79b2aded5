"""Acceptance criteria 1-10 at the pinned tolerances.

Each test prints one ``C<n> PASS|FAIL`` line to the terminal (also under
pytest capture) and then asserts. Run standalone with
``python3 tests/test_acceptance.py``.
"""

import hashlib
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from pompeiu.calculus import cfc_boundary_limit, holomorphic_fc, restriction_check, scalar_cauchy_pompeiu, smooth_fc
from pompeiu.cli import canonical
from pompeiu.contour import (Contour, build_distance_field, contour_sequence, extract_level_set,
                             filled_disk_field)
from pompeiu.functions import conj, identity, make, poly
from pompeiu.matrix import from_eigenstructure, oracle_fc, random_conditioned, random_unitary, spectral_norm
from pompeiu.quadrature import coarea_check
from pompeiu.regularity import (CONVERGENT, DIVERGENT, distance_integral, epsilon_ladder,
                                resolvent_norm_integral, truncation_samples, truncation_study)
from pompeiu.spectral import cross_validate, spectral_projectors
from pompeiu.verify import (check_bilinearity, check_identity, check_measure,
                            check_spectral_identity, load_fixture, shipped_fixtures)

LADDER = (64, 128, 256, 512)
PATCH = 6 / 512  # fixed patch radius: three cells at the finest grid
FUNCS = ("conj", "abs2", "gauss_re")


_reporter = None
LINES = []


@pytest.fixture(autouse=True)
def _terminal(request):
    global _reporter
    _reporter = request.config.pluginmanager.getplugin("terminalreporter")
    yield


def _say(n, ok, detail, seconds):
    line = f"C{n:<2} {'PASS' if ok else 'FAIL'}  {detail}  ({seconds:.1f} s)"
    LINES.append(line)
    if _reporter is not None:
        _reporter.write_line("")
        _reporter.write_line(line)
    else:
        print(line)


def _rel(x, ref):
    return float(spectral_norm(x - ref)) / max(float(spectral_norm(ref)), 1e-300)


def _spread_spectrum(rng, n, gap=0.4, half=1.5):
    while True:
        lam = rng.uniform(-half, half, n) + 1j * rng.uniform(-half, half, n)
        d = np.abs(lam[:, None] - lam[None, :])
        d[np.eye(n, dtype=bool)] = np.inf
        if n == 1 or d.min() > gap:
            return lam


# -- criterion 1 -------------------------------------------------------------


def test_c1_scalar_reconstruction():
    t0 = time.time()
    rng = np.random.default_rng(1)
    r, th = rng.uniform(0.2, 0.8, 10), rng.uniform(0, 2 * np.pi, 10)
    pts = r * np.exp(1j * th)
    c = Contour.circle(0, 1, 512)
    funcs = {"z^2": poly([0, 0, 1]), "conj": conj(), "z*conj": identity() * conj()}
    worst, mono, lines = 0.0, True, []
    for name, u in funcs.items():
        errs = []
        for res in LADDER:
            e = max(abs(scalar_cauchy_pompeiu(u, c, z, resolution=res, patch_radius=PATCH) - u(z)) / abs(u(z))
                    for z in pts)
            errs.append(max(e, 1e-12))
        worst = max(worst, errs[-1])
        step_ok = bool(np.all(np.diff(errs) < 0)) or errs[0] <= 1e-12
        mono &= step_ok
        lines.append(f"{name}: " + " ".join(f"{e:.1e}" for e in errs))
    dt = time.time() - t0
    ok = worst <= 1e-3 and mono and dt <= 30
    _say(1, ok, f"max rel err {worst:.2e} <= 1e-3, monotone={mono} [{'; '.join(lines)}]", dt)
    assert ok


# -- criterion 2 -------------------------------------------------------------


def test_c2_holomorphic_vs_oracle():
    t0 = time.time()
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in range(20):
        n = int(rng.integers(1, 9))
        lam = _spread_spectrum(rng, n, gap=0.3)
        a, spec = from_eigenstructure(lam, random_conditioned(n, float(rng.uniform(1, 50)), rng))
        deg = int(rng.integers(0, 5))
        f = poly(rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1))
        gap = spec.min_gap()
        radius = 0.4 * gap if np.isfinite(gap) else 1.0
        got = holomorphic_fc(a, spec, f, Contour.circles(spec.eigenvalues, radius, 256))
        worst = max(worst, _rel(got, oracle_fc(spec, f)))
    dt = time.time() - t0
    ok = worst <= 1e-8 and dt <= 10
    _say(2, ok, f"20 matrices, max rel err {worst:.2e} <= 1e-8", dt)
    assert ok


# -- criteria 3, 4 and 8 share one suite ----------------------------------------


@pytest.fixture(scope="module")
def suite():
    """Normal matrices of dims 2, 4, 8; level-set contour at min(0.5, 0.4 gap)."""
    rng = np.random.default_rng(2026)
    cases = []
    for n in (2, 4, 8):
        lam = _spread_spectrum(rng, n)
        a, spec = from_eigenstructure(lam, random_unitary(n, rng))
        t = min(0.5, 0.4 * spec.min_gap())
        fld = build_distance_field(spec, resolution=512, max_level=t)
        cases.append((n, a, spec, t, fld, extract_level_set(fld, t, 512)))
    return cases


@pytest.fixture(scope="module")
def c3_results(suite):
    t0 = time.time()
    out = {}
    for n, a, spec, t, fld, c in suite:
        for name in FUNCS:
            f = make(name)
            ref = oracle_fc(spec, f)
            vals = [smooth_fc(a, spec, f, c, resolution=r, patch_radius=PATCH) for r in LADDER]
            out[(n, name)] = (vals, [_rel(v, ref) for v in vals])
    return out, time.time() - t0


def test_c3_smooth_vs_oracle(c3_results):
    res, dt = c3_results
    worst = max(errs[-1] for _, errs in res.values())
    mono = all(np.all(np.diff(errs) < 0) for _, errs in res.values())
    ok = worst <= 1e-3 and mono and dt <= 120
    bad = [f"{k}" for k, (_, e) in res.items() if not np.all(np.diff(e) < 0)]
    _say(3, ok, f"{len(res)} cases, terminal rel err {worst:.2e} <= 1e-3, monotone={mono} {bad or ''}", dt)
    assert ok


def test_c4_boundary_limit(suite, c3_results):
    t0 = time.time()
    res, _ = c3_results
    worst, cauchy = 0.0, True
    for n, a, spec, t, fld, _ in suite:
        cs = contour_sequence(fld, t * np.array([1.0, 0.8, 0.6, 0.4, 0.2]), 512)
        for name in FUNCS:
            bl = cfc_boundary_limit(a, spec, make(name), cs)
            r = bl.residuals
            cauchy &= bool(np.all(np.diff(r[1:]) < 0))
            worst = max(worst, _rel(bl.extrapolated, res[(n, name)][0][-1]))
    dt = time.time() - t0
    ok = cauchy and worst <= 1e-3
    _say(4, ok, f"5 levels, residuals decreasing after level 2={cauchy}, "
                f"extrapolation vs smooth_fc rel {worst:.2e} <= 1e-3", dt)
    assert ok


# -- criterion 5 -------------------------------------------------------------


def test_c5_trajectory_independence():
    t0 = time.time()
    rng = np.random.default_rng(5)
    worst = 0.0
    for n in (1, 2, 3, 5, 8):
        lam = _spread_spectrum(rng, n)
        a, spec = from_eigenstructure(lam, random_conditioned(n, 10.0, rng))
        t = min(0.5, 0.4 * spec.min_gap())
        f = poly(rng.normal(size=5) + 1j * rng.normal(size=5))
        circ = holomorphic_fc(a, spec, f, Contour.circles(spec.eigenvalues, t, 512))
        lvl = holomorphic_fc(a, spec, f, extract_level_set(build_distance_field(spec, resolution=512, max_level=t), t, 512))
        worst = max(worst, _rel(circ, lvl))
    dt = time.time() - t0
    ok = worst <= 1e-6
    _say(5, ok, f"circle vs level set max rel deviation {worst:.2e} <= 1e-6", dt)
    assert ok


# -- criterion 6 -------------------------------------------------------------


def test_c6_restriction():
    t0 = time.time()
    a, spec = from_eigenstructure([1, 2], np.eye(2))
    F, G = identity(), identity() + poly([2, -3, 1])  # z and z + (z-1)(z-2)
    tight = [restriction_check(a, spec, F, G, Contour.circles([1, 2], t, 512)) for t in (0.4, 0.2, 0.1)]
    # a second pair differing off the spectrum: z + (z-1)(z-2) conj(z)
    H = identity() + poly([2, -3, 1]) * conj()
    fld = build_distance_field(spec, resolution=512, max_level=0.4)
    levels = (0.4, 0.3, 0.2, 0.1)
    ref = [restriction_check(a, spec, F, H, extract_level_set(fld, t, 512), resolution=512) for t in levels]
    shrink = bool(np.all(np.diff(ref) < 0))
    dt = time.time() - t0
    ok = max(tight) <= 1e-2 and max(ref) <= 1e-2 and shrink
    _say(6, ok, f"z vs z+(z-1)(z-2) {max(tight):.1e}; z vs z+(z-1)(z-2)conj(z) at levels {levels}: "
                + " ".join(f"{r:.1e}" for r in ref) + f" shrinking={shrink}", dt)
    assert ok


# -- criterion 7 -------------------------------------------------------------


def test_c7_spectral_identities():
    t0 = time.time()
    from pompeiu.config import DEFAULT_TOLERANCES as tol
    quad = {"trials": 100}
    rows = []
    for i, path in enumerate(shipped_fixtures()):
        fx = load_fixture(path)
        for j, chk in enumerate((check_identity, check_spectral_identity, check_bilinearity, check_measure)):
            v, b = chk(fx, tol, np.random.default_rng([7, i, j]), quad)
            rows.append((fx.name, chk.__name__, v, b))
    bad = [r for r in rows if not r[2] <= r[3]]
    dt = time.time() - t0
    worst = {k: max(r[2] for r in rows if r[1] == k) for k in {r[1] for r in rows}}
    ok = not bad
    _say(7, ok, "worst " + ", ".join(f"{k[6:]}={v:.1e}" for k, v in sorted(worst.items())), dt)
    assert ok


# -- criterion 8 ------------------------------------------------------------


def test_c8_cross_validation(suite):
    t0 = time.time()
    worst = 0.0
    for n, a, spec, t, fld, c in suite:
        fam = spectral_projectors(a, spec)
        for name in FUNCS:
            rep = cross_validate(a, spec, make(name), c, family=fam, resolution=512, patch_radius=PATCH)
            worst = max(worst, rep["max_deviation"])
    dt = time.time() - t0
    ok = worst <= 1e-3
    _say(8, ok, f"smooth/borel/oracle max pairwise deviation {worst:.2e} <= 1e-3", dt)
    assert ok


# -- criterion 9 -------------------------------------------------------------


def test_c9_regularity():
    t0 = time.time()
    notes = []
    fld = build_distance_field([0], box=(-1.5, 1.5, -1.5, 1.5), resolution=1024)
    eps = epsilon_ladder(0.4, 7, fld.floor)
    point = truncation_study(eps, truncation_samples(fld, eps, 1.0))
    ok_point = point.verdict == CONVERGENT and abs(point.extrapolated - 2 * np.pi) <= 1e-2 * 2 * np.pi
    notes.append(f"point {point.verdict} {point.extrapolated:.4f}")

    disk = filled_disk_field(0j, 1.0, (-2, 2, -2, 2), 512)
    eps = epsilon_ladder(0.4, 7, disk.floor)
    fat = truncation_study(eps, truncation_samples(disk, eps, 0.5))
    notes.append(f"disk {fat.verdict}")

    a, spec = from_eigenstructure([1, 2], np.eye(2))
    pair = build_distance_field(spec, resolution=512, max_level=0.4)
    region = Contour.circles([1, 2], 0.4, 512)
    normal = max(abs(resolvent_norm_integral(a, spec, region, e) - distance_integral(pair, (e, 0.4)))
                 / distance_integral(pair, (e, 0.4)) for e in (0.1, 0.05, 0.02))
    notes.append(f"normal {normal:.1e}")

    origin = build_distance_field([0], box=(-1.6, 1.6, -1.6, 1.6), resolution=512)
    co = [coarea_check(origin, lambda z: np.ones(z.shape), [0.0, 0.5, 1.0]),
          coarea_check(origin, lambda z: np.zeros(z.shape), [0.0, 0.5, 1.0]),
          coarea_check(origin, lambda z: 1 / np.abs(z), np.geomspace(0.05, 1.0, 64))]
    co_ok = all(abs(l - r) <= max(1e-3 * abs(l), 1e-4) for l, r in co)
    notes.append("coarea " + " ".join(f"{abs(l - r):.1e}" for l, r in co))

    dt = time.time() - t0
    ok = ok_point and fat.verdict == DIVERGENT and normal <= 2e-2 and co_ok
    _say(9, ok, ", ".join(notes), dt)
    assert ok


# -- criterion 10 ------------------------------------------------------------


def test_c10_determinism(tmp_path):
    t0 = time.time()
    payloads = []
    for threads in (1, 8):
        out = tmp_path / f"verify{threads}.json"
        r = subprocess.run([sys.executable, "-m", "pompeiu", "verify", "--threads", str(threads),
                            "--out", str(out)], capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        rep = json.loads(out.read_text())
        body = canonical(rep["payload"]).encode()
        assert hashlib.sha256(body).hexdigest() == rep["header"]["payload_sha256"]
        payloads.append(body)
    dt = time.time() - t0
    ok = payloads[0] == payloads[1]
    _say(10, ok, f"verify --threads 1 vs 8 payload bytes identical={ok} "
                 f"(sha256 {hashlib.sha256(payloads[0]).hexdigest()[:12]})", dt)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
