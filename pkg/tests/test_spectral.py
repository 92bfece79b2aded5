import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pompeiu.contour import Contour
from pompeiu.errors import AtomOnBoundary, ClustersOverlap, NonFiniteSample
from pompeiu.functions import conj, const, poly
from pompeiu.matrix import (LinearFunctional, Spectrum, from_eigenstructure, oracle_fc,
                            random_conditioned, random_unitary)
from pompeiu.spectral import (Disk, Empty, Plane, Rect, SpectralFamily, Union, borel_fc,
                              borel_set_from_json, cross_validate, family_axiom_report, mu,
                              operator_measure, spectral_projectors)

norm = lambda m: float(np.linalg.norm(m, 2))  # noqa: E731


@pytest.fixture
def diag12():
    a, spec = from_eigenstructure([1, 2], np.eye(2))
    return a, spec, spectral_projectors(a, spec)


# -- projectors --------------------------------------------------------------


def test_projectors_diag12(diag12):
    _, _, fam = diag12
    assert norm(fam.projectors[0] - np.diag([1, 0])) < 1e-8
    assert norm(fam.projectors[1] - np.diag([0, 1])) < 1e-8


def test_projectors_scalar():
    a, spec = from_eigenstructure([0.7 - 0.2j], np.eye(1))
    fam = spectral_projectors(a, spec)
    assert fam.projectors.shape == (1, 1, 1)
    assert abs(fam.projectors[0, 0, 0] - 1) < 1e-12


def test_projector_single_cluster_is_identity(rng):
    v = random_conditioned(3, 10.0, rng)
    a, spec = from_eigenstructure([1, 1, 1], v)
    fam = spectral_projectors(a, spec)
    assert len(fam.eigenvalues) == 1
    assert norm(fam.projectors[0] - np.eye(3)) < 1e-8


def test_projector_jordan_block_is_identity():
    # residue of the resolvent at a double pole is still I
    a = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
    fam = spectral_projectors(a, Spectrum.from_values([1, 1]))
    assert norm(fam.projectors[0] - np.eye(2)) < 1e-10


def test_clusters_overlap():
    a, spec = from_eigenstructure([0, 0.1], np.eye(2))
    with pytest.raises(ClustersOverlap) as ei:
        spectral_projectors(a, spec, radius=0.2)
    assert ei.value.suggested_radius == pytest.approx(0.05)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_family_invariants_property(n, seed):
    rng = np.random.default_rng(seed)
    while True:
        lam = rng.uniform(-2, 2, n) + 1j * rng.uniform(-2, 2, n)
        if Spectrum.from_values(lam).min_gap() > 0.2:
            break
    a, spec = from_eigenstructure(lam, random_conditioned(n, 10.0, rng))
    fam = spectral_projectors(a, spec)
    assert fam.identity_residual() < 1e-8
    assert fam.idempotence_residual() < 1e-6
    assert fam.reconstruction_residual(a) < 1e-6 * max(norm(a), 1.0)


def test_family_json_roundtrip(diag12):
    _, _, fam = diag12
    back = SpectralFamily.from_json(json.loads(json.dumps(fam.to_json())))
    assert np.array_equal(back.eigenvalues, fam.eigenvalues)
    assert np.array_equal(back.projectors, fam.projectors)
    with pytest.raises(ValueError):
        SpectralFamily.from_json({"atoms": []})
    with pytest.raises(ValueError):
        SpectralFamily.from_json({"atoms": [{"lambda": {"re": 1}}]})


# -- measures ----------------------------------------------------------------


def test_mu_unit_mass(diag12):
    _, _, fam = diag12
    m = mu(fam, LinearFunctional.coordinate(2, 0), np.array([1, 0]))
    assert m.masses[0] == pytest.approx(1, abs=1e-12)
    assert m.masses[1] == pytest.approx(0, abs=1e-12)
    assert m.to_json()[0]["location"] == {"re": 1.0, "im": 0.0}


def test_mu_zero_functional(diag12):
    _, _, fam = diag12
    m = mu(fam, LinearFunctional.zero(2), np.array([3, -1j]))
    assert np.all(m.masses == 0)
    assert m.total_variation() == 0


def test_mu_dimension_mismatch(diag12):
    _, _, fam = diag12
    with pytest.raises(ValueError):
        mu(fam, LinearFunctional.coordinate(3, 0), np.ones(2))


def test_spectral_identity_random(rng):
    lam = [0.5 + 0.5j, -1, 1.5 - 0.5j, -0.5 - 1j]
    a, spec = from_eigenstructure(lam, random_conditioned(4, 10.0, rng))
    fam = spectral_projectors(a, spec)
    for _ in range(50):
        f = LinearFunctional(rng.normal(size=4) + 1j * rng.normal(size=4))
        x = rng.normal(size=4) + 1j * rng.normal(size=4)
        got = mu(fam, f, x).integrate(lambda z: z)
        scale = f.norm * norm(a) * np.linalg.norm(x)
        assert abs(got - f(a @ x)) < 1e-8 * scale


def test_operator_measure_examples(diag12):
    _, _, fam = diag12
    assert norm(operator_measure(fam, Plane()) - np.eye(2)) < 1e-8
    assert norm(operator_measure(fam, Disk(1, 0.1)) - np.diag([1, 0])) < 1e-8
    assert np.all(operator_measure(fam, Empty()) == 0)
    assert norm(operator_measure(fam, Rect(1.5, 3, -1, 1)) - np.diag([0, 1])) < 1e-8
    u = Union((Disk(1, 0.1), Rect(1.5, 3, -1, 1)))
    assert norm(operator_measure(fam, u) - np.eye(2)) < 1e-8


def test_atom_on_boundary(diag12):
    _, _, fam = diag12
    with pytest.raises(AtomOnBoundary):
        operator_measure(fam, Disk(0, 1.0))
    with pytest.raises(AtomOnBoundary):
        operator_measure(fam, Rect(2, 3, -1, 1))


def test_measure_operator_consistency(rng):
    a, spec = from_eigenstructure([1j, -1j, 0.5], random_unitary(3, rng))
    fam = spectral_projectors(a, spec)
    for e in (Disk(1j, 0.5), Rect(-1, 1, -2, 0.2), Union((Disk(0.5, 0.1), Disk(-1j, 0.1)))):
        f = LinearFunctional(rng.normal(size=3) + 1j * rng.normal(size=3))
        x = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert abs(mu(fam, f, x)(e) - f(operator_measure(fam, e) @ x)) < 1e-12 * f.norm * np.linalg.norm(x) * 3


def test_borel_set_json():
    for e in (Disk(1 + 1j, 0.5), Rect(0, 1, 2, 3), Plane(), Empty(), Union((Disk(0, 1), Rect(0, 1, 0, 1)))):
        back = borel_set_from_json(json.loads(json.dumps(e.to_json())))
        assert back.to_json() == e.to_json()
    with pytest.raises(ValueError):
        borel_set_from_json({"hexagon": 1})
    with pytest.raises(ValueError):
        borel_set_from_json({"disk": 1, "rect": 2})


# -- Borel calculus ----------------------------------------------------------


def test_borel_examples(diag12):
    a, _, fam = diag12
    ind = lambda z: (np.abs(z - 1) < 0.1).astype(float)  # noqa: E731
    assert norm(borel_fc(fam, ind) - np.diag([1, 0])) < 1e-8
    assert norm(borel_fc(fam, lambda z: z) - a) < 1e-6
    assert norm(borel_fc(fam, const(1.0)) - np.eye(2)) < 1e-8


def test_borel_non_finite(diag12):
    _, _, fam = diag12
    with pytest.raises(NonFiniteSample), np.errstate(divide="ignore", invalid="ignore"):
        borel_fc(fam, lambda z: 1 / (z - 2))


def test_borel_matches_oracle(rng):
    a, spec = from_eigenstructure([0.3, -0.4 + 1j, 1 - 1j], random_conditioned(3, 10.0, rng))
    fam = spectral_projectors(a, spec)
    f = conj()
    assert norm(borel_fc(fam, f) - oracle_fc(spec, f)) < 1e-6


@given(st.lists(st.complex_numbers(max_magnitude=2), min_size=3, max_size=3),
       st.lists(st.complex_numbers(max_magnitude=2), min_size=3, max_size=3))
def test_multiplicativity_property(c1, c2):
    a, spec = from_eigenstructure([1j, -1j, 0.5], np.eye(3))
    fam = spectral_projectors(a, spec)
    f, g = poly(c1), conj() * poly(c2)
    lhs = borel_fc(fam, lambda z: f(z) * g(z))
    rhs = borel_fc(fam, f) @ borel_fc(fam, g)
    assert norm(lhs - rhs) < 1e-6 * (1 + norm(lhs))


# -- axioms ------------------------------------------------------------------


def test_axiom_cancellation(diag12):
    from pompeiu.spectral import bilinearity_residual
    _, _, fam = diag12
    lam = LinearFunctional(np.array([1 + 2j, -0.5]))
    x = np.array([0.3, 1j])
    rf, _ = bilinearity_residual(fam, lam, lam, x, x, -1)
    assert rf == 0.0
    assert np.all(mu(fam, lam + lam.scale(-1), x).masses == 0)


def test_axiom_report_diag12(diag12):
    _, _, fam = diag12
    rep = family_axiom_report(fam, 100, np.random.default_rng(7))
    assert rep["trials"] == 100
    assert rep["bilinearity"] <= 1e-12
    assert np.isfinite(rep["mass_bound"]) and rep["mass_bound"] > 0
    with pytest.raises(ValueError):
        family_axiom_report(fam, 0)


def test_axiom_report_nonnormal(rng):
    a, spec = from_eigenstructure([1, -1 + 1j, 0.5 - 1j], random_conditioned(3, 10.0, rng))
    rep = family_axiom_report(spectral_projectors(a, spec), 100, rng)
    assert rep["bilinearity"] <= 1e-12
    assert np.isfinite(rep["mass_bound"])


# -- cross validation --------------------------------------------------------


def test_cross_validate_conj():
    a, spec = from_eigenstructure([1j, -1j], np.eye(2))
    c = Contour.circles(spec.eigenvalues, 0.5, 512)
    rep = cross_validate(a, spec, conj(), c, resolution=512, patch_radius=6 / 512)
    assert set(rep["deviations"]) == {"smooth-borel", "smooth-oracle", "borel-oracle"}
    assert rep["max_deviation"] < 1e-3


def test_cross_validate_poly(rng):
    a, spec = from_eigenstructure([0.5, -0.5 + 0.5j, 1j], random_unitary(3, rng))
    c = Contour.circles(spec.eigenvalues, 0.3, 512)
    rep = cross_validate(a, spec, poly([1, -2, 0.5j, 1]), c, resolution=256)
    assert rep["deviations"]["smooth-borel"] < 1e-6


def test_cross_validate_const():
    a, spec = from_eigenstructure([1, 2], np.eye(2))
    c = Contour.circles(spec.eigenvalues, 0.3, 256)
    rep = cross_validate(a, spec, const(1.0), c, resolution=128)
    for m in rep["results"].values():
        assert norm(m - np.eye(2)) < 1e-8
