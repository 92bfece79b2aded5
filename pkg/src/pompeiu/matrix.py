"""Dense complex matrices: LU solves, resolvents and eigenstructure oracles.

Matrices are plain ``numpy`` complex arrays. Everything here also accepts a
leading batch axis where noted, because the functional calculi evaluate the
resolvent at tens of thousands of quadrature nodes at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import MissingOracle, OnSpectrum, SingularMatrix

EPS = np.finfo(float).eps


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a square, finite complex array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def matrices_close(a, b, tol: float) -> bool:
    """Entrywise comparison ``max|a - b| <= tol``; the tolerance is mandatory."""
    return bool(np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol)


def inf_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.sum(np.abs(a), axis=-1)))


def _group_values(values: np.ndarray, tol: float):
    distinct: list[complex] = []
    counts: list[int] = []
    for v in values:
        for i, d in enumerate(distinct):
            if abs(v - d) <= tol:
                counts[i] += 1
                break
        else:
            distinct.append(complex(v))
            counts.append(1)
    return distinct, counts


@dataclass
class Spectrum:
    """Distinct eigenvalues with multiplicities and an optional exact oracle.

    ``oracle`` is a pair ``(V, D)`` with ``A = V diag(D) V^{-1}``.
    """

    eigenvalues: np.ndarray
    multiplicities: tuple
    oracle: Optional[tuple] = None

    def __post_init__(self):
        self.eigenvalues = np.atleast_1d(np.asarray(self.eigenvalues, dtype=complex))
        self.multiplicities = tuple(int(m) for m in self.multiplicities)
        if len(self.eigenvalues) != len(self.multiplicities):
            raise ValueError("one multiplicity per eigenvalue required")
        if any(m < 1 for m in self.multiplicities):
            raise ValueError("multiplicities must be positive")
        if self.oracle is not None:
            V, D = self.oracle
            V = as_matrix(V, "V")
            D = np.asarray(D, dtype=complex)
            if D.shape != (V.shape[0],):
                raise ValueError("oracle eigenvalue list does not match V")
            if sum(self.multiplicities) != V.shape[0]:
                raise ValueError("multiplicities must sum to the dimension")
            self.oracle = (V, D)

    @classmethod
    def from_values(cls, values, tol: float = 1e-12, oracle=None) -> "Spectrum":
        values = np.atleast_1d(np.asarray(values, dtype=complex))
        scale = 1.0 + float(np.max(np.abs(values))) if values.size else 1.0
        distinct, counts = _group_values(values, tol * scale)
        return cls(np.array(distinct), tuple(counts), oracle)

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    @property
    def points(self) -> np.ndarray:
        return self.eigenvalues

    def distance(self, z) -> np.ndarray:
        """Exact distance from each ``z`` to the (finite) spectrum."""
        z = np.asarray(z, dtype=complex)
        d = np.abs(z[..., None] - self.eigenvalues)
        return d.min(axis=-1)

    def min_gap(self) -> float:
        """Smallest distance between distinct eigenvalues (inf for one point)."""
        ev = self.eigenvalues
        if len(ev) < 2:
            return float("inf")
        d = np.abs(ev[:, None] - ev[None, :])
        d[np.diag_indices_from(d)] = np.inf
        return float(d.min())


@dataclass(frozen=True)
class LinearFunctional:
    """A functional acting by the bilinear pairing ``sum_i c_i v_i``."""

    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("functional coefficients must be a finite vector")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, v):
        return np.tensordot(self.coefficients, np.asarray(v), axes=(0, 0))

    def __add__(self, other: "LinearFunctional") -> "LinearFunctional":
        return LinearFunctional(self.coefficients + other.coefficients)

    def scale(self, c: complex) -> "LinearFunctional":
        return LinearFunctional(c * self.coefficients)

    @property
    def dim(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def norm(self) -> float:
        # dual of the Euclidean norm under the bilinear pairing
        return float(np.linalg.norm(self.coefficients))

    @classmethod
    def zero(cls, dim: int) -> "LinearFunctional":
        return cls(np.zeros(dim, dtype=complex))

    @classmethod
    def coordinate(cls, dim: int, k: int) -> "LinearFunctional":
        c = np.zeros(dim, dtype=complex)
        c[k] = 1.0
        return cls(c)


# -- LU with partial pivoting, vectorized over a leading batch axis ---------


def lu_factor(a, threshold: Optional[float] = None):
    """Factor ``P a = L U`` for one matrix or a stack of matrices.

    Returns ``(lu, piv)`` where ``lu`` packs the unit-lower ``L`` and ``U``
    and ``piv[..., i]`` is the original row now at position ``i``. A pivot
    with magnitude at or below ``threshold`` (default
    ``n * eps * ||a||_inf`` per matrix) raises :class:`SingularMatrix`.
    """
    m = np.array(a, dtype=complex)
    single = m.ndim == 2
    if single:
        m = m[None]
    nb, n, n2 = m.shape
    if n != n2:
        raise ValueError("lu_factor needs square matrices")
    piv = np.tile(np.arange(n), (nb, 1))
    if threshold is None:
        thr = n * EPS * np.max(np.sum(np.abs(m), axis=2), axis=1)
    else:
        thr = np.full(nb, float(threshold))
    rows = np.arange(nb)
    for k in range(n):
        p = np.argmax(np.abs(m[:, k:, k]), axis=1) + k
        swap = p != k
        if np.any(swap):
            r, pk = rows[swap], p[swap]
            tmp = m[r, k].copy()
            m[r, k] = m[r, pk]
            m[r, pk] = tmp
            tp = piv[r, k].copy()
            piv[r, k] = piv[r, pk]
            piv[r, pk] = tp
        pivot = m[:, k, k]
        bad = np.abs(pivot) <= thr
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            err = SingularMatrix(
                f"pivot {abs(pivot[i]):.3e} at column {k} is below threshold {thr[i]:.3e}"
            )
            err.batch_index = i
            raise err
        if k < n - 1:
            m[:, k + 1:, k] /= pivot[:, None]
            m[:, k + 1:, k + 1:] -= m[:, k + 1:, k, None] * m[:, k, None, k + 1:]
    if single:
        return m[0], piv[0]
    return m, piv


def lu_solve_factored(lu, piv, b) -> np.ndarray:
    """Solve with a factorization from :func:`lu_factor` (batch-aware)."""
    lu = np.asarray(lu)
    single = lu.ndim == 2
    if single:
        lu = lu[None]
        piv = np.asarray(piv)[None]
    nb, n, _ = lu.shape
    b = np.asarray(b, dtype=complex)
    vec = b.ndim == (1 if single else 2)
    if single:
        b = b[None]
    if vec:
        b = b[..., None]
    if b.shape[0] != nb:
        b = np.broadcast_to(b, (nb,) + b.shape[1:])
    x = np.take_along_axis(b, piv[:, :, None], axis=1).copy()
    for i in range(1, n):
        x[:, i] -= np.einsum("bj,bjk->bk", lu[:, i, :i], x[:, :i])
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            x[:, i] -= np.einsum("bj,bjk->bk", lu[:, i, i + 1:], x[:, i + 1:])
        x[:, i] /= lu[:, i, i, None]
    if vec:
        x = x[..., 0]
    return x[0] if single else x


def lu_solve(a, b, threshold: Optional[float] = None) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides. Raises
    :class:`SingularMatrix` when a pivot falls below ``threshold``.
    """
    a = as_matrix(a, "A")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise ValueError("right-hand side dimension does not match A")
    lu, piv = lu_factor(a, threshold)
    return lu_solve_factored(lu, piv, b)


# -- resolvent --------------------------------------------------------------


def resolvent_batch(a: np.ndarray, lams, threshold: Optional[float] = None) -> np.ndarray:
    """``(lam I - a)^{-1}`` for every ``lam`` in a 1-d array, shape (N, n, n)."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = a.shape[0]
    eye = np.eye(n, dtype=complex)
    m = lams[:, None, None] * eye - a
    try:
        lu, piv = lu_factor(m, threshold)
    except SingularMatrix as exc:
        i = getattr(exc, "batch_index", 0)
        raise OnSpectrum(f"lam = {lams[i]:.6g} is numerically on the spectrum ({exc})") from exc
    return lu_solve_factored(lu, piv, np.broadcast_to(eye, m.shape))


def resolvent(a, lam: complex, spec: Optional[Spectrum] = None,
              min_distance: float = 1e-12, threshold: Optional[float] = None) -> np.ndarray:
    """The resolvent ``R(lam) = (lam I - a)^{-1}``.

    With this sign ``(1/2 pi i) \\oint R = I`` around the whole spectrum.
    When ``spec`` is given, points closer than ``min_distance`` (relative to
    the spectral scale) are rejected before factoring.
    """
    a = as_matrix(a, "A")
    if spec is not None:
        scale = 1.0 + float(np.max(np.abs(spec.eigenvalues)))
        d = float(spec.distance(lam))
        if d <= min_distance * scale:
            raise OnSpectrum(f"lam = {lam} lies within {d:.3e} of the spectrum")
    return resolvent_batch(a, [lam], threshold)[0]


def spectral_norm(m) -> np.ndarray:
    """Largest singular value of one matrix or of a stack (LAPACK, batched)."""
    m = np.asarray(m, dtype=complex)
    if m.shape[-1] == 0:
        return np.zeros(m.shape[:-2]) if m.ndim > 2 else 0.0
    return np.linalg.svd(m, compute_uv=False)[..., 0]


# -- oracle construction ----------------------------------------------------


def from_eigenstructure(eigenvalues: Sequence[complex], v) -> tuple:
    """Build ``A = V diag(eigenvalues) V^{-1}`` and its exact :class:`Spectrum`."""
    d = np.asarray(eigenvalues, dtype=complex)
    v = as_matrix(v, "V")
    if d.shape != (v.shape[0],):
        raise ValueError("need one eigenvalue per column of V")
    # A^T = V^{-T} (V diag(d))^T
    a = lu_solve(v.T, (v * d).T).T
    spec = Spectrum.from_values(d, oracle=(v, d))
    return a, spec


def oracle_fc(spec: Spectrum, f) -> np.ndarray:
    """Ground truth ``V diag(f(D)) V^{-1}`` from the stored eigenstructure."""
    if spec.oracle is None:
        raise MissingOracle("spectrum carries no (V, D) oracle")
    v, d = spec.oracle
    fn = getattr(f, "value", f)
    fd = np.asarray(fn(d), dtype=complex) * np.ones(d.shape)
    if not np.all(np.isfinite(fd)):
        raise ValueError("f is not finite on the spectrum")
    return lu_solve(v.T, (v * fd).T).T


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_conditioned(n: int, cond: float, rng: np.random.Generator) -> np.ndarray:
    """Random matrix with 2-norm condition number exactly ``cond``."""
    u = random_unitary(n, rng)
    w = random_unitary(n, rng)
    s = np.geomspace(1.0, 1.0 / cond, n) if n > 1 else np.ones(1)
    return (u * s) @ w.conj().T


# -- JSON -------------------------------------------------------------------

def matrix_to_json(a) -> dict:
    a = as_matrix(a)
    return {"dim": int(a.shape[0]),
            "re": [[float(x) for x in row] for row in a.real],
            "im": [[float(x) for x in row] for row in a.imag]}


def matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        n = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((n, n))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise ValueError(f"matrix arrays must be {n}x{n}")
    return as_matrix(re + 1j * im)

