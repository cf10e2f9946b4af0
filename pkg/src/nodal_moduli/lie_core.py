"""Special unitary numerics: validated group/algebra/torus elements, exp, alcove projection.

Tolerance hierarchy used throughout the package:

* constructor invariants: 1e-10 (group), 1e-12 (algebra, torus)
* equality tests: 1e-8
* numerical rank thresholds: relative 1e-7
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from nodal_moduli.alcove import AlcovePoint, MultiplicityPattern, stabilizer_pattern
from nodal_moduli.errors import AlcoveAmbiguity, InvariantViolation

GROUP_TOL = 1e-10
ALGEBRA_TOL = 1e-12
EQUALITY_TOL = 1e-8
RANK_RTOL = 1e-7
# re-project onto the group after this many factors in a product
REPROJECT_EVERY = 8


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An ``n x n`` special unitary matrix, checked on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvariantViolation(f"expected a square matrix, got shape {m.shape}")
        unitarity = np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]))
        if unitarity > GROUP_TOL:
            raise InvariantViolation(f"not unitary: |U^H U - I|_F = {unitarity:.3e}")
        det_err = abs(np.linalg.det(m) - 1)
        if det_err > GROUP_TOL:
            raise InvariantViolation(f"det(U) != 1: |det - 1| = {det_err:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, n: int) -> GroupElement:
        return cls(np.eye(n))

    @classmethod
    def project(cls, m) -> GroupElement:
        """Nearest special unitary matrix (polar factor, determinant phase removed)."""
        return cls(polar_project(m))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __matmul__(self, other):
        if isinstance(other, GroupElement):
            return GroupElement.project(self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def inv(self) -> GroupElement:
        return GroupElement(self.matrix.conj().T)

    def allclose(self, other, tol: float = EQUALITY_TOL) -> bool:
        return bool(np.linalg.norm(self.matrix - np.asarray(other)) <= tol)

    def __repr__(self):
        return f"GroupElement(n={self.n})"


@dataclass(frozen=True, eq=False)
class LieAlgebraElement:
    """A traceless skew-Hermitian matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if np.linalg.norm(m + m.conj().T) > ALGEBRA_TOL * max(1.0, np.linalg.norm(m)):
            raise InvariantViolation("not skew-Hermitian")
        if abs(np.trace(m)) > ALGEBRA_TOL * max(1.0, np.linalg.norm(m)):
            raise InvariantViolation("not traceless")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class TorusElement:
    """A diagonal element of SU(n), stored as its unit-modulus phases."""

    phases: np.ndarray

    def __post_init__(self):
        p = np.array(self.phases, dtype=complex).reshape(-1)
        if np.max(np.abs(np.abs(p) - 1)) > ALGEBRA_TOL:
            raise InvariantViolation("torus phases must have unit modulus")
        if abs(np.prod(p) - 1) > ALGEBRA_TOL:
            raise InvariantViolation("torus phases must multiply to 1")
        p.setflags(write=False)
        object.__setattr__(self, "phases", p)

    @classmethod
    def identity(cls, n: int) -> TorusElement:
        return cls(np.ones(n))

    @classmethod
    def from_angles(cls, angles) -> TorusElement:
        """Phases ``exp(i * angles)`` with the last angle fixed by the determinant."""
        angles = np.asarray(angles, dtype=float)
        full = np.append(angles, -angles.sum())
        return cls(np.exp(1j * full))

    @classmethod
    def random(cls, rng: np.random.Generator, n: int) -> TorusElement:
        return cls.from_angles(rng.uniform(-np.pi, np.pi, n - 1))

    @property
    def n(self) -> int:
        return self.phases.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.phases)

    def __mul__(self, other: TorusElement) -> TorusElement:
        return TorusElement(self.phases * other.phases)

    def inv(self) -> TorusElement:
        return TorusElement(self.phases.conj())

    def reversed(self) -> TorusElement:
        return TorusElement(self.phases[::-1])


def polar_project(m) -> np.ndarray:
    """Closest unitary matrix in Frobenius norm, then divided by an n-th root of its determinant."""
    m = np.asarray(m, dtype=complex)
    u, _, vh = np.linalg.svd(m)
    w = u @ vh
    det = np.linalg.det(w)
    return w * np.exp(-1j * np.angle(det) / w.shape[-1])


def polar_project_batch(ms: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(ms)
    w = u @ vh
    det = np.linalg.det(w)
    return w * np.exp(-1j * np.angle(det) / w.shape[-1])[..., None, None]


def exp_map(x) -> GroupElement:
    """Group exponential of a traceless skew-Hermitian matrix.

    Computed through the spectral decomposition of the Hermitian matrix ``i X``
    so that the result is unitary to machine precision.
    """
    x = np.asarray(LieAlgebraElement(np.asarray(x)).matrix)
    return GroupElement(exp_skew(x))


def exp_skew(x: np.ndarray) -> np.ndarray:
    """Unchecked exponential of a (batch of) skew-Hermitian matrices."""
    h = 1j * np.asarray(x)
    h = 0.5 * (h + np.swapaxes(h.conj(), -1, -2))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def product(factors) -> np.ndarray:
    """Ordered product with polar re-projection every few factors."""
    factors = list(factors)
    out = np.asarray(factors[0], dtype=complex)
    for i, f in enumerate(factors[1:], start=2):
        out = out @ np.asarray(f)
        if i % REPROJECT_EVERY == 0:
            out = polar_project(out)
    if len(factors) > REPROJECT_EVERY:
        out = polar_project(out)
    return out


def project_to_alcove(a, *, tol: float = EQUALITY_TOL) -> tuple[AlcovePoint, GroupElement]:
    """Conjugate ``A`` into the diagonal torus and read off its weight vector.

    Returns ``(alpha, U)`` with ``U A U^{-1} = exp(-2 pi i diag(alpha))`` and
    ``alpha`` in the weight simplex. Ties in ``alpha`` keep the order in which
    the Schur decomposition produced the eigenvectors.

    Warns with :class:`AlcoveAmbiguity` when the log-phases do not add up to an
    integer within ``tol``; the nearest integer is used regardless.
    """
    m = np.asarray(a, dtype=complex)
    n = m.shape[0]
    t, q = scipy.linalg.schur(m, output="complex")
    eig = np.diag(t)
    # phases in [0, 1): eig = exp(-2 pi i phase)
    phase = np.mod(-np.angle(eig) / (2 * np.pi), 1.0)
    phase[phase >= 1.0] = 0.0
    total = phase.sum()
    shift = int(round(total))
    if abs(total - shift) > tol:
        warnings.warn(
            f"log-phases sum to {total:.3e}, not an integer; det(A) may differ from 1",
            AlcoveAmbiguity,
            stacklevel=2,
        )
    order = np.argsort(-phase, kind="stable")
    values = phase[order].copy()
    # the `shift` largest phases move down by one; the result is again decreasing
    # after rotating them to the end
    values[:shift] -= 1.0
    order = np.concatenate([order[shift:], order[:shift]])
    values = np.concatenate([values[shift:], values[:shift]])
    values -= values.sum() / n
    alpha = AlcovePoint(values)
    u = q[:, order].conj().T
    u = u * np.exp(-1j * np.angle(np.linalg.det(u)) / n)
    return alpha, GroupElement(polar_project(u))


def commutator_subgroup_dim(pattern: MultiplicityPattern) -> int:
    """Dimension of ``[Stab(A), Stab(A)] = prod SU(m_j)`` over the merged multiplicities."""
    return sum(m * m - 1 for m in pattern.merged_blocks())


def stabilizer_dim(pattern: MultiplicityPattern) -> int:
    """Dimension of ``Stab(A) = S(prod U(m_j))``."""
    return sum(m * m for m in pattern.merged_blocks()) - 1


def random_group_element(seed, n: int) -> GroupElement:
    """Haar-distributed SU(n) sample from a seed (or a ``numpy`` Generator)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return GroupElement(haar_su(rng, n))


def haar_su(rng: np.random.Generator, n: int) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))[None, :]
    return q * np.exp(-1j * np.angle(np.linalg.det(q)) / n)


def random_algebra_element(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    x = 0.5 * (z - z.conj().T) * scale
    return x - np.trace(x) / n * np.eye(n)


@lru_cache(maxsize=None)
def su_basis(n: int) -> np.ndarray:
    """Orthonormal basis of su(n) for the inner product ``Re tr(X^H Y)``, shape ``(n^2 - 1, n, n)``."""
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = 1, -1
            basis.append(e / np.sqrt(2))
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = 1j, 1j
            basis.append(e / np.sqrt(2))
    basis.extend(1j * cartan_basis(n))
    out = np.array(basis)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def cartan_basis(n: int) -> np.ndarray:
    """Orthonormal basis of real traceless diagonal matrices, shape ``(n - 1, n, n)``."""
    out = []
    for k in range(1, n):
        d = np.zeros(n)
        d[:k] = 1.0
        d[k] = -k
        out.append(np.diag(d / np.linalg.norm(d)).astype(complex))
    arr = np.array(out).reshape(n - 1, n, n)
    arr.setflags(write=False)
    return arr


def algebra_coordinates(x: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Coordinates of ``x`` (or a batch) against an orthonormal basis."""
    return np.real(np.einsum("aij,...ij->...a", basis.conj(), x))


def stabilizer_algebra_basis(pattern: MultiplicityPattern, *, derived: bool = False) -> np.ndarray:
    """Orthonormal basis of Lie(Stab(A)) or, with ``derived``, of its commutator ideal.

    ``A`` is the diagonal holonomy of a point on the given face; eigenvalue
    classes are the merged blocks (first and last runs merge when ``k = 1``).
    """
    n = pattern.n
    labels = np.empty(n, dtype=int)
    bounds = np.cumsum((0,) + pattern.blocks)
    for b in range(pattern.length):
        labels[bounds[b] : bounds[b + 1]] = b
    if pattern.k == 1 and pattern.length >= 2:
        labels[labels == pattern.length - 1] = 0
    classes = sorted(set(labels.tolist()))
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] == labels[j]:
                e = np.zeros((n, n), dtype=complex)
                e[i, j], e[j, i] = 1, -1
                basis.append(e / np.sqrt(2))
                e = np.zeros((n, n), dtype=complex)
                e[i, j], e[j, i] = 1j, 1j
                basis.append(e / np.sqrt(2))
    # diagonal part: traceless overall, or traceless on every class
    if derived:
        constraints = np.array([(labels == c).astype(float) for c in classes])
    else:
        constraints = np.ones((1, n))
    null = scipy.linalg.null_space(constraints)
    for col in null.T:
        basis.append(1j * np.diag(col).astype(complex))
    if not basis:
        return np.zeros((0, n, n), dtype=complex)
    return np.array(basis)


def in_stabilizer(m, alpha: AlcovePoint, tol: float = EQUALITY_TOL) -> bool:
    a = alpha.holonomy()
    m = np.asarray(m)
    return bool(np.linalg.norm(m @ a - a @ m) <= tol)


def in_derived_stabilizer(m, alpha: AlcovePoint, tol: float = EQUALITY_TOL) -> bool:
    """Membership in ``[Stab(A), Stab(A)]``: commutes with ``A`` and has det 1 on every eigenspace."""
    if not in_stabilizer(m, alpha, tol):
        return False
    m = np.asarray(m)
    a = np.diag(alpha.holonomy())
    seen = np.zeros(a.size, dtype=bool)
    for i in range(a.size):
        if seen[i]:
            continue
        cls = np.abs(a - a[i]) <= 1e-9
        seen |= cls
        idx = np.flatnonzero(cls)
        if abs(np.linalg.det(m[np.ix_(idx, idx)]) - 1) > tol:
            return False
    return True


def pattern_of(alpha: AlcovePoint) -> MultiplicityPattern:
    return stabilizer_pattern(alpha)
