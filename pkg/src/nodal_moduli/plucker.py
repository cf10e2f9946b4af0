"""Decomposable forms at the two marked fibers.

A nonzero decomposable ``j``-form on ``C^N`` is stored as an annihilator basis
``K`` (``N x (N - j)``) and a complex scale relative to a canonical unit form
``u_K``: the form ``V -> det([K | V])`` rescaled to unit Plucker norm, with its
phase fixed so that the lexicographically first coordinate of maximal modulus
is real positive. Coordinate forms ``e_S^*`` therefore have scale 1.

Wedge convention: ``(g ^ b)(v_1..v_p) = sum over shuffles sign * g(...) b(...)``,
which equals the determinant of the stacked covectors for decomposable forms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from nodal_moduli.alcove import MultiplicityPattern
from nodal_moduli.errors import (
    AsymmetricStrata,
    DegenerateTorsion,
    IllegalPattern,
    Incompatible,
    InvariantViolation,
    NotNested,
)
from nodal_moduli.lie_core import TorusElement
from nodal_moduli.serialize import complex_from_json, complex_to_json

NEST_TOL = 1e-8
TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class BetaEntry:
    basis: np.ndarray
    scale: complex = 1.0

    def __post_init__(self):
        k = np.array(self.basis, dtype=complex)
        if k.ndim != 2 or k.shape[1] > k.shape[0]:
            raise InvariantViolation(f"annihilator basis must be N x m with m <= N, got {k.shape}")
        if k.shape[1] and np.linalg.matrix_rank(k) < k.shape[1]:
            raise InvariantViolation("annihilator basis is rank deficient")
        if self.scale == 0 or not np.isfinite(self.scale):
            raise InvariantViolation("scale must be finite and nonzero; use None for a zero form")
        k.setflags(write=False)
        object.__setattr__(self, "basis", k)
        object.__setattr__(self, "scale", complex(self.scale))

    @property
    def N(self) -> int:
        return self.basis.shape[0]

    @property
    def degree(self) -> int:
        return self.basis.shape[0] - self.basis.shape[1]

    @cached_property
    def _raw_plucker(self) -> np.ndarray:
        n, j = self.N, self.degree
        eye = np.eye(n)
        return np.array([np.linalg.det(np.hstack([self.basis, eye[:, list(s)]])) for s in itertools.combinations(range(n), j)])

    @cached_property
    def unit_factor(self) -> complex:
        """``w`` with ``u_K(V) = w det([K | V])``."""
        p = self._raw_plucker
        mod = np.abs(p)
        ref = int(np.flatnonzero(mod >= mod.max() * (1 - TIE_RTOL))[0])
        return complex(abs(p[ref]) / (p[ref] * np.linalg.norm(p)))

    def plucker(self) -> np.ndarray:
        """Coordinates ``beta(e_S)`` over ``j``-subsets ``S`` in lexicographic order."""
        return self.scale * self.unit_factor * self._raw_plucker

    def __call__(self, v) -> complex:
        v = np.asarray(v, dtype=complex).reshape(self.N, -1)
        if v.shape[1] != self.degree:
            raise ValueError(f"expected {self.degree} vectors, got {v.shape[1]}")
        return complex(self.scale * self.unit_factor * np.linalg.det(np.hstack([self.basis, v])))

    def annihilator(self) -> np.ndarray:
        """Orthonormal basis of the annihilator."""
        if self.basis.shape[1] == 0:
            return np.zeros((self.N, 0), dtype=complex)
        return scipy.linalg.orth(self.basis)

    def with_scale(self, scale) -> BetaEntry:
        return BetaEntry(self.basis, scale)

    @classmethod
    def from_covectors(cls, rows, scale: complex = 1.0) -> BetaEntry:
        """The form ``V -> scale * det(rows @ V)`` for a ``j x N`` matrix of covectors."""
        phi = np.atleast_2d(np.asarray(rows, dtype=complex))
        k = scipy.linalg.null_space(phi)
        entry = cls(k, 1.0)
        v = phi.conj().T
        return cls(k, scale * np.linalg.det(phi @ v) / entry(v))

    @classmethod
    def coordinate(cls, indices, N: int, scale: complex = 1.0) -> BetaEntry:
        """``scale * e_{i_1}^* ^ ... ^ e_{i_j}^*`` for 0-based sorted indices."""
        return cls.from_covectors(np.eye(N)[list(indices)], scale)

    def to_json(self) -> dict:
        return {"basis": [[complex_to_json(z) for z in row] for row in self.basis], "scale": complex_to_json(self.scale)}

    @classmethod
    def from_json(cls, data: dict, N: int | None = None) -> BetaEntry | None:
        if data.get("zero"):
            return None
        rows = data["basis"]
        arr = np.asarray(rows, dtype=float)
        if arr.size == 0:
            if N is None:
                raise ValueError("top forms need the fiber dimension")
            k = np.zeros((N, 0), dtype=complex)
        else:
            k = arr[..., 0] + 1j * arr[..., 1]
        return cls(k, complex_from_json(data["scale"]))


Entries = tuple  # tuple[BetaEntry | None, ...], index j - 1 holds beta_j


@dataclass(frozen=True, eq=False)
class BetaData:
    """Forms ``beta^i_j``, ``j = 1..N``, at the two points; ``None`` is the zero form."""

    x1: Entries
    x2: Entries

    def __post_init__(self):
        x1, x2 = tuple(self.x1), tuple(self.x2)
        if len(x1) != len(x2) or not x1:
            raise InvariantViolation("both points need N entries")
        N = len(x1)
        for entries in (x1, x2):
            for j, e in enumerate(entries, start=1):
                if e is not None and (e.N != N or e.degree != j):
                    raise InvariantViolation(f"entry {j} is a {e.degree}-form on C^{e.N}, expected a {j}-form on C^{N}")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @property
    def N(self) -> int:
        return len(self.x1)

    def point(self, i: int) -> Entries:
        return self.x1 if i == 1 else self.x2

    def to_json(self) -> dict:
        def enc(entries):
            return [{"zero": True} if e is None else e.to_json() for e in entries]

        return {"x1": enc(self.x1), "x2": enc(self.x2)}

    @classmethod
    def from_json(cls, data: dict) -> BetaData:
        N = len(data["x1"])
        return cls(tuple(BetaEntry.from_json(e, N) for e in data["x1"]), tuple(BetaEntry.from_json(e, N) for e in data["x2"]))


def _nonzero(entries: Entries, tol: float = 0.0) -> list[int]:
    return [j for j, e in enumerate(entries, start=1) if e is not None and abs(e.scale) > tol]


def _contained(small: np.ndarray, big: np.ndarray, tol: float = NEST_TOL) -> bool:
    if small.shape[1] == 0:
        return True
    if big.shape[1] == 0:
        return False
    q = scipy.linalg.orth(big)
    return bool(np.linalg.norm(small - q @ (q.conj().T @ small)) <= tol * max(1.0, np.linalg.norm(small)))


# -- flags ----------------------------------------------------------------------


def flag_from_entries(entries: Entries) -> list[np.ndarray]:
    """Orthonormal bases of the annihilators, by increasing dimension, ending with the whole fiber."""
    N = len(entries)
    steps = [entries[j - 1].annihilator() for j in sorted(_nonzero(entries), reverse=True) if j < N]
    steps = [s for s in steps if s.shape[1] > 0] + [np.eye(N, dtype=complex)]
    for small, big in zip(steps[:-1], steps[1:]):
        if not _contained(small, big):
            raise NotNested(f"annihilator of dimension {small.shape[1]} is not inside the one of dimension {big.shape[1]}")
    return steps


def flag_from_betas(b: BetaData) -> tuple[list[np.ndarray], list[np.ndarray]]:
    return flag_from_entries(b.x1), flag_from_entries(b.x2)


def entries_from_flag(flag, N: int, *, scales=None, top: bool = True) -> Entries:
    """Forms with the given annihilator flag (proper steps, increasing) and scales.

    ``scales`` maps the degree ``j`` to the scale of ``beta_j``; default 1. With
    ``top`` the volume form ``beta_N`` (the determinant, scale 1) is included.
    """
    scales = scales or {}
    entries: list = [None] * N
    for step in flag:
        step = np.asarray(step, dtype=complex)
        j = N - step.shape[1]
        entries[j - 1] = BetaEntry(step, scales.get(j, 1.0))
    if top:
        entries[N - 1] = BetaEntry(np.zeros((N, 0), dtype=complex), scales.get(N, 1.0))
    return tuple(entries)


def standard_betas(pattern: MultiplicityPattern, N: int | None = None, *, scales1=None, scales2=None) -> BetaData:
    """Coordinate flags ``span(e_1..e_d)`` at both points on the stratum ``pattern``.

    At ``x1`` the steps have dimensions ``I_s``; at ``x2`` they have ``N - I_s``.
    """
    N = N or pattern.n
    eye = np.eye(N, dtype=complex)
    I = pattern.I
    d1 = [i for i in I[:-1]]
    d2 = sorted(N - i for i in I[:-1])
    x1 = entries_from_flag([eye[:, :d] for d in d1], N, scales=scales1, top=pattern.k == 0)
    x2 = entries_from_flag([eye[:, :d] for d in d2], N, scales=scales2, top=pattern.k == 0)
    return BetaData(x1, x2)


def random_betas(rng: np.random.Generator, pattern: MultiplicityPattern, *, unit: bool = False) -> BetaData:
    """Random flags (unitary images of the coordinate flags) and random nonzero scales."""
    n = pattern.n
    out = []
    for dims in ([i for i in pattern.I[:-1]], sorted(n - i for i in pattern.I[:-1])):
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, _ = np.linalg.qr(z)
        # mix within each step so the stored bases are not orthonormal
        flag = [q[:, :d] @ _random_invertible(rng, d) for d in dims]
        scales = {}
        for d in dims:
            scales[n - d] = 1.0 if unit else complex(rng.standard_normal(), rng.standard_normal())
        out.append(entries_from_flag(flag, n, scales=scales, top=pattern.k == 0))
    return BetaData(*out)


def _random_invertible(rng, d):
    return np.eye(d) + 0.3 * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))


# -- strata ---------------------------------------------------------------------


def stratum_of_entries(entries: Entries, point: int = 1, tol: float = 0.0) -> MultiplicityPattern:
    """Read ``(I, k)`` from the vanishing pattern at one point.

    At ``x1`` the nonzero forms are ``beta_{N - I_s}``, at ``x2`` they are
    ``beta_{I_s}``; ``k = 1`` exactly when the top form vanishes. Scales of
    modulus at most ``tol`` count as zero (limits inside the closure).
    """
    N = len(entries)
    nz = [j for j in _nonzero(entries, tol) if j < N]
    I = sorted({N - j for j in nz} if point == 1 else set(nz))
    k = 0 if N in _nonzero(entries, tol) else 1
    if k == 1 and not I:
        raise IllegalPattern("all forms vanish: the face (I = (N,), k = 1) is empty")
    return MultiplicityPattern.from_I(I + [N], k)


def stratum_of_betas(b: BetaData, point: int = 1, tol: float = 0.0) -> MultiplicityPattern:
    top = [N in _nonzero(e, tol) for e, N in ((b.x1, b.N), (b.x2, b.N))]
    if top[0] != top[1]:
        raise IllegalPattern("the top forms must vanish at both points or at neither")
    return stratum_of_entries(b.point(point), point, tol)


# -- compatibility quotients ----------------------------------------------------


@dataclass
class SubquotientFrame:
    """``gamma`` between consecutive nonzero forms: ``beta_{j'} = gamma ^ beta_j``.

    ``steps`` holds ``(j, j', gamma)``; ``j = 0`` stands for the unit 0-form.
    """

    point: int
    N: int
    steps: list[tuple[int, int, BetaEntry]] = field(default_factory=list)

    def scale(self, j: int, jp: int) -> complex:
        for a, b, g in self.steps:
            if (a, b) == (j, jp):
                return g.scale
        raise KeyError((j, jp))


def _complement(k: np.ndarray) -> np.ndarray:
    n = k.shape[0]
    if k.shape[1] == 0:
        return np.eye(n, dtype=complex)
    return scipy.linalg.null_space(k.conj().T)


def _eval(entries: Entries, j: int, v) -> complex:
    if j == 0:
        return 1.0 + 0j
    return entries[j - 1](v)


def quotient_between(entries: Entries, j: int, jp: int) -> BetaEntry:
    """The canonical ``gamma`` with ``beta_{jp} = gamma ^ beta_j``.

    Its annihilator is ``Ann(beta_{jp}) + Ann(beta_j)^perp``, so its covector
    factors are orthogonal to those of ``beta_j``.
    """
    N = len(entries)
    k_hi = entries[jp - 1].annihilator()
    k_lo = np.eye(N, dtype=complex) if j == 0 else entries[j - 1].annihilator()
    if not _contained(k_hi, k_lo):
        raise Incompatible(f"Ann(beta_{jp}) is not inside Ann(beta_{j})")
    lo_perp = _complement(k_lo)
    k_gamma = np.hstack([k_hi, lo_perp])
    # test frame: V_a spans Ann(beta_j) modulo Ann(beta_jp), V_b spans Ann(beta_j)^perp
    va = _complement(np.hstack([k_hi, lo_perp]))
    vb = lo_perp
    unit = BetaEntry(k_gamma, 1.0)
    num = entries[jp - 1](np.hstack([va, vb]))
    den = unit(va) * _eval(entries, j, vb)
    if abs(den) == 0:
        raise Incompatible("degenerate test frame")
    gamma = BetaEntry(k_gamma, num / den)
    # verify the factorization on a second, generic frame
    rng = np.random.default_rng(jp * 1000 + j)
    v = rng.standard_normal((N, jp)) + 1j * rng.standard_normal((N, jp))
    lhs = entries[jp - 1](v)
    rhs = wedge_evaluate(gamma, None if j == 0 else entries[j - 1], v)
    if abs(lhs - rhs) > 1e-8 * max(1.0, abs(lhs)):
        raise Incompatible(f"beta_{jp} does not factor through beta_{j}: mismatch {abs(lhs - rhs):.3e}")
    return gamma


def compatibility_quotients(b: BetaData, point: int = 1) -> SubquotientFrame:
    entries = b.point(point)
    chain = [0] + _nonzero(entries)
    frame = SubquotientFrame(point, b.N)
    for j, jp in zip(chain[:-1], chain[1:]):
        frame.steps.append((j, jp, quotient_between(entries, j, jp)))
    return frame


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            k = perm[i]
            perm[i], perm[k] = perm[k], perm[i]
            sign = -sign
    return sign


def wedge_evaluate(gamma: BetaEntry | None, beta: BetaEntry | None, v) -> complex:
    """Shuffle-sum evaluation of ``(gamma ^ beta)(v_1, ..., v_p)``; ``None`` is the unit 0-form."""
    v = np.asarray(v, dtype=complex)
    dg = 0 if gamma is None else gamma.degree
    db = 0 if beta is None else beta.degree
    if v.shape[1] != dg + db:
        raise ValueError("wrong number of vectors")
    total = 0j
    cols = range(dg + db)
    for s in itertools.combinations(cols, dg):
        rest = [c for c in cols if c not in s]
        sign = _perm_sign(list(s) + rest)
        gv = 1.0 if gamma is None else gamma(v[:, list(s)])
        bv = 1.0 if beta is None else beta(v[:, rest])
        total += sign * gv * bv
    return complex(total)


def wedge_plucker(gamma: BetaEntry, beta: BetaEntry) -> np.ndarray:
    """Plucker coordinates of ``gamma ^ beta`` from those of the factors."""
    N = gamma.N
    dg, db = gamma.degree, beta.degree
    pg = dict(zip(itertools.combinations(range(N), dg), gamma.plucker()))
    pb = dict(zip(itertools.combinations(range(N), db), beta.plucker()))
    out = []
    for s in itertools.combinations(range(N), dg + db):
        acc = 0j
        for a in itertools.combinations(range(dg + db), dg):
            rest = [c for c in range(dg + db) if c not in a]
            sa = tuple(s[i] for i in a)
            sb = tuple(s[i] for i in rest)
            acc += _perm_sign(list(a) + rest) * pg[sa] * pb[sb]
        out.append(acc)
    return np.array(out)


# -- torus action ---------------------------------------------------------------


def _phases(t) -> np.ndarray:
    if isinstance(t, TorusElement):
        return t.phases
    p = np.asarray(t, dtype=complex).reshape(-1)
    if np.any(p == 0):
        raise ValueError("torus entries must be nonzero")
    return p


def character(t, j: int) -> complex:
    """``mu_j(t) = t^1 ... t^j``."""
    return complex(np.prod(_phases(t)[:j]))


def character_ratio(t, s: int, sp: int) -> complex:
    """``nu_{s, s'}(t) = mu_{s'}(t) / mu_s(t) = t^{s+1} ... t^{s'}``, evaluated directly."""
    return complex(np.prod(_phases(t)[s:sp]))


def torus_act_entries(entries: Entries, t) -> Entries:
    return tuple(None if e is None else e.with_scale(e.scale * character(t, j)) for j, e in enumerate(entries, start=1))


def torus_act_betas(b: BetaData, t1, t2) -> BetaData:
    return BetaData(torus_act_entries(b.x1, t1), torus_act_entries(b.x2, t2))


def change_fiber_basis(b: BetaData, m1, m2=None) -> BetaData:
    """Pull the forms back along invertible maps of the fibers: ``beta -> beta(m .)``."""
    m2 = m1 if m2 is None else m2
    out = []
    for entries, m in ((b.x1, m1), (b.x2, m2)):
        m = np.asarray(m, dtype=complex)
        minv = np.linalg.inv(m)
        new = []
        for e in entries:
            if e is None:
                new.append(None)
                continue
            k = minv @ e.basis
            probe = BetaEntry(k, 1.0)
            v = _complement(k)
            new.append(BetaEntry(k, e(m @ v) / probe(v)))
        out.append(tuple(new))
    return BetaData(*out)


# -- antidiagonal identification -------------------------------------------------


def antidiagonal_element(t) -> tuple[np.ndarray, np.ndarray]:
    """``(t, R(t))``: the same torus element at ``x1`` and, reversed, at ``x2``."""
    p = _phases(t)
    return p, p[::-1].copy()


@dataclass(frozen=True)
class Pairing:
    block: int
    size: int
    value: complex


def _block_scales(b: BetaData, point: int) -> dict[int, complex]:
    """Gamma scale of subquotient block ``u`` (1-based, increasing flag dimension)."""
    N = b.N
    steps = compatibility_quotients(b, point).steps
    # step (j, j') is the subquotient between annihilator dims N - j' and N - j
    dims = sorted(({N - j for j, _, _ in steps} | {N - jp for _, jp, _ in steps}) - {0})
    return {dims.index(N - j) + 1: g.scale for j, _, g in steps}


def antidiagonal_identify(b: BetaData) -> list[Pairing]:
    """Pair block ``s`` at ``x1`` with block ``l + 1 - s`` at ``x2`` by the ratio of gamma scales.

    The ratio is invariant under ``(t, R(t))``. On ``k = 1`` strata the first
    and last blocks have no volume form (the top forms vanish) and are skipped.
    """
    p1 = stratum_of_betas(b, 1)
    p2 = stratum_of_betas(b, 2)
    if p1 != p2:
        raise AsymmetricStrata(f"strata at the two points differ: {p1} vs {p2}")
    ell = p1.length
    s1 = _block_scales(b, 1)
    s2 = _block_scales(b, 2)
    out = []
    for s in range(1, ell + 1):
        u = ell + 1 - s
        if s in s1 and u in s2:
            out.append(Pairing(s, p1.blocks[s - 1], s1[s] / s2[u]))
    return out


# -- torsion --------------------------------------------------------------------


@dataclass
class TorsionBetas:
    constant: complex
    entries: Entries
    quotient_basis: np.ndarray


def torsion_betas(entries: Entries, generators, *, tol: float = 1e-10) -> TorsionBetas:
    """Contract by the torsion generators: ``beta~_{j-t}(v) = beta_j(s_1..s_t, v)`` on ``E / span(s)``.

    The quotient is modelled by the orthogonal complement of ``span(s)``, with
    orthonormal basis ``quotient_basis``; returned entries are forms in those
    coordinates.
    """
    s = np.asarray(generators, dtype=complex)
    if s.ndim == 1:
        s = s[:, None]
    N, t = s.shape
    if len(entries) != N:
        raise ValueError("generators live in a different fiber")
    nz = _nonzero(entries)
    if not nz or nz[0] != t:
        raise DegenerateTorsion(f"the first nonzero form must have degree t = {t}, found {nz[:1]}")
    const = entries[t - 1](s)
    ref = abs(entries[t - 1].scale) * np.prod(np.linalg.norm(s, axis=0))
    if abs(const) <= tol * max(ref, 1e-300):
        raise DegenerateTorsion("beta_t(s_1, ..., s_t) vanishes: the torsion orbit is not closed")
    w = _complement(s)
    out: list = [None] * (N - t)
    for j in nz:
        if j == t:
            continue
        e = entries[j - 1]
        k = w.conj().T @ e.basis
        probe = BetaEntry(k, 1.0)
        v = _complement(k)
        out[j - t - 1] = BetaEntry(k, e(np.hstack([s, w @ v])) / probe(v))
    return TorsionBetas(complex(const), tuple(out), w)
