"""Representation varieties of the nodal degeneration as numerical constraint sets.

A connected point stores ``(alpha, B1, B2, (C_i, D_i)_{i < g}, t)`` subject to

    (prod_i [C_i, D_i]) B1 A B1^-1 B2 A^-1 B2^-1 = I,    A = exp(-2 pi i diag(alpha)).

A disconnected point (``split = h``) stores ``g`` handles and two relations

    (prod_{i <= h} [C_i, D_i]) B1 A B1^-1 = I,    (prod_{i > h} [C_i, D_i]) B2 A^-1 B2^-1 = I.

Symmetries: SU(n) conjugation (one copy per component) together with right
multiplication of ``B1, B2`` by ``mu = nu in Stab(A)`` when ``t != 0``, or by
``tau mu', tau nu'`` with ``tau`` in the maximal torus and ``mu', nu'`` in the
commutator subgroup of ``Stab(A)`` when ``t = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from nodal_moduli.alcove import AlcovePoint, MultiplicityPattern, reversal, stabilizer_pattern
from nodal_moduli.errors import IllegalSymmetry, InvariantViolation, NoConvergence, RankAmbiguous
from nodal_moduli.lie_core import (
    EQUALITY_TOL,
    RANK_RTOL,
    TorusElement,
    algebra_coordinates,
    cartan_basis,
    exp_skew,
    haar_su,
    in_derived_stabilizer,
    in_stabilizer,
    polar_project,
    stabilizer_algebra_basis,
    stabilizer_dim,
    commutator_subgroup_dim,
    su_basis,
)
from nodal_moduli.manifold_lsq import Problem, Term, levenberg_marquardt
from nodal_moduli.serialize import complex_from_json, complex_to_json, matrix_from_json, matrix_to_json

SOLVE_TOL = 1e-10
MAX_STARTS = 50
IMPLODE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class RepPoint:
    alpha: AlcovePoint
    B1: np.ndarray
    B2: np.ndarray
    handles: tuple[tuple[np.ndarray, np.ndarray], ...]
    t: complex = 0.5
    split: int | None = None

    def __post_init__(self):
        alpha = self.alpha if isinstance(self.alpha, AlcovePoint) else AlcovePoint(self.alpha)
        n = alpha.n
        b1 = _su(self.B1, n)
        b2 = _su(self.B2, n)
        handles = tuple((_su(c, n), _su(d, n)) for c, d in self.handles)
        if self.split is not None and not 1 <= self.split <= len(handles) - 1:
            raise InvariantViolation(f"split must lie in [1, g-1], got {self.split} with g = {len(handles)}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "B1", b1)
        object.__setattr__(self, "B2", b2)
        object.__setattr__(self, "handles", handles)
        object.__setattr__(self, "t", complex(self.t))

    @property
    def n(self) -> int:
        return self.alpha.n

    @property
    def connected(self) -> bool:
        return self.split is None

    @property
    def g(self) -> int:
        return len(self.handles) + (1 if self.connected else 0)

    @property
    def A(self) -> np.ndarray:
        return self.alpha.holonomy()

    def values(self) -> dict[str, np.ndarray]:
        out = {"B1": self.B1, "B2": self.B2}
        for i, (c, d) in enumerate(self.handles):
            out[f"C{i}"] = c
            out[f"D{i}"] = d
        return out

    def with_values(self, values: dict[str, np.ndarray]) -> RepPoint:
        handles = tuple((values[f"C{i}"], values[f"D{i}"]) for i in range(len(self.handles)))
        return replace(self, B1=values["B1"], B2=values["B2"], handles=handles)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "B1": matrix_to_json(self.B1),
            "B2": matrix_to_json(self.B2),
            "handles": [[matrix_to_json(c), matrix_to_json(d)] for c, d in self.handles],
            "t": complex_to_json(self.t),
            "split": self.split,
        }

    @classmethod
    def from_json(cls, data: dict) -> RepPoint:
        return cls(
            AlcovePoint(data["alpha"], tol=1e-10),
            matrix_from_json(data["B1"]),
            matrix_from_json(data["B2"]),
            tuple((matrix_from_json(c), matrix_from_json(d)) for c, d in data["handles"]),
            complex_from_json(data.get("t", 0.5)),
            data.get("split"),
        )


def _su(m, n) -> np.ndarray:
    m = np.array(m, dtype=complex)
    if m.shape != (n, n):
        raise InvariantViolation(f"expected {n}x{n} matrix, got {m.shape}")
    if np.linalg.norm(m.conj().T @ m - np.eye(n)) > 1e-9 or abs(np.linalg.det(m) - 1) > 1e-9:
        raise InvariantViolation("matrix is not special unitary")
    m.setflags(write=False)
    return m


# -- relation words -----------------------------------------------------------


def _commutators(indices) -> list:
    word = []
    for i in indices:
        word += [(f"C{i}", 1), (f"D{i}", 1), (f"C{i}", -1), (f"D{i}", -1)]
    return word


def relation_words(n_handles: int, split: int | None) -> list[list]:
    if split is None:
        return [_commutators(range(n_handles)) + [("B1", 1), ("A", 1), ("B1", -1), ("B2", 1), ("A", -1), ("B2", -1)]]
    return [
        _commutators(range(split)) + [("B1", 1), ("A", 1), ("B1", -1)],
        _commutators(range(split, n_handles)) + [("B2", 1), ("A", -1), ("B2", -1)],
    ]


def relation_problem(n: int, n_handles: int, split: int | None, A: np.ndarray, *, vary_alpha: bool = False) -> Problem:
    eye = np.eye(n, dtype=complex)
    terms = [Term(w, eye) for w in relation_words(n_handles, split)]
    names = ["B1", "B2"] + [f"{x}{i}" for i in range(n_handles) for x in "CD"]
    bases = {name: su_basis(n) for name in names}
    constants = {}
    if vary_alpha:
        # d/d(alpha) of exp(-2 pi i diag(alpha)) is a right translate by -2 pi i diag
        bases["A"] = -2j * np.pi * cartan_basis(n)
    else:
        constants["A"] = A
    return Problem(terms, bases, constants)


def relation_matrices(p: RepPoint) -> list[np.ndarray]:
    prob = relation_problem(p.n, len(p.handles), p.split, p.A)
    return [m + np.eye(p.n) for m in prob.evaluate(p.values())]


def relation_residual(p: RepPoint) -> float:
    """Frobenius norm of (relation - I), summed in quadrature over components."""
    prob = relation_problem(p.n, len(p.handles), p.split, p.A)
    return float(np.linalg.norm(prob.residual(p.values())))


# -- solving ------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _alpha(alpha, n) -> AlcovePoint:
    a = alpha if isinstance(alpha, AlcovePoint) else AlcovePoint(np.asarray(alpha, dtype=float), tol=1e-10)
    if a.n != n:
        raise ValueError(f"alpha has length {a.n}, expected n = {n}")
    return a


def _solve(seed, n, n_handles, split, alpha, t, max_starts, tol) -> RepPoint:
    rng = _rng(seed)
    A = alpha.holonomy()
    prob = relation_problem(n, n_handles, split, A)
    best = np.inf
    for start in range(1, max_starts + 1):
        values = {name: haar_su(rng, n) for name in prob.names}
        res = levenberg_marquardt(prob, values, tol=tol * 1e-2)
        best = min(best, res.residual)
        if res.residual <= tol:
            vals = {k: polar_project(v) for k, v in res.values.items()}
            point = RepPoint(alpha, vals["B1"], vals["B2"], tuple((vals[f"C{i}"], vals[f"D{i}"]) for i in range(n_handles)), t, split)
            if relation_residual(point) <= tol:
                return point
    raise NoConvergence(f"no solution after {max_starts} starts (best residual {best:.3e})", starts=max_starts, best_residual=best)


def solve_relation(seed, g: int, n: int, alpha, t: complex = 0.5, *, max_starts: int = MAX_STARTS, tol: float = SOLVE_TOL) -> RepPoint:
    """Multi-start Levenberg-Marquardt solution of the connected relation with ``alpha`` fixed."""
    if g < 1:
        raise ValueError("g must be at least 1")
    a = _alpha(alpha, n)
    if not np.any(a.alpha):
        eye = np.eye(n)
        return RepPoint(a, eye, eye, tuple((eye, eye) for _ in range(g - 1)), t)
    return _solve(seed, n, g - 1, None, a, t, max_starts, tol)


def build_disconnected(seed, h: int, g: int, n: int, alpha, t: complex = 0.0, *, max_starts: int = MAX_STARTS, tol: float = SOLVE_TOL) -> RepPoint:
    """Solve the two one-puncture relations (genus ``h`` with ``A``, genus ``g - h`` with ``A^-1``)."""
    if not 1 <= h <= g - 1:
        raise ValueError(f"need 1 <= h <= g - 1, got h = {h}, g = {g}")
    a = _alpha(alpha, n)
    if not np.any(a.alpha):
        eye = np.eye(n)
        return RepPoint(a, eye, eye, tuple((eye, eye) for _ in range(g)), t, h)
    return _solve(seed, n, g, h, a, t, max_starts, tol)


def components(p: RepPoint) -> tuple[dict, dict]:
    """The two one-puncture pieces of a disconnected point."""
    if p.connected:
        raise ValueError("point is connected")
    h = p.split
    return (
        {"B": p.B1, "A": p.A, "handles": p.handles[:h]},
        {"B": p.B2, "A": p.A.conj().T, "handles": p.handles[h:]},
    )


def commutator_preimage(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Special unitary ``C, D`` with ``C D C^-1 D^-1 = w``.

    Diagonalize ``w = V diag(w_i) V^H``; with ``D`` a phase times the cyclic shift
    and ``C`` diagonal, the commutator is diagonal with entries ``c_i / c_{i-1}``.
    """
    n = w.shape[0]
    vals, vecs = np.linalg.eig(w)
    vecs = polar_project(vecs) if n > 1 else np.eye(1, dtype=complex)
    vals = np.diag(vecs.conj().T @ w @ vecs)
    vals = vals / np.abs(vals)
    c = np.ones(n, dtype=complex)
    for i in range(1, n):
        c[i] = c[i - 1] * vals[i]
    c *= np.prod(c) ** (-1.0 / n)
    shift = np.roll(np.eye(n, dtype=complex), 1, axis=0)
    shift *= np.linalg.det(shift) ** (-1.0 / n)
    C = vecs @ np.diag(c) @ vecs.conj().T
    D = vecs @ shift @ vecs.conj().T
    return polar_project(C), polar_project(D)


def construct_solution(seed, g: int, n: int, alpha, t: complex = 0.5, *, split: int | None = None) -> RepPoint:
    """Independent constructive solution: all factors random except the last handle of each relation."""
    rng = _rng(seed)
    a = _alpha(alpha, n)
    n_handles = g - 1 if split is None else g
    values = {"B1": haar_su(rng, n), "B2": haar_su(rng, n)}
    for i in range(n_handles):
        values[f"C{i}"] = haar_su(rng, n)
        values[f"D{i}"] = haar_su(rng, n)
    groups = [list(range(n_handles))] if split is None else [list(range(split)), list(range(split, n_handles))]
    prob = relation_problem(n, n_handles, split, a.holonomy())
    eye = np.eye(n, dtype=complex)
    for word, idx in zip(relation_words(n_handles, split), groups):
        last = idx[-1]
        prefix = _word_value(word[: 4 * (len(idx) - 1)], values, prob)
        suffix = _word_value(word[4 * len(idx) :], values, prob)
        w = np.linalg.solve(prefix, np.linalg.solve(suffix.T, eye).T)
        values[f"C{last}"], values[f"D{last}"] = commutator_preimage(polar_project(w))
    handles = tuple((values[f"C{i}"], values[f"D{i}"]) for i in range(n_handles))
    return RepPoint(a, values["B1"], values["B2"], handles, t, split)


def _word_value(word, values, prob) -> np.ndarray:
    acc = np.eye(next(iter(values.values())).shape[0], dtype=complex)
    for name, power in word:
        acc = acc @ prob._mat(values, name, power)
    return acc


# -- symmetry -----------------------------------------------------------------


@dataclass
class SymmetryDescriptor:
    """Acting group as a list of factors ``(label, algebra basis, targets, mode)``.

    ``mode`` is ``"conj"`` (left on B's, conjugation on handles) or ``"right"``
    (right multiplication of the listed B's).
    """

    t_is_zero: bool
    pattern: MultiplicityPattern
    factors: list[tuple[str, np.ndarray, tuple[str, ...], str]] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return sum(b.shape[0] for _, b, _, _ in self.factors)


def symmetry_descriptor(p: RepPoint) -> SymmetryDescriptor:
    n = p.n
    pattern = stabilizer_pattern(p.alpha)
    t_is_zero = p.t == 0
    nh = len(p.handles)
    hnames = [f"{x}{i}" for i in range(nh) for x in "CD"]
    desc = SymmetryDescriptor(t_is_zero, pattern)
    if p.connected:
        desc.factors.append(("g", su_basis(n), ("B1", "B2", *hnames), "conj"))
    else:
        h = p.split
        desc.factors.append(("g1", su_basis(n), ("B1", *hnames[: 2 * h]), "conj"))
        desc.factors.append(("g2", su_basis(n), ("B2", *hnames[2 * h :]), "conj"))
    if t_is_zero:
        desc.factors.append(("tau", 1j * cartan_basis(n), ("B1", "B2"), "right"))
        derived = stabilizer_algebra_basis(pattern, derived=True)
        desc.factors.append(("mu'", derived, ("B1",), "right"))
        desc.factors.append(("nu'", derived, ("B2",), "right"))
    else:
        desc.factors.append(("mu=nu", stabilizer_algebra_basis(pattern), ("B1", "B2"), "right"))
    return desc


def expected_group_dim(n: int, pattern: MultiplicityPattern, t_is_zero: bool, connected: bool = True) -> int:
    conj = (n * n - 1) * (1 if connected else 2)
    if t_is_zero:
        return conj + (n - 1) + 2 * commutator_subgroup_dim(pattern)
    return conj + stabilizer_dim(pattern)


def orbit_matrix(p: RepPoint, desc: SymmetryDescriptor | None = None, *, include_alpha: bool = True) -> np.ndarray:
    """Infinitesimal action in the right-trivialized coordinates of the relation Jacobian."""
    desc = desc or symmetry_descriptor(p)
    prob = relation_problem(p.n, len(p.handles), p.split, p.A, vary_alpha=include_alpha)
    offsets = prob.offsets()
    values = p.values()
    cols = []
    for _, basis, targets, mode in desc.factors:
        for y in basis:
            v = np.zeros(prob.dim)
            for name in targets:
                u = values[name]
                if mode == "right":
                    x = y
                elif name.startswith("B"):
                    x = u.conj().T @ y @ u
                else:
                    x = u.conj().T @ y @ u - y
                k = offsets[name]
                v[k : k + su_basis(p.n).shape[0]] = algebra_coordinates(x, su_basis(p.n))
            cols.append(v)
    if not cols:
        return np.zeros((prob.dim, 0))
    return np.array(cols).T


@dataclass
class TangentReport:
    kernel_dim: int
    orbit_dim: int
    quotient_dim: int
    singular_values: np.ndarray
    orbit_singular_values: np.ndarray


def _numerical_rank(s: np.ndarray, rtol: float, what: str) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    thr = rtol * s[0]
    near = (s > thr / 10) & (s < thr * 10)
    if np.any(near):
        raise RankAmbiguous(f"{what}: singular value within a factor 10 of the threshold {thr:.3e}", singular_values=s)
    return int(np.sum(s > thr))


def tangent_analysis(p: RepPoint, *, rtol: float = RANK_RTOL, require_generic: bool = True) -> TangentReport:
    if require_generic:
        pat = stabilizer_pattern(p.alpha)
        if pat.k != 0 or max(pat.blocks) > 1:
            raise RankAmbiguous(f"alpha lies on the face {pat}; the count is only made at generic alpha")
    if relation_residual(p) > 1e-8:
        raise ValueError("point does not satisfy the relation")
    prob = relation_problem(p.n, len(p.handles), p.split, p.A, vary_alpha=True)
    values = dict(p.values(), A=p.A)
    jac = prob.jacobian(values)
    s = np.linalg.svd(jac, compute_uv=False)
    rank = _numerical_rank(s, rtol, "relation Jacobian")
    kernel = jac.shape[1] - rank
    orb = orbit_matrix(p)
    so = np.linalg.svd(orb, compute_uv=False)
    orank = _numerical_rank(so, rtol, "orbit map")
    return TangentReport(kernel, orank, kernel - orank, s, so)


def tangent_dimension(p: RepPoint, *, rtol: float = RANK_RTOL) -> int:
    """Dimension of the quotient at ``p``: ``dim ker(d relation) - dim(orbit)``, with ``alpha`` varying."""
    return tangent_analysis(p, rtol=rtol).quotient_dim


def expected_dimension(g: int, n: int) -> int:
    return (2 * g - 2) * (n * n - 1)


# -- actions ------------------------------------------------------------------


def _mat(x, n) -> np.ndarray:
    if x is None:
        return np.eye(n, dtype=complex)
    if isinstance(x, TorusElement):
        return x.matrix()
    return np.asarray(x, dtype=complex)


def gauge_act(p: RepPoint, g=None, mu=None, nu=None, tau=None) -> RepPoint:
    """``(B1, B2, C, D) -> (g B1 tau mu, g B2 tau nu, g C g^-1, g D g^-1)``.

    For a disconnected point ``g`` may be a pair ``(g1, g2)`` acting on the two components.
    """
    n = p.n
    if isinstance(g, tuple):
        if p.connected:
            raise IllegalSymmetry("a pair of conjugators needs a disconnected point")
        g1, g2 = _mat(g[0], n), _mat(g[1], n)
    else:
        g1 = g2 = _mat(g, n)
    mu_m, nu_m, tau_m = _mat(mu, n), _mat(nu, n), _mat(tau, n)
    for m in (g1, g2, mu_m, nu_m, tau_m):
        if np.linalg.norm(m.conj().T @ m - np.eye(n)) > EQUALITY_TOL or abs(np.linalg.det(m) - 1) > EQUALITY_TOL:
            raise IllegalSymmetry("group elements must be special unitary")
    if np.linalg.norm(tau_m - np.diag(np.diag(tau_m))) > EQUALITY_TOL:
        raise IllegalSymmetry("tau must be diagonal")
    if p.t == 0:
        if not (in_derived_stabilizer(mu_m, p.alpha) and in_derived_stabilizer(nu_m, p.alpha)):
            raise IllegalSymmetry("at t = 0, mu' and nu' must lie in [Stab(A), Stab(A)]")
    else:
        if np.linalg.norm(mu_m - nu_m) > EQUALITY_TOL or not in_stabilizer(mu_m, p.alpha):
            raise IllegalSymmetry("for t != 0 the right factors must satisfy mu = nu in Stab(A)")
    r1 = tau_m @ mu_m
    r2 = tau_m @ nu_m
    nh = len(p.handles)
    conj = [g1 if (p.connected or i < p.split) else g2 for i in range(nh)]
    handles = tuple((c_ @ c @ c_.conj().T, c_ @ d @ c_.conj().T) for c_, (c, d) in zip(conj, p.handles))
    return replace(p, B1=polar_project(g1 @ p.B1 @ r1), B2=polar_project(g2 @ p.B2 @ r2), handles=tuple((polar_project(c), polar_project(d)) for c, d in handles))


def torus_act(p: RepPoint, t1: TorusElement, t2: TorusElement) -> RepPoint:
    """Right multiplication of ``B1`` by ``t1`` and of ``B2`` by ``t2`` (column scaling)."""
    return replace(p, B1=p.B1 * t1.phases[None, :], B2=p.B2 * t2.phases[None, :])


def moment_map(p: RepPoint) -> tuple[AlcovePoint, AlcovePoint]:
    return p.alpha, reversal(p.alpha)


def antidiagonal_reduce(p: RepPoint, tol: float = 1e-9) -> RepPoint:
    """Canonical representative under ``(B1, B2) -> (B1 tau, B2 tau)``.

    Column ``j < n`` is rotated so that its first entry of modulus above ``tol``
    (reading ``B1`` top to bottom, then ``B2``) is real positive; the last phase
    is fixed by the determinant.
    """
    n = p.n
    stacked = np.vstack([p.B1, p.B2])
    angles = np.zeros(n - 1)
    for j in range(n - 1):
        col = stacked[:, j]
        rows = np.flatnonzero(np.abs(col) > tol)
        if rows.size:
            angles[j] = -np.angle(col[rows[0]])
    tau = TorusElement.from_angles(angles)
    return torus_act(p, tau, tau)


# -- implosion ----------------------------------------------------------------


@dataclass
class ImplosionResult:
    equivalent: bool
    distance: float
    starts: int
    confidence: str
    witness: dict | None = None

    def __bool__(self):
        return self.equivalent


def _intertwiner(ps, qs, n) -> np.ndarray:
    """Unitary closest to the common null space of ``X P - Q X`` over the pairs."""
    eye = np.eye(n)
    rows = [np.kron(pm.T, eye) - np.kron(eye, qm) for pm, qm in zip(ps, qs)]
    _, _, vh = np.linalg.svd(np.vstack(rows))
    x = vh[-1].conj().reshape(n, n, order="F")
    return polar_project(x)


def implode_equivalent(p: RepPoint, q: RepPoint, budget: int = MAX_STARTS, *, seed=0, tol: float = IMPLODE_TOL) -> ImplosionResult:
    """Search for ``(g, tau, mu', nu')`` carrying ``p`` to ``q`` in the imploded (t = 0) quotient.

    Multi-start Levenberg-Marquardt; a positive answer comes with a witness, a
    negative one only means the budget was exhausted.
    """
    if p.n != q.n or not np.allclose(p.alpha.alpha, q.alpha.alpha, atol=1e-12, rtol=0):
        return ImplosionResult(False, np.inf, 0, "certain: different alcove data")
    if p.split != q.split or len(p.handles) != len(q.handles):
        return ImplosionResult(False, np.inf, 0, "certain: different presentations")
    n = p.n
    rng = _rng(seed)
    pattern = stabilizer_pattern(p.alpha)
    derived = stabilizer_algebra_basis(pattern, derived=True)
    gnames = ["g"] if p.connected else ["g1", "g2"]
    bases = {name: su_basis(n) for name in gnames}
    bases["tau"] = 1j * cartan_basis(n)
    if derived.shape[0]:
        bases["mu"] = derived
        bases["nu"] = derived
    pv, qv = p.values(), q.values()
    consts = {f"p{k}": v for k, v in pv.items()}
    g_of = {}
    for i in range(len(p.handles)):
        g_of[i] = "g" if p.connected else ("g1" if i < p.split else "g2")
    terms = [
        Term([(gnames[0], 1), ("pB1", 1), ("tau", 1)] + ([("mu", 1)] if "mu" in bases else []), qv["B1"]),
        Term([(gnames[-1], 1), ("pB2", 1), ("tau", 1)] + ([("nu", 1)] if "nu" in bases else []), qv["B2"]),
    ]
    for i in range(len(p.handles)):
        for x in "CD":
            terms.append(Term([(g_of[i], 1), (f"p{x}{i}", 1), (g_of[i], -1)], qv[f"{x}{i}"]))
    prob = Problem(terms, bases, consts)

    def seed_g(name, idx):
        ps = [pv[f"{x}{i}"] for i in idx for x in "CD"]
        qs = [qv[f"{x}{i}"] for i in idx for x in "CD"]
        return _intertwiner(ps, qs, n) if ps else np.eye(n, dtype=complex)

    best = np.inf
    best_vals = None
    for start in range(1, budget + 1):
        values = {}
        if start == 1:
            if p.connected:
                values["g"] = seed_g("g", range(len(p.handles)))
            else:
                values["g1"] = seed_g("g1", range(p.split))
                values["g2"] = seed_g("g2", range(p.split, len(p.handles)))
        else:
            for name in gnames:
                values[name] = haar_su(rng, n)
        values["tau"] = TorusElement.random(rng, n).matrix() if start > 1 else np.eye(n, dtype=complex)
        for name in ("mu", "nu"):
            if name in bases:
                coeffs = rng.standard_normal(bases[name].shape[0]) if start > 1 else np.zeros(bases[name].shape[0])
                values[name] = exp_skew(np.einsum("a,aij->ij", coeffs, bases[name]))
        res = levenberg_marquardt(prob, values, tol=1e-13, max_iter=200)
        if res.residual < best:
            best, best_vals = res.residual, res.values
        if best < tol:
            return ImplosionResult(True, best, start, "certified by witness", best_vals)
    return ImplosionResult(False, best, budget, f"advisory: no witness within {budget} starts")
