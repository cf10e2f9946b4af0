import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_moduli.alcove import AlcovePoint, MultiplicityPattern, enumerate_faces, face_point, random_alcove_point
from nodal_moduli.errors import IllegalSymmetry, InvariantViolation, NoConvergence, RankAmbiguous
from nodal_moduli.lie_core import (
    TorusElement,
    commutator_subgroup_dim,
    exp_skew,
    haar_su,
    stabilizer_algebra_basis,
    stabilizer_dim,
)
from nodal_moduli.rep_variety import (
    RepPoint,
    antidiagonal_reduce,
    build_disconnected,
    commutator_preimage,
    components,
    construct_solution,
    expected_dimension,
    expected_group_dim,
    gauge_act,
    implode_equivalent,
    moment_map,
    orbit_matrix,
    relation_matrices,
    relation_residual,
    solve_relation,
    tangent_analysis,
    tangent_dimension,
    torus_act,
)


def _stab_element(rng, alpha, derived=False):
    from nodal_moduli.alcove import stabilizer_pattern

    basis = stabilizer_algebra_basis(stabilizer_pattern(alpha), derived=derived)
    if basis.shape[0] == 0:
        return np.eye(alpha.n, dtype=complex)
    return exp_skew(np.einsum("a,aij->ij", rng.standard_normal(basis.shape[0]), basis))


def test_trivial_point_residual_is_zero():
    eye = np.eye(2)
    p = RepPoint(AlcovePoint([0, 0]), eye, eye, ((eye, eye),))
    assert relation_residual(p) == 0.0


def test_residual_example_su2():
    # A = diag(-i, i), B1 = B2 = I, C = D = I: the relation reads A A^-1 = I
    eye = np.eye(2)
    p = RepPoint(AlcovePoint([0.25, -0.25]), eye, eye, ((eye, eye),))
    assert relation_residual(p) < 1e-15
    # B2 swapping the eigenlines makes the relation A B2 A^-1 B2^-1 = A^2 = -I
    w = np.array([[0, 1], [-1, 0]], dtype=complex)
    q = RepPoint(AlcovePoint([0.25, -0.25]), eye, w, ((eye, eye),))
    assert relation_residual(q) == pytest.approx(np.sqrt(8), abs=1e-12)


def test_reppoint_validation():
    eye = np.eye(2)
    with pytest.raises(InvariantViolation):
        RepPoint(AlcovePoint([0, 0]), 2 * eye, eye, ())
    with pytest.raises(InvariantViolation):
        RepPoint(AlcovePoint([0, 0]), eye, eye, ((eye, eye),), split=1)
    p = RepPoint(AlcovePoint([0, 0]), eye, eye, ((eye, eye),))
    with pytest.raises(ValueError):
        p.B1[0, 0] = 2


@pytest.mark.parametrize("g,n", [(2, 2), (2, 3), (3, 2)])
def test_solve_relation_converges(g, n):
    rng = np.random.default_rng(g * 10 + n)
    alpha = random_alcove_point(rng, n)
    p = solve_relation(rng, g, n, alpha)
    assert relation_residual(p) < 1e-10
    assert p.g == g and p.connected


def test_solve_relation_zero_alpha_returns_identity():
    p = solve_relation(0, 2, 3, AlcovePoint([0, 0, 0]))
    assert np.array_equal(p.B1, np.eye(3))


def test_solve_relation_reports_failure():
    with pytest.raises(NoConvergence) as info:
        solve_relation(0, 2, 3, random_alcove_point(np.random.default_rng(0), 3), max_starts=1, tol=1e-300)
    assert info.value.starts == 1


def test_commutator_preimage():
    rng = np.random.default_rng(1)
    for n in (2, 3, 5):
        w = haar_su(rng, n)
        c, d = commutator_preimage(w)
        assert np.linalg.norm(c @ d @ c.conj().T @ d.conj().T - w) < 1e-12
        assert abs(np.linalg.det(c) - 1) < 1e-12 and abs(np.linalg.det(d) - 1) < 1e-12


@pytest.mark.parametrize("split", [None, 1])
def test_constructive_oracle_satisfies_relation(split):
    rng = np.random.default_rng(5)
    alpha = random_alcove_point(rng, 3)
    p = construct_solution(rng, 2, 3, alpha, split=split)
    assert relation_residual(p) < 1e-12


def test_build_disconnected():
    alpha = random_alcove_point(np.random.default_rng(2), 2)
    p = build_disconnected(3, 1, 2, 2, alpha)
    assert not p.connected and p.g == 2 and p.t == 0
    assert all(np.linalg.norm(m - np.eye(2)) < 1e-10 for m in relation_matrices(p))
    left, right = components(p)
    assert len(left["handles"]) == 1 and len(right["handles"]) == 1
    assert np.allclose(right["A"], np.linalg.inv(left["A"]))
    with pytest.raises(ValueError):
        build_disconnected(3, 0, 2, 2, alpha)


def test_expected_dimension_values():
    assert expected_dimension(2, 2) == 6
    assert expected_dimension(2, 3) == 16
    assert expected_dimension(3, 2) == 12


@pytest.mark.parametrize("g,n,t,split", [(2, 2, 0.5, None), (2, 2, 0, None), (2, 3, 0.5, None), (3, 2, 0, 1), (2, 3, 0, 1)])
def test_tangent_dimension_at_generic_points(g, n, t, split):
    rng = np.random.default_rng(100 + g + n)
    alpha = random_alcove_point(rng, n)
    p = construct_solution(rng, g, n, alpha, t, split=split)
    assert tangent_dimension(p) == expected_dimension(g, n)


def test_tangent_report_sizes_frozen():
    # kernel / orbit sizes at generic points, frozen from independent runs
    rng = np.random.default_rng(0)
    for (g, n), (ker, orb) in {(2, 2): (10, 4), (2, 3): (26, 10), (3, 2): (16, 4)}.items():
        p = construct_solution(rng, g, n, random_alcove_point(rng, n))
        rep = tangent_analysis(p)
        assert (rep.kernel_dim, rep.orbit_dim) == (ker, orb)


def test_tangent_dimension_refuses_faces():
    rng = np.random.default_rng(3)
    alpha = face_point(MultiplicityPattern((2, 1)))
    p = construct_solution(rng, 2, 3, alpha)
    with pytest.raises(RankAmbiguous):
        tangent_dimension(p)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_group_dimension_identity(n):
    for pat in enumerate_faces(n):
        diff = expected_group_dim(n, pat, True) - expected_group_dim(n, pat, False)
        assert diff == 2 * commutator_subgroup_dim(pat) + (n - 1) - stabilizer_dim(pat)


@pytest.mark.parametrize("t", [0.5, 0])
def test_orbit_rank_matches_group_dim_generic(t):
    rng = np.random.default_rng(9)
    alpha = random_alcove_point(rng, 3)
    p = construct_solution(rng, 2, 3, alpha, t)
    from nodal_moduli.alcove import stabilizer_pattern

    rank = np.linalg.matrix_rank(orbit_matrix(p), tol=1e-8)
    assert rank == expected_group_dim(3, stabilizer_pattern(alpha), t == 0)


@given(st.integers(0, 10_000), st.sampled_from([0.5, 0]), st.sampled_from([None, 1]))
@settings(max_examples=25, deadline=None)
def test_legal_actions_preserve_relation(seed, t, split):
    rng = np.random.default_rng(seed)
    alpha = random_alcove_point(rng, 3, face_prob=0.3)
    p = construct_solution(rng, 2, 3, alpha, t, split=split)
    g = haar_su(rng, 3) if split is None else (haar_su(rng, 3), haar_su(rng, 3))
    if t == 0:
        q = gauge_act(p, g, _stab_element(rng, alpha, True), _stab_element(rng, alpha, True), TorusElement.random(rng, 3))
    else:
        mu = _stab_element(rng, alpha)
        q = gauge_act(p, g, mu, mu)
    assert relation_residual(q) < 1e-12


def test_illegal_actions_raise():
    rng = np.random.default_rng(4)
    alpha = random_alcove_point(rng, 3)
    p = construct_solution(rng, 2, 3, alpha, 0.5)
    with pytest.raises(IllegalSymmetry):
        gauge_act(p, mu=haar_su(rng, 3), nu=haar_su(rng, 3))
    mu = TorusElement.random(rng, 3)
    with pytest.raises(IllegalSymmetry):
        gauge_act(p, mu=mu, nu=TorusElement.random(rng, 3))
    with pytest.raises(IllegalSymmetry):
        gauge_act(p, tau=haar_su(rng, 3))
    with pytest.raises(IllegalSymmetry):
        gauge_act(p, g=(np.eye(3), np.eye(3)))
    p0 = construct_solution(rng, 2, 3, alpha, 0)
    with pytest.raises(IllegalSymmetry):
        gauge_act(p0, mu=mu.matrix())  # torus is not in the derived stabilizer


def test_torus_action_fixes_moment_map_and_relation():
    rng = np.random.default_rng(6)
    p = construct_solution(rng, 2, 3, random_alcove_point(rng, 3), 0)
    q = torus_act(p, TorusElement.random(rng, 3), TorusElement.random(rng, 3))
    assert moment_map(q)[0] == moment_map(p)[0] and moment_map(q)[1] == moment_map(p)[1]
    # torus elements commute with A, so independent factors on B1 and B2 keep the relation
    assert relation_residual(q) < 1e-12


def test_moment_map_example():
    eye = np.eye(3)
    p = RepPoint(AlcovePoint([0.4, 0.1, -0.5]), eye, eye, ((eye, eye),))
    m1, m2 = moment_map(p)
    assert np.allclose(m1.alpha, [0.4, 0.1, -0.5]) and np.allclose(m2.alpha, [0.5, -0.1, -0.4])


def test_antidiagonal_reduce_canonical():
    rng = np.random.default_rng(8)
    p = construct_solution(rng, 2, 3, random_alcove_point(rng, 3), 0)
    r = antidiagonal_reduce(p)
    assert relation_residual(r) < 1e-12
    assert np.allclose(np.angle(r.B1[0, :2]), 0, atol=1e-12)
    tau = TorusElement.random(rng, 3)
    r2 = antidiagonal_reduce(torus_act(p, tau, tau))
    assert np.max(np.abs(r2.B1 - r.B1)) < 1e-12 and np.max(np.abs(r2.B2 - r.B2)) < 1e-12
    rr = antidiagonal_reduce(r)
    assert np.max(np.abs(rr.B1 - r.B1)) < 1e-14


def test_implosion_detects_gauge_equivalence():
    rng = np.random.default_rng(10)
    alpha = random_alcove_point(rng, 3)
    p = construct_solution(rng, 2, 3, alpha, 0)
    q = gauge_act(p, haar_su(rng, 3), tau=TorusElement.random(rng, 3))
    res = implode_equivalent(p, q)
    assert res and res.distance < 1e-7 and res.witness is not None


def test_implosion_detects_derived_stabilizer_translate():
    rng = np.random.default_rng(11)
    alpha = face_point(MultiplicityPattern((2, 1)))
    p = construct_solution(rng, 2, 3, alpha, 0)
    q = gauge_act(p, haar_su(rng, 3), mu=_stab_element(rng, alpha, True), nu=_stab_element(rng, alpha, True))
    assert implode_equivalent(p, q)


def test_implosion_rejects_generic_translate():
    rng = np.random.default_rng(12)
    alpha = random_alcove_point(rng, 2)
    p = construct_solution(rng, 2, 2, alpha, 0)
    bad = p.with_values(dict(p.values(), B1=p.B1 @ haar_su(rng, 2)))
    res = implode_equivalent(p, bad, budget=10)
    assert not res and res.distance > 1e-3 and res.starts == 10
    assert res.confidence.startswith("advisory")


def test_implosion_different_alpha_is_certain():
    rng = np.random.default_rng(13)
    p = construct_solution(rng, 2, 2, AlcovePoint([0.3, -0.3]), 0)
    q = construct_solution(rng, 2, 2, AlcovePoint([0.2, -0.2]), 0)
    res = implode_equivalent(p, q)
    assert not res and res.confidence.startswith("certain")


def test_implosion_disconnected():
    rng = np.random.default_rng(14)
    alpha = random_alcove_point(rng, 2)
    p = construct_solution(rng, 2, 2, alpha, 0, split=1)
    q = gauge_act(p, (haar_su(rng, 2), haar_su(rng, 2)), tau=TorusElement.random(rng, 2))
    assert implode_equivalent(p, q)


def test_reppoint_json_roundtrip():
    rng = np.random.default_rng(15)
    p = construct_solution(rng, 3, 2, random_alcove_point(rng, 2), 0.25 - 0.5j, split=2)
    from nodal_moduli.serialize import dumps
    import json

    q = RepPoint.from_json(json.loads(dumps(p.to_json())))
    assert q.split == 2 and q.t == p.t
    assert all(np.array_equal(a, b) for a, b in zip(p.values().values(), q.values().values()))
