import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_moduli.alcove import AlcovePoint, random_alcove_point
from nodal_moduli.errors import InvariantViolation, LoopEnclosesBothDivisors, PathTooCloseToSingularity
from nodal_moduli.lie_core import haar_su
from nodal_moduli.local_model import (
    ModelConnection,
    QuadricPoint,
    gauge_transform_check,
    partial_connection_limit,
    partial_holonomy,
    polar_grid,
    residue,
    segment,
    standard_path,
    transport,
    vanishing_cycle,
)


def _conn(seed, n, gauge="unitary", conj=True):
    rng = np.random.default_rng(seed)
    alpha = random_alcove_point(rng, n)
    v = haar_su(rng, n) if conj else None
    return ModelConnection(alpha, gauge, v)


def test_trivial_alpha_gives_identity():
    conn = ModelConnection(AlcovePoint([0, 0]))
    for kind in ("gamma", "x-loop", "y-loop"):
        assert np.allclose(transport(conn, standard_path(kind, 0.5)), np.eye(2), atol=1e-14)


def test_boundary_alpha_su2():
    conn = ModelConnection(AlcovePoint([0.5, -0.5]))
    h = transport(conn, standard_path("gamma", 0.5))
    assert np.max(np.abs(h + np.eye(2))) < 1e-8


def test_diagonal_su3_holonomy():
    a = [1 / 3, 0, -1 / 3]
    conn = ModelConnection(AlcovePoint(a))
    h = transport(conn, standard_path("gamma", 0.5))
    assert np.max(np.abs(h - np.diag(np.exp(-2j * np.pi * np.array(a))))) < 1e-8


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("t", [0.5, 0.1, 0.01, 0.3j - 0.1])
def test_vanishing_cycle_holonomy_matches_closed_form(n, t):
    conn = _conn(17 + n, n)
    h = transport(conn, standard_path("gamma", t))
    assert np.max(np.abs(h - conn.holonomy_closed_form())) < 1e-8
    assert abs(np.linalg.det(h) - 1) < 1e-12


@pytest.mark.parametrize("gauge", ["unitary", "holomorphic"])
def test_isomonodromy_in_t(gauge):
    conn = _conn(4, 3, gauge)
    ref = conn.holonomy_closed_form()
    for t in (0.9, 0.2, 0.05, 0.001, -0.3 + 0.2j):
        assert np.max(np.abs(transport(conn, vanishing_cycle(t)) - ref)) < 1e-8


def test_holomorphic_gauge_matches_on_symmetric_cycle():
    # on |x| = |y| the gauge matrix is the identity, so the two gauges agree
    for seed in range(3):
        unit = _conn(seed, 3)
        holo = ModelConnection(unit.alpha, "holomorphic", unit.conjugator)
        path = vanishing_cycle(0.25)
        assert np.max(np.abs(transport(unit, path) - transport(holo, path))) < 1e-8


def test_half_loops():
    conn = _conn(2, 3)
    hx = transport(conn, standard_path("x-loop", 0.5))
    hy = transport(conn, standard_path("y-loop", 0.5))
    assert np.max(np.abs(hx - conn.holonomy_closed_form(0.5))) < 1e-8
    assert np.max(np.abs(hy - conn.holonomy_closed_form(-0.5))) < 1e-8


def test_x_loop_times_reversed_y_loop_is_gamma():
    conn = _conn(6, 3)
    t = 0.25
    x = standard_path("x-loop", t)
    y = standard_path("y-loop", t)
    composite = transport(conn, x.then(y.reversed()))
    assert np.max(np.abs(composite - transport(conn, standard_path("gamma", t)))) < 1e-8


def test_path_multiplicativity_and_reversal():
    conn = _conn(8, 3)
    p = segment((1.0, 0.5), (0.5 + 0.5j, 1.0))
    q = segment((0.5 + 0.5j, 1.0), (-0.7, 0.3 - 0.2j))
    hp, hq = transport(conn, p), transport(conn, q)
    assert np.max(np.abs(transport(conn, p.then(q)) - hq @ hp)) < 1e-10
    assert np.max(np.abs(transport(conn, p.reversed()) @ hp - np.eye(3))) < 1e-10
    pq = p.then(q)
    assert np.max(np.abs(transport(conn, pq.reversed()) @ transport(conn, pq) - np.eye(3))) < 1e-10


def test_gauge_covariance_of_transport():
    unit = _conn(10, 3)
    holo = ModelConnection(unit.alpha, "holomorphic", unit.conjugator)
    p0, p1 = (1.2, 0.1), (0.3 + 0.4j, 1.1j)
    path = segment(p0, p1)
    lhs = transport(holo, path)
    rhs = unit.gauge_matrix(*p1) @ transport(unit, path) @ np.linalg.inv(unit.gauge_matrix(*p0))
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_gauge_transform_on_grid():
    rng = np.random.default_rng(0)
    alpha = random_alcove_point(rng, 3)
    assert gauge_transform_check(alpha, polar_grid(20), conjugator=haar_su(rng, 3)) < 1e-6


def test_transport_rejects_path_through_axis():
    conn = _conn(1, 2)
    bad = segment((1.0, 0.5), (-1.0, 0.5))  # crosses x = 0
    with pytest.raises(PathTooCloseToSingularity):
        transport(conn, bad)
    for gauge in ("holomorphic", "blowup1", "blowup2"):
        with pytest.raises(PathTooCloseToSingularity):
            transport(ModelConnection(conn.alpha, gauge, conn.conjugator), bad)


def test_unitary_transport_lies_on_group():
    conn = _conn(11, 4)
    h = transport(conn, segment((1.0, 1.0), (0.2j, -1.3)))
    assert np.linalg.norm(h.conj().T @ h - np.eye(4)) < 1e-13


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_residues_are_plus_minus_half_alpha(seed):
    conn = _conn(seed, 3)
    m = conn.coefficient()
    assert np.max(np.abs(residue(conn, center="x") - m / 2)) < 1e-8
    assert np.max(np.abs(residue(conn, center="y") + m / 2)) < 1e-8
    b1 = ModelConnection(conn.alpha, "blowup1", conn.conjugator)
    b2 = ModelConnection(conn.alpha, "blowup2", conn.conjugator)
    assert np.max(np.abs(residue(b1) + m / 2)) < 1e-8
    assert np.max(np.abs(residue(b2) - m / 2)) < 1e-8


def test_residue_diagonal_example():
    conn = ModelConnection(AlcovePoint([0.25, -0.25]), "blowup1")
    assert np.allclose(residue(conn), np.diag([-0.125, 0.125]), atol=1e-12)


def test_branch_residue_refuses_smooth_fiber():
    with pytest.raises(LoopEnclosesBothDivisors):
        residue(_conn(0, 2), center="x", t=0.1)


def test_partial_connection_limit():
    alpha = AlcovePoint([0.3, 0.1, -0.4])
    px = partial_connection_limit(alpha, "x")
    py = partial_connection_limit(alpha, "y")
    m = np.diag(alpha.alpha)
    assert np.allclose(px.coefficient, 1j * m) and np.allclose(py.coefficient, -1j * m)
    assert px.t_independent and px.finite and py.t_independent
    h = partial_holonomy(px)
    assert np.max(np.abs(h - np.diag(np.exp(-2j * np.pi * alpha.alpha)))) < 1e-8


def test_quadric_point_validation():
    QuadricPoint(0.5, 0.2, 0.1)
    with pytest.raises(InvariantViolation):
        QuadricPoint(0.5, 0.5, 0.1)
    with pytest.raises(InvariantViolation):
        QuadricPoint(2.5, 0.04, 0.1)
    assert len(vanishing_cycle(0.25).samples(33)) == 33
