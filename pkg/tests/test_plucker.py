import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_moduli.alcove import MultiplicityPattern, enumerate_faces, merge_adjacent_blocks, torsion_shift
from nodal_moduli.errors import (
    AsymmetricStrata,
    DegenerateTorsion,
    IllegalPattern,
    Incompatible,
    InvariantViolation,
    NotNested,
)
from nodal_moduli.lie_core import TorusElement
from nodal_moduli.plucker import (
    BetaData,
    BetaEntry,
    antidiagonal_element,
    antidiagonal_identify,
    change_fiber_basis,
    character,
    character_ratio,
    compatibility_quotients,
    entries_from_flag,
    flag_from_betas,
    flag_from_entries,
    quotient_between,
    random_betas,
    standard_betas,
    stratum_of_betas,
    stratum_of_entries,
    torsion_betas,
    torus_act_betas,
    wedge_evaluate,
    wedge_plucker,
)
from nodal_moduli.serialize import dumps


def _same_span(a, b, tol=1e-10):
    if a.shape[1] != b.shape[1]:
        return False
    qa, _ = np.linalg.qr(a)
    return np.linalg.norm(b - qa @ (qa.conj().T @ b)) < tol * max(1.0, np.linalg.norm(b))


def _patterns(max_n=4):
    return [p for n in range(2, max_n + 1) for p in enumerate_faces(n) if not (p.k == 1 and p.length == 1)]


def test_coordinate_forms_have_unit_scale():
    e = BetaEntry.coordinate([0, 2], 4)
    assert e.scale == 1
    pl = e.plucker()
    idx = list(itertools.combinations(range(4), 2)).index((0, 2))
    assert pl[idx] == pytest.approx(1.0) and np.linalg.norm(pl) == pytest.approx(1.0)


def test_from_covectors_evaluates_determinant():
    rng = np.random.default_rng(0)
    phi = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    e = BetaEntry.from_covectors(phi, 2.5 - 1j)
    v = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    assert e(v) == pytest.approx((2.5 - 1j) * np.linalg.det(phi @ v), rel=1e-12)


def test_entry_validation():
    with pytest.raises(InvariantViolation):
        BetaEntry(np.eye(3)[:, :1], 0.0)
    with pytest.raises(InvariantViolation):
        BetaEntry(np.ones((3, 2)))


def test_full_flag_dims():
    b = standard_betas(MultiplicityPattern((1, 1, 1)))
    f1, f2 = flag_from_betas(b)
    assert [s.shape[1] for s in f1] == [1, 2, 3]
    assert [s.shape[1] for s in f2] == [1, 2, 3]


def test_zero_entry_removes_step():
    b = standard_betas(MultiplicityPattern((1, 1, 1)))
    x1 = list(b.x1)
    x1[1] = None  # beta_{n-1} = 0: no one-dimensional step
    dims = [s.shape[1] for s in flag_from_entries(tuple(x1))]
    assert dims == [2, 3]


def test_standard_forms_give_standard_flag():
    forms = [BetaEntry.coordinate(range(j), 4) for j in range(1, 5)]
    steps = flag_from_entries(tuple(forms))
    eye = np.eye(4)
    # Ann(e_1^* ^ ... ^ e_j^*) = span(e_{j+1}, ..., e_4)
    for step in steps:
        d = step.shape[1]
        assert _same_span(eye[:, 4 - d :], step)


def test_not_nested_raises():
    eye = np.eye(3, dtype=complex)
    entries = (BetaEntry(eye[:, [1, 2]]), BetaEntry(eye[:, [0]]), None)
    with pytest.raises(NotNested):
        flag_from_entries(entries)


@pytest.mark.parametrize("pattern", _patterns(), ids=str)
def test_flag_roundtrip(pattern):
    rng = np.random.default_rng(hash((pattern.blocks, pattern.k)) % 2**32)
    b = random_betas(rng, pattern, unit=True)
    for entries in (b.x1, b.x2):
        flag = flag_from_entries(entries)
        rebuilt = entries_from_flag(flag[:-1], b.N, top=entries[-1] is not None)
        for s, t in zip(flag, flag_from_entries(rebuilt)):
            assert _same_span(s, t)


def test_standard_flag_gives_unit_gammas():
    b = standard_betas(MultiplicityPattern((1, 2, 1)))
    for point in (1, 2):
        for _, _, g in compatibility_quotients(b, point).steps:
            assert abs(g.scale - 1) < 1e-12


@given(st.integers(0, 10_000), st.sampled_from(_patterns()))
@settings(max_examples=60, deadline=None)
def test_gamma_reconstruction(seed, pattern):
    rng = np.random.default_rng(seed)
    b = random_betas(rng, pattern)
    for point in (1, 2):
        entries = b.point(point)
        for j, jp, g in compatibility_quotients(b, point).steps:
            v = rng.standard_normal((b.N, jp)) + 1j * rng.standard_normal((b.N, jp))
            lhs = entries[jp - 1](v)
            rhs = wedge_evaluate(g, None if j == 0 else entries[j - 1], v)
            assert abs(lhs - rhs) < 1e-10 * max(1, abs(lhs))
            if j:
                assert np.max(np.abs(wedge_plucker(g, entries[j - 1]) - entries[jp - 1].plucker())) < 1e-10


def test_gamma_rescaling_law():
    rng = np.random.default_rng(3)
    pattern = MultiplicityPattern((1, 1, 1, 1))
    b = random_betas(rng, pattern)
    c = 0.7 - 1.9j
    x1 = list(b.x1)
    x1[1] = x1[1].with_scale(x1[1].scale * c)
    scaled = BetaData(tuple(x1), b.x2)
    before = compatibility_quotients(b, 1)
    after = compatibility_quotients(scaled, 1)
    assert after.scale(2, 3) == pytest.approx(before.scale(2, 3) / c, rel=1e-12)
    assert after.scale(1, 2) == pytest.approx(before.scale(1, 2) * c, rel=1e-12)
    assert after.scale(3, 4) == pytest.approx(before.scale(3, 4), rel=1e-12)


def test_gamma_product_is_top_scale():
    rng = np.random.default_rng(4)
    b = random_betas(rng, MultiplicityPattern((2, 1, 1)))
    frame = compatibility_quotients(b, 1)
    prod = np.prod([abs(g.scale) for _, _, g in frame.steps])
    assert prod == pytest.approx(abs(b.x1[-1].scale), rel=1e-10)


def test_incompatible_quotient():
    eye = np.eye(3, dtype=complex)
    entries = (BetaEntry(eye[:, [1, 2]]), BetaEntry(eye[:, [0]]), None)
    with pytest.raises(Incompatible):
        quotient_between(entries, 1, 2)


def test_strata_examples():
    assert stratum_of_betas(standard_betas(MultiplicityPattern((1, 1, 1)))) == MultiplicityPattern((1, 1, 1), 0)
    b = standard_betas(MultiplicityPattern((1, 1, 1), 1))
    assert b.x1[-1] is None and all(e is not None for e in b.x1[:-1])
    assert stratum_of_betas(b) == MultiplicityPattern.from_I([1, 2, 3], 1)


@pytest.mark.parametrize("pattern", _patterns(5), ids=str)
def test_stratum_roundtrip_and_vanishing_list(pattern):
    b = standard_betas(pattern)
    assert stratum_of_betas(b, 1) == pattern
    assert stratum_of_betas(b, 2) == pattern
    N, I = pattern.n, pattern.I
    if pattern.k == 0:
        # inside a block (I_{s-1}, I_s) the forms beta^1_{N-d}, I_{s-1} < d < I_s, vanish
        zero = {N - d for d in range(1, N) if d not in I}
        assert {j for j, e in enumerate(b.x1, start=1) if e is None} == zero


def test_illegal_patterns():
    with pytest.raises(IllegalPattern):
        stratum_of_entries((None, None, None))
    b = standard_betas(MultiplicityPattern((1, 2)))
    bad = BetaData(b.x1, b.x2[:-1] + (None,))
    with pytest.raises(IllegalPattern):
        stratum_of_betas(bad)


@pytest.mark.parametrize("pattern", [MultiplicityPattern((1, 1, 1)), MultiplicityPattern((1, 2, 1)), MultiplicityPattern((2, 1, 1), 1)], ids=str)
def test_limit_with_vanishing_scale_merges_blocks(pattern):
    b = standard_betas(pattern)
    N = pattern.n
    for s in range(pattern.length - 1):
        j = N - pattern.I[s]
        x1 = list(b.x1)
        x1[j - 1] = x1[j - 1].with_scale(1e-14)
        got = stratum_of_entries(tuple(x1), 1, tol=1e-12)
        assert got == merge_adjacent_blocks(pattern, s)


def test_torus_action():
    rng = np.random.default_rng(5)
    pattern = MultiplicityPattern((1, 2, 1))
    b = random_betas(rng, pattern)
    ident = TorusElement(np.ones(4))
    same = torus_act_betas(b, ident, ident)
    assert all(e is None or e.scale == f.scale for e, f in zip(b.x1, same.x1))
    t1, t2 = TorusElement.random(rng, 4), TorusElement.random(rng, 4)
    moved = torus_act_betas(b, t1, t2)
    assert stratum_of_betas(moved) == stratum_of_betas(b)
    f0, f1 = flag_from_betas(b)[0], flag_from_betas(moved)[0]
    assert all(_same_span(s, t) for s, t in zip(f0, f1))
    for (j, jp, g), (_, _, h) in zip(compatibility_quotients(b, 1).steps, compatibility_quotients(moved, 1).steps):
        assert abs(h.scale - g.scale * character_ratio(t1, j, jp)) < 1e-12 * abs(g.scale)


def test_characters():
    t = np.array([2.0, 3.0, 0.5, 1 / 3])
    assert character(t, 2) == 6
    assert character_ratio(t, 1, 3) == 1.5
    assert character_ratio(t, 0, 4) == pytest.approx(1.0)


@given(st.integers(0, 10_000), st.sampled_from([p for p in _patterns(4)]))
@settings(max_examples=40, deadline=None)
def test_stratum_invariant_under_basis_change(seed, pattern):
    rng = np.random.default_rng(seed)
    b = random_betas(rng, pattern)
    n = pattern.n
    m1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m2 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c = change_fiber_basis(b, m1, m2)
    assert stratum_of_betas(c) == stratum_of_betas(b)
    first = next(j for j, e in enumerate(b.x1, start=1) if e is not None)
    w = rng.standard_normal((n, first)) + 1j * rng.standard_normal((n, first))
    assert c.x1[first - 1](w) == pytest.approx(b.x1[first - 1](m1 @ w), rel=1e-9)


def test_antidiagonal_unit_pairings():
    b = standard_betas(MultiplicityPattern((1, 1, 1)))
    pairs = antidiagonal_identify(b)
    assert len(pairs) == 3
    assert all(abs(p.value - 1) < 1e-12 for p in pairs)


def test_antidiagonal_invariance_and_sensitivity():
    rng = np.random.default_rng(6)
    pattern = MultiplicityPattern((1, 2, 1))
    b = random_betas(rng, pattern)
    base = antidiagonal_identify(b)
    for _ in range(10):
        t1, t2 = antidiagonal_element(TorusElement.random(rng, 4))
        moved = [p.value for p in antidiagonal_identify(torus_act_betas(b, t1, t2))]
        assert np.max(np.abs(np.array(moved) - [p.value for p in base])) < 1e-12
        generic = antidiagonal_identify(torus_act_betas(b, TorusElement.random(rng, 4), TorusElement.random(rng, 4)))
        assert np.max(np.abs(np.array([p.value for p in generic]) - [p.value for p in base])) > 1e-6


def test_antidiagonal_k1_skips_end_blocks():
    pattern = MultiplicityPattern((1, 1, 1, 1), 1)
    pairs = antidiagonal_identify(standard_betas(pattern))
    assert [p.block for p in pairs] == [2, 3]


def test_antidiagonal_asymmetric():
    # the same entries read at x2 give the reversed blocks
    x1 = standard_betas(MultiplicityPattern((1, 2))).x1
    with pytest.raises(AsymmetricStrata):
        antidiagonal_identify(BetaData(x1, x1))


def test_torsion_minimal_case():
    e1 = BetaEntry.coordinate([0], 2)
    res = torsion_betas((e1, None), np.array([1.0, 0.0]))
    assert res.constant == pytest.approx(1.0)
    assert res.entries == (None,)


def test_torsion_degenerate():
    e1 = BetaEntry.coordinate([0], 2)
    with pytest.raises(DegenerateTorsion):
        torsion_betas((e1, None), np.array([0.0, 1.0]))


@pytest.mark.parametrize("blocks", [(1, 1, 1), (1, 2, 1), (2, 1, 1), (1, 1, 2), (1, 1, 1, 1)])
def test_torsion_reproduces_shifted_flag(blocks):
    pattern = MultiplicityPattern(blocks, 1)
    sh = torsion_shift(pattern)
    n, t = pattern.n, sh.t1
    N = n + t
    rng = np.random.default_rng(sum(blocks))
    z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    q, _ = np.linalg.qr(z)
    # fiber of the torsion-free extension: forms of degree t and up, nested, top form zero
    # annihilator flag of the extended fiber: span(s) inside Ann(beta_t), then the shifted steps
    dims = sorted({N - t} | set(sh.flag_dims_x1))
    flag = [q[:, :d] for d in dims]
    entries = entries_from_flag(flag, N, top=False)
    gens = rng.standard_normal((N, t)) + 1j * rng.standard_normal((N, t))
    res = torsion_betas(entries, gens)
    got = sorted(n - e.degree for e in res.entries if e is not None)
    assert tuple(got) == sh.flag_dims_x1


def test_json_roundtrip():
    rng = np.random.default_rng(7)
    b = random_betas(rng, MultiplicityPattern((1, 2, 1), 1))
    c = BetaData.from_json(json.loads(dumps(b.to_json())))
    for e, f in zip(b.x1 + b.x2, c.x1 + c.x2):
        assert (e is None) == (f is None)
        if e is not None:
            assert np.array_equal(e.basis, f.basis) and e.scale == f.scale
    assert b.to_json()["x1"][-1] == {"zero": True}
