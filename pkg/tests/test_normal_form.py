"""Degree-by-degree Taylor builds and resonance reduction against frozen
closed forms and independent series / doubled-cycle oracles."""

import math
from fractions import Fraction as F

import pytest

from nsnf import normal_form as nfm
from nsnf.base import Extension, FiniteBase
from nsnf.normal_form import (
    BuildRefused,
    build_taylor,
    complement_lift,
    perturb_lift,
    pinned_lift,
    reduce_family,
    resonance_reduce,
    seeded_lift,
)
from nsnf.polymap import (
    FLOAT,
    RATIONAL,
    GradedDims,
    PolyMap,
    compose,
    identity_map,
    make_group_element,
)
from nsnf.spectrum import SpectrumSpec

from fixtures import (
    D11,
    SPEC21,
    scalar_extension,
    strictsub_extension,
    three_cycle_extension,
    worked_extension,
)
from oracles import (
    certified_partial_sums,
    degree2_cocycle_data,
    doubled_cycle_pull_solution,
)


# -- worked fixed point -------------------------------------------------


def test_worked_rational_exact_coefficients():
    ext = worked_extension(RATIONAL)
    nf = build_taylor(ext, SPEC21, 3, 0)
    a, b = F(27, 200), F(46, 125)
    # closed form of the only degree-2 Taylor coefficient at a fixed point
    assert nf.h_taylor[0].coeffs[(1, (1, 1))] == 1 / (b * (1 - a))
    assert (0, (0, 2)) not in nf.h_taylor[0].coeffs  # complement lift
    assert nf.p_poly(0).coeffs == {
        (0, (1, 0)): a,
        (0, (0, 2)): F(1),
        (1, (0, 1)): b,
    }
    assert nf.certified
    assert nf.certified_exponents == {2: F(-2, 5), 3: F(-1, 5)}


def test_worked_float_matches_closed_form_and_series():
    ext = worked_extension(FLOAT)
    nf = build_taylor(ext, SPEC21, 3, 0)
    a, b = math.exp(-2.0), math.exp(-1.0)
    h2 = nf.h_taylor[0].homogeneous_part(2)
    assert abs(h2.coeffs[(1, (1, 1))] - 1 / (b * (1 - a))) < 1e-12

    keys, a_mats, b_vecs = degree2_cocycle_data(ext, SPEC21)
    rho = math.exp(float(nf.certified_exponents[2]))
    series = certified_partial_sums(a_mats[0], b_vecs[0], rho)
    for key, value in zip(keys, series):
        assert abs(h2.coeffs.get(key, 0.0) - value) < 1e-12


def test_worked_rational_doubled_cycle_oracle():
    ext = worked_extension(RATIONAL)
    nf = build_taylor(ext, SPEC21, 3, 0)
    keys, a_mats, b_vecs = degree2_cocycle_data(ext, SPEC21)
    vecs = doubled_cycle_pull_solution(a_mats, b_vecs)
    h2 = nf.h_taylor[0].homogeneous_part(2)
    assert [h2.coeffs.get(k, F(0)) for k in keys] == vecs[0]


def test_three_cycle_doubled_cycle_oracle():
    ext = three_cycle_extension()
    nf = build_taylor(ext, SPEC21, 3, 0)
    keys, a_mats, b_vecs = degree2_cocycle_data(ext, SPEC21)
    cycle = ext.base.cycles[0]
    vecs = doubled_cycle_pull_solution(
        [a_mats[x] for x in cycle], [b_vecs[x] for x in cycle]
    )
    for x, vec in zip(cycle, vecs):
        h2 = nf.h_taylor[x].homogeneous_part(2)
        assert [h2.coeffs.get(k, F(0)) for k in keys] == vec


def test_three_cycle_jet_identity():
    ext = three_cycle_extension()
    nf = build_taylor(ext, SPEC21, 3, 0)
    for x in range(3):
        fx = ext.base.image(x)
        lhs = compose(nf.h_taylor[fx], ext.fiber(x), 3)
        rhs = compose(nf.p_poly(x), nf.h_taylor[x], 3)
        assert lhs == rhs


def test_float_build_tracks_rational_conversion():
    ext = worked_extension(RATIONAL)
    nf_rat = build_taylor(ext, SPEC21, 3, 0)
    nf_flt = build_taylor(ext.to_float(), SPEC21, 3, 0)
    for x in range(1):
        rat, flt = nf_rat.h_taylor[x], nf_flt.h_taylor[x]
        for key in set(rat.coeffs) | set(flt.coeffs):
            assert abs(float(rat.coeffs.get(key, 0)) - flt.coeffs.get(key, 0.0)) < 1e-10
        rat_p, flt_p = nf_rat.p_poly(x), nf_flt.p_poly(x)
        for key in set(rat_p.coeffs) | set(flt_p.coeffs):
            assert abs(float(rat_p.coeffs.get(key, 0)) - flt_p.coeffs.get(key, 0.0)) < 1e-10


def test_dense_solve_matches_grouped(monkeypatch):
    ext = three_cycle_extension()
    grouped = build_taylor(ext, SPEC21, 3, 0)
    monkeypatch.setattr(nfm, "_all_block_diagonal", lambda mats, dims: False)
    dense = build_taylor(ext, SPEC21, 3, 0)
    assert grouped.h_taylor == dense.h_taylor
    assert grouped.p_normal == dense.p_normal


def test_build_is_deterministic():
    ext = three_cycle_extension()
    first = build_taylor(ext, SPEC21, 3, 0)
    second = build_taylor(ext, SPEC21, 3, 0)
    assert first.h_taylor == second.h_taylor
    assert first.p_normal == second.p_normal


# -- lift freedom -------------------------------------------------------


def test_pinned_lift_reproduces_seeded_build():
    ext = three_cycle_extension()
    seeded = build_taylor(ext, SPEC21, 3, 0, lift=seeded_lift(7))
    jets = seeded.sub_res_jets()
    assert jets, "seed 7 should produce at least one nonzero section"
    pinned = build_taylor(ext, SPEC21, 3, 0, lift=pinned_lift(jets))
    assert pinned.h_taylor == seeded.h_taylor
    assert pinned.p_normal == seeded.p_normal


def test_lift_changes_sub_res_part_only_at_its_degree():
    ext = worked_extension(RATIONAL)
    plain = build_taylor(ext, SPEC21, 3, 0)
    section = PolyMap(D11, D11, 2, RATIONAL, {(0, (0, 2)): F(1, 7)})
    lifted = build_taylor(ext, SPEC21, 3, 0, lift=pinned_lift({(0, 2): section}))
    h2_plain = plain.h_taylor[0].homogeneous_part(2)
    h2_lift = lifted.h_taylor[0].homogeneous_part(2)
    assert h2_lift.sub(h2_plain) == section
    # the non-sub component of the degree-2 term is lift-independent
    assert h2_lift.coeffs[(1, (1, 1))] == h2_plain.coeffs[(1, (1, 1))]


def test_perturb_amplitude_zero_is_identity():
    ext = three_cycle_extension()
    nf = build_taylor(ext, SPEC21, 3, 0, lift=seeded_lift(11))
    again = perturb_lift(nf, seed=3, amplitude=F(0))
    assert again.h_taylor == nf.h_taylor
    assert again.p_normal == nf.p_normal


def test_seeded_lift_determinism_and_variation():
    ext = three_cycle_extension()
    one = build_taylor(ext, SPEC21, 3, 0, lift=seeded_lift(5))
    two = build_taylor(ext, SPEC21, 3, 0, lift=seeded_lift(5))
    other = build_taylor(ext, SPEC21, 3, 0, lift=seeded_lift(6))
    assert one.h_taylor == two.h_taylor
    assert one.h_taylor != other.h_taylor


def test_lift_section_validation():
    ext = worked_extension(RATIONAL)
    wrong_degree = PolyMap(D11, D11, 3, RATIONAL, {(0, (0, 3)): F(1)})
    with pytest.raises(ValueError, match="homogeneous"):
        build_taylor(ext, SPEC21, 3, 0, lift=pinned_lift({(0, 2): wrong_degree}))
    non_sub = PolyMap(D11, D11, 2, RATIONAL, {(1, (1, 1)): F(1)})
    with pytest.raises(ValueError, match="class"):
        build_taylor(ext, SPEC21, 3, 0, lift=pinned_lift({(0, 2): non_sub}))


# -- scalar base case ---------------------------------------------------


def test_scalar_quadratic_rational():
    ext, spec = scalar_extension(RATIONAL)
    nf = build_taylor(ext, spec, 2, 0)
    a = F(46, 125)
    assert nf.p_poly(0).coeffs == {(0, (1,)): a}  # exactly linear
    assert nf.h_taylor[0].coeffs[(0, (2,))] == 1 / (a * (1 - a))


def test_scalar_quadratic_float():
    ext, spec = scalar_extension(FLOAT)
    nf = build_taylor(ext, spec, 2, 0)
    a = math.exp(-1.0)
    assert nf.p_poly(0).coeffs == {(0, (1,)): a}
    assert abs(nf.h_taylor[0].coeffs[(0, (2,))] - 1 / (a * (1 - a))) < 1e-12


# -- forced builds and resonance reduction ------------------------------


def test_strictsub_refused_then_forced():
    ext = strictsub_extension(RATIONAL)
    with pytest.raises(BuildRefused, match="block-diagonal"):
        build_taylor(ext, SPEC21, 2, 1)
    nf = build_taylor(ext, SPEC21, 2, 1, force=True)
    assert not nf.certified
    assert nf.p_poly(0).coeffs == {
        (0, (1, 0)): F(27, 200),
        (0, (0, 1)): F(1),
        (1, (0, 1)): F(46, 125),
    }
    assert nf.h_taylor[0] == identity_map(D11, 2, RATIONAL)


def test_reduce_strictsub_linear_rational():
    ext = strictsub_extension(RATIONAL)
    nf = build_taylor(ext, SPEC21, 2, 1, force=True)
    red = resonance_reduce(nf)
    a, b = F(27, 200), F(46, 125)
    # closed form of the shear coefficient at a fixed point
    assert red.h_prime[0].poly.coeffs == {
        (0, (1, 0)): F(1),
        (1, (0, 1)): F(1),
        (0, (0, 1)): 1 / (a - b),
    }
    assert red.p_res[0].poly.coeffs == {(0, (1, 0)): a, (1, (0, 1)): b}
    lhs = compose(red.h_prime[0].poly, nf.p_poly(0), 4)
    rhs = compose(red.p_res[0].poly, red.h_prime[0].poly, 4)
    assert lhs == rhs
    assert red.certified_exponents[1] == F(-3, 5)


def test_reduce_strictsub_linear_float():
    ext = strictsub_extension(FLOAT)
    nf = build_taylor(ext, SPEC21, 2, 1, force=True)
    red = resonance_reduce(nf)
    g = 1 / (math.exp(-2.0) - math.exp(-1.0))
    assert abs(red.h_prime[0].poly.coeffs[(0, (0, 1))] - g) < 1e-12
    assert set(red.p_res[0].poly.coeffs) == {(0, (1, 0)), (1, (0, 1))}


def test_reduce_kills_strict_quadratic():
    spec = SpectrumSpec([F(-5, 2), F(-1)], F(1, 10))
    a, b, c = F(2, 25), F(9, 25), F(1, 2)
    p = PolyMap(D11, D11, 2, RATIONAL, {(0, (1, 0)): a, (1, (0, 1)): b, (0, (0, 2)): c})
    elem = make_group_element(p, spec, "sub-resonance")
    red = reduce_family(FiniteBase([0]), spec, [elem])
    assert red.h_prime[0].poly.coeffs == {
        (0, (1, 0)): F(1),
        (1, (0, 1)): F(1),
        (0, (0, 2)): c / (a - b * b),
    }
    assert red.p_res[0].poly.coeffs == {(0, (1, 0)): a, (1, (0, 1)): b}
    assert red.certified_exponents[2] == F(-1, 5)


def test_reduce_is_identity_on_resonance_form():
    ext = worked_extension(RATIONAL)
    nf = build_taylor(ext, SPEC21, 3, 0)
    red = resonance_reduce(nf)
    assert red.h_prime[0].poly == identity_map(D11, 2, RATIONAL)
    assert red.p_res[0].poly == nf.p_poly(0)


def test_reduce_with_resonance_lift():
    ext = worked_extension(RATIONAL)
    nf = build_taylor(ext, SPEC21, 3, 0)
    delta = PolyMap(D11, D11, 2, RATIONAL, {(0, (0, 2)): F(1, 3)})
    red = resonance_reduce(nf, lift=pinned_lift({(0, 2): delta}))
    assert red.h_prime[0].poly == identity_map(D11, 2, RATIONAL).add(delta)
    assert red.p_res[0].poly.coeffs[(0, (0, 2))] == F(375053, 375000)
    lhs = compose(red.h_prime[0].poly, nf.p_poly(0), 4)
    rhs = compose(red.p_res[0].poly, red.h_prime[0].poly, 4)
    assert lhs == rhs


def test_reduce_three_cycle_roundtrip():
    ext = three_cycle_extension()
    nf = build_taylor(ext, SPEC21, 3, 0)
    red = resonance_reduce(nf)
    for x in range(3):
        fx = ext.base.image(x)
        lhs = compose(red.h_prime[fx].poly, nf.p_poly(x), 4)
        rhs = compose(red.p_res[x].poly, red.h_prime[x].poly, 4)
        assert lhs == rhs


# -- refusal modes ------------------------------------------------------


def test_taylor_degree_below_bound_refused():
    ext = worked_extension(RATIONAL)
    with pytest.raises(BuildRefused):
        build_taylor(ext, SPEC21, 1, 1, force=True)


def test_criticality_failure_refused():
    ext = worked_extension(RATIONAL)
    with pytest.raises(BuildRefused, match="criticality"):
        build_taylor(ext, SPEC21, 2, 0)
