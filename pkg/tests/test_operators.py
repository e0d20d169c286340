import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ultrasobolev.core_types import DomainSpec, NormParams, SampledFunction, parse_p, restrict, sample_on
from ultrasobolev.corpus import corpus, get_member
from ultrasobolev.operators import (
    Mollifier,
    cutoff_function,
    cutoff_interior_extension,
    cutoff_sup_condition,
    extension_operator_norm,
    mollify,
    multiply_by_class_function,
    smooth_step,
    zero_extension,
)
from ultrasobolev.singular_quadrature import full_norm, full_norm_value, lp_norm

H = 2**-6
LADDER = [0.4, 0.2, 0.1, 0.05]


# -- mollifier ---------------------------------------------------------------------


@pytest.mark.parametrize("eps", LADDER)
def test_mollifier_kernel(eps):
    m = Mollifier(eps, (H,))
    assert np.all(m.kernel >= 0)
    assert abs(m.mass - 1.0) < 1e-12
    x = H * (np.arange(m.kernel.size) - m.kernel.size // 2)
    assert np.all(np.abs(x) < eps)
    assert m.support_radius == eps


def test_mollifier_kernel_2d():
    m = Mollifier(0.25, (2**-4, 2**-4))
    assert m.kernel.ndim == 2 and abs(m.mass - 1.0) < 1e-12
    assert np.allclose(m.kernel, m.kernel.T)


def test_mollify_preserves_constants_on_interior():
    d = DomainSpec.box(-2, 2)
    u = sample_on(get_member("constant"), d, H)
    v = mollify(u, 0.2)
    inner = restrict(v, DomainSpec.box(-1.75, 1.75))
    assert np.max(np.abs(inner.values - 1.0)) < 1e-12


def test_mollify_rejects_unresolved_kernel():
    u = sample_on(get_member("gaussian"), DomainSpec.box(-2, 2), H)
    with pytest.raises(ValueError, match="two grid spacings"):
        mollify(u, 1.5 * H)


def test_mollify_linear():
    d = DomainSpec.box(-3, 3)
    u = sample_on(get_member("gaussian"), d, H)
    v = sample_on(get_member("bump_offset"), d, H)
    lhs = mollify(u + 3 * v, 0.1)
    rhs = mollify(u, 0.1) + 3 * mollify(v, 0.1)
    assert np.max(np.abs(lhs.values - rhs.values)) < 1e-12


@given(st.sampled_from(sorted(corpus())), st.sampled_from(LADDER))
def test_mollify_does_not_increase_max(fid, eps):
    u = sample_on(get_member(fid), DomainSpec.box(-3, 3), H)
    assert np.max(np.abs(mollify(u, eps).values)) <= np.max(np.abs(u.values)) * (1 + 1e-12)


def test_mollify_support_grows_by_eps():
    u = sample_on(get_member("bump_half"), DomainSpec.box(-2, 2), H)
    v = mollify(u, 0.2)
    x = u.grid.axes()[0]
    nz = x[np.abs(v.values) > 0]
    assert nz.min() >= -0.7 - 1e-12 and nz.max() <= 0.7 + 1e-12


def test_gaussian_mollification_error_ladder():
    big = DomainSpec.box(-9, 9)
    d = DomainSpec.box(-8, 8)
    u = sample_on(get_member("gaussian"), big, H)
    ud = restrict(u, d)
    errs = [lp_norm(restrict(mollify(u, e), d) - ud, 2) for e in LADDER]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3
    # second-order kernel: halving eps cuts the error about fourfold
    assert errs[-2] / errs[-1] == pytest.approx(4.0, rel=0.1)


# -- zero extension -------------------------------------------------------------------


def test_zero_extension_round_trip_and_lp():
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-4, 4)
    u = sample_on(get_member("bump_half"), src, H)
    e = zero_extension(u, src, tgt)
    assert e.grid.extent() == ((-4.0, 4.0),)
    assert np.array_equal(restrict(e, src).values, u.values)
    for p in (1.0, 2.0, 4.0, "inf"):
        assert lp_norm(e, parse_p(p)) == lp_norm(u, parse_p(p))
    outside = np.abs(e.grid.axes()[0]) > 1
    assert np.all(e.values[outside] == 0)


def test_zero_extension_rejects_noncompact():
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-4, 4)
    with pytest.raises(ValueError, match="support not compact"):
        zero_extension(sample_on(get_member("gaussian"), src, H), src, tgt)
    with pytest.raises(ValueError):
        zero_extension(sample_on(get_member("bump_half"), tgt, H), tgt, src)


def test_weighted_zero_extension_flag():
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-2, 2)
    u = sample_on(get_member("bump_half"), src, H)
    ps = NormParams(0.5, 2.0)
    e = zero_extension(u, src, tgt, weighted=True, params=ps)
    x = u.grid.axes()[0]
    assert np.allclose(restrict(e, src).values, (1 + np.abs(x) ** 2) * u.values, rtol=1e-15)
    with pytest.raises(ValueError):
        zero_extension(u, src, tgt, weighted=True)


def test_zero_extension_2d():
    src, tgt = DomainSpec.box(-1, 1, 2), DomainSpec.box(-2, 2, 2)
    u = sample_on(get_member("bump_half"), src, 2**-3)
    e = zero_extension(u, src, tgt)
    assert e.grid.shape == (33, 33)
    assert lp_norm(e, 2.0) == lp_norm(u, 2.0)


@pytest.mark.parametrize("h", [2**-6, 2**-7])
def test_extension_ratio_at_least_one(h):
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-4, 4)
    members = [get_member(i) for i in ("bump_half", "bump_offset", "bump_narrow", "zero")]
    rep = extension_operator_norm(members, NormParams(0.5), src, tgt, h)
    assert rep.support_ok
    assert [r.member for r in rep.rows] == ["bump_half", "bump_offset", "bump_narrow", "zero"]
    assert rep.rows[-1].ratio is None
    assert all(r >= 1 for r in rep.ratios)
    assert 0 < rep.min_ratio <= rep.max_ratio
    assert rep.inverse_bound == 1 / rep.min_ratio


def test_extension_ratio_stable_under_refinement():
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-4, 4)
    f = [get_member("bump_half")]
    a = extension_operator_norm(f, NormParams(0.5), src, tgt, 2**-6).max_ratio
    b = extension_operator_norm(f, NormParams(0.5), src, tgt, 2**-7).max_ratio
    assert abs(a - b) / b < 0.02


def test_extension_max_monotone_under_superset():
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-4, 4)
    sub = [get_member("bump_narrow")]
    sup = sub + [get_member("bump_half")]
    ps = NormParams(0.5)
    assert extension_operator_norm(sup, ps, src, tgt, 2**-5).max_ratio >= extension_operator_norm(
        sub, ps, src, tgt, 2**-5
    ).max_ratio


def test_extension_report_csv_and_errors():
    src, tgt = DomainSpec.box(-1, 1), DomainSpec.box(-2, 2)
    rep = extension_operator_norm([get_member("bump_half"), get_member("zero")], NormParams(0.5), src, tgt, 2**-4)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "member_id,norm_before,norm_after,ratio"
    assert lines[2].endswith(",")
    with pytest.raises(ValueError, match="empty"):
        extension_operator_norm([], NormParams(0.5), src, tgt, 2**-4)


# -- cutoff extension ---------------------------------------------------------------------


def test_smooth_step_profile():
    t = np.linspace(-1, 2, 301)
    s = smooth_step(t)
    assert np.all(s[t <= 0] == 0) and np.all(s[t >= 1] == 1)
    assert np.all(np.diff(s) >= 0)
    assert smooth_step(np.array([0.5]))[0] == pytest.approx(0.5)


@pytest.mark.parametrize("fid", ["gaussian", "sech", "linear_ramp", "bump_offset"])
def test_cutoff_identity_support_idempotent(fid):
    inner, outer = DomainSpec.box(-1, 1), DomainSpec.box(-2, 2)
    u = sample_on(get_member(fid), DomainSpec.box(-3, 3), H)
    star = cutoff_interior_extension(u, inner, outer)
    assert np.max(np.abs(restrict(star, inner).values - restrict(u, inner).values)) <= 1e-12
    x = u.grid.axes()[0]
    assert np.all(star.values[np.abs(x) >= 2] == 0)
    again = cutoff_interior_extension(star, inner, outer)
    assert np.max(np.abs(again.values - star.values)) <= 1e-12
    assert math.isfinite(cutoff_sup_condition(star, NormParams(0.5)))


def test_cutoff_depends_only_on_inner_values():
    inner, outer = DomainSpec.box(-1, 1), DomainSpec.box(-2, 2)
    d = DomainSpec.box(-3, 3)
    a = sample_on(get_member("gaussian"), d, H)
    x = a.grid.axes()[0]
    b = SampledFunction(a.grid, np.where(np.abs(x) <= 1, a.values, 7.0))
    assert np.array_equal(
        cutoff_interior_extension(a, inner, outer).values, cutoff_interior_extension(b, inner, outer).values
    )


def test_cutoff_margin_check():
    u = sample_on(get_member("gaussian"), DomainSpec.box(-2, 2), 2**-3)
    with pytest.raises(ValueError, match="below 4h"):
        cutoff_interior_extension(u, DomainSpec.box(-1, 1), DomainSpec.box(-1.25, 1.25))


def test_cutoff_2d():
    inner, outer = DomainSpec.box(-1, 1, 2), DomainSpec.box(-2, 2, 2)
    u = sample_on(get_member("gaussian"), DomainSpec.box(-2, 2, 2), 2**-3)
    star = cutoff_interior_extension(u, inner, outer)
    assert np.array_equal(restrict(star, inner).values, restrict(u, inner).values)
    chi = cutoff_function(u.grid, inner, 0.5)
    assert chi.min() == 0.0 and chi.max() == 1.0


def test_cutoff_norm_bound_stable():
    inner, outer = DomainSpec.box(-1, 1), DomainSpec.box(-4, 4)
    ratios = []
    for h in (2**-6, 2**-7):
        u = sample_on(get_member("gaussian"), outer, h)
        star = cutoff_interior_extension(u, inner, outer)
        ratios.append(full_norm_value(star, NormParams(0.5), outer) / full_norm_value(u, NormParams(0.5), inner))
    assert abs(ratios[0] - ratios[1]) / ratios[1] < 0.02


# -- multiplication -------------------------------------------------------------------------


def test_multiply_by_one_is_identity():
    d = DomainSpec.box(-2, 2)
    u = sample_on(get_member("bump"), d, 2**-5)
    ps = NormParams(0.5)
    rep = multiply_by_class_function(u, get_member("constant"), ps, d, check_membership=False)
    assert rep.value == full_norm(u, ps, d).value
    assert rep.extra["phi_max"] == 1.0


def test_multiply_constant_factor_fails_membership():
    d = DomainSpec.box(-2, 2)
    u = sample_on(get_member("bump"), d, 2**-5)
    rep = multiply_by_class_function(u, get_member("constant"), NormParams(0.5), d)
    assert rep.divergent
    assert rep.evidence == ["excluded at p=1"]


def test_multiply_bump_by_gaussian():
    d = DomainSpec.box(-2, 2)
    u = sample_on(get_member("bump"), d, 2**-5)
    ps = NormParams(0.5)
    rep = multiply_by_class_function(u, get_member("gaussian"), ps, d)
    assert rep.verdict == "finite" and math.isfinite(rep.value)
    assert math.isfinite(rep.extra["sup_weighted_product"])
    assert rep.extra["lp"] <= rep.extra["phi_max"] * lp_norm(u, 2.0)


def test_multiply_zero_is_zero():
    d = DomainSpec.box(-2, 2)
    u = sample_on(get_member("zero"), d, 2**-5)
    rep = multiply_by_class_function(u, get_member("gaussian"), NormParams(0.5), d)
    assert rep.value == 0.0 and rep.extra["sup_weighted_product"] == 0.0
