import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from ultrasobolev.core_types import INF, DomainSpec, NormParams, SampledFunction, sample_on
from ultrasobolev.corpus import ClosedForm, corpus, get_member
from ultrasobolev.singular_quadrature import (
    NormReport,
    QuadratureConfig,
    full_norm,
    full_norm_value,
    gagliardo_seminorm,
    holder_seminorm,
    lp_norm,
    sobolev_integer_norm,
    truncation_sweep,
)

from oracles import (
    bridge_constant,
    bridge_constant_closed,
    fractional_laplacian_constant,
    gaussian_seminorm_sq,
    ramp_seminorm,
)

UNIT = DomainSpec.box(0, 1)
LINE = DomainSpec.box(-8, 8)
BRIDGE = QuadratureConfig(local_correction=True, exterior=True)


# -- L^p ------------------------------------------------------------------------


def test_lp_norm_gaussian():
    u = sample_on(get_member("gaussian"), LINE, 2**-6)
    assert lp_norm(u, 2) == pytest.approx((math.pi / 2) ** 0.25, rel=1e-12)
    assert lp_norm(u, 1) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert lp_norm(u, INF) == 1.0


def test_lp_norm_zero_padding_is_bit_exact():
    f = get_member("bump_half")
    small = sample_on(f, DomainSpec.box(-1, 1), 2**-6)
    big = sample_on(f, DomainSpec.box(-3, 3), 2**-6)
    assert lp_norm(small, 2) == lp_norm(big, 2)


# -- Gagliardo --------------------------------------------------------------------


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_ramp_closed_form(beta, p):
    u = sample_on(get_member("linear_ramp"), UNIT, 2**-8)
    rep = gagliardo_seminorm(u, NormParams(beta, p), UNIT, QuadratureConfig(local_correction=True))
    exact = ramp_seminorm(beta, p)
    assert abs(rep.value - exact) / exact < 6e-3
    assert abs(rep.value - exact) <= 1.25 * rep.error_estimate


def test_constant_has_zero_seminorm():
    for fid in ("constant", "zero"):
        u = sample_on(get_member(fid), LINE, 2**-5)
        assert gagliardo_seminorm(u, NormParams(0.5), LINE).value == 0.0


def test_gaussian_against_fourier_oracle():
    u = sample_on(get_member("gaussian"), LINE, 2**-6)
    rep = gagliardo_seminorm(u, NormParams(0.5), LINE, BRIDGE)
    assert rep.value == pytest.approx(math.sqrt(gaussian_seminorm_sq(0.5)), rel=1e-3)


@pytest.mark.parametrize("beta", [0.3, 0.7])
def test_bridge_constant_quadrature_matches_closed_form(beta):
    assert bridge_constant(beta) == pytest.approx(bridge_constant_closed(beta), rel=1e-8)


def test_bridge_constant_at_one_half():
    assert bridge_constant(0.5) == pytest.approx(2 * math.pi, rel=1e-8)


@pytest.mark.parametrize("fid", ["gaussian", "sech", "bump_offset"])
def test_reflection_symmetry(fid):
    f = get_member(fid)
    u = sample_on(f, DomainSpec.box(-4, 4), 2**-5)
    r = SampledFunction(u.grid, u.values[::-1])
    ps = NormParams(0.4, 2.0)
    a = gagliardo_seminorm(u, ps).value
    b = gagliardo_seminorm(r, ps).value
    assert a == pytest.approx(b, rel=1e-12)


@given(
    st.sampled_from(sorted(corpus())),
    st.floats(0.1, 0.9),
    st.sampled_from([1.0, 1.5, 2.0, 4.0]),
)
def test_ultra_dominates_classical(fid, beta, p):
    d = DomainSpec.box(-3, 3)
    u = sample_on(get_member(fid), d, 2**-4)
    c = gagliardo_seminorm(u, NormParams(beta, p, 1, "classical"), d).value
    w = gagliardo_seminorm(u, NormParams(beta, p, 1, "ultra"), d).value
    assert w >= c


@pytest.mark.parametrize("beta", [0.3, 0.7])
@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_scaling_law(beta, lam):
    base = gagliardo_seminorm(sample_on(get_member("gaussian"), LINE, 2**-6), NormParams(beta), LINE, BRIDGE)
    scaled_f = ClosedForm.make("gaussian", a=lam**2)
    scaled = gagliardo_seminorm(sample_on(scaled_f, LINE, 2**-6), NormParams(beta), LINE, BRIDGE)
    assert scaled.value / base.value == pytest.approx(lam ** (beta - 0.5), rel=0.03)


@given(st.integers(1, 300), st.integers(1, 4))
def test_tiles_and_workers_bit_identical(tile, workers):
    u = sample_on(get_member("sech"), DomainSpec.box(-2, 2), 2**-5)
    ps = NormParams(0.6, 2.0, 1, "ultra")
    ref = gagliardo_seminorm(u, ps).value
    got = gagliardo_seminorm(u, ps, cfg=QuadratureConfig(tile_size=tile, workers=workers)).value
    assert got == ref


def test_larger_puncture_removes_terms():
    u = sample_on(get_member("gaussian"), DomainSpec.box(-3, 3), 2**-5)
    vals = [gagliardo_seminorm(u, NormParams(0.5), cfg=QuadratureConfig(puncture=r)).value for r in (1, 2, 4)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("fid", sorted(set(corpus()) - {"zero", "constant"}))
def test_refinement_within_error_estimate(fid):
    """Halving h (and with it the puncture radius) moves the value by less
    than the reported error estimate."""
    d = DomainSpec.box(-2, 2)
    f = get_member(fid)
    ps = NormParams(0.5, 2.0)
    coarse = gagliardo_seminorm(sample_on(f, d, 2**-5), ps, d)
    fine = gagliardo_seminorm(sample_on(f, d, 2**-6), ps, d)
    assert abs(fine.value - coarse.value) < coarse.error_estimate


def test_gagliardo_validation():
    u = sample_on(get_member("gaussian"), DomainSpec.box(-1, 1), 0.25)
    with pytest.raises(ValueError, match=r"beta must be in \(0,1\)"):
        gagliardo_seminorm(u, NormParams(1.5))
    with pytest.raises(ValueError):
        gagliardo_seminorm(u, NormParams(0.5, "inf"))
    with pytest.raises(ValueError, match="too small"):
        gagliardo_seminorm(sample_on(get_member("gaussian"), DomainSpec.box(0, 0.5), 0.25), NormParams(0.5))
    with pytest.raises(ValueError):
        QuadratureConfig(puncture=0.5)


def test_ultra_exterior_is_divergent():
    u = sample_on(get_member("gaussian"), DomainSpec.box(-4, 4), 2**-4)
    rep = gagliardo_seminorm(u, NormParams(0.5, 2, 1, "ultra"), cfg=BRIDGE)
    assert rep.divergent and rep.to_json()["value"] == "divergent"


def test_truncation_sweep_verdicts():
    radii = [2.0, 4.0, 8.0]
    fin = truncation_sweep(get_member("gaussian"), NormParams(0.5), radii, 2**-5)
    assert fin.verdict == "finite"
    grow = truncation_sweep(get_member("linear_ramp"), NormParams(0.5, 2, 1, "ultra"), radii, 2**-4)
    assert grow.verdict == "divergent"
    assert [r for r, _ in grow.evidence] == radii


def test_report_json_roundtrip():
    rep = NormReport(value=1.5, beta=0.5, p=INF, weight_mode="classical", h=0.1)
    js = rep.to_json()
    assert js["p"] == "inf" and js["error_estimate"] is None
    with pytest.raises(ValueError):
        NormReport(value=-1.0)


# -- Hölder -------------------------------------------------------------------------


def test_holder_of_ramp():
    u = sample_on(get_member("linear_ramp"), UNIT, 2**-6)
    assert holder_seminorm(u, 1.0).value == pytest.approx(1.0, rel=1e-12)
    rep = holder_seminorm(u, 0.5)
    assert rep.value == pytest.approx(1.0, rel=1e-12)
    assert rep.extra["witness"] == [[0.0], [1.0]]


def test_holder_of_gaussian_against_dense_search():
    d = DomainSpec.box(-3, 3)
    u = sample_on(get_member("gaussian"), d, 2**-5)
    x = u.grid.axes()[0]
    v = u.values.real
    dx = np.abs(x[:, None] - x[None, :])
    ratio = np.divide(np.abs(v[:, None] - v[None, :]), dx**0.5, out=np.zeros_like(dx), where=dx > 0)
    assert holder_seminorm(u, 0.5).value == pytest.approx(ratio.max(), rel=1e-14)


def test_holder_weighted_exceeds_plain_scale():
    u = sample_on(get_member("sech"), DomainSpec.box(-2, 2), 2**-4)
    w = holder_seminorm(u, 0.5, weighted=True)
    assert w.weight_mode == "ultra" and w.value > 0
    with pytest.raises(ValueError):
        holder_seminorm(u, 1.5)


# -- composite norms ----------------------------------------------------------------------


def test_full_norm_forms():
    d = DomainSpec.box(-4, 4)
    u = sample_on(get_member("gaussian"), d, 2**-5)
    rep = full_norm(u, NormParams(0.5), d)
    lp, semi = rep.extra["lp"], rep.extra["seminorm"]
    assert rep.value == lp + semi
    assert rep.extra["p_power_form"] == pytest.approx(math.sqrt(lp**2 + semi**2))
    assert rep.value >= rep.extra["p_power_form"]
    assert full_norm_value(u, NormParams(0.5), d) == rep.value
    inf = full_norm(u, NormParams(0.5, "inf"), d)
    assert inf.extra["p_power_form"] == max(inf.extra["lp"], inf.extra["seminorm"])


def test_sobolev_integer_norm_gaussian():
    u = sample_on(get_member("gaussian"), LINE, 2**-6)
    # ||u||_2^2 = ||u'||_2^2 = sqrt(pi/2)
    assert sobolev_integer_norm(u, 1, 2.0) == pytest.approx(math.sqrt(2 * math.sqrt(math.pi / 2)), rel=1e-10)
    spectral_only = SampledFunction(u.grid, u.values)
    assert sobolev_integer_norm(spectral_only, 1, 2.0) == pytest.approx(
        sobolev_integer_norm(u, 1, 2.0), rel=1e-9
    )
    with pytest.raises(ValueError):
        sobolev_integer_norm(u, 5, 2.0)


def test_two_dimensional_smoke():
    """2D gaussian on [-4,4]^2 at h = 2^-4: converging, symmetric and below the
    whole-plane value (pairs leaving the box are not counted)."""
    d = DomainSpec.box(-4, 4, 2)
    f = get_member("gaussian")
    ps = NormParams(0.5, 2.0, 2)
    cfg = QuadratureConfig(tile_size=256, workers=4)
    fine = gagliardo_seminorm(sample_on(f, d, 2**-4), ps, d, cfg)
    coarse = gagliardo_seminorm(sample_on(f, d, 2**-3), ps, d, cfg)
    assert abs(fine.value - coarse.value) / fine.value < 0.02
    # whole plane: [u]^2 = (2 / C(2,s)) (2pi)^-2 int |xi|^(2s) |u_hat|^2
    s = 0.5
    cns = fractional_laplacian_constant(2, s)
    spec = quad(lambda r: r ** (2 * s) * math.pi**2 * math.exp(-r * r / 2) * 2 * math.pi * r, 0, np.inf)[0]
    whole = math.sqrt(2 / cns * spec / (2 * math.pi) ** 2)
    assert 0.8 * whole < fine.value < whole
