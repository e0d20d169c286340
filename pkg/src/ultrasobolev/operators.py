"""Mollification, zero extension, interior cutoff extension, multiplication.

Convolutions are computed directly (no FFT) so that values outside a
kernel's reach are exact zeros; the support checks rely on that.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .core_types import DomainSpec, Grid, NormParams, SampledFunction, restrict, sample
from .corpus import ClosedForm
from .singular_quadrature import NormReport, QuadratureConfig, full_norm, full_norm_value, lp_norm

_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Mollifier:
    """Discrete standard bump c*exp(-1/(1-|x/eps|^2)) on |x| < eps, unit grid mass."""

    epsilon: float
    spacing: tuple[float, ...]
    kernel: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        axes = []
        for h in self.spacing:
            m = int(math.floor(self.epsilon / h * (1 - 1e-12)))
            axes.append(h * np.arange(-m, m + 1))
        mesh = np.meshgrid(*axes, indexing="ij")
        t2 = sum(a**2 for a in mesh) / self.epsilon**2
        k = np.zeros_like(t2)
        inside = t2 < 1.0
        k[inside] = np.exp(-1.0 / (1.0 - t2[inside]))
        k /= k.sum() * float(np.prod(self.spacing))
        k.flags.writeable = False
        object.__setattr__(self, "kernel", k)

    @property
    def support_radius(self) -> float:
        return self.epsilon

    @property
    def mass(self) -> float:
        return float(self.kernel.sum() * np.prod(self.spacing))


def mollify(u: SampledFunction, eps: float) -> SampledFunction:
    """Discrete convolution with the normalized bump of radius ``eps`` (zero outside the grid)."""
    if any(eps < 2 * h * (1 - 1e-12) for h in u.grid.spacing):
        raise ValueError(f"eps={eps} is below two grid spacings; kernel unresolved")
    m = Mollifier(eps, u.grid.spacing)
    k = m.kernel * float(np.prod(u.grid.spacing))
    out = signal.convolve(u.values, k, mode="same", method="direct")
    return SampledFunction(u.grid, out)


def _aligned_grid(g: Grid, d: DomainSpec) -> tuple[Grid, tuple[int, ...]]:
    """Grid with g's spacing and node lattice covering d; returns it and the
    index offset of g's origin inside it."""
    origin, counts, offsets = [], [], []
    for o, h, (lo, hi) in zip(g.origin, g.spacing, d.bounds):
        i0 = math.ceil((lo - o) / h - _TOL)
        i1 = math.floor((hi - o) / h + _TOL)
        origin.append(o + i0 * h)
        counts.append(i1 - i0 + 1)
        offsets.append(-i0)
    return Grid(tuple(origin), g.spacing, tuple(counts)), tuple(offsets)


def _ring_is_zero(v: SampledFunction, width: int) -> bool:
    vals = v.values
    for axis in range(vals.ndim):
        for sl in (slice(0, width), slice(-width, None)):
            idx = [slice(None)] * vals.ndim
            idx[axis] = sl
            if np.any(vals[tuple(idx)] != 0):
                return False
    return True


def zero_extension(
    u: SampledFunction,
    source: DomainSpec,
    target: DomainSpec,
    ring: int = 2,
    weighted: bool = False,
    params: NormParams | None = None,
) -> SampledFunction:
    """Extend ``u`` (restricted to ``source``) by zero onto ``target``.

    The outer ``ring`` nodes of ``source`` must be exactly zero (support
    compactly inside). ``weighted`` multiplies the interior values by
    (1 + |x|^(n+p*beta)) first, the literal form of the extension sequence.
    """
    if not target.contains(source, tol=_TOL):
        raise ValueError("source domain must lie inside the target domain")
    v = restrict(u, source)
    if not _ring_is_zero(v, ring):
        raise ValueError("support not compact in the source domain (boundary ring is nonzero)")
    vals = v.values
    if weighted:
        if params is None:
            raise ValueError("weighted extension needs NormParams")
        from .core_types import WeightMode

        wp = NormParams(params.beta, params.p, params.n, WeightMode.ULTRA)
        vals = vals * wp.weight(v.grid.points()).reshape(v.grid.shape)
    tg, off = _aligned_grid(v.grid, target)
    out = np.zeros(tg.shape, dtype=complex)
    out[tuple(slice(o, o + c) for o, c in zip(off, v.grid.count))] = vals
    return SampledFunction(tg, out)


@dataclass
class ExtensionRow:
    member: str
    norm_before: float
    norm_after: float
    ratio: float | None  # None for the 0/0 degenerate case


@dataclass
class ExtensionReport:
    rows: list[ExtensionRow]
    support_ok: bool

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows if r.ratio is not None]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def min_ratio(self) -> float:
        return min(self.ratios)

    @property
    def inverse_bound(self) -> float:
        """C with ||u|| <= C ||Eu|| over the measured members (1 / min ratio)."""
        return 1.0 / self.min_ratio

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["member_id", "norm_before", "norm_after", "ratio"])
        for r in self.rows:
            w.writerow([r.member, repr(r.norm_before), repr(r.norm_after), "" if r.ratio is None else repr(r.ratio)])
        return buf.getvalue()


def extension_operator_norm(
    members,
    params: NormParams,
    source: DomainSpec,
    target: DomainSpec,
    h: float,
    cfg: QuadratureConfig | None = None,
) -> ExtensionReport:
    """Ratios ||Eu||_target / ||u||_source of the zero extension over ``members``.

    ``members`` are closed forms (sampled on ``target`` at spacing ``h``) or
    sampled functions. Zero members are kept as rows with ratio None.
    """
    members = list(members)
    if not members:
        raise ValueError("empty member subset")
    rows = []
    support_ok = True
    tgrid = Grid.from_domain(target, h)
    for m in members:
        u = sample(m, tgrid) if isinstance(m, ClosedForm) else m
        name = m.id if isinstance(m, ClosedForm) else (m.source.id if m.source else "sampled")
        e = zero_extension(u, source, target)
        inner = restrict(e, source)
        outside = np.ones(e.grid.shape, dtype=bool)
        outside[_index_box(e.grid, source)] = False
        support_ok &= bool(np.all(e.values[outside] == 0))
        support_ok &= bool(np.array_equal(inner.values, restrict(u, source).values))
        before = full_norm_value(u, params, source, cfg)
        after = full_norm_value(e, params, target, cfg)
        ratio = None if before == 0 else after / before
        rows.append(ExtensionRow(name, before, after, ratio))
    return ExtensionReport(rows, support_ok)


def _index_box(g: Grid, d: DomainSpec) -> tuple[slice, ...]:
    out = []
    for ax, h, (lo, hi) in zip(g.axes(), g.spacing, d.bounds):
        idx = np.nonzero((ax >= lo - _TOL * h) & (ax <= hi + _TOL * h))[0]
        out.append(slice(int(idx[0]), int(idx[-1]) + 1) if idx.size else slice(0, 0))
    return tuple(out)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    a = np.exp(-1.0 / t[mid])
    b = np.exp(-1.0 / (1.0 - t[mid]))
    out[mid] = a / (a + b)
    return out


def cutoff_function(grid: Grid, inner: DomainSpec, width: float) -> np.ndarray:
    """Product of 1D smooth steps: 1 on ``inner``, 0 beyond distance ``width``."""
    chi = np.ones(grid.shape)
    for axis, (ax, (lo, hi)) in enumerate(zip(grid.axes(), inner.bounds)):
        dist = np.maximum(lo - ax, ax - hi)  # <= 0 inside
        prof = 1.0 - smooth_step(dist / width)
        shape = [1] * grid.n
        shape[axis] = -1
        chi = chi * prof.reshape(shape)
    return chi


def cutoff_interior_extension(u: SampledFunction, inner: DomainSpec, outer: DomainSpec) -> SampledFunction:
    """Compactly supported function equal to ``u`` on ``inner``.

    Outside ``inner`` the values of ``u`` at the nearest inner node are
    carried outward and damped by a smooth cutoff whose transition width is
    half the inner/outer margin, so the result vanishes strictly inside
    ``outer``. Depends only on ``u`` restricted to ``inner``; applying it
    twice changes nothing.
    """
    g = u.grid
    if not outer.contains(inner):
        raise ValueError("inner domain must lie inside the outer domain")
    margin = min(
        min(ilo - olo, ohi - ihi) for (ilo, ihi), (olo, ohi) in zip(inner.bounds, outer.bounds)
    )
    if margin < 4 * g.h * (1 - 1e-9):
        raise ValueError(f"margin {margin} between inner and outer is below 4h")
    box = _index_box(g, inner)
    if any(s.stop - s.start < 1 for s in box):
        raise ValueError("inner domain holds no grid nodes")
    idx = np.meshgrid(
        *[np.clip(np.arange(c), s.start, s.stop - 1) for c, s in zip(g.count, box)], indexing="ij"
    )
    carried = u.values[tuple(idx)]
    chi = cutoff_function(g, inner, margin / 2)
    out = carried * chi
    out[box] = u.values[box]
    return SampledFunction(g, out)


def cutoff_sup_condition(u: SampledFunction, params: NormParams) -> float:
    """sup (1 + |x|^(n+beta p)) |u(x)|^p over the grid."""
    pts = u.grid.points()
    r = np.sqrt(np.sum(pts**2, axis=1))
    p = 1.0 if params.p_is_inf else float(params.p)
    return float(np.max((1.0 + r ** (u.grid.n + params.beta * p)) * np.abs(u.flat) ** p))


def multiply_by_class_function(
    u: SampledFunction,
    phi: ClosedForm,
    params: NormParams,
    d: DomainSpec | None = None,
    cfg: QuadratureConfig | None = None,
    check_membership: bool = True,
) -> NormReport:
    """Full norm of the product u*phi, with sup (1 + |x|^(p beta)) |u phi|^p alongside.

    In 1D the factor is first run through the strip-norm membership check
    (p = 1); a failing factor yields a divergent report. Pass
    ``check_membership=False`` to multiply by factors outside the class,
    such as constants.
    """
    from .schwartz_class import class_membership_report

    g = u.grid
    base = dict(beta=params.beta, p=params.p, weight_mode=params.weight_mode.value, h=g.h)
    if check_membership and g.n == 1:
        member = class_membership_report(phi, max_p=1)
        if member.excluded_at is not None:
            return NormReport(value=math.inf, verdict="divergent", evidence=[member.verdict], **base)
    phis = sample(phi, g)
    prod = SampledFunction(g, u.values * phis.values)
    rep = full_norm(prod, params, d, cfg)
    v = restrict(prod, d)
    pts = v.grid.points()
    p = 1.0 if params.p_is_inf else float(params.p)
    r = np.sqrt(np.sum(pts**2, axis=1))
    sup = float(np.max((1.0 + r ** (p * params.beta)) * np.abs(v.flat) ** p))
    rep.extra.update(
        {
            "sup_weighted_product": sup,
            "phi_max": float(np.max(np.abs(restrict(phis, d).flat))),
            "u_lp": lp_norm(u, params.p, d),
        }
    )
    return rep
