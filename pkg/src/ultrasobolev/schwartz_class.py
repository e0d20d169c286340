"""Rapid-descent seminorms, strip norms and membership diagnostics.

Non-membership is a result, not an exception: every routine returns a
verdict ("finite"/"divergent", "member"/"excluded", ...) together with the
evidence it was based on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import MAX_DERIVATIVE, ClosedForm

GROWTH_THRESHOLD = 0.01
MAX_CLASS_P = 4


@dataclass(frozen=True)
class StripSpec:
    """Sampling plan for a strip |Im xi| < half_width.

    Lines sit at Im xi = +-(half_width - standoff) k / lines, k = 0..lines;
    Re xi runs over [-x_max, x_max] with spacing dx, checked at x_max/4,
    x_max/2 and x_max for growth.
    """

    half_width: float
    lines: int = 64
    standoff: float | None = None
    x_max: float = 16.0
    dx: float = 1.0 / 64

    @property
    def delta(self) -> float:
        return 1e-3 * self.half_width if self.standoff is None else self.standoff


@dataclass
class StripReport:
    p: int
    half_width: float
    value: float
    verdict: str
    witness: complex | None
    witness_on_outer_line: bool
    lines_sampled: int
    reason: str = ""
    truncation_values: list = field(default_factory=list)

    @property
    def finite(self) -> bool:
        return self.verdict == "finite"

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "half_width": self.half_width,
            "value": self.value if self.finite else "divergent",
            "verdict": self.verdict,
            "witness": None if self.witness is None else [self.witness.real, self.witness.imag],
            "witness_on_outer_line": self.witness_on_outer_line,
            "lines_sampled": self.lines_sampled,
            "reason": self.reason,
            "truncation_values": self.truncation_values,
        }


@dataclass
class EtaResult:
    beta: int
    order: int
    value: float
    verdict: str
    witness: float
    truncation_values: list

    @property
    def finite(self) -> bool:
        return self.verdict == "finite"


@dataclass
class SeminormLattice:
    max_beta: int
    max_order: int
    table: dict  # (beta, i) -> EtaResult

    def finite(self, beta: int, i: int) -> bool:
        return self.table[(beta, i)].finite

    def matrix(self) -> list[list[str]]:
        return [
            [f"{self.table[(b, i)].value:.6g}" if self.finite(b, i) else "div" for i in range(self.max_order + 1)]
            for b in range(self.max_beta + 1)
        ]

    def to_json(self) -> dict:
        return {
            "max_beta": self.max_beta,
            "max_order": self.max_order,
            "table": [
                {"beta": b, "i": i, "value": r.value if r.finite else "divergent", "witness": r.witness}
                for (b, i), r in sorted(self.table.items())
            ],
        }


def _nested_sups(values: np.ndarray, x: np.ndarray, x_max: float):
    """Sups over |Re x| <= x_max/4, x_max/2, x_max (nested, so nondecreasing)."""
    sups = []
    for frac in (0.25, 0.5, 1.0):
        mask = np.abs(x) <= x_max * frac + 1e-12
        sups.append(float(np.max(values[..., mask])))
    return sups


def _grows(sups: list[float], threshold: float = GROWTH_THRESHOLD) -> bool:
    prev, last = sups[-2], sups[-1]
    if not math.isfinite(last):
        return True
    if prev <= 0:
        return last > 0
    return (last - prev) / prev > threshold


def eta_seminorm(f: ClosedForm, beta: int, i: int, trunc: float = 32.0, dx: float = 1.0 / 64) -> EtaResult:
    """sup over real x of (1 + |x|^beta) |D^i f(x)| with truncation growth monitoring.

    Divergent when the sup still grows by more than 1% over the last
    doubling of the truncation radius.
    """
    if i > MAX_DERIVATIVE or i < 0:
        raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE}]")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    m = int(round(trunc / dx))
    x = dx * np.arange(-m, m + 1)
    # beta = 0 is the unweighted sup (|x|^0 = 1), not 2 sup|D^i f|
    weight = np.ones_like(x) if beta == 0 else 1.0 + np.abs(x) ** beta
    vals = weight * np.abs(f.derivative(i)(x))
    vals = np.where(np.isfinite(vals), vals, np.inf)
    sups = _nested_sups(vals, x, trunc)
    j = int(np.argmax(vals))
    divergent = _grows(sups)
    return EtaResult(
        beta=beta,
        order=i,
        value=math.inf if divergent else sups[-1],
        verdict="divergent" if divergent else "finite",
        witness=float(x[j]),
        truncation_values=[[trunc * fr, s] for fr, s in zip((0.25, 0.5, 1.0), sups)],
    )


def seminorm_lattice(f: ClosedForm, max_beta: int = 4, max_order: int = 4, trunc: float = 32.0) -> SeminormLattice:
    table = {(b, i): eta_seminorm(f, b, i, trunc) for b in range(max_beta + 1) for i in range(max_order + 1)}
    return SeminormLattice(max_beta, max_order, table)


def strip_norm(f: ClosedForm, p: int, spec: StripSpec | None = None) -> StripReport:
    """sup of (1 + |xi|^p) |f(xi)| over the open strip |Im xi| < p."""
    if p < 1:
        raise ValueError("p must be a positive integer")
    spec = spec or StripSpec(half_width=float(p))
    width = spec.half_width
    lines = 2 * spec.lines + 1
    if not f.analytic:
        return StripReport(p, width, math.inf, "divergent", None, False, 0, "not analytic off the real axis")
    inside = [y for y in f.pole_ordinates if abs(y) <= width]
    if inside:
        # a pole on the closed strip makes the sup over the open strip infinite
        return StripReport(p, width, math.inf, "divergent", complex(0, inside[0]), False, 0,
                           f"pole ordinate {inside[0]:g} within |Im| <= {width:g}")
    top = width - spec.delta
    ys = top * np.arange(-spec.lines, spec.lines + 1) / spec.lines
    m = int(round(spec.x_max / spec.dx))
    x = spec.dx * np.arange(-m, m + 1)
    z = x[None, :] + 1j * ys[:, None]
    vals = (1.0 + np.abs(z) ** p) * np.abs(f(z))
    vals = np.where(np.isfinite(vals), vals, np.inf)
    sups = _nested_sups(vals, x, spec.x_max)
    flat = int(np.argmax(vals))
    r, c = divmod(flat, vals.shape[1])
    witness = complex(x[c], ys[r])
    trunc = [[spec.x_max * fr, s] for fr, s in zip((0.25, 0.5, 1.0), sups)]
    if _grows(sups):
        return StripReport(p, width, math.inf, "divergent", witness, False, lines,
                           "sup grows under truncation doubling", trunc)
    return StripReport(p, width, sups[-1], "finite", witness, bool(abs(abs(ys[r]) - top) < 1e-15), lines, "", trunc)


@dataclass
class MembershipReport:
    member: str
    max_p: int
    strips: list[StripReport]
    excluded_at: int | None

    @property
    def verdict(self) -> str:
        if self.excluded_at is None:
            return f"member up to p={self.max_p}"
        return f"excluded at p={self.excluded_at}"

    def to_json(self) -> dict:
        return {
            "member": self.member,
            "max_p": self.max_p,
            "verdict": self.verdict,
            "excluded_at": self.excluded_at,
            "strips": [s.to_json() for s in self.strips],
        }


def class_membership_report(f: ClosedForm, max_p: int = MAX_CLASS_P, spec_factory=None) -> MembershipReport:
    """Strip-norm verdicts for p = 1..max_p; the first divergent p excludes."""
    if not 1 <= max_p <= MAX_CLASS_P:
        raise ValueError(f"max_p must be in [1, {MAX_CLASS_P}]")
    strips = []
    excluded = None
    for p in range(1, max_p + 1):
        spec = spec_factory(p) if spec_factory else None
        rep = strip_norm(f, p, spec)
        strips.append(rep)
        if not rep.finite and excluded is None:
            excluded = p
    return MembershipReport(f.id, max_p, strips, excluded)


@dataclass
class VanishingReport:
    ys: list[float]
    max_jump: list[float]
    verdict: str

    def to_json(self) -> dict:
        return {"y": self.ys, "max_jump": self.max_jump, "verdict": self.verdict}


def vanishing_check(f, interval: tuple[float, float], y_sweep, points: int = 2001, tol: float = 1e-8) -> VanishingReport:
    """max over x in the interval of |f(x+iy) - f(x-iy)| for each y of a decreasing sweep.

    "vanishes" when the sequence is nonincreasing and its last entry is below ``tol``.
    """
    ys = [float(y) for y in y_sweep]
    if any(y <= 0 for y in ys) or any(b >= a for a, b in zip(ys, ys[1:])):
        raise ValueError("y_sweep must be strictly decreasing positives")
    x = np.linspace(interval[0], interval[1], points)
    jumps = []
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for y in ys:
            diff = np.abs(f(x + 1j * y) - f(x - 1j * y))
            jumps.append(float(np.max(np.where(np.isfinite(diff), diff, np.inf))))
    ok = all(b <= a for a, b in zip(jumps, jumps[1:])) and jumps[-1] < tol
    return VanishingReport(ys, jumps, "vanishes" if ok else "does not vanish")
