"""Grids, domains, sampled functions and norm parameters."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import ClosedForm

# relative tolerance (in units of the spacing) for deciding node membership
_NODE_TOL = 1e-9


class PInf(enum.Enum):
    """The exponent p = infinity; never represented as a large float."""

    INF = "inf"

    def __str__(self) -> str:
        return "inf"


INF = PInf.INF


class WeightMode(str, enum.Enum):
    CLASSICAL = "classical"
    ULTRA = "ultra"


def parse_p(value) -> float | PInf:
    if value is INF or (isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞")):
        return INF
    p = float(value)
    if math.isinf(p):
        return INF
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1 or inf, got {value!r}")
    return p


@dataclass(frozen=True)
class Grid:
    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    count: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))
        object.__setattr__(self, "count", tuple(int(v) for v in self.count))
        if not (len(self.origin) == len(self.spacing) == len(self.count)):
            raise ValueError("origin, spacing and count must have one entry per axis")
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if any(h <= 0 for h in self.spacing):
            raise ValueError("grid spacing must be strictly positive")
        if any(c < 2 for c in self.count):
            raise ValueError("grid needs at least 2 nodes per axis")

    @classmethod
    def from_domain(cls, domain: "DomainSpec", h: float | tuple[float, ...]) -> "Grid":
        """Uniform grid with nodes on both box faces; the box must be a whole
        number of cells (within round-off) along every axis."""
        hs = (h,) * domain.n if np.isscalar(h) else tuple(h)
        counts = []
        for (lo, hi), hh in zip(domain.bounds, hs):
            cells = (hi - lo) / hh
            k = round(cells)
            if abs(cells - k) > 1e-6 * max(1.0, cells):
                raise ValueError(f"extent {hi - lo} is not a multiple of h={hh}")
            counts.append(k + 1)
        return cls(tuple(lo for lo, _ in domain.bounds), hs, tuple(counts))

    @property
    def n(self) -> int:
        return len(self.count)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.count

    @property
    def size(self) -> int:
        return int(np.prod(self.count))

    @property
    def h(self) -> float:
        """Spacing of the first axis (grids here are isotropic in practice)."""
        return self.spacing[0]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(c) for o, h, c in zip(self.origin, self.spacing, self.count)]

    def points(self) -> np.ndarray:
        """Node coordinates of shape (size, n), C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def extent(self) -> tuple[tuple[float, float], ...]:
        return tuple((o, o + h * (c - 1)) for o, h, c in zip(self.origin, self.spacing, self.count))

    def coarsen(self) -> "Grid":
        """Every other node along each axis."""
        return Grid(self.origin, tuple(2 * h for h in self.spacing), tuple((c + 1) // 2 for c in self.count))


@dataclass(frozen=True)
class DomainSpec:
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", b)
        if len(b) not in (1, 2):
            raise ValueError("domain dimension must be 1 or 2")
        for lo, hi in b:
            if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
                raise ValueError(f"invalid interval [{lo}, {hi}]")

    @classmethod
    def parse(cls, text: str) -> "DomainSpec":
        """Parse ``"lo:hi"`` or ``"lo:hi,lo:hi"``."""
        try:
            parts = [tuple(float(v) for v in axis.split(":")) for axis in text.split(",")]
        except ValueError as exc:
            raise ValueError(f"malformed domain {text!r}") from exc
        if any(len(p) != 2 for p in parts):
            raise ValueError(f"malformed domain {text!r}")
        return cls(tuple(parts))  # type: ignore[arg-type]

    @classmethod
    def box(cls, lo: float, hi: float, n: int = 1) -> "DomainSpec":
        return cls(((lo, hi),) * n)

    @property
    def n(self) -> int:
        return len(self.bounds)

    @property
    def diameter(self) -> float:
        return math.sqrt(sum((hi - lo) ** 2 for lo, hi in self.bounds))

    def contains(self, other: "DomainSpec", tol: float = 0.0) -> bool:
        return all(
            lo - tol <= olo and ohi <= hi + tol for (lo, hi), (olo, ohi) in zip(self.bounds, other.bounds)
        )

    def __str__(self) -> str:
        return ",".join(f"{lo:g}:{hi:g}" for lo, hi in self.bounds)


@dataclass(frozen=True)
class NormParams:
    beta: float
    p: float | PInf = 2.0
    n: int = 1
    weight_mode: WeightMode = WeightMode.CLASSICAL

    def __post_init__(self):
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "p", parse_p(self.p))
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.n not in (1, 2):
            raise ValueError("n must be 1 or 2")

    @property
    def p_is_inf(self) -> bool:
        return self.p is INF

    @property
    def k(self) -> int:
        """Integer order ceil(beta) used by the weak-derivative norm."""
        return int(math.ceil(self.beta - 1e-12))

    def weight_exponent(self) -> float:
        """Exponent of |xi| in the ultra weight (1 + |xi|^e)."""
        if self.p_is_inf:
            return self.n + self.beta
        return self.n + self.p * self.beta

    def weight(self, points: np.ndarray) -> np.ndarray:
        """Pointwise weight at points of shape (m, n)."""
        pts = np.asarray(points, dtype=float).reshape(len(points), -1)
        if self.weight_mode is WeightMode.CLASSICAL:
            return np.ones(len(pts))
        r = np.sqrt(np.sum(pts**2, axis=1))
        return 1.0 + r ** self.weight_exponent()

    def require_fractional(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0,1)")

    def to_json(self) -> dict:
        return {
            "beta": self.beta,
            "p": "inf" if self.p_is_inf else self.p,
            "n": self.n,
            "weight_mode": self.weight_mode.value,
        }


@dataclass(frozen=True, eq=False)
class SampledFunction:
    grid: Grid
    values: np.ndarray
    source: ClosedForm | None = field(default=None)

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(self.grid.shape)
        if vals.size != self.grid.size:
            raise ValueError("values must have one entry per grid node")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values, keep_source: bool = False) -> "SampledFunction":
        return SampledFunction(self.grid, values, self.source if keep_source else None)

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        _same_grid(self, other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        _same_grid(self, other)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "SampledFunction":
        return SampledFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__


def _same_grid(a: SampledFunction, b: SampledFunction) -> None:
    if a.grid != b.grid:
        raise ValueError("sampled functions live on different grids")


def sample(f: ClosedForm, grid: Grid) -> SampledFunction:
    """Evaluate a closed form at every node of ``grid``."""
    pts = grid.points()
    vals = f.evaluate(pts)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        loc = pts[np.argmax(bad)]
        raise ValueError(f"{f.id} has a pole on the grid at {tuple(float(v) for v in loc)}")
    return SampledFunction(grid, vals.reshape(grid.shape), f)


def _axis_slice(axis: np.ndarray, h: float, lo: float, hi: float) -> slice:
    tol = _NODE_TOL * h
    idx = np.nonzero((axis >= lo - tol) & (axis <= hi + tol))[0]
    if idx.size == 0:
        raise ValueError(f"domain [{lo}, {hi}] contains no grid nodes")
    return slice(int(idx[0]), int(idx[-1]) + 1)


def restrict(u: SampledFunction, d: DomainSpec | None) -> SampledFunction:
    """Values of ``u`` on the grid nodes inside ``d``."""
    if d is None:
        return u
    g = u.grid
    if d.n != g.n:
        raise ValueError("domain and grid dimensions differ")
    tol = tuple(_NODE_TOL * h for h in g.spacing)
    for (lo, hi), (elo, ehi), t in zip(d.bounds, g.extent(), tol):
        if hi < elo - t or lo > ehi + t:
            raise ValueError("domain does not intersect the grid")
        if lo < elo - t or hi > ehi + t:
            raise ValueError(f"domain [{lo}, {hi}] is not inside the grid extent [{elo}, {ehi}]")
    slices = tuple(_axis_slice(ax, h, lo, hi) for ax, h, (lo, hi) in zip(g.axes(), g.spacing, d.bounds))
    counts = tuple(s.stop - s.start for s in slices)
    if any(c < 2 for c in counts):
        raise ValueError("restriction leaves fewer than 2 nodes on an axis")
    if counts == g.count:
        return u
    origin = tuple(ax[s.start] for ax, s in zip(g.axes(), slices))
    sub = Grid(origin, g.spacing, counts)
    return SampledFunction(sub, u.values[slices], u.source)


def sample_on(f: ClosedForm, d: DomainSpec, h: float) -> SampledFunction:
    return sample(f, Grid.from_domain(d, h))
