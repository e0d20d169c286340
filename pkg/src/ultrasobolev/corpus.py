"""Closed-form test functions and the versioned corpus manifest.

Each member is evaluable on real grids (n = 1, 2) and, in one dimension, on
horizontal lines of the complex plane. Derivatives up to order 4 are
available in closed form for one-dimensional members.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

import numpy as np
import sympy

KINDS = (
    "gaussian",
    "bump",
    "lorentzian",
    "sech",
    "polynomial_decay",
    "linear_ramp",
    "constant",
    "reciprocal",
)

# compactly supported kinds have no holomorphic extension off the real axis
_NOT_ANALYTIC = {"bump"}

_REQUIRED = {
    "gaussian": ("a",),
    "bump": ("c", "r"),
    "polynomial_decay": ("k",),
    "constant": ("c",),
}

MAX_DERIVATIVE = 4


def _sech_ordinates(count: int = 4) -> tuple[float, ...]:
    pos = [(k + 0.5) * math.pi for k in range(count)]
    return tuple(sorted([-v for v in pos] + pos))


def default_poles(kind: str) -> tuple[float, ...]:
    if kind in ("lorentzian", "polynomial_decay"):
        return (-1.0, 1.0)
    if kind == "sech":
        return _sech_ordinates()
    if kind == "reciprocal":
        return (0.0,)
    return ()


@dataclass(frozen=True)
class ClosedForm:
    id: str
    kind: str
    params: tuple[tuple[str, float], ...] = ()
    pole_ordinates: tuple[float, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown closed-form kind {self.kind!r}")
        names = {k for k, _ in self.params}
        missing = [k for k in _REQUIRED.get(self.kind, ()) if k not in names]
        if missing:
            raise ValueError(f"{self.kind} needs parameters {missing}")
        if self.kind == "bump" and self.param("r") <= 0:
            raise ValueError("bump radius must be positive")
        if self.pole_ordinates is None:
            object.__setattr__(self, "pole_ordinates", default_poles(self.kind))
        else:
            object.__setattr__(self, "pole_ordinates", tuple(sorted(float(v) for v in self.pole_ordinates)))

    @classmethod
    def make(cls, kind: str, id: str | None = None, **params) -> "ClosedForm":
        return cls(id=id or kind, kind=kind, params=tuple(sorted((k, float(v)) for k, v in params.items())))

    def param(self, name: str) -> float:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)

    @property
    def analytic(self) -> bool:
        """True when the function extends holomorphically off the real axis
        away from the horizontal lines listed in ``pole_ordinates``."""
        return self.kind not in _NOT_ANALYTIC

    @property
    def entire(self) -> bool:
        return self.analytic and not self.pole_ordinates

    @property
    def symmetry(self) -> str:
        if self.kind == "bump" and self.param("c") != 0.0:
            return "none"
        if self.kind in ("linear_ramp", "reciprocal"):
            return "odd"
        return "even"

    # -- evaluation -----------------------------------------------------
    def __call__(self, z):
        """Evaluate at complex (or real) points of one variable."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return _eval_1d(self.kind, dict(self.params), z)

    def evaluate(self, points) -> np.ndarray:
        """Evaluate at real points of shape (m, n)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[1] == 1:
            return self(pts[:, 0])
        p = dict(self.params)
        r2 = np.sum(pts**2, axis=1)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.kind == "gaussian":
                out = np.exp(-p["a"] * r2)
            elif self.kind == "bump":
                t2 = np.sum((pts - p["c"]) ** 2, axis=1) / p["r"] ** 2
                out = np.zeros(len(pts))
                inside = t2 < 1.0
                out[inside] = np.exp(-1.0 / (1.0 - t2[inside]))
            elif self.kind == "lorentzian":
                out = 1.0 / (1.0 + r2)
            elif self.kind == "polynomial_decay":
                out = (1.0 + r2) ** (-p["k"])
            elif self.kind == "sech":
                out = np.prod(1.0 / np.cosh(pts), axis=1)
            elif self.kind == "linear_ramp":
                out = pts[:, 0].copy()
            elif self.kind == "constant":
                out = np.full(len(pts), p["c"])
            else:
                out = 1.0 / pts[:, 0]
        return np.asarray(out, dtype=complex)

    def derivative(self, order: int):
        """Closed-form derivative of the given order as a 1D complex evaluator."""
        if order < 0 or order > MAX_DERIVATIVE:
            raise ValueError(f"derivative order must be in [0, {MAX_DERIVATIVE}]")
        if order == 0:
            return self
        fn = _derivative_fn(self.kind, self.params, order)
        if self.kind == "bump":
            c, r = self.param("c"), self.param("r")

            def masked(z):
                z = np.asarray(z, dtype=complex)
                out = np.zeros(z.shape, dtype=complex)
                inside = np.abs(z.real - c) < r
                with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                    out[inside] = fn(z[inside])
                return out

            return masked

        def wrapped(z):
            z = np.asarray(z, dtype=complex)
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return np.asarray(fn(z), dtype=complex) * np.ones(z.shape)

        return wrapped

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "params": dict(self.params),
            "pole_ordinates": list(self.pole_ordinates),
        }


def _eval_1d(kind: str, p: Mapping[str, float], z: np.ndarray) -> np.ndarray:
    if kind == "gaussian":
        return np.exp(-p["a"] * z * z)
    if kind == "bump":
        out = np.zeros(z.shape, dtype=complex)
        inside = np.abs(z.real - p["c"]) < p["r"]
        t = (z[inside] - p["c"]) / p["r"]
        out[inside] = np.exp(-1.0 / (1.0 - t * t))
        return out
    if kind == "lorentzian":
        return 1.0 / (1.0 + z * z)
    if kind == "polynomial_decay":
        return (1.0 + z * z) ** (-p["k"])
    if kind == "sech":
        return 1.0 / np.cosh(z)
    if kind == "linear_ramp":
        return z.copy()
    if kind == "constant":
        return np.full(z.shape, p["c"], dtype=complex)
    return 1.0 / z


def _sympy_expr(kind: str, p: Mapping[str, float]):
    z = sympy.Symbol("z")
    if kind == "gaussian":
        e = sympy.exp(-sympy.Float(p["a"]) * z**2)
    elif kind == "bump":
        t = (z - sympy.Float(p["c"])) / sympy.Float(p["r"])
        e = sympy.exp(-1 / (1 - t**2))
    elif kind == "lorentzian":
        e = 1 / (1 + z**2)
    elif kind == "polynomial_decay":
        e = (1 + z**2) ** (-sympy.Float(p["k"]))
    elif kind == "sech":
        e = 1 / sympy.cosh(z)
    elif kind == "linear_ramp":
        e = z
    elif kind == "constant":
        e = sympy.Float(p["c"])
    else:
        e = 1 / z
    return z, e


@lru_cache(maxsize=None)
def _derivative_fn(kind: str, params: tuple, order: int):
    z, e = _sympy_expr(kind, dict(params))
    return sympy.lambdify(z, sympy.diff(e, z, order), "numpy")


# -- manifest ------------------------------------------------------------

MANIFEST = "corpus_v1.json"


@lru_cache(maxsize=None)
def _load_manifest(name: str = MANIFEST) -> tuple[str, tuple[ClosedForm, ...]]:
    text = resources.files("ultrasobolev.data").joinpath(name).read_text()
    raw = json.loads(text)
    members = []
    for m in raw["members"]:
        cf = ClosedForm(
            id=m["id"],
            kind=m["kind"],
            params=tuple(sorted((k, float(v)) for k, v in m.get("params", {}).items())),
            pole_ordinates=tuple(m.get("pole_ordinates", ())),
        )
        expected = default_poles(cf.kind)
        if not np.allclose(cf.pole_ordinates, expected):
            raise ValueError(f"manifest poles for {cf.id} disagree with kind {cf.kind}")
        members.append(cf)
    ids = [m.id for m in members]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate corpus ids")
    return str(raw["version"]), tuple(members)


def corpus_version() -> str:
    return _load_manifest()[0]


def corpus() -> dict[str, ClosedForm]:
    return {m.id: m for m in _load_manifest()[1]}


def get_member(member_id: str) -> ClosedForm:
    members = corpus()
    if member_id not in members:
        raise KeyError(f"unknown corpus id {member_id!r}; known: {', '.join(members)}")
    return members[member_id]


def compact_members(domain_bounds: tuple[float, float], margin: float = 0.0) -> list[ClosedForm]:
    """Corpus bumps whose support lies inside ``domain_bounds`` shrunk by ``margin``."""
    lo, hi = domain_bounds
    out = []
    for m in corpus().values():
        if m.kind != "bump":
            continue
        c, r = m.param("c"), m.param("r")
        if c - r > lo + margin and c + r < hi - margin:
            out.append(m)
    return out
