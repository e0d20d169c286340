"""Experiment configs, the four inequality/convergence experiments, and CSV reports.

Every row carries its claim id, the measured quantities and a verdict; the
overall outcome is recomputable from the rows (it fails iff some row says
"fail"). Rows are produced in a fixed order and floats are written with
``repr``, so identical configs give byte-identical CSV regardless of the
worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core_types import INF, DomainSpec, Grid, NormParams, SampledFunction, WeightMode, restrict, sample, sample_on
from .corpus import ClosedForm, corpus, corpus_version, get_member
from .operators import (
    cutoff_interior_extension,
    extension_operator_norm,
    mollify,
    zero_extension,
)
from .schwartz_class import eta_seminorm
from .singular_quadrature import (
    QuadratureConfig,
    full_norm_value,
    gagliardo_seminorm,
    holder_seminorm,
    lp_norm,
)
from .spectral import DecayError, DecayWarning

SCHEMA_VERSION = 1
EXPERIMENTS = ("embed", "density", "extend", "sweep")
CSV_HEADER = [
    "claim_id", "member", "beta", "betaprime", "p", "weight_mode", "h",
    "value_lhs", "value_rhs", "constant", "verdict", "config_hash", "corpus_version",
]
FAIL = "fail"


class ConfigError(ValueError):
    """Malformed experiment config or unknown corpus id."""


# -- config -------------------------------------------------------------------


@dataclass(frozen=True)
class ParamSpec:
    params: NormParams
    beta_prime: float | None = None

    @classmethod
    def from_json(cls, obj: dict, n: int) -> "ParamSpec":
        try:
            params = NormParams(obj["beta"], obj.get("p", 2.0), n, obj.get("weight_mode", "classical"))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad params entry {obj!r}: {exc}") from exc
        bp = obj.get("beta_prime")
        return cls(params, None if bp is None else float(bp))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    members: tuple[str, ...]
    params: tuple[ParamSpec, ...]
    domain: DomainSpec
    resolutions: tuple[float, ...]
    truncation_radii: tuple[float, ...] = ()
    output: str | None = None
    strict: bool = False
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {obj.get('schema_version')!r} (expected {SCHEMA_VERSION})")
        exp = obj.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r}; expected one of {', '.join(EXPERIMENTS)}")
        try:
            domain = DomainSpec.parse(obj["domain"])
        except KeyError as exc:
            raise ConfigError("config is missing 'domain'") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        members = tuple(obj.get("members", []))
        known = corpus()
        unknown = [m for m in members if m not in known]
        if unknown:
            raise ConfigError(f"unknown corpus id(s): {', '.join(unknown)}")
        if not members:
            raise ConfigError("config lists no members")
        res = tuple(float(h) for h in obj.get("resolutions", []))
        if len(res) < 2:
            raise ConfigError("at least two resolutions are required")
        if any(not h > 0 for h in res):
            raise ConfigError("resolutions must be positive")
        params = tuple(ParamSpec.from_json(p, domain.n) for p in obj.get("params", []))
        if exp != "sweep" and not params:
            raise ConfigError("config lists no params")
        return cls(
            experiment=exp,
            members=members,
            params=params,
            domain=domain,
            resolutions=tuple(sorted(res, reverse=True)),
            truncation_radii=tuple(float(r) for r in obj.get("truncation_radii", [])),
            output=obj.get("output"),
            strict=bool(obj.get("strict", False)),
            options=dict(obj.get("options", {})),
            raw=obj,
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config JSON: {exc}") from exc
        return cls.from_dict(obj)

    @property
    def config_hash(self) -> str:
        """sha256 of the canonical config JSON, ignoring where output goes."""
        body = {k: v for k, v in self.raw.items() if k != "output"}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- results --------------------------------------------------------------------


@dataclass
class Row:
    claim_id: str
    member: str
    beta: float | None
    betaprime: float | None
    p: object
    weight_mode: str | None
    h: float | None
    value_lhs: float | None
    value_rhs: float | None
    constant: float | None
    verdict: str


def _fmt(v) -> str:
    if v is None:
        return ""
    if v is INF:
        return "inf"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return repr(float(v))
    return str(v)


@dataclass
class ExperimentResult:
    experiment: str
    rows: list[Row]
    config_hash: str
    corpus_version: str

    @property
    def passed(self) -> bool:
        return not any(r.verdict == FAIL for r in self.rows)

    def failures(self) -> list[Row]:
        return [r for r in self.rows if r.verdict == FAIL]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(
                [_fmt(getattr(r, k)) for k in CSV_HEADER[:-2]] + [self.config_hash, self.corpus_version]
            )
        return buf.getvalue()


def passed_from_csv(text: str) -> bool:
    """Recompute the overall outcome from a CSV report."""
    return all(row["verdict"] != FAIL for row in csv.DictReader(io.StringIO(text)))


# -- helpers ---------------------------------------------------------------------


def _qcfg(cfg: ExperimentConfig, workers: int) -> QuadratureConfig:
    o = cfg.options
    return QuadratureConfig(
        puncture=float(o.get("puncture", 1.0)),
        tile_size=int(o.get("tile_size", 128)),
        workers=workers,
    )


def _row(claim, member, ps: NormParams | None, h, lhs, rhs, const, verdict, beta_prime=None, beta=None):
    return Row(
        claim_id=claim,
        member=member,
        beta=beta if beta is not None else (ps.beta if ps else None),
        betaprime=beta_prime,
        p=(INF if ps.p_is_inf else ps.p) if ps else None,
        weight_mode=ps.weight_mode.value if ps else None,
        h=h,
        value_lhs=lhs,
        value_rhs=rhs,
        constant=const,
        verdict=verdict,
    )


def _rel_change(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _stability_rows(claim, ps, per_h: dict, tol: float, label: str, beta_prime=None) -> list[Row]:
    """Compare a measured constant between the two finest resolutions."""
    hs = sorted(per_h, reverse=True)
    coarse, fine = hs[-2], hs[-1]
    a, b = per_h[coarse], per_h[fine]
    if a is None or b is None or not (math.isfinite(a) and math.isfinite(b)):
        return [_row(claim, label, ps, fine, a, b, None, FAIL, beta_prime)]
    ch = _rel_change(a, b)
    return [_row(claim, label, ps, fine, a, b, ch, "pass" if ch <= tol else FAIL, beta_prime)]


# -- embed ---------------------------------------------------------------------------


def embedding_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Three sub-checks.

    (a) [u]_{beta',p} <= 2^(1/p) [u]_{beta,p} on a unit-diameter box (params
        entries that carry ``beta_prime``);
    (b) ||u||_{L^p'} <= C ||u||, p' = np/(n - p beta), when p beta < n;
    (c) Holder seminorm of order beta - 1/p <= C' ||u||, when p beta > 1.
    (b) and (c) pass when the measured constant is finite and changes by at
    most ``stability_tol`` (default 10%) between the two finest resolutions.
    """
    q = _qcfg(cfg, workers)
    tol = float(cfg.options.get("stability_tol", 0.10))
    unit = DomainSpec.parse(cfg.options.get("unit_domain", ",".join(["0:1"] * cfg.domain.n)))
    rows: list[Row] = []
    members = [get_member(m) for m in cfg.members]

    for spec in cfg.params:
        ps = spec.params
        if spec.beta_prime is None:
            continue
        if unit.diameter > 1 + 1e-12:
            rows.append(_row("P3.7i", "*", ps, None, None, None, None, "skip: domain diameter exceeds 1",
                             beta_prime=spec.beta_prime))
            continue
        if not 0 < spec.beta_prime < ps.beta < 1 or ps.p_is_inf:
            rows.append(_row("P3.7i", "*", ps, None, None, None, None, "skip: needs 0 < beta' < beta < 1, finite p",
                             beta_prime=spec.beta_prime))
            continue
        low = NormParams(spec.beta_prime, ps.p, ps.n, ps.weight_mode)
        const = 2.0 ** (1.0 / float(ps.p))
        for h in cfg.resolutions:
            for f in members:
                u = sample_on(f, unit, h)
                lhs = gagliardo_seminorm(u, low, unit, q).value
                rhs = const * gagliardo_seminorm(u, ps, unit, q).value
                ok = lhs <= rhs + 1e-9
                rows.append(_row("P3.7i", f.id, ps, h, lhs, rhs, const, "pass" if ok else FAIL,
                                 beta_prime=spec.beta_prime))

    for spec in cfg.params:
        if spec.beta_prime is not None:
            continue
        ps = spec.params
        n = ps.n
        p = math.inf if ps.p_is_inf else float(ps.p)
        if p * ps.beta < n:
            rows += _ratio_check(
                "C3.9i", cfg, ps, members, q, tol,
                lambda u, pp=n * p / (n - p * ps.beta): lp_norm(u, pp, cfg.domain),
                beta_prime=n * p / (n - p * ps.beta),
            )
        else:
            rows.append(_row("C3.9i", "*", ps, None, None, None, None, "skip: needs p*beta < n"))
        if p * ps.beta > 1 and ps.beta < 1:
            alpha = ps.beta - 1.0 / p
            rows += _ratio_check(
                "T4.2", cfg, ps, members, q, tol,
                lambda u: holder_seminorm(u, alpha, cfg.domain, cfg=q).value,
                beta_prime=alpha,
            )
        else:
            rows.append(_row("T4.2", "*", ps, None, None, None, None, "skip: needs 1 < p*beta, beta < 1"))

    return ExperimentResult("embed", rows, cfg.config_hash, corpus_version())


def _ratio_check(claim, cfg, ps, members, q, tol, lhs_fn, beta_prime) -> list[Row]:
    rows = []
    const_by_h = {}
    for h in cfg.resolutions:
        ratios = []
        for f in members:
            u = sample_on(f, cfg.domain, h)
            lhs = lhs_fn(u)
            rhs = full_norm_value(u, ps, cfg.domain, q)
            if rhs == 0:
                rows.append(_row(claim, f.id, ps, h, lhs, rhs, None, "degenerate-skip", beta_prime=beta_prime))
                continue
            ratio = lhs / rhs
            ratios.append(ratio)
            rows.append(_row(claim, f.id, ps, h, lhs, rhs, ratio, "measured", beta_prime=beta_prime))
        c = max(ratios) if ratios else None
        const_by_h[h] = c
        rows.append(_row(claim, "max", ps, h, None, None, c, "measured" if c is not None else "degenerate-skip",
                         beta_prime=beta_prime))
    if all(v is None for v in const_by_h.values()):
        return rows
    rows += _stability_rows(claim, ps, const_by_h, tol, "stability", beta_prime)
    return rows


# -- density -----------------------------------------------------------------------------


def density_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Mollifier ladder (L2.15) and the compactly supported smooth
    approximants rho_eps = mollify(cutoff extension of u, eps) (T2.18).

    Errors ||v - u|| are full norms on the configured domain. A ladder passes
    when the errors strictly decrease and the last one is below ``tolerance``
    (default 1e-2) at every resolution.
    """
    q = _qcfg(cfg, workers)
    o = cfg.options
    ladder = sorted((float(e) for e in o.get("epsilons", [0.4, 0.2, 0.1, 0.05])), reverse=True)
    tolerance = float(o.get("tolerance", 1e-2))
    margin = float(o.get("margin", 1.0))
    d = cfg.domain
    outer = DomainSpec(tuple((lo - margin, hi + margin) for lo, hi in d.bounds))
    rows: list[Row] = []

    for spec in cfg.params:
        ps = spec.params
        for f in (get_member(m) for m in cfg.members):
            last_by_h = {}
            for h in cfg.resolutions:
                u = sample_on(f, _padded(d, margin + max(ladder), h), h)
                ud = restrict(u, d)
                target = full_norm_value(ud, ps, d, q)
                if not math.isfinite(target):
                    rows.append(_row("T2.18", f.id, ps, h, None, None, None, "skip: target norm not finite"))
                    continue
                cut = cutoff_interior_extension(u, d, outer)
                for claim, base in (("L2.15", u), ("T2.18", cut)):
                    prev = None
                    for eps in ladder:
                        if eps < 2 * h:
                            rows.append(_row(claim, f.id, ps, h, None, None, eps, "skip: eps below 2h"))
                            continue
                        err = full_norm_value(restrict(mollify(base, eps), d) - ud, ps, d, q)
                        if prev is None:
                            verdict = "measured"
                        else:
                            verdict = "pass" if err < prev else FAIL
                        rows.append(_row(claim, f.id, ps, h, err, prev, eps, verdict))
                        prev = err
                    if claim == "T2.18":
                        last_by_h[h] = prev
                    if prev is not None:
                        rows.append(_row(claim, f.id, ps, h, prev, tolerance, min(ladder),
                                         "pass" if prev < tolerance else FAIL))
            if len(last_by_h) >= 2:
                # fixed eps, h -> 0: recorded, not judged
                hs = sorted(last_by_h, reverse=True)
                a, b = last_by_h[hs[-2]], last_by_h[hs[-1]]
                rows.append(_row("T2.18", f.id, ps, hs[-1], a, b, _rel_change(a, b), "measured"))

    return ExperimentResult("density", rows, cfg.config_hash, corpus_version())


def _padded(d: DomainSpec, pad: float, h: float) -> DomainSpec:
    """``d`` grown by at least ``pad``, rounded up to whole cells."""
    pad = math.ceil(pad / h - 1e-9) * h
    return DomainSpec(tuple((lo - pad, hi + pad) for lo, hi in d.bounds))


# -- extend ---------------------------------------------------------------------------------------


def extension_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Zero-extension constants M (L3.10) and m (T3.12), cutoff-extension
    bound (T3.15), support and round-trip checks.

    ``domain`` is the source box; ``options.target`` the larger box
    (default: the source scaled by 4).
    """
    q = _qcfg(cfg, workers)
    o = cfg.options
    tol = float(o.get("stability_tol", 0.05))
    src = cfg.domain
    tgt = DomainSpec.parse(o["target"]) if "target" in o else DomainSpec(
        tuple((4 * lo, 4 * hi) for lo, hi in src.bounds)
    )
    if not tgt.contains(src):
        raise ConfigError("options.target must contain the domain")
    members = [get_member(m) for m in cfg.members]
    rows: list[Row] = []
    for spec in cfg.params:
        ps = spec.params
        big_m, small_m, cut_m = {}, {}, {}
        for h in cfg.resolutions:
            g = Grid.from_domain(tgt, h)
            usable, sampled = [], []
            for f in members:
                u = sample(f, g)
                sampled.append(u)
                try:
                    e = zero_extension(u, src, tgt)
                except ValueError as exc:
                    rows.append(_row("L3.10", f.id, ps, h, None, None, None, f"skip: {exc}"))
                    continue
                usable.append(u)
                same_lp = lp_norm(e, ps.p, tgt) == lp_norm(u, ps.p, src)
                back = np.array_equal(restrict(e, src).values, restrict(u, src).values)
                rows.append(_row("L3.10", f.id, ps, h, lp_norm(e, ps.p, tgt), lp_norm(u, ps.p, src), None,
                                 "pass" if same_lp and back else FAIL))
            rep = extension_operator_norm(usable, ps, src, tgt, h, q) if usable else None
            for r in rep.rows if rep else []:
                verdict = "degenerate-skip" if r.ratio is None else (
                    "pass" if math.isfinite(r.ratio) and r.ratio > 0 else FAIL
                )
                rows.append(_row("L3.10", r.member, ps, h, r.norm_after, r.norm_before, r.ratio, verdict))
            if rep is not None:
                rows.append(_row("L3.10", "support", ps, h, None, None, None, "pass" if rep.support_ok else FAIL))
            if rep is not None and rep.ratios:
                big_m[h], small_m[h] = rep.max_ratio, rep.min_ratio
                ok = 0 < rep.min_ratio <= rep.max_ratio < math.inf
                rows.append(_row("L3.10", "max", ps, h, None, None, rep.max_ratio, "pass" if ok else FAIL))
                rows.append(_row("T3.12", "min", ps, h, None, None, rep.min_ratio, "pass" if ok else FAIL))

            # cutoff extension from the source box to the target box (any member)
            ratios = []
            for full in sampled:
                star = cutoff_interior_extension(full, src, tgt)
                ident = float(np.max(np.abs(restrict(star, src).values - restrict(full, src).values)))
                outside = _outside_values(star, tgt)
                before = full_norm_value(full, ps, src, q)
                after = full_norm_value(star, ps, tgt, q)
                ok = ident <= 1e-12 and outside == 0.0
                rows.append(_row("T3.15", full.source.id, ps, h, after, before, ident, "pass" if ok else FAIL))
                if before > 0:
                    ratios.append(after / before)
            if ratios:
                cut_m[h] = max(ratios)
                rows.append(_row("T3.15", "max", ps, h, None, None, cut_m[h], "measured"))
        for claim, per_h in (("L3.10", big_m), ("T3.12", small_m), ("T3.15", cut_m)):
            if len(per_h) >= 2:
                rows += _stability_rows(claim, ps, per_h, tol, "stability")
    return ExperimentResult("extend", rows, cfg.config_hash, corpus_version())


def _outside_values(u: SampledFunction, outer: DomainSpec) -> float:
    """Max |u| on nodes strictly outside ``outer`` shrunk by a node (0 if none)."""
    pts = u.grid.points()
    h = u.grid.h
    inside = np.ones(len(pts), dtype=bool)
    for axis, (lo, hi) in enumerate(outer.bounds):
        inside &= (pts[:, axis] > lo + h / 2) & (pts[:, axis] < hi - h / 2)
    vals = np.abs(u.flat[~inside])
    return float(vals.max()) if vals.size else 0.0


# -- sweep ------------------------------------------------------------------------------------------


def _richardson(values: list[float]) -> tuple[list[float], list[float | None], bool]:
    """Successive differences, observed orders log2(d_k / d_{k+1}), and
    whether every difference is at round-off level."""
    diffs = [b - a for a, b in zip(values, values[1:])]
    scale = max(abs(v) for v in values) or 1.0
    tiny = 1e-12 * scale
    orders = []
    for d0, d1 in zip(diffs, diffs[1:]):
        if abs(d0) <= tiny or abs(d1) <= tiny:
            orders.append(None)
        else:
            orders.append(math.log2(abs(d0) / abs(d1)))
    return diffs, orders, all(abs(d) <= tiny for d in diffs[1:])


def convergence_sweep(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Refinement sweeps of lp_norm and gagliardo_seminorm per member and
    params, plus eta seminorm verdicts (``options.eta`` = [[beta, i], ...])
    whose finiteness must agree at every resolution.

    A norm passes when its refinement differences shrink by at least
    ``options.min_ratio`` (default 1.5) or sit at round-off; the Gagliardo
    estimates must also be monotone.
    """
    if len(cfg.resolutions) < 3:
        raise ConfigError("the convergence sweep needs at least three resolutions")
    q = _qcfg(cfg, workers)
    min_ratio = float(cfg.options.get("min_ratio", 1.5))
    eta_pairs = [tuple(int(v) for v in e) for e in cfg.options.get("eta", [])]
    rows: list[Row] = []
    d = cfg.domain
    for f in (get_member(m) for m in cfg.members):
        samples = [sample_on(f, d, h) for h in cfg.resolutions]
        for spec in cfg.params:
            ps = spec.params
            lp = [lp_norm(u, ps.p, d) for u in samples]
            rows += _sweep_rows("sweep:lp", f.id, ps, cfg.resolutions, lp, min_ratio, monotone=False)
            if ps.p_is_inf or not 0 < ps.beta < 1:
                continue
            sem = [gagliardo_seminorm(u, ps, d, q).value for u in samples]
            rows += _sweep_rows("sweep:gagliardo", f.id, ps, cfg.resolutions, sem, min_ratio, monotone=True)
        for beta, i in eta_pairs:
            trunc = float(cfg.options.get("eta_truncation", 32.0))
            res = [eta_seminorm(f, beta, i, trunc=trunc, dx=h) for h in cfg.resolutions]
            verdicts = {r.verdict for r in res}
            claim = f"sweep:eta_{beta}_{i}"
            for h, r in zip(cfg.resolutions, res):
                rows.append(_row(claim, f.id, None, h, r.truncation_values[-1][1], r.truncation_values[-2][1],
                                 None, r.verdict))
            label = f"{next(iter(verdicts))}-consistent" if len(verdicts) == 1 else FAIL
            rows.append(_row(claim, f.id, None, min(cfg.resolutions), None, None, None, label))
    return ExperimentResult("sweep", rows, cfg.config_hash, corpus_version())


def _sweep_rows(claim, member, ps, hs, values, min_ratio, monotone) -> list[Row]:
    rows = [_row(claim, member, ps, h, v, None, None, "measured") for h, v in zip(hs, values)]
    diffs, orders, roundoff = _richardson(values)
    ok = True
    if monotone and not roundoff:
        ok &= all(x >= 0 for x in diffs) or all(x <= 0 for x in diffs)
    for o in orders:
        if o is not None:
            ok &= 2.0**o >= min_ratio
    worst = min((o for o in orders if o is not None), default=None)
    rows.append(_row(claim, member, ps, hs[-1], diffs[-1], diffs[-2] if len(diffs) > 1 else None, worst,
                     "pass" if ok else FAIL))
    return rows


RUNNERS = {
    "embed": embedding_experiment,
    "density": density_experiment,
    "extend": extension_experiment,
    "sweep": convergence_sweep,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    with warnings.catch_warnings():
        if cfg.strict:
            warnings.simplefilter("error", DecayWarning)
        try:
            return RUNNERS[cfg.experiment](cfg, workers)
        except DecayWarning as exc:
            raise DecayError(str(exc)) from exc
