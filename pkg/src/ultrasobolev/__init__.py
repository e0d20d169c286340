"""Numerical toolkit for weighted fractional Sobolev-type norms on boxes in R^1 and R^2."""

__version__ = "0.1.0"

from .core_types import INF, DomainSpec, Grid, NormParams, SampledFunction, WeightMode, restrict, sample, sample_on
from .corpus import ClosedForm, corpus, corpus_version, get_member
from .singular_quadrature import (
    NormReport,
    QuadratureConfig,
    full_norm,
    gagliardo_seminorm,
    holder_seminorm,
    lp_norm,
    sobolev_integer_norm,
)

__all__ = [
    "INF",
    "ClosedForm",
    "DomainSpec",
    "Grid",
    "NormParams",
    "NormReport",
    "QuadratureConfig",
    "SampledFunction",
    "WeightMode",
    "corpus",
    "corpus_version",
    "full_norm",
    "gagliardo_seminorm",
    "get_member",
    "holder_seminorm",
    "lp_norm",
    "restrict",
    "sample",
    "sample_on",
    "sobolev_integer_norm",
]
