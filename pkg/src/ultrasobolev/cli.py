"""Command-line interface.

Exit codes: 0 on success or a passing experiment, 1 when an experiment
reports an inequality failure, 2 on configuration or usage errors.
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click

from . import __version__
from .core_types import DomainSpec, NormParams, sample_on
from .corpus import corpus, corpus_version, get_member
from .experiments import ConfigError, ExperimentConfig, run_experiment
from .schwartz_class import class_membership_report, seminorm_lattice
from .singular_quadrature import QuadratureConfig, full_norm, gagliardo_seminorm, holder_seminorm
from .spectral import DecayError, fourier_seminorm, weak_fractional_norm

OUTPUT_ENV = "ULTRASOBOLEV_OUTPUT_DIR"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _ConfigFailure(click.ClickException):
    exit_code = EXIT_CONFIG


def _member(fid: str):
    try:
        return get_member(fid)
    except KeyError as exc:
        raise _ConfigFailure(f"unknown corpus id {fid!r}") from exc


@click.group()
@click.version_option(__version__)
def main():
    """Numerical checks for weighted fractional Sobolev-type norms."""


@main.command()
@click.option("--fn", "fn", default="gaussian", show_default=True, help="Corpus member id.")
@click.option("--beta", type=float, required=True)
@click.option("--p", "p", default="2", show_default=True, help="Exponent (number or 'inf').")
@click.option("--weight", type=click.Choice(["classical", "ultra"]), default="classical", show_default=True)
@click.option("--domain", default="-8:8", show_default=True, help="Box as lo:hi[,lo:hi].")
@click.option("--h", "h", type=float, default=2.0**-6, show_default=True)
@click.option(
    "--mode",
    type=click.Choice(["gagliardo", "fourier", "weak", "full", "holder"]),
    default="gagliardo",
    show_default=True,
)
@click.option("--puncture", type=float, default=1.0, show_default=True, help="Puncture radius in grid spacings.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--strict", is_flag=True, help="Treat decay warnings as errors.")
def norm(fn, beta, p, weight, domain, h, mode, puncture, workers, strict):
    """Evaluate one norm of one corpus member; prints a JSON report."""
    f = _member(fn)
    try:
        d = DomainSpec.parse(domain)
        params = NormParams(beta, p, d.n, weight)
        if mode in ("gagliardo", "full", "holder"):
            params.require_fractional()
        cfg = QuadratureConfig(puncture=puncture, workers=workers)
        u = sample_on(f, d, h)
        if mode == "gagliardo":
            rep = gagliardo_seminorm(u, params, d, cfg)
        elif mode == "full":
            rep = full_norm(u, params, d, cfg)
        elif mode == "holder":
            rep = holder_seminorm(u, beta, d, weighted=weight == "ultra", cfg=cfg)
        elif mode == "fourier":
            rep = fourier_seminorm(u, params, strict=strict)
        else:
            rep = weak_fractional_norm(u, params, d, strict=strict)
    except (ValueError, DecayError) as exc:
        raise _ConfigFailure(str(exc)) from exc
    out = rep.to_json()
    out["member"] = f.id
    out["mode"] = mode
    click.echo(json.dumps(out, sort_keys=True))


@main.command("class-check")
@click.option("--fn", "fn", required=True, help="Corpus member id.")
@click.option("--max-p", type=int, default=4, show_default=True)
@click.option("--lattice", is_flag=True, help="Also print the eta seminorm lattice.")
def class_check(fn, max_p, lattice):
    """Strip-norm membership report (and optionally the eta lattice) as JSON."""
    f = _member(fn)
    try:
        out = class_membership_report(f, max_p).to_json()
    except ValueError as exc:
        raise _ConfigFailure(str(exc)) from exc
    if lattice:
        out["lattice"] = seminorm_lattice(f).to_json()
    click.echo(json.dumps(out, sort_keys=True))


@main.group("corpus")
def corpus_group():
    """Inspect the test-function corpus."""


@corpus_group.command("list")
def corpus_list():
    """One line per member: id, kind, parameters, pole ordinates."""
    click.echo(f"# corpus version {corpus_version()}")
    for m in corpus().values():
        params = ",".join(f"{k}={v:g}" for k, v in m.params)
        poles = ",".join(f"{y:g}" for y in m.pole_ordinates) or "-"
        click.echo(f"{m.id}\t{m.kind}\t{params or '-'}\tpoles={poles}")


def _output_path(cfg: ExperimentConfig) -> Path | None:
    if cfg.output is None:
        return None
    path = Path(cfg.output)
    override = os.environ.get(OUTPUT_ENV)
    if override:
        path = Path(override) / path.name
    return path


def _experiment_command(name: str):
    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
    @click.option("--workers", type=int, default=1, show_default=True)
    @click.option("--strict", is_flag=True, help="Treat decay warnings as errors.")
    def command(config_path, workers, strict):
        try:
            cfg = ExperimentConfig.load(config_path)
        except ConfigError as exc:
            raise _ConfigFailure(str(exc)) from exc
        if cfg.experiment != name:
            raise _ConfigFailure(f"config is for experiment {cfg.experiment!r}, not {name!r}")
        if strict and not cfg.strict:
            cfg = ExperimentConfig.from_dict({**cfg.raw, "strict": True})
        start = time.time()
        try:
            result = run_experiment(cfg, workers)
        except (ConfigError, ValueError, DecayError) as exc:
            raise _ConfigFailure(str(exc)) from exc
        text = result.to_csv()
        path = _output_path(cfg)
        if path is None:
            click.echo(text, nl=False)
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            meta = {
                "config": str(config_path),
                "config_hash": result.config_hash,
                "corpus_version": result.corpus_version,
                "workers": workers,
                "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(start)),
                "elapsed_seconds": round(time.time() - start, 3),
                "version": __version__,
            }
            path.with_name(path.name + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
            click.echo(f"wrote {path}")
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"{name}: {status} ({len(result.failures())} failing rows of {len(result.rows)})",
                   err=path is None)
        if not result.passed:
            raise SystemExit(EXIT_FAIL)

    command.__doc__ = f"Run the {name} experiment from a JSON config; writes a CSV report."
    return main.command(name)(command)


for _name in ("embed", "density", "extend", "sweep"):
    _experiment_command(_name)


def run_cli(args) -> int:
    """Run the CLI with ``args`` and return the exit code instead of exiting."""
    try:
        main.main(args=list(args), prog_name="ultrasobolev", standalone_mode=False)
    except click.exceptions.UsageError as exc:
        exc.show()
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    return EXIT_OK


def entry() -> None:
    sys.exit(run_cli(sys.argv[1:]))
