"""Command-line front end: simulate, identify, baseline, compare, bench.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command is
deterministic given --seed; timestamps live in an isolated metadata block
so reruns are otherwise byte-identical.
"""

from __future__ import annotations

import datetime
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .baseline import mcmc_autoarima, trace_to_csv
from .experiments import (ExperimentConfig, SCENARIOS, paper_scale,
                          run_scenario, write_results)
from .loo import elpd_diff
from .posterior import SamplerConfig
from .search import projpred_arma, projpred_sarma
from .series import (ArmaParams, TimeSeries, difference, load_csv, save_csv,
                     simulate_arma, simulate_sarma)

EMBOLDEN_Z = 1.64


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _metadata() -> dict:
    return {"generated_at": datetime.datetime.now(datetime.timezone.utc)
            .isoformat(timespec="seconds")}


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _parse_coeffs(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    return [float(tok) for tok in text.replace(",", " ").split()]


def _load_config_file(path) -> dict:
    """Flat key = value overrides, applied beneath explicit CLI flags."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


sampler_options = [
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--chains", type=int, default=4, show_default=True),
    click.option("--warmup", type=int, default=1000, show_default=True),
    click.option("--samples", type=int, default=1000, show_default=True),
]

differencing_options = [
    click.option("--d", type=int, default=0, show_default=True,
                 help="Non-seasonal differencing order applied before fitting."),
    click.option("--D", "seasonal_d", type=int, default=0, show_default=True,
                 help="Seasonal differencing order."),
    click.option("--s", "period", type=int, default=None,
                 help="Seasonal period (required for --D or seasonal search)."),
]


def add_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
def main():
    """Projection predictive ARMA order identification toolkit."""


@main.command()
@click.option("--phi", default="", help="AR coefficients, e.g. '0.5 -0.2'.")
@click.option("--theta", default="", help="MA coefficients.")
@click.option("--seasonal-phi", default="", help="Seasonal AR coefficients.")
@click.option("--seasonal-theta", default="", help="Seasonal MA coefficients.")
@click.option("--s", "period", type=int, default=None, help="Seasonal period.")
@click.option("--sigma", type=float, default=1.0, show_default=True)
@click.option("--intercept", type=float, default=0.0, show_default=True)
@click.option("--length", type=int, required=True)
@click.option("--burn-in", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(), required=True)
def simulate(phi, theta, seasonal_phi, seasonal_theta, period, sigma,
             intercept, length, burn_in, seed, output):
    """Simulate an ARMA/SARMA series and write it as CSV."""
    params = ArmaParams(c=intercept, phi=_parse_coeffs(phi),
                        theta=_parse_coeffs(theta), sigma=sigma)
    sphi, stheta = _parse_coeffs(seasonal_phi), _parse_coeffs(seasonal_theta)
    try:
        if sphi or stheta:
            if period is None:
                raise click.UsageError("--s is required with seasonal coefficients")
            seasonal = ArmaParams(phi=sphi, theta=stheta, sigma=sigma)
            series = simulate_sarma(params, seasonal, period, length,
                                    burn_in=burn_in, seed=seed)
        else:
            series = simulate_arma(params, length, burn_in=burn_in, seed=seed)
    except ValueError as exc:
        _fail(str(exc))
    save_csv(series, output)
    click.echo(f"wrote {length} observations to {output}")


def _load_and_difference(input_path, d, seasonal_d, period) -> TimeSeries:
    try:
        series = load_csv(input_path)
    except OSError as exc:
        _fail(f"cannot read {input_path}: {exc}")
    except ValueError as exc:
        _fail(str(exc))
    if d or seasonal_d:
        series = difference(series, d=d, D=seasonal_d, s=period)
    return series


@main.command()
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--output", type=click.Path(), required=True)
@click.option("--p-star", type=int, default=5, show_default=True)
@click.option("--q-star", type=int, default=5, show_default=True)
@click.option("--P-star", "P_star", type=int, default=3, show_default=True)
@click.option("--Q-star", "Q_star", type=int, default=3, show_default=True)
@click.option("--seasonal/--no-seasonal", default=False,
              help="Run the seasonal (SARMA) identification.")
@add_options(differencing_options)
@add_options(sampler_options)
def identify(input_path, output, p_star, q_star, P_star, Q_star, seasonal,
             d, seasonal_d, period, seed, chains, warmup, samples):
    """Identify ARMA (or SARMA) orders by projection predictive search."""
    series = _load_and_difference(input_path, d, seasonal_d, period)
    config = SamplerConfig(chains=chains, warmup=warmup, samples=samples,
                           seed=seed)
    try:
        if seasonal:
            if period is None:
                raise click.UsageError("--s is required for seasonal identification")
            report = projpred_sarma(series, period, p_star, q_star,
                                    P_star, Q_star, config=config)
        else:
            report = projpred_arma(series, p_star, q_star, config=config)
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
    payload = report.to_json_dict()
    payload["metadata"] = _metadata()
    _write_json(payload, output)
    _echo_report_summary(report)


def _echo_report_summary(report) -> None:
    rows = [("selected p", report.p), ("selected q", report.q)]
    if report.s is not None:
        rows += [("selected P", report.P), ("selected Q", report.Q)]
    rows += [("final elpd", f"{report.final_elpd.elpd:.2f} ± {report.final_elpd.se:.2f}"),
             ("mcmc fits", report.mcmc_fits)]
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        click.echo(f"  {label:<{width}}  {value}")
    for message in report.warnings:
        click.echo(f"  warning: {message}")


@main.command()
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--output", type=click.Path(), required=True)
@click.option("--trace-output", type=click.Path(), default=None,
              help="Also write the stepwise AIC evaluation trace as CSV.")
@add_options(differencing_options)
@add_options(sampler_options)
def baseline(input_path, output, trace_output, d, seasonal_d, period, seed,
             chains, warmup, samples):
    """Stepwise-AIC order selection plus a Bayesian refit of the winner."""
    series = _load_and_difference(input_path, d, seasonal_d, period)
    config = SamplerConfig(chains=chains, warmup=warmup, samples=samples,
                           seed=seed)
    try:
        report = mcmc_autoarima(series, config=config)
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
    payload = report.to_json_dict()
    payload["metadata"] = _metadata()
    _write_json(payload, output)
    if trace_output:
        trace_to_csv(report.trace, trace_output)
    click.echo(f"  selected (p, q) = ({report.p}, {report.q}); "
               f"elpd {report.elpd.elpd:.2f} ± {report.elpd.se:.2f}; "
               f"trace length {len(report.trace)}")


@main.command()
@click.option("--input", "input_path", type=click.Path(), required=True)
@click.option("--output", type=click.Path(), required=True)
@click.option("--p-star", type=int, default=5, show_default=True)
@click.option("--q-star", type=int, default=5, show_default=True)
@add_options(differencing_options)
@add_options(sampler_options)
def compare(input_path, output, p_star, q_star, d, seasonal_d, period, seed,
            chains, warmup, samples):
    """Run both procedures on one series and report the paired elpd difference.

    The two refit models may score slightly different trailing windows of
    the series; the paired difference is computed on their common
    observations. A difference is flagged ("emboldened") when zero lies
    outside its 1.64 standard error interval.
    """
    series = _load_and_difference(input_path, d, seasonal_d, period)
    config = SamplerConfig(chains=chains, warmup=warmup, samples=samples,
                           seed=seed)
    try:
        proj = projpred_arma(series, p_star, q_star, config=config)
        base = mcmc_autoarima(series, config=config)
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
    a, b = proj.final_elpd, base.elpd
    common = min(a.pointwise.size, b.pointwise.size)
    diff, se = elpd_diff(_tail(a, common), _tail(b, common))
    emboldened = bool(abs(diff) > EMBOLDEN_Z * se)
    payload = {
        "projpred": {"orders": {"p": proj.p, "q": proj.q},
                     "elpd": a.to_json_dict(), "warnings": proj.warnings},
        "baseline": {"orders": {"p": base.p, "q": base.q},
                     "elpd": b.to_json_dict(), "warnings": base.warnings},
        "elpd_diff": {"diff": diff, "se": se, "emboldened": emboldened,
                      "common_observations": common},
        "seed": seed,
        "metadata": _metadata(),
    }
    _write_json(payload, output)
    click.echo(f"  projpred ({proj.p},{proj.q}) elpd {a.elpd:.2f} ± {a.se:.2f}")
    click.echo(f"  baseline ({base.p},{base.q}) elpd {b.elpd:.2f} ± {b.se:.2f}")
    flag = " (emboldened)" if emboldened else ""
    click.echo(f"  diff {diff:+.2f} ± {se:.2f}{flag}")


def _tail(estimate, n: int):
    from .loo import ElpdEstimate
    pw = estimate.pointwise[-n:]
    se = float(np.sqrt(n * pw.var(ddof=1))) if n > 1 else 0.0
    return ElpdEstimate(float(pw.sum()), se, pw, estimate.pareto_k[-n:])


@main.command()
@click.argument("scenario", type=click.Choice(SCENARIOS))
@click.option("--output-dir", type=click.Path(), default=".", show_default=True)
@click.option("--replications", type=int, default=None,
              help="Override the replication count (default desk-scale 20).")
@click.option("--length", type=int, default=None,
              help="Override the series length (default desk-scale 300).")
@click.option("--paper-scale", "use_paper_scale", is_flag=True,
              help="Use the published protocol sizes (100 reps, T=500).")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="key = value file of option overrides.")
@add_options(sampler_options)
def bench(scenario, output_dir, replications, length, use_paper_scale,
          config_path, seed, chains, warmup, samples):
    """Run a named replication experiment and write plot-ready CSV tables."""
    config = ExperimentConfig(scenario=scenario, seed=seed, chains=chains,
                              warmup=warmup, samples=samples,
                              output_dir=output_dir)
    if use_paper_scale:
        config = paper_scale(config)
    if config_path:
        overrides = _load_config_file(config_path)
        valid = {f for f in ExperimentConfig.__dataclass_fields__}
        unknown = set(overrides) - valid
        if unknown:
            raise click.UsageError(f"unknown config keys: {sorted(unknown)}")
        typed = {}
        for key, value in overrides.items():
            kind = ExperimentConfig.__dataclass_fields__[key].type
            if key == "noise_grid":
                typed[key] = tuple(float(tok) for tok in value.split())
            elif kind in ("int", int):
                typed[key] = int(value)
            else:
                typed[key] = value
        config = replace(config, **typed)
    if replications is not None:
        config = replace(config, replications=replications)
    if length is not None:
        config = replace(config, length=length)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = run_scenario(config)
    except (ValueError, RuntimeError) as exc:
        _fail(str(exc))
    rows_path, counts_path = write_results(result, output_dir)
    click.echo(f"  wrote {rows_path}")
    click.echo(f"  wrote {counts_path}")


if __name__ == "__main__":
    main()
