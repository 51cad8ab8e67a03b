"""Command-line interface: fit, step, vis, af, export, serve."""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click

from . import masks
from .config import ConfigError, RunConfig
from .errors import ModelscopeError
from .fence import run_af
from .fitting import coef_table, fit, format_coef_table
from .serialize import af_to_dict, read_json, vis_to_dict, write_json
from .stability import format_stability_table, run_vis, stability_table
from .stepwise import step as stepwise_step

_data_options = [
    click.option("--data", required=True, type=click.Path(), help="CSV file with a header row."),
    click.option("--response", required=True, help="Response column name."),
    click.option("--family", default="gaussian", show_default=True,
                 type=click.Choice(["gaussian", "binomial", "poisson"])),
    click.option("--factor", "factors", multiple=True,
                 help="Factor column, optionally with level order: name or name=lv1,lv2,..."),
]


def _add_options(opts):
    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return wrap


def _run_guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    except ModelscopeError as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
        sys.exit(1)


@click.group()
def main():
    """Model-selection stability diagnostics for linear and generalised linear models."""


@main.command("fit")
@_add_options(_data_options)
@click.option("--model", "model_spec", default=None,
              help="Comma-separated candidate columns; default is the full model.")
def cmd_fit(data, response, family, factors, model_spec):
    """Fit one model and print its coefficient table."""
    def run():
        cfg = RunConfig(command="fit", data=data, response=response,
                        family=family, factors=list(factors)).validate()
        d = cfg.load_dataset()
        mask = d.full_mask() if not model_spec else masks.from_names(d.names, [s.strip() for s in model_spec.split(",")])
        f = fit(d, mask)
        click.echo(d.formula(mask))
        click.echo(format_coef_table(coef_table(f)))
        click.echo(f"logLik: {f.loglik:.2f}")
    _run_guard(run)


@main.command("step")
@_add_options(_data_options)
@click.option("--direction", default="backward", show_default=True,
              type=click.Choice(["forward", "backward"]))
@click.option("--penalty", default="aic", show_default=True,
              help="GIC penalty: aic, bic, or a number.")
def cmd_step(data, response, family, factors, direction, penalty):
    """Greedy stepwise selection under a GIC penalty."""
    def run():
        cfg = RunConfig(command="step", data=data, response=response,
                        family=family, factors=list(factors)).validate()
        d = cfg.load_dataset()
        lam = {"aic": 2.0, "bic": math.log(d.n)}.get(str(penalty).lower())
        if lam is None:
            try:
                lam = float(penalty)
            except ValueError:
                raise ConfigError("--penalty must be aic, bic, or a number") from None
        final, path = stepwise_step(d, direction, lam)
        for m in path:
            click.echo(("  " if m != final else "* ") + d.formula(m))
        click.echo(format_coef_table(coef_table(fit(d, final))))
    _run_guard(run)


@main.command("vis")
@_add_options(_data_options)
@click.option("--B", "B", default=150, show_default=True, type=int)
@click.option("--nbest", default="5", show_default=True)
@click.option("--redundant/--no-redundant", default=True, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--cores", type=int, default=None)
@click.option("--min-prob", default=0.3, show_default=True, type=float)
@click.option("--highlight", default=None)
@click.option("--out", default="runs/vis", show_default=True, type=click.Path())
@click.option("--plots", is_flag=True, help="Also write lvk.svg, boot.svg, vip.svg.")
def cmd_vis(data, response, family, factors, B, nbest, redundant, seed, cores,
            min_prob, highlight, out, plots):
    """Exponential-weighted bootstrap model stability run; writes vis.json."""
    def run():
        cfg = RunConfig(command="vis", data=data, response=response, family=family,
                        factors=list(factors), B=B, nbest=nbest, redundant=redundant,
                        seed=seed, cores=cores, min_prob=min_prob, highlight=highlight,
                        out=str(out)).validate()
        d = cfg.load_dataset()
        v = run_vis(d, B=cfg.B, nbest=cfg.nbest, redundant=cfg.redundant,
                    seed=cfg.seed, cores=cfg.cores)
        payload = vis_to_dict(v, cfg.echo(v.dataset))
        path = write_json(payload, Path(cfg.out) / "vis.json")
        click.echo(f"wrote {path}")
        click.echo(format_stability_table(stability_table(v, cfg.min_prob)))
        if plots:
            from .plots import export_plots
            for p in export_plots(payload, Path(cfg.out) / "plots", highlight=cfg.highlight):
                click.echo(f"wrote {p}")
    _run_guard(run)


@main.command("af")
@_add_options(_data_options)
@click.option("--B", "B", default=150, show_default=True, type=int)
@click.option("--n-c", default=50, show_default=True, type=int)
@click.option("--c-max", default=None, type=float)
@click.option("--initial-stepwise/--no-initial-stepwise", default=True, show_default=True)
@click.option("--best-only/--best-only-false", "best_only", default=True, show_default=True,
              help="Which tally the static plot shows; the file carries both.")
@click.option("--redundant/--no-redundant", default=True, show_default=True,
              help="Inject the redundant variable before running (recommended).")
@click.option("--seed", type=int, default=None)
@click.option("--cores", type=int, default=None)
@click.option("--out", default="runs/af", show_default=True, type=click.Path())
@click.option("--plots", is_flag=True, help="Also write af.svg for both tally modes.")
def cmd_af(data, response, family, factors, B, n_c, c_max, initial_stepwise,
           best_only, redundant, seed, cores, out, plots):
    """Simplified adaptive fence run; writes af.json with both tally modes."""
    def run():
        cfg = RunConfig(command="af", data=data, response=response, family=family,
                        factors=list(factors), B=B, n_c=n_c, c_max=c_max,
                        initial_stepwise=initial_stepwise, best_only=best_only,
                        redundant=redundant, seed=seed, cores=cores, out=str(out)).validate()
        d = cfg.load_dataset()
        if cfg.redundant:
            from .dataset import add_redundant_variable
            from .stability import rv_rng
            d = add_redundant_variable(d, rv_rng(cfg.seed))
        a = run_af(d, B=cfg.B, n_c=cfg.n_c, c_max=cfg.c_max,
                   initial_stepwise=cfg.initial_stepwise, seed=cfg.seed, cores=cfg.cores)
        payload = af_to_dict(a, cfg.echo(a.dataset))
        path = write_json(payload, Path(cfg.out) / "af.json")
        click.echo(f"wrote {path}")
        for mode in (True, False):
            cs = a.c_star[mode]
            click.echo(f"best_only={mode}: c* = {cs:.2f}" if cs is not None
                       else f"best_only={mode}: no peak detected")
        if plots:
            from .plots import export_plots
            for p in export_plots(payload, Path(cfg.out) / "plots", best_only=cfg.best_only):
                click.echo(f"wrote {p}")
    _run_guard(run)


@main.command("export")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True),
              help="Directory holding vis.json and/or af.json.")
@click.option("--highlight", default=None)
def cmd_export(run_dir, highlight):
    """Regenerate static SVG plots from existing result files."""
    def run():
        from .plots import export_plots
        run_path = Path(run_dir)
        found = False
        for name in ("vis.json", "af.json"):
            f = run_path / name
            if f.exists():
                found = True
                for p in export_plots(read_json(f), run_path / "plots", highlight=highlight):
                    click.echo(f"wrote {p}")
        if not found:
            raise ConfigError(f"no vis.json or af.json under {run_path}")
    _run_guard(run)


@main.command("serve")
@click.option("--results-dir", default="runs", show_default=True, type=click.Path())
@click.option("--data-dir", default="data", show_default=True, type=click.Path())
@click.option("--ui-dir", default=None, type=click.Path(),
              help="Static explorer bundle to serve at /.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def cmd_serve(results_dir, data_dir, ui_dir, host, port):
    """Serve results and the run API over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(Path(results_dir), data_dir=Path(data_dir),
                     ui_dir=Path(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
