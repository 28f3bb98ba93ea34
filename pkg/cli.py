import asyncio
import json
from pathlib import Path
from typing import Any

import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich import print
from rich.console import Console
from rich.table import Table

load_dotenv()

from app.core.errors import FlowSenseError
from app.core.services.config import settings
from app.experiments.artifacts import write_json
from app.experiments.probes import check_rip, flow_vs_gd, verify_derivatives
from app.experiments.runner import run as run_experiment
from app.experiments.schema import ExperimentConfig
from app.experiments.sweep import run_sweep, sweep_configs

err_console = Console(stderr=True)
app = typer.Typer(help=settings.app_description)


def _read_config_file(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    return json.loads(path.read_text())


def _load_config(
    config_file: Path | None, seed: int, **overrides: Any
) -> ExperimentConfig:
    """JSON file values, then any flag that was given, then the mandatory seed."""
    fields = _read_config_file(config_file)
    fields.update({key: value for key, value in overrides.items() if value is not None})
    fields["seed"] = seed
    return ExperimentConfig.model_validate(fields)


def _fail(message: str) -> None:
    err_console.print(f"[bold red]{message}[/bold red]")
    raise typer.Exit(code=1)


def _guarded(action):
    try:
        return action()
    except ValidationError as e:
        _fail(f"Invalid configuration:\n{e}")
    except FlowSenseError as e:
        _fail(str(e))
    except (ValueError, OSError) as e:
        _fail(str(e))


@app.command()
def info():
    print(f"[bold]{settings.app_name}[/bold] {settings.app_version}")
    print(settings.app_description)
    print(
        f"eig backend: {settings.eig_backend}, identity tolerance: {settings.identity_tol}, "
        f"report slack: {settings.report_slack}"
    )


@app.command()
def run(
    seed: int = typer.Option(..., help="64-bit run seed"),
    out_dir: Path = typer.Option(..., help="Directory for CSV, JSON and snapshots"),
    config: Path | None = typer.Option(None, help="JSON config; flags override it"),
    m: int | None = None,
    n: int | None = None,
    r: int | None = None,
    h: int | None = None,
    kappa: float | None = None,
    y_rr: float | None = None,
    y_file: Path | None = None,
    op_kind: str | None = None,
    num_measurements: int | None = typer.Option(None, "--N", help="Measurement count"),
    rho_target: float | None = None,
    eta: float | None = None,
    epsilon: float | None = None,
    alpha: float | None = None,
    delta: float | None = None,
    init: str | None = None,
    scale_c: float | None = typer.Option(None, "--C", help="Random init scale divisor"),
    steps: str | None = typer.Option(None, help="Step count or 'auto'"),
    log_every: int | None = None,
    delta_eff: str | None = typer.Option(None, help="Monitoring delta or 'auto'"),
    no_derivative_signs: bool = typer.Option(False, "--no-derivative-signs"),
    no_snapshots: bool = typer.Option(False, "--no-snapshots"),
):
    experiment = _guarded(
        lambda: _load_config(
            config,
            seed,
            m=m,
            n=n,
            r=r,
            h=h,
            kappa=kappa,
            y_rr=y_rr,
            y_file=y_file,
            op_kind=op_kind,
            N=num_measurements,
            rho_target=rho_target,
            eta=eta,
            epsilon=epsilon,
            alpha=alpha,
            delta=delta,
            init=init,
            C=scale_c,
            steps=steps,
            log_every=log_every,
            delta_eff=delta_eff,
            derivative_signs=False if no_derivative_signs else None,
            snapshots=False if no_snapshots else None,
        )
    )
    result = _guarded(lambda: run_experiment(experiment, out_dir))
    summary = result.summary

    table = Table(title="Run summary")
    table.add_column("quantity")
    table.add_column("value", justify="right")
    table.add_row("steps", str(summary.steps))
    table.add_row("T1 / T2", f"{summary.T1:.4f} / {summary.T2:.4f}")
    table.add_row("final ||Y - UV^T||", f"{summary.final_error:.3e}")
    table.add_row("final error bound", f"{summary.thm33_bound:.3e}")
    table.add_row("||R|| at T2 / MR_inf", f"{summary.norm_R_T2:.3e} / {summary.MR_inf:.3e}")
    for label, violation in (
        ("first warm-up violation", summary.first_warmup_violation),
        ("first local violation", summary.first_local_violation),
    ):
        if violation is None:
            table.add_row(label, "none")
        else:
            table.add_row(label, f"{violation.item} @ t={violation.t:.4f}")
    table.add_row("identity failures", str(summary.identity_failures))
    table.add_row("derivative sign failures", str(summary.derivative_sign_failures))
    for label, passed in (
        ("init conditions", summary.init_passed),
        ("final error bound", summary.final_error_passed),
        ("local limit at T2", summary.local_limit_passed),
        ("end-time assumption", summary.assumption_passed),
    ):
        table.add_row(label, "pass" if passed else "fail")
    if summary.rip_estimate is not None:
        table.add_row("rho_hat", f"{summary.rip_estimate.rho_hat:.4f}")
    print(table)
    print(f"[green]Artifacts written to {out_dir}[/green]")


@app.command("flow-vs-gd")
def flow_vs_gd_command(
    seed: int = typer.Option(...),
    out_dir: Path = typer.Option(...),
    config: Path | None = None,
    probes: int | None = typer.Option(None, help="Steps to probe, all when omitted"),
    steps: str | None = None,
    eta: float | None = None,
    op_kind: str | None = None,
):
    experiment = _guarded(
        lambda: _load_config(config, seed, steps=steps, eta=eta, op_kind=op_kind)
    )
    report = _guarded(lambda: flow_vs_gd(experiment, probes))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(report.model_dump(mode="json"), out_dir / "flow_vs_gd.json")

    violations = sum(
        1
        for probe in report.probes
        for sample in probe.samples
        if sample.applicable and sample.norm_E > sample.bound
    )
    print(f"probed steps: {len(report.probes)} of {report.steps}")
    print(f"max relative deviation at s=1: {report.max_deviation:.3e}")
    print(f"max relative deviation at s=0: {report.max_deviation_s0:.3e}")
    print(f"perturbation bound violations: {violations}")


@app.command("check-rip")
def check_rip_command(
    seed: int = typer.Option(...),
    out_dir: Path = typer.Option(...),
    config: Path | None = None,
    trials: int = 200,
    probe_rank: int | None = None,
    m: int | None = None,
    n: int | None = None,
    r: int | None = None,
    h: int | None = None,
    init: str | None = None,
    op_kind: str | None = None,
    num_measurements: int | None = typer.Option(None, "--N"),
    rho_target: float | None = None,
):
    experiment = _guarded(
        lambda: _load_config(
            config,
            seed,
            m=m,
            n=n,
            r=r,
            h=h,
            init=init,
            op_kind=op_kind,
            N=num_measurements,
            rho_target=rho_target,
        )
    )
    report = _guarded(lambda: check_rip(experiment, trials, probe_rank))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(report.model_dump(mode="json"), out_dir / "rip.json")

    colour = "green" if report.passed else "red"
    print(
        f"rho_hat = {report.estimate.rho_hat:.4f} over {report.estimate.trials} trials "
        f"(rank {report.estimate.probe_rank}, N = {report.N})"
    )
    verdict = "pass" if report.passed else "fail"
    print(f"[{colour}]rho_target = {report.rho_target}: {verdict}[/{colour}]")
    print(f"[yellow]{report.caveat}[/yellow]")


@app.command("verify-derivatives")
def verify_derivatives_command(
    seed: int = typer.Option(...),
    out_dir: Path = typer.Option(...),
    config: Path | None = None,
    probes: int = 20,
    steps: str | None = None,
    eta: float | None = None,
):
    experiment = _guarded(lambda: _load_config(config, seed, steps=steps, eta=eta))
    report = _guarded(lambda: verify_derivatives(experiment, probes))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(report.model_dump(mode="json"), out_dir / "derivatives.json")

    table = Table(title="Central-difference convergence")
    columns = ("k", "s", "quantity", "err(h)", "err(h/2)", "ratio", "err(1e-4 eta)", "")
    for column in columns:
        table.add_column(column)
    for check in report.checks:
        table.add_row(
            str(check.k),
            f"{check.s:.3f}",
            check.quantity,
            f"{check.err_coarse:.2e}",
            f"{check.err_fine:.2e}",
            "floor" if check.at_roundoff_floor else f"{check.ratio:.3f}",
            f"{check.err_agreement:.2e}",
            "[green]ok[/green]" if check.passed else "[red]FAIL[/red]",
        )
    print(table)
    for skipped in report.skipped:
        print(f"[yellow]skipped k={skipped.k}: {skipped.reason}[/yellow]")
    if not report.passed:
        _fail("Derivative checks failed")


@app.command()
def sweep(
    seed: int = typer.Option(...),
    out_dir: Path = typer.Option(...),
    config: Path = typer.Option(..., help="JSON config or list of configs"),
    runs: int | None = typer.Option(None, help="Repeat a single config N times"),
):
    def configs():
        data = _read_config_file(config)
        return sweep_configs(data if isinstance(data, list) else [data], seed, runs)

    experiments = _guarded(configs)
    entries = _guarded(lambda: asyncio.run(run_sweep(experiments, out_dir)))

    table = Table(title="Sweep")
    for column in ("run", "seed", "final error", "status"):
        table.add_column(column)
    for entry in entries:
        if entry.summary is None:
            failed = f"[red]{entry.error}[/red]"
            table.add_row(str(entry.index), str(entry.seed), "-", failed)
        else:
            table.add_row(
                str(entry.index),
                str(entry.seed),
                f"{entry.summary.final_error:.3e}",
                "[green]done[/green]",
            )
    print(table)


if __name__ == "__main__":
    app()
