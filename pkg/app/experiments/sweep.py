import asyncio
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from app.core.errors import FlowSenseError
from app.experiments.artifacts import write_json
from app.experiments.runner import run
from app.experiments.schema import ExperimentConfig, SummaryReport
from app.utils.logger import logger
from app.utils.rng import derive_seed


class SweepEntry(BaseModel):
    index: int
    seed: int
    out_dir: str
    summary: SummaryReport | None = None
    error: str | None = None


def sweep_configs(
    base: list[dict[str, Any]], seed: int, runs: int | None = None
) -> list[ExperimentConfig]:
    """
    Expand the sweep input into validated configs. A single config with
    `runs` is repeated; each run gets its own seed derived from (seed, index).
    """
    if runs is not None:
        if len(base) != 1:
            raise ValueError("--runs needs exactly one base config")
        base = base * runs
    return [
        ExperimentConfig.model_validate({**fields, "seed": derive_seed(seed, index)})
        for index, fields in enumerate(base)
    ]


async def _run_one(index: int, config: ExperimentConfig, out_dir: Path) -> SweepEntry:
    run_dir = out_dir / f"run_{index:03d}"
    entry = SweepEntry(index=index, seed=config.seed, out_dir=str(run_dir))
    try:
        result = await asyncio.to_thread(run, config, run_dir)
        entry.summary = result.summary
    except FlowSenseError as e:
        logger.error(f"Sweep run {index} failed: {e}")
        entry.error = str(e)
    except Exception as e:
        logger.exception(f"Sweep run {index} crashed")
        entry.error = f"{type(e).__name__}: {e}"
    return entry


async def run_sweep(configs: list[ExperimentConfig], out_dir: Path) -> list[SweepEntry]:
    logger.info(f"Sweep of {len(configs)} runs into {out_dir}")
    entries = await asyncio.gather(
        *(_run_one(index, config, out_dir) for index, config in enumerate(configs))
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(
        {"runs": [entry.model_dump(mode="json") for entry in entries]},
        out_dir / "sweep_summary.json",
    )
    return list(entries)
