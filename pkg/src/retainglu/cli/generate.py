"""Simulate a patient population and write one ingest CSV per patient.

Files land in the ``data`` directory of the run.
"""
import logging
from argparse import Namespace, _SubParsersAction
from pathlib import Path

from ..synthetic import patient_name, population, simulate, write_ingest_csv
from .common import start_run
from .config import RunConfig, add_config_arguments

DATA_DIR = "data"

LOG = logging.getLogger(__name__)


def generate(config: RunConfig, run_dir: Path) -> Path:
    configs = population(config.sim_config(), config.patients)
    data_dir = run_dir / DATA_DIR
    data_dir.mkdir()
    for i, sim_config in enumerate(configs):
        name = patient_name(i)
        series = simulate(sim_config, name)
        write_ingest_csv(series, data_dir / f"{name}.csv")
    LOG.info("Wrote %d patients to '%s'", len(configs), data_dir)
    return data_dir


def generate_command(args: Namespace) -> None:
    config, run_dir = start_run(args, "generate")
    generate(config, run_dir)


def generate_subparser(subparsers: _SubParsersAction) -> None:
    parser = subparsers.add_parser("generate", description=__doc__)
    parser.set_defaults(command=generate_command)
    add_config_arguments(parser)
