from datetime import datetime, timezone
from logging.config import dictConfig
from pathlib import Path
from typing import Any, Dict, Optional, Set

LOG_FILE = "run.log"
LOG_FILE_BYTES = 10 * 1024 * 1024


class Renamer:
    """Rename duplicates"""

    def __init__(self, names: Optional[Set[str]] = None) -> None:
        self._names: Set[str] = set(names or ())

    def __call__(self, name: str) -> str:
        basename = name
        i = 1
        while name in self._names:
            name = f"{basename}_{i}"
            i += 1

        self._names.add(name)
        return name


def utc_stamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def make_run_dir(output_dir: Path, command: str, run_name: Optional[str] = None) -> Path:
    """Create ``<output_dir>/<run_name>`` or ``<output_dir>/<command>-<stamp>``,
    suffixed on clashes with an existing directory."""
    output_dir.mkdir(parents=True, exist_ok=True)
    existing = {path.name for path in output_dir.iterdir()}
    name = Renamer(existing)(run_name or f"{command}-{utc_stamp()}")
    run_dir = output_dir / name
    run_dir.mkdir()
    return run_dir


def configure_debug_logging(verbosity: str = "DEBUG", run_dir: Optional[Path] = None) -> None:
    handlers: Dict[str, Any] = {
        "console": {
            "class": "logging.StreamHandler",
            "level": "DEBUG",
            "formatter": "detailed",
            "stream": "ext://sys.stdout",
        },
    }
    if run_dir is not None:
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": "DEBUG",
            "formatter": "detailed",
            "filename": str(run_dir / LOG_FILE),
            "maxBytes": LOG_FILE_BYTES,
            "backupCount": 3,
            "encoding": "utf-8",
        }
    dictConfig(
        {
            "version": 1,
            "formatters": {
                "detailed": {
                    "format": "[%(asctime)s] %(levelname)-8s - %(message)s",
                    "datefmt": "%Y-%m-%dT%H:%M:%S%z",
                },
            },
            "handlers": handlers,
            "loggers": {
                "retainglu": {
                    "level": verbosity,
                    "handlers": list(handlers),
                    "propagate": False,
                },
            },
            "root": {"level": "ERROR", "handlers": ["console"]},
            "disable_existing_loggers": False,
        }
    )
