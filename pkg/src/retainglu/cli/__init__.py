import argparse
import logging
import sys
from typing import NoReturn, Optional, Sequence

from ..errors import RetainConfigError, RetainContractError, RetainError, RetainFormatError
from .evaluate import evaluate_subparser
from .generate import generate_subparser
from .interpret import interpret_subparser
from .train import train_subparser
from .utils import configure_debug_logging

LOG = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise RetainConfigError(f"usage: {message} (at {self.prog})")


def exit_code(error: RetainError) -> int:
    if isinstance(error, RetainConfigError):
        return 1
    if isinstance(error, (RetainContractError, RetainFormatError)):
        return 2
    return 3


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = ArgumentParser(prog="retainglu")

    def no_command(_args: argparse.Namespace) -> None:
        parser.print_help()

    parser.set_defaults(command=no_command)
    subparsers = parser.add_subparsers(dest="subparser_name", parser_class=ArgumentParser)
    generate_subparser(subparsers)
    train_subparser(subparsers)
    evaluate_subparser(subparsers)
    interpret_subparser(subparsers)

    configure_debug_logging("INFO")

    try:
        args = parser.parse_args(argv)
        args.command(args)
    except RetainError as e:
        LOG.debug("Command failed", exc_info=True)
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return exit_code(e)
    return 0
