import logging
import sys

import click

from nethermind.labelprop.cli.evaluate import eval_baseline_command, eval_command, semi_eval_command, sweep_command
from nethermind.labelprop.cli.tools import gen_data_command, gradcheck_command, inspect_checkpoint_command
from nethermind.labelprop.cli.train import train_command
from nethermind.labelprop.exceptions import (
    ConfigError,
    DimensionError,
    EpisodeError,
    FormatError,
    LabelError,
    NumericalError,
    SingularMatrixError,
)

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


def exit_code_for(exc: BaseException) -> int:
    """Maps an exception escaping a command to the process exit code"""
    match exc:
        case click.UsageError() | ConfigError() | LabelError() | click.Abort():
            return EXIT_USAGE
        case FormatError() | EpisodeError() | DimensionError() | click.FileError() | OSError():
            return EXIT_DATA
        case NumericalError() | SingularMatrixError():
            return EXIT_NUMERICAL
        case _:
            raise exc


class LabelpropGroup(click.Group):
    """
    Click group that converts failures into the documented exit codes: 1 for usage and configuration errors, 2
    for data and format errors, 3 for numerical failures.
    """

    def main(self, *args, standalone_mode: bool = True, **kwargs):  # pylint: disable=arguments-differ
        try:
            result = super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as exc:
            exc.show()
            sys.exit(exit_code_for(exc))
        except click.Abort as exc:
            click.echo("Aborted!", err=True)
            sys.exit(exit_code_for(exc))
        except (ConfigError, LabelError, FormatError, EpisodeError, DimensionError, OSError) as exc:
            logger.error(f"{type(exc).__name__}: {exc}")
            sys.exit(exit_code_for(exc))
        except NumericalError as exc:
            logger.error(f"NumericalError: {exc}")
            for key, value in exc.diagnostics.items():
                logger.error(f"    {key}: {value}")
            sys.exit(EXIT_NUMERICAL)
        except SingularMatrixError as exc:
            logger.error(f"SingularMatrixError: {exc} (pivot {exc.pivot_index})")
            sys.exit(EXIT_NUMERICAL)

        if not standalone_mode:
            return result
        sys.exit(result if isinstance(result, int) else EXIT_OK)


@click.group(cls=LabelpropGroup)
def labelprop_cli():
    """Command Line Interface for transductive label propagation few-shot learning"""


# Adding Commands
labelprop_cli.add_command(train_command, name="train")
labelprop_cli.add_command(eval_command, name="eval")
labelprop_cli.add_command(eval_baseline_command, name="eval-baseline")
labelprop_cli.add_command(semi_eval_command, name="semi-eval")
labelprop_cli.add_command(sweep_command, name="sweep")
labelprop_cli.add_command(gradcheck_command, name="gradcheck")
labelprop_cli.add_command(gen_data_command, name="gen-data")
labelprop_cli.add_command(inspect_checkpoint_command, name="inspect-checkpoint")
