import logging
import signal

from rich.console import Console
from rich.progress import (
    BarColumn,
    SpinnerColumn,
    TaskProgressColumn,
    TextColumn,
    TimeElapsedColumn,
    TimeRemainingColumn,
)

progress_defaults = [
    TextColumn("[progress.description]{task.description}"),
    SpinnerColumn(),
    BarColumn(),
    TaskProgressColumn(),
    TimeElapsedColumn(),
    TimeRemainingColumn(),
    TextColumn("[green]Episodes: {task.completed}/{task.total}"),
    TextColumn("[magenta]{task.fields[status]}"),
]


class GracefulKiller:
    """
    Handles SIGINT / SIGTERM by setting a flag.  Long running loops check ``kill_now`` between episodes, and
    call :meth:`finalize` to save their progress before exiting.
    """

    signal_names = {signal.SIGINT: "SIGINT", signal.SIGTERM: "SIGTERM"}

    logger = logging.getLogger("nethermind").getChild("labelprop").getChild("cli")

    def __init__(self, console: Console):
        self.kill_now = False
        self.console = console
        signal.signal(signal.SIGINT, self.exit_gracefully)
        signal.signal(signal.SIGTERM, self.exit_gracefully)

    def exit_gracefully(self, signum, frame):  # pylint: disable=unused-argument
        """Prints out a message and sets kill_now to True"""
        self.console.print(f"[green]Received {self.signal_names.get(signum, signum)}.  Finishing current episode...")
        self.kill_now = True

    def finalize(self, trainer):
        """Saves a checkpoint for the trainer and closes its metrics sink"""
        if trainer.checkpoint_path is not None:
            self.logger.info(f"Saving training progress after {trainer.episodes_seen} episodes")
            trainer.save()

        if trainer.sink is not None:
            trainer.sink.close()
