import traceback

from click.testing import Result


def printout_error_and_traceback(invocation_result: Result):
    if invocation_result.exc_info is None:
        print(f"Output:  {invocation_result.output}")
        return

    exception_class, exception, traceback_type = invocation_result.exc_info  # type: ignore
    print(f"\n\n{'=' * 50}\nPrinting Out Error\n{'=' * 50}")
    traceback.print_exception(exception)

    print(f"Exception Class:  {exception_class}")
    print(f"Exception:  {exception}")
    print(f"Output:  {invocation_result.output}")


TINY_TRAINING = [
    "--n-way", "3",
    "--k-train", "2",
    "--k-test", "1",
    "--query", "3",
    "--k-graph", "5",
    "--embed-dim", "4",
    "--hidden-dim", "8",
    "--checkpoint-every", "2",
    "--seed", "1",
    "--no-interaction",
]  # fmt: skip


def read_report_header(path) -> dict[str, str]:
    """``# key = value`` lines at the top of a report CSV"""
    header = {}
    with open(path, "rt", encoding="utf-8") as handle:
        for line in handle:
            if not line.startswith("# "):
                break
            key, _, value = line[2:].rstrip("\n").partition(" = ")
            header[key] = value
    return header
