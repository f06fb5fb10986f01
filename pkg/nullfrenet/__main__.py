import argparse
from pathlib import Path
import sys
from typing import NoReturn

import konsole

from .error import ConfigError, NullFrenetError
from .label import RunMode


class _ArgumentParser(argparse.ArgumentParser):
    # Usage errors are configuration errors with exit code 1, not argparse's 2.
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        raise ConfigError(f'{self.prog}: {message}')


def create_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        "nullfrenet",
        description="null Frenet-Serret curves in 2+1 and 3+1 Minkowski space",
    )

    parser.add_argument(
        "mode",
        choices=[str(m) for m in RunMode],
        help="select the run mode",
    )

    parser.add_argument(
        "--config",
        type=Path,
        help="set the JSON run configuration",
    )

    parser.add_argument(
        "--sweep",
        type=Path,
        help="run every JSON configuration in this directory instead",
    )

    parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="set the number of worker processes for a sweep",
    )

    parser.add_argument(
        "--color",
        dest="use_color",
        default=None,
        action=argparse.BooleanOptionalAction,
        help="forcibly enable or disable color output",
    )

    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        dest="volume",
        help="increase verbosity",
    )

    return parser


def to_options(args: list[str]) -> argparse.Namespace:
    parser = create_parser()
    options = parser.parse_args(args)
    if (options.config is None) == (options.sweep is None):
        parser.error("exactly one of --config and --sweep is required")
    if options.workers is not None and options.workers < 1:
        parser.error("--workers must be positive")

    konsole.config(use_color=options.use_color, volume=options.volume)
    konsole.info("Running with options", detail=vars(options))

    return options


def main(args: None | list[str] = None) -> int:
    try:
        options = to_options(sys.argv[1:] if args is None else args)

        from .cli import run, sweep
        from .config import load_config

        if options.sweep is not None:
            code = sweep(options.sweep, options.mode, options.workers)
        else:
            code = run(load_config(options.config, mode=options.mode))

    except KeyboardInterrupt:
        konsole.warning("nullfrenet detected keyboard interrupt, exiting...")
        return 130
    except NullFrenetError as x:
        from .cli import exit_code

        konsole.critical(x.args[0])
        return int(exit_code(x))
    except Exception as x:
        konsole.critical(
            "oh dear, something has gone terribly wrong: %s", x, exc_info=x
        )
        return 1

    if code == 0:
        konsole.info("happy, happy, joy, joy!")
    return int(code)


if __name__ == "__main__":
    sys.exit(main())
