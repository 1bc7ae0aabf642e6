import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.commands import COMMANDS
from app.commands.common import (
    EXIT_CONFIG, EXIT_IO, EXIT_SNAPSHOT_CORRUPT, EXIT_SNAPSHOT_VERSION,
)
from app.config import get_settings
from app.core.errors import (
    BanditError, ConfigurationError, EmptyWindowError, NonNestedModelsError,
    SnapshotCorruptError, SnapshotVersionError,
)

logger = logging.getLogger("app")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="layout-bandit",
        description="Multivariate layout bandit: simulation, analysis and offline training",
    )
    parser.add_argument("--version", action="version",
                        version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Register commands
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(verbose: bool) -> None:
    settings = get_settings()
    level = logging.DEBUG if verbose or settings.DEBUG else settings.LOG_LEVEL.upper()
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except SnapshotVersionError as e:
        logger.error(str(e))
        return EXIT_SNAPSHOT_VERSION
    except SnapshotCorruptError as e:
        logger.error(str(e))
        return EXIT_SNAPSHOT_CORRUPT
    except (ConfigurationError, NonNestedModelsError, EmptyWindowError, ValidationError) as e:
        logger.error(str(e))
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return EXIT_IO
    except BanditError as e:
        logger.error(str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
