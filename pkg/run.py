#!/usr/bin/env python3
import sys
import logging

from core.container.container import Container
from core.domain.exceptions import ConfigurationError
from core.infrastructure.config.constants import EXIT_USAGE
from interface.cli.bench_cli import BenchCli, build_parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    container = None
    try:
        # Initialize dependency container
        container = Container()
        container.init_resources()
        settings = container.settings()

        # Setup logging
        log_file = settings.logs_dir / "cross_kernels.log"
        level = (args.log_level or settings.log_level).upper()
        if level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ConfigurationError(f"Unknown log level {level!r}")

        # Console stays quiet unless a level is asked for; the file gets everything
        stream = logging.StreamHandler(sys.stderr)
        stream.setLevel(level if args.log_level else logging.WARNING)
        logging.basicConfig(
            level=level,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(log_file),
                stream
            ]
        )

        logger = logging.getLogger(__name__)
        logger.info(f"Starting run: {' '.join(argv if argv is not None else sys.argv[1:])}")

        return BenchCli(container).run(args)

    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logging.exception("Fatal error in main")
        return 1
    finally:
        if container is not None:
            container.cleanup()


if __name__ == "__main__":
    sys.exit(main())
