"""Command-line entry point"""

import os
import sys

from dotenv import load_dotenv

from morphosim.handlers.commands import run_command

load_dotenv()

LOG_DIR = os.getenv("MORPHOSIM_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("MORPHOSIM_LOG_LEVEL", "INFO")


def main() -> int:
    """Run one subcommand from the process arguments."""
    return run_command(sys.argv[1:], log_dir=LOG_DIR, log_level=LOG_LEVEL)


if __name__ == "__main__":
    sys.exit(main())
