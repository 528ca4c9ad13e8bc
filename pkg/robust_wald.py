"""
robust-wald command.

Usage:
    python robust_wald.py <fit|test|power-table|influence|csif> [flags]

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""

import sys
from typing import List, Optional

import click
from dotenv import load_dotenv
from pydantic import ValidationError

from cli.config import get_settings
from cli.run_pipeline import app
from src.pipeline.exception import RobustWaldError
from src.pipeline.logger import get_logger

logger = get_logger("robust_wald")

USAGE_ERROR = 1


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    load_dotenv()
    try:
        get_settings()
    except ValidationError as e:
        logger.error(f"❌ Invalid ROBUST_WALD_* environment: {e}")
        return USAGE_ERROR

    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        code = app(args=argv, prog_name="robust-wald", standalone_mode=False)
    except click.exceptions.UsageError as e:
        logger.error(f"❌ {e.format_message()}")
        return USAGE_ERROR
    except click.exceptions.Abort:
        return USAGE_ERROR
    except RobustWaldError as e:
        return e.exit_code
    except ValueError as e:
        logger.error(f"❌ {e}")
        return USAGE_ERROR
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
