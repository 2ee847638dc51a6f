"""
Process exit codes of the ``precursor`` command line.

Codes follow the BSD ``sysexits`` spirit: small integers grouped by cause.
"""

from __future__ import annotations

__all__ = (
    "EXIT_OK",
    "EXIT_FAILURE",
    "EXIT_USAGE",
    "EXIT_INPUT",
    "is_success",
    "is_usage",
    "is_failure",
)

EXIT_OK = 0
EXIT_FAILURE = 1  # a pipeline operation raised
EXIT_USAGE = 2  # unknown command or invalid configuration
EXIT_INPUT = 3  # missing or unreadable input file


def is_success(exit_code):
    return exit_code == EXIT_OK


def is_usage(exit_code):
    return exit_code == EXIT_USAGE


def is_failure(exit_code):
    return exit_code not in (EXIT_OK, EXIT_USAGE) and exit_code > 0
