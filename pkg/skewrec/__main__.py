#! /usr/bin/env python3

"""
Skewrec: Skewness Ranking Optimization for Implicit Feedback

This module lets the package run as `python -m skewrec`.
"""

import sys


if __name__ == "__main__":
    # Check if the user is using the correct version of Python
    python_version = sys.version.split()[0]

    if sys.version_info < (3, 9):
        print(f"Skewrec requires Python 3.9+\nYou are using Python {python_version}, which is not supported by Skewrec.")
        sys.exit(1)

    from skewrec import cli
    sys.exit(cli.main())
