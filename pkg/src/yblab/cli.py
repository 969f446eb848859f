"""Command-line front end: ``yb-lab verify|simulate-transfer|simulate-chain``.

Placeholder module; filled in after the core library settles.
"""

from __future__ import annotations

import sys


def main(argv=None) -> int:
    raise NotImplementedError


def run() -> None:
    sys.exit(main())
