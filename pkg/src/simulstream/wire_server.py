"""Run the reference mock server: ``python -m simulstream.wire_server SCRIPT``."""

from __future__ import annotations

import sys

from .wire import main

if __name__ == "__main__":
    sys.exit(main())
