"""Run the command line as ``python3 -m hrom``."""

import sys

from .cli import main

sys.exit(main())
