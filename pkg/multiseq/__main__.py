"""``python -m multiseq``."""

import sys

from multiseq.cli import main

sys.exit(main())
