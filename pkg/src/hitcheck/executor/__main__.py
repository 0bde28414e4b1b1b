"""``python -m hitcheck.executor --script FILE -i INPUT``: the mock as a subprocess."""

import sys

from .mock import main

sys.exit(main())
