# apps/cli/__main__.py
import sys

from apps.cli.main import main

sys.exit(main())
