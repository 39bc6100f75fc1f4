import sys

from powerburst.cli import main

sys.exit(main())
