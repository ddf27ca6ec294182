import sys

from sipg.cli import main

sys.exit(main())
