import sys

from faithrel.cli import main

sys.exit(main())
