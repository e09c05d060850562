import sys

from softgreen.cli import main

sys.exit(main())
