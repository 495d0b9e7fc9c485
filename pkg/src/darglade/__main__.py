import sys

from darglade.harness.cli import main

sys.exit(main())
