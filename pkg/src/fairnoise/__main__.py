import sys

from fairnoise.cli import main

sys.exit(main())
