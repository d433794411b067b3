import sys

from harmsynth.cli import main

sys.exit(main())
