import sys

from mrpsim.cli import main

sys.exit(main())
