import sys

from qegraphs.cli import main

sys.exit(main())
