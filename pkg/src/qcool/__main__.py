import sys

from qcool.cli import main

sys.exit(main())
