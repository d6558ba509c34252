# This file is a part of dynMKW

import sys

from dynmkw.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
