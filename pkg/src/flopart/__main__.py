import sys

from flopart.cli import main

sys.exit(main())
