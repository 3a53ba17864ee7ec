import sys

from micmac.cli import main

sys.exit(main())
