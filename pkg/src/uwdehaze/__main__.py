import sys

from uwdehaze.cli import main

sys.exit(main())
