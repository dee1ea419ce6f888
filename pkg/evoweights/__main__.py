import sys

from evoweights.app import main

sys.exit(main())
