import sys

from wvafisher.experiments.cli import main

sys.exit(main())
