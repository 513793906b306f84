import sys

from emoflow.cli import main

sys.exit(main())
