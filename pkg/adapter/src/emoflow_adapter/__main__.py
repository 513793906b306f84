import sys

from emoflow_adapter.cli import main

sys.exit(main())
