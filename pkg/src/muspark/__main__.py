import sys

from muspark.cli import main

sys.exit(main())
