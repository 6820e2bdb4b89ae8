import sys

from maxlin.main import main

sys.exit(main())
