import sys

from apps.shared.cli.core import main

if __name__ == '__main__':
    sys.exit(main())
