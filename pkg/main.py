import sys

from bcmsr.main import main


if __name__ == "__main__":
    sys.exit(main())
