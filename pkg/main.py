"""
SOL Kernel command line

    python main.py run tests/golden/address.sol --int-range -20..40
    python main.py suite teleport --json
"""

import sys

from sol_kernel.cli.main import main


if __name__ == "__main__":
    sys.exit(main())
