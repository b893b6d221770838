"""
Root entry point; equivalent to the zs-scatter console script.

    python main.py order --M 1024,2048
"""

import sys

from zs_scatter.cli import main

if __name__ == "__main__":
    sys.exit(main())
