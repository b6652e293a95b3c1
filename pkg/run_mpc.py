#!/usr/bin/env python3
"""
MPC Graph Algorithms - Run Script
Checks dependencies, then hands the command line to the harness
"""

import sys


def check_dependencies():
    """Check if required dependencies are installed"""
    try:
        import dotenv
        import networkx
        import numpy
        import pandas
        import pydantic
        return True
    except ImportError as e:
        print(f"❌ Missing dependency: {e}", file=sys.stderr)
        print("📦 Install them with: pip install -r requirements.txt", file=sys.stderr)
        return False


def main():
    if not check_dependencies():
        sys.exit(1)
    from harness.cli import main as cli_main
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
