#!/usr/bin/env python3
"""
Simple wrapper script to run the cmhe CLI from a source checkout.
"""

import sys
from pathlib import Path

# Add the current directory to Python path to enable imports
current_dir = Path(__file__).parent
if str(current_dir) not in sys.path:
    sys.path.insert(0, str(current_dir))

from cmhe.cli import cli

if __name__ == '__main__':
    cli()
