#!/usr/bin/env python3
"""
Allow qspeed to be executable as a module with python -m qspeed
"""

from .cli import main

if __name__ == "__main__":
    main()
