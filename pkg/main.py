#!/usr/bin/env python3
"""
TUPA-MRP - command-line entry point for running from a source checkout.

Usage: python main.py <command> [options]
"""
import sys

from tupa_mrp.cli import main

if __name__ == '__main__':
    sys.exit(main())
