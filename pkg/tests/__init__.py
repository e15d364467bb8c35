"""
Iris Quality Toolkit - Test Package

Organized test suite for the toolkit.
"""

import sys
import os

# Ensure the project root is importable for all tests
root_path = os.path.join(os.path.dirname(__file__), '..')
if root_path not in sys.path:
    sys.path.insert(0, root_path)
