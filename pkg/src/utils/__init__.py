"""
Utilities Package

Helpers shared by every package: atomic artifact writes.
"""

from .atomic_io import atomic_write_bytes, atomic_write_text

__all__ = ['atomic_write_bytes', 'atomic_write_text']
