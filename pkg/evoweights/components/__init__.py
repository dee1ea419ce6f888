"""
Read-side components package
"""

from . import analysis
from . import reports

__all__ = ['analysis', 'reports']
