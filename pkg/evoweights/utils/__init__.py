"""
I/O utilities package
"""

from .formatters import (
    format_number,
    format_fitness,
    format_percentage,
    format_sign_pair,
    get_trend_emoji
)

__all__ = [
    'format_number',
    'format_fitness',
    'format_percentage',
    'format_sign_pair',
    'get_trend_emoji'
]
