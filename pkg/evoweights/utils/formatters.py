"""
Formatting utilities for reports and exported files
"""

from typing import Sequence

# 17 significant digits round-trip every IEEE-754 double
NUMBER_FORMAT = "%.17g"


def format_number(value: float) -> str:
    """
    Format a float for machine-readable output

    Args:
        value: Number to format

    Returns:
        String with 17 significant digits and '.' as decimal separator
    """
    return NUMBER_FORMAT % float(value)


def format_fitness(value: float, digits: int = 3) -> str:
    """Fixed-point display value for matrices and rankings"""
    return f"{float(value):.{digits}f}"


def format_percentage(fraction: float, include_sign: bool = False) -> str:
    """
    Format a share in [0, 1] as a percentage

    Args:
        fraction: Share to format (0.39 -> 39.00%)
        include_sign: Whether to include +/- sign

    Returns:
        Formatted percentage string
    """
    pct = 100.0 * float(fraction)
    if include_sign:
        if pct > 0:
            return f"+{pct:.2f}%"
        else:
            return f"{pct:.2f}%"
    else:
        return f"{pct:.2f}%"


def format_sign(level: int) -> str:
    """
    Signed magnitude level as repeated signs

    Args:
        level: 0, +-1, +-2 or +-3

    Returns:
        '0', '+', '--', '+++' ...
    """
    level = int(level)
    if level == 0:
        return "0"
    symbol = "+" if level > 0 else "-"
    return symbol * abs(level)


def format_sign_pair(pair: Sequence[int]) -> str:
    """Sign pair of a composite contribution, e.g. (-,---)"""
    return f"({format_sign(pair[0])},{format_sign(pair[1])})"


def get_trend_emoji(change: float) -> str:
    """
    Get emoji based on gene fitness trend

    Args:
        change: Change of gamma over the run

    Returns:
        Emoji string
    """
    if change > 0:
        return "📈"
    elif change < 0:
        return "📉"
    else:
        return "➡️"
