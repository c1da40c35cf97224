"""Table-style number formatting.

Display values are truncated to two decimals, not rounded: 100 / 3.82 =
26.178... is shown as 26.17x. Full precision is kept in CSV outputs.
"""

from decimal import ROUND_DOWN, Decimal
from fractions import Fraction

_CENT = Decimal("0.01")


def truncate2(x: float) -> str:
    """Two-decimal string of ``x`` truncated toward zero."""
    if x != x or x in (float("inf"), float("-inf")):
        return str(x)
    # absorb representation error such as 2.9999999999999996 for 3
    nudged = x * (1 + 1e-12) if x >= 0 else x * (1 - 1e-12)
    return str(Decimal(repr(nudged)).quantize(_CENT, rounding=ROUND_DOWN))


def format_speedup(x: float) -> str:
    return f"{truncate2(x)}x"


def format_percent(fraction: float) -> str:
    return truncate2(100.0 * fraction)


def exact_percent(numerator: int, denominator: int) -> str:
    """Percentage of a count ratio: minimal digits when exact to 2 decimals, else truncated.

    5/1000 -> "0.5", 4/10 -> "40", 9/1208 -> "0.74", 10/9840 -> "0.10".
    """
    pct = Fraction(100 * numerator, denominator)
    if (pct * 100).denominator == 1:
        text = f"{float(pct):.2f}".rstrip("0").rstrip(".")
        return text
    cents = (pct * 100).numerator // (pct * 100).denominator
    return f"{cents // 100}.{cents % 100:02d}"


def selected_label(n_selected: int, total: int) -> str:
    return f"{n_selected} / {total} ({exact_percent(n_selected, total)}%)"
