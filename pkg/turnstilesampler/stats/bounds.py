"""Tail bound for sums of l-wise independent indicators."""

from ..core.errors import ContractViolation


def tail_bound(expected: float, l: int, alpha: float) -> float:
    """
    Bound on Pr[|Z - E[Z]| > alpha E[Z]] for Z a sum of l-wise independent indicators.

    Returns min(1, 48l/alpha * (6l / (alpha^2 E[Z]))^((l-1)/2)).

    Raises:
        ContractViolation: if l is odd or below 2, or E[Z] or alpha is not positive
    """
    if l < 2 or l % 2:
        raise ContractViolation(f"moment order must be even and at least 2, got {l}")
    if expected <= 0 or alpha <= 0:
        raise ContractViolation("expected value and deviation factor must be positive")
    base = 6.0 * l / (alpha * alpha * expected)
    if base >= 1.0:
        return 1.0
    return min(1.0, 48.0 * l / alpha * base ** ((l - 1) / 2.0))
