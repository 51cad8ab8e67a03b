"""Bitmask encoding of candidate models.

A model is the subset of candidate columns it includes, encoded as a plain
Python int with bit ``j`` set when column ``j`` is in.  The intercept is
always included and never part of the mask, so a model's parameter count
(its *dimension*) is ``popcount(mask) + 1``.  The null model is mask 0 and
the full model over ``p`` candidates is ``(1 << p) - 1``.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterator, Sequence


def popcount(mask: int) -> int:
    """Number of candidate columns in the model."""
    return int(mask).bit_count()


def dimension(mask: int) -> int:
    """Parameter count of the model: candidate columns plus the intercept."""
    return popcount(mask) + 1


def indices(mask: int) -> list[int]:
    """Sorted column indices included in ``mask``."""
    out = []
    j = 0
    m = int(mask)
    while m:
        if m & 1:
            out.append(j)
        m >>= 1
        j += 1
    return out


def from_indices(idx: Sequence[int]) -> int:
    """Build a mask from column indices."""
    m = 0
    for j in idx:
        m |= 1 << int(j)
    return m


def from_names(names: Sequence[str], chosen: Sequence[str]) -> int:
    """Build a mask from column names, validating against ``names``."""
    lookup = {name: j for j, name in enumerate(names)}
    try:
        return from_indices([lookup[c] for c in chosen])
    except KeyError as exc:
        raise ValueError(f"unknown column {exc.args[0]!r}") from None


def contains(mask: int, j: int) -> bool:
    """True when column ``j`` is part of the model."""
    return bool((int(mask) >> int(j)) & 1)


def full_mask(p: int) -> int:
    return (1 << p) - 1


def formula(mask: int, names: Sequence[str], response: str = "y") -> str:
    """R-style display formula, e.g. ``y~x4+x8`` or ``y~1`` for the null model."""
    cols = indices(mask)
    rhs = "+".join(names[j] for j in cols) if cols else "1"
    return f"{response}~{rhs}"


def masks_of_size(p: int, k: int) -> Iterator[int]:
    """All masks over ``p`` columns with exactly ``k`` bits, ascending as ints."""
    for combo in combinations(range(p), k):
        yield from_indices(combo)


def all_masks(p: int, kmin: int = 0, kmax: int | None = None) -> Iterator[int]:
    """All masks with popcount in ``[kmin, kmax]``, by size then mask value."""
    kmax = p if kmax is None else kmax
    for k in range(kmin, kmax + 1):
        yield from sorted(masks_of_size(p, k))
