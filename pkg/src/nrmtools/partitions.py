"""Set partitions, occupancy vectors, and partial Bell polynomials.

Partitions of {1..n} use order-of-appearance labels: cell 1 contains item 1,
cell 2 contains the smallest item not in cell 1, and so on.  This makes the
label vector a canonical value, so partitions can be compared, hashed, and
used as dictionary keys by enumeration-based oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SizeLimitError

ENUMERATION_CAP = 12


@dataclass(frozen=True, slots=True)
class Partition:
    """A set partition of {1..n} stored as a canonical assignment vector.

    ``assignment[i]`` is the 1-based label of the cell containing item i+1.
    """

    assignment: tuple[int, ...]

    def __post_init__(self):
        if not self.assignment:
            raise DomainError("partition of zero items is not allowed")
        seen = 0
        for label in self.assignment:
            if label == seen + 1:
                seen += 1
            elif not 1 <= label <= seen:
                raise DomainError(
                    f"assignment {self.assignment} is not in order-of-appearance form"
                )

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Build a partition from arbitrary hashable labels, canonicalizing them."""
        mapping: dict = {}
        canonical = []
        for lab in labels:
            if lab not in mapping:
                mapping[lab] = len(mapping) + 1
            canonical.append(mapping[lab])
        return cls(tuple(canonical))

    @classmethod
    def from_cells(cls, cells) -> "Partition":
        items = sorted(i for cell in cells for i in cell)
        n = len(items)
        if items != list(range(1, n + 1)):
            raise DomainError("cells must partition {1..n} exactly")
        labels = [0] * n
        for j, cell in enumerate(cells):
            for i in cell:
                labels[i - 1] = j
        return cls.from_labels(labels)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def n_blocks(self) -> int:
        return max(self.assignment)

    @property
    def sizes(self) -> tuple[int, ...]:
        counts = [0] * self.n_blocks
        for label in self.assignment:
            counts[label - 1] += 1
        return tuple(counts)

    def cells(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_blocks)]
        for i, label in enumerate(self.assignment, start=1):
            out[label - 1].append(i)
        return out

    def to_text(self) -> str:
        """Compact pipe-separated form, e.g. ``"1|1|2"``."""
        return "|".join(str(label) for label in self.assignment)

    @classmethod
    def from_text(cls, text: str) -> "Partition":
        try:
            labels = [int(tok) for tok in text.strip().split("|")]
        except ValueError as exc:
            raise DomainError(f"cannot parse partition text {text!r}") from exc
        return cls.from_labels(labels)


@dataclass(frozen=True, slots=True)
class OccupancyVector:
    """Cell-size multiplicities: ``counts[i-1]`` cells have size i."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise DomainError("occupancy counts must be non-negative")
        if self.n == 0:
            raise DomainError("occupancy vector must describe at least one item")

    @property
    def n(self) -> int:
        return sum(i * c for i, c in enumerate(self.counts, start=1))

    @property
    def n_blocks(self) -> int:
        return sum(self.counts)


def occupancy(p: Partition) -> OccupancyVector:
    """Cell-size multiplicities of a partition, padded to length n."""
    counts = [0] * p.n
    for size in p.sizes:
        counts[size - 1] += 1
    return OccupancyVector(tuple(counts))


def enumerate_partitions(n: int) -> list[Partition]:
    """All set partitions of {1..n} in canonical labeling, each exactly once.

    Hard-capped at n = 12 (Bell(12) is about 4.2 million partitions).
    """
    if n < 1:
        raise DomainError("n must be a positive integer")
    if n > ENUMERATION_CAP:
        raise SizeLimitError(
            f"partition enumeration is capped at n = {ENUMERATION_CAP}; "
            f"use the samplers for n = {n}"
        )
    out: list[Partition] = []
    assignment = [0] * n

    def extend(i: int, k: int):
        if i == n:
            out.append(Partition(tuple(assignment)))
            return
        for label in range(1, k + 2):
            assignment[i] = label
            extend(i + 1, max(k, label))

    assignment[0] = 1
    extend(1, 1)
    return out


def enumerate_occupancy_vectors(n: int) -> list[OccupancyVector]:
    """All occupancy vectors of n items (one per integer partition of n)."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    out: list[OccupancyVector] = []
    counts = [0] * n

    def extend(remaining: int, max_part: int):
        if remaining == 0:
            out.append(OccupancyVector(tuple(counts)))
            return
        for part in range(min(remaining, max_part), 0, -1):
            counts[part - 1] += 1
            extend(remaining - part, part)
            counts[part - 1] -= 1

    extend(n, n)
    return out


def partitions_with_occupancy(m: OccupancyVector) -> int:
    """Number of set partitions of {1..n} with the given size multiplicities.

    Equals n! / prod_i (i!)^{m_i} m_i!.
    """
    n = m.n
    count = math.factorial(n)
    for i, mi in enumerate(m.counts, start=1):
        if mi:
            count //= math.factorial(i) ** mi * math.factorial(mi)
    return count


def _check_bell_args(n: int, k: int, xlen: int):
    if k < 1 or k > n:
        raise DomainError(f"partial Bell polynomial needs 1 <= k <= n, got n={n}, k={k}")
    if xlen < n - k + 1:
        raise DomainError(
            f"weight sequence too short: need at least {n - k + 1} entries, got {xlen}"
        )


def bell_partial(n: int, k: int, x) -> float:
    """Partial Bell polynomial B_{n,k}(x_1, x_2, ...) by the standard recursion.

    B_{n,k}(x) = sum_{i=1}^{n-k+1} C(n-1, i-1) x_i B_{n-i,k-1}(x), with
    B_{0,0} = 1.  Equals the sum over set partitions of {1..n} with k blocks
    of the product of x_{block size}.
    """
    x = list(x)
    _check_bell_args(n, k, len(x))
    table = bell_triangle(n, x)
    return float(table.values[n, k])


def bell_partial_log(n: int, k: int, log_x) -> float:
    """log B_{n,k}(x) from log x_i, for inputs spanning many orders of magnitude."""
    log_x = list(log_x)
    _check_bell_args(n, k, len(log_x))
    table = bell_triangle_log(n, log_x)
    return float(table.values[n, k])


@dataclass(frozen=True)
class BellTable:
    """Triangular array of (log) partial Bell polynomial values.

    ``values[m, j]`` holds B_{m,j}(x) for 0 <= j <= m <= n; entries outside
    the triangle are 0 (or -inf in log space).
    """

    values: np.ndarray
    log_space: bool


def bell_triangle(n: int, x) -> BellTable:
    """Plain-space triangle B_{m,j}(x) for all m, j <= n."""
    x = np.asarray(list(x), dtype=float)
    b = np.zeros((n + 1, n + 1))
    b[0, 0] = 1.0
    for m in range(1, n + 1):
        for j in range(1, m + 1):
            top = m - j + 1
            acc = 0.0
            for i in range(1, min(top, len(x)) + 1):
                acc += math.comb(m - 1, i - 1) * x[i - 1] * b[m - i, j - 1]
            b[m, j] = acc
    b.setflags(write=False)
    return BellTable(values=b, log_space=False)


def bell_triangle_log(n: int, log_x) -> BellTable:
    """Log-space triangle via logaddexp; safe for x_i spanning hundreds of decades."""
    log_x = np.asarray(list(log_x), dtype=float)
    b = np.full((n + 1, n + 1), -np.inf)
    b[0, 0] = 0.0
    log_binom = np.array(
        [[math.lgamma(m + 1) - math.lgamma(i + 1) - math.lgamma(m - i + 1) if i <= m else -np.inf
          for i in range(n + 1)] for m in range(n + 1)]
    )
    for m in range(1, n + 1):
        for j in range(1, m + 1):
            top = min(m - j + 1, len(log_x))
            if top < 1:
                continue
            terms = (
                log_binom[m - 1, 0:top]
                + log_x[0:top]
                + b[m - np.arange(1, top + 1), j - 1]
            )
            b[m, j] = np.logaddexp.reduce(terms)
    b.setflags(write=False)
    return BellTable(values=b, log_space=True)
