"""Set partitions of {1..n} and moment/cumulant transforms over them.

Moments and cumulants of a generating functional are related by sums over
the lattice of set partitions:

    moment(1..n)   = sum over partitions pi  of  prod_B cumulant(B)
    cumulant(1..n) = sum over partitions pi  of
                     (|pi|-1)! (-1)^(|pi|-1) prod_B moment(B)

where B runs over the blocks of pi.  Both transforms, together with the
enumerations they need (all partitions, partitions with a block-size cap,
perfect pairings), live here as exact, pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

from .errors import BoundsError, DomainError, IncompleteInputError

# Bell(10) = 115975 partitions is the practical desk-scale ceiling.
MAX_PARTITION_N = 10

Block = tuple[int, ...]
IndexKey = tuple[int, ...]


@dataclass(frozen=True)
class Partition:
    """A partition of {1..n} into disjoint nonempty blocks.

    Canonical form: blocks ordered by their smallest element, elements
    ascending within each block.
    """

    n: int
    blocks: tuple[Block, ...]

    @property
    def size(self) -> int:
        """Number of blocks |pi|."""
        return len(self.blocks)

    def max_block_size(self) -> int:
        return max(len(b) for b in self.blocks)

    def __str__(self) -> str:
        return "|".join("".join(str(i) for i in b) for b in self.blocks)


def validate_partition(p: Partition) -> None:
    """Raise DomainError unless p satisfies every Partition invariant."""
    if p.n < 1:
        raise DomainError(f"partition ground set must be nonempty, got n={p.n}")
    seen: set[int] = set()
    for block in p.blocks:
        if not block:
            raise DomainError("empty block")
        if list(block) != sorted(block):
            raise DomainError(f"block {block} not sorted")
        for i in block:
            if not 1 <= i <= p.n:
                raise DomainError(f"index {i} outside 1..{p.n}")
            if i in seen:
                raise DomainError(f"index {i} appears twice")
            seen.add(i)
    if len(seen) != p.n:
        raise DomainError("blocks do not cover {1..n}")
    mins = [b[0] for b in p.blocks]
    if mins != sorted(mins):
        raise DomainError("blocks not ordered by smallest element")


def _check_order(n: int, n_cap: int) -> None:
    if not isinstance(n, int):
        raise DomainError(f"partition order must be an integer, got {n!r}")
    if not 1 <= n <= n_cap:
        raise BoundsError(
            f"partition order n={n} outside 1..{n_cap} "
            f"(cap keeps Bell-number growth desk-scale)"
        )


def _grow(labels: list[int], sizes: list[int], pos: int, used: int,
          n: int, cap: int | None) -> Iterator[Partition]:
    # Restricted-growth strings in lexicographic order: element pos+1 joins
    # block `b` for b = 0..used, where `used` blocks exist so far.  Blocks
    # come out labelled by first occurrence, i.e. already canonical.
    if pos == n:
        blocks: list[list[int]] = [[] for _ in range(used)]
        for i, b in enumerate(labels):
            blocks[b].append(i + 1)
        yield Partition(n, tuple(tuple(b) for b in blocks))
        return
    for b in range(used + 1):
        if cap is not None and b < used and sizes[b] >= cap:
            continue
        labels[pos] = b
        sizes[b] += 1
        yield from _grow(labels, sizes, pos + 1, used + (1 if b == used else 0), n, cap)
        sizes[b] -= 1


@lru_cache(maxsize=64)
def _cached_partitions(n: int, cap: int | None) -> tuple[Partition, ...]:
    labels = [0] * n
    sizes = [0] * (n + 1)
    return tuple(_grow(labels, sizes, 0, 0, n, cap))


def enumerate_partitions(n: int, n_cap: int = MAX_PARTITION_N) -> list[Partition]:
    """All partitions of {1..n} in canonical (restricted-growth) order.

    The count equals the n-th Bell number.
    """
    _check_order(n, n_cap)
    return list(_cached_partitions(n, None))


def enumerate_capped_partitions(n: int, cap: int,
                                n_cap: int = MAX_PARTITION_N) -> list[Partition]:
    """Partitions of {1..n} whose every block has size <= cap."""
    _check_order(n, n_cap)
    if cap < 1:
        raise DomainError(f"block-size cap must be >= 1, got {cap}")
    return list(_cached_partitions(n, cap))


def _match(rest: tuple[int, ...], acc: tuple[Block, ...], n: int) -> Iterator[Partition]:
    if not rest:
        yield Partition(n, acc)
        return
    a = rest[0]
    for j in range(1, len(rest)):
        b = rest[j]
        yield from _match(rest[1:j] + rest[j + 1:], acc + ((a, b),), n)


def pairings(n: int, n_cap: int = MAX_PARTITION_N) -> list[Partition]:
    """All perfect matchings of {1..n}; there are (n-1)!! of them.

    These are exactly the partitions of {1..n} into blocks of size 2,
    the ones a centered Gaussian moment sum runs over.
    """
    _check_order(n, n_cap)
    if n % 2 != 0:
        raise DomainError(f"pairings need an even ground set, got n={n}")
    return list(_match(tuple(range(1, n + 1)), (), n))


_BELL = [1]  # B(0)


def bell_number(n: int) -> int:
    """n-th Bell number via the binomial recurrence B(m) = sum C(m-1,k) B(k)."""
    if n < 0:
        raise DomainError(f"Bell number index must be >= 0, got {n}")
    while len(_BELL) <= n:
        m = len(_BELL)
        _BELL.append(sum(math.comb(m - 1, k) * _BELL[k] for k in range(m)))
    return _BELL[n]


def subset_key(indices: Iterable[int]) -> IndexKey:
    """Canonical map key for a set of indices: the sorted tuple."""
    key = tuple(sorted(indices))
    if len(set(key)) != len(key):
        raise DomainError(f"duplicate indices in {key}")
    return key


def _lookup(table: Mapping[IndexKey, complex], block: Block, what: str) -> complex:
    try:
        return table[block]
    except KeyError:
        raise IncompleteInputError(
            f"{what} map is missing an entry for subset {block}"
        ) from None


def moments_from_cumulants(cumulants: Mapping[IndexKey, complex], n: int,
                           n_cap: int = MAX_PARTITION_N) -> complex:
    """Order-n moment from the cumulants of every nonempty subset of {1..n}.

    Keys of `cumulants` are canonical sorted tuples (see subset_key).
    """
    _check_order(n, n_cap)
    total = 0j
    for part in _cached_partitions(n, None):
        prod = complex(1.0)
        for block in part.blocks:
            prod *= _lookup(cumulants, block, "cumulant")
        total += prod
    return total


def cumulants_from_moments(moments: Mapping[IndexKey, complex], n: int,
                           n_cap: int = MAX_PARTITION_N) -> complex:
    """Order-n cumulant from the moments of every nonempty subset of {1..n}."""
    _check_order(n, n_cap)
    total = 0j
    for part in _cached_partitions(n, None):
        k = part.size
        coeff = math.factorial(k - 1) * (-1 if k % 2 == 0 else 1)
        prod = complex(1.0)
        for block in part.blocks:
            prod *= _lookup(moments, block, "moment")
        total += coeff * prod
    return total
