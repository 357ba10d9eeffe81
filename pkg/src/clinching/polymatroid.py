"""Submodular set functions and polymatroid queries over exact rationals.

Subsets of the agents ``0..n-1`` are int bitmasks, bit ``i`` standing for
agent ``i``.  Vectors indexed by agents (allocations, demands, caps) are plain
tuples of :class:`fractions.Fraction`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import MalformedFunctionError, PreconditionError, UnsupportedSizeError

MULTI_UNIT = "multi_unit"
SPONSORED_SEARCH = "sponsored_search"
EXPLICIT_TABLE = "explicit_table"
KINDS = (MULTI_UNIT, SPONSORED_SEARCH, EXPLICIT_TABLE)

MAX_VALIDATE_N = 16
MAX_CAPPED_SIZE = 20

ZERO = Fraction(0)


def rational(value) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are refused: every quantity in this package is exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected int, Fraction or str, got {type(value).__name__}")


def vector(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(rational(v) for v in values)


def as_mask(S) -> int:
    """Accept a bitmask or an iterable of agent indices."""
    if isinstance(S, int):
        return S
    mask = 0
    for i in S:
        mask |= 1 << i
    return mask


def members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def full_mask(n: int) -> int:
    return (1 << n) - 1


def subset_sum(x: Sequence[Fraction], S) -> Fraction:
    """``x(S)``, the total of the entries of ``x`` indexed by ``S``."""
    mask = as_mask(S)
    total = ZERO
    i = 0
    while mask:
        if mask & 1:
            total += x[i]
        mask >>= 1
        i += 1
    return total


def format_set(mask: int) -> str:
    return "{" + ",".join(str(i) for i in members(mask)) + "}"


@dataclass(frozen=True)
class SubmodularFunction:
    """A normalized monotone submodular function defining a polymatroid.

    Build instances through :meth:`multi_unit`, :meth:`sponsored_search` or
    :meth:`explicit_table`; the dataclass fields are the canonical form used
    for equality and serialization.
    """

    n: int
    kind: str
    supply: Fraction | None = None
    ctrs: tuple[Fraction, ...] | None = None
    values: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise MalformedFunctionError(f"ground set size must be >= 1, got {self.n!r}")
        if self.kind == MULTI_UNIT:
            if self.supply is None or self.supply <= 0:
                raise MalformedFunctionError("multi-unit supply must be positive")
        elif self.kind == SPONSORED_SEARCH:
            if self.ctrs is None or len(self.ctrs) != self.n:
                raise MalformedFunctionError("sponsored search needs exactly n click-through rates")
            if any(c <= 0 for c in self.ctrs):
                raise MalformedFunctionError("click-through rates must be positive")
            if any(a < b for a, b in zip(self.ctrs, self.ctrs[1:])):
                raise MalformedFunctionError("click-through rates must be nonincreasing")
        elif self.kind == EXPLICIT_TABLE:
            if self.values is None or len(self.values) != 1 << self.n:
                raise MalformedFunctionError("explicit table needs one value per subset")
            if any(v < 0 for v in self.values):
                raise MalformedFunctionError("table values must be nonnegative")
        else:
            raise MalformedFunctionError(f"unknown function kind {self.kind!r}")

    @classmethod
    def multi_unit(cls, n: int, supply) -> "SubmodularFunction":
        return cls(n=n, kind=MULTI_UNIT, supply=rational(supply))

    @classmethod
    def sponsored_search(cls, ctrs) -> "SubmodularFunction":
        ctrs = vector(ctrs)
        return cls(n=len(ctrs), kind=SPONSORED_SEARCH, ctrs=ctrs)

    @classmethod
    def explicit_table(cls, n: int, values) -> "SubmodularFunction":
        """``values`` is either a mapping from bitmask to value or a sequence
        indexed by bitmask."""
        size = 1 << n
        if isinstance(values, Mapping):
            missing = [m for m in range(size) if m not in values]
            if missing:
                raise MalformedFunctionError(
                    f"table has no entry for subset {format_set(missing[0])} (mask {missing[0]})"
                )
            extra = [m for m in values if not isinstance(m, int) or not 0 <= m < size]
            if extra:
                raise MalformedFunctionError(f"table key {extra[0]!r} is not a subset of [{n}]")
            values = [values[m] for m in range(size)]
        values = vector(values)
        if len(values) != size:
            raise MalformedFunctionError(f"table needs {size} entries, got {len(values)}")
        return cls(n=n, kind=EXPLICIT_TABLE, values=values)

    @cached_property
    def _ctr_prefix(self) -> tuple[Fraction, ...]:
        prefix = [ZERO]
        for c in self.ctrs:
            prefix.append(prefix[-1] + c)
        return tuple(prefix)

    @cached_property
    def table(self) -> tuple[Fraction, ...]:
        """Value of every subset, indexed by bitmask."""
        if self.values is not None:
            return self.values
        if self.n > MAX_CAPPED_SIZE:
            raise UnsupportedSizeError(f"cannot tabulate 2^{self.n} subsets")
        return tuple(self._closed_form(m) for m in range(1 << self.n))

    @cached_property
    def total(self) -> Fraction:
        """``f([n])``; also the finite stand-in for unbounded demand."""
        return self.eval(full_mask(self.n))

    def _closed_form(self, mask: int) -> Fraction:
        if self.kind == MULTI_UNIT:
            return self.supply if mask else ZERO
        return self._ctr_prefix[bin(mask).count("1")]

    def eval(self, S) -> Fraction:
        mask = as_mask(S)
        if mask >> self.n:
            raise PreconditionError(f"subset {format_set(mask)} is not contained in [{self.n}]")
        if self.kind == EXPLICIT_TABLE:
            return self.values[mask]
        return self._closed_form(mask)

    __call__ = eval


class Violation(NamedTuple):
    """A failed defining property, with the witnessing pair of subsets."""

    kind: str
    S: int
    T: int
    detail: str


def validate(f: SubmodularFunction) -> list[Violation]:
    """Exhaustively check normalization, monotonicity and submodularity.

    Closed forms are monotone submodular by construction and return ``[]``
    after the normalization check.  For tables every pair of subsets is
    compared, so ``n`` is limited to 16.
    """
    out = []
    if f(0) != 0:
        out.append(Violation("normalized", 0, 0, f"f(empty) = {f(0)} != 0"))
    if f.kind != EXPLICIT_TABLE:
        return out
    if f.n > MAX_VALIDATE_N:
        raise UnsupportedSizeError(f"exhaustive validation limited to n <= {MAX_VALIDATE_N}")
    tab = f.table
    size = 1 << f.n
    # single-element steps suffice for monotonicity; report them as (S, S+i)
    for S in range(size):
        for i in range(f.n):
            bit = 1 << i
            if not S & bit and tab[S] > tab[S | bit]:
                out.append(Violation(
                    "monotone", S, S | bit,
                    f"f({format_set(S)}) = {tab[S]} > f({format_set(S | bit)}) = {tab[S | bit]}",
                ))
    # local form: f(S+i) + f(S+j) >= f(S+i+j) + f(S) for i, j outside S is
    # equivalent to the pairwise inequality and costs n^2 2^n instead of 4^n
    for S in range(size):
        for i in range(f.n):
            bi = 1 << i
            if S & bi:
                continue
            for j in range(i + 1, f.n):
                bj = 1 << j
                if S & bj:
                    continue
                A, B = S | bi, S | bj
                lhs = tab[S] + tab[A | B]
                rhs = tab[A] + tab[B]
                if lhs > rhs:
                    out.append(Violation(
                        "submodular", A, B,
                        f"f(S&T) + f(S|T) = {lhs} > f(S) + f(T) = {rhs}",
                    ))
    return out


def _submask_sums(f: SubmodularFunction, psi: Sequence[Fraction], mask: int):
    """Yield ``(T, f(T) + psi(S minus T))`` for every ``T`` inside ``S`` in
    increasing bitmask order."""
    idx = members(mask)
    k = len(idx)
    if k > MAX_CAPPED_SIZE:
        raise UnsupportedSizeError(f"brute-force capping limited to |S| <= {MAX_CAPPED_SIZE}")
    tab = f.table
    total = sum((psi[i] for i in idx), ZERO)
    psums = [ZERO] * (1 << k)
    tmask = [0] * (1 << k)
    yield 0, tab[0] + total
    for j in range(1, 1 << k):
        low = (j & -j).bit_length() - 1
        rest = j & (j - 1)
        psums[j] = psums[rest] + psi[idx[low]]
        tmask[j] = tmask[rest] | (1 << idx[low])
        yield tmask[j], tab[tmask[j]] + (total - psums[j])


def capped_argmin(f: SubmodularFunction, psi: Sequence[Fraction], S) -> tuple[Fraction, int]:
    """Brute-force ``f_psi(S)`` together with its minimizer (lowest mask on ties)."""
    mask = as_mask(S)
    best_val, best_T = None, 0
    for T, val in _submask_sums(f, psi, mask):
        if best_val is None or val < best_val:
            best_val, best_T = val, T
    return best_val, best_T


def capped_eval(f: SubmodularFunction, psi: Sequence[Fraction], S, method: str = "auto") -> Fraction:
    """``f_psi(S) = min over T inside S of f(T) + psi(S minus T)``.

    This is the rank function of ``{y : y in P, 0 <= y <= psi}``.  With
    ``method="auto"`` the multi-unit and sponsored-search forms use their
    closed expressions; ``method="brute"`` always enumerates.
    """
    mask = as_mask(S)
    if not mask:
        return ZERO
    if method == "auto":
        if f.kind == MULTI_UNIT:
            return min(f.supply, subset_sum(psi, mask))
        if f.kind == SPONSORED_SEARCH:
            # f(T) only depends on |T|, so the best T of each size keeps the
            # largest caps.
            caps = sorted((psi[i] for i in members(mask)), reverse=True)
            prefix = f._ctr_prefix
            rest = sum(caps, ZERO)
            best = rest
            for k, c in enumerate(caps, start=1):
                rest -= c
                cand = prefix[k] + rest
                if cand < best:
                    best = cand
            return best
    elif method != "brute":
        raise ValueError(f"unknown method {method!r}")
    return capped_argmin(f, psi, mask)[0]


def capped_table(f: SubmodularFunction, psi: Sequence[Fraction]) -> list[Fraction]:
    """``f_psi`` on every subset at once.

    Uses ``f_psi(S) = min(f(S), min_{i in S} f_psi(S - i) + psi_i)``, which
    costs ``n 2^n`` instead of ``3^n`` for the whole table.
    """
    if f.n > MAX_CAPPED_SIZE:
        raise UnsupportedSizeError(f"capped table limited to n <= {MAX_CAPPED_SIZE}")
    tab = f.table
    out = [ZERO] * (1 << f.n)
    for S in range(1, 1 << f.n):
        best = tab[S]
        rest = S
        while rest:
            bit = rest & -rest
            rest ^= bit
            cand = out[S ^ bit] + psi[bit.bit_length() - 1]
            if cand < best:
                best = cand
        out[S] = best
    return out


def greedy_max(f: SubmodularFunction, psi: Sequence[Fraction], order: Sequence[int] | None = None):
    """Greedy maximizer of ``sum(y)`` over ``{y in P : 0 <= y <= psi}``.

    Coordinates are raised one at a time in ``order`` (default ``0..n-1``),
    each as far as every constraint ``y(S) <= f(S)`` with ``S`` containing it
    and its own cap allow.
    """
    n = f.n
    if order is None:
        order = range(n)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise PreconditionError(f"order {order} is not a permutation of range({n})")
    if any(p < 0 for p in psi):
        raise PreconditionError("caps must be nonnegative")
    tab = f.table
    y = [ZERO] * n
    ysum = [ZERO] * (1 << n)  # y(S), kept up to date incrementally
    for i in order:
        bit = 1 << i
        room = psi[i]
        for S in range(1 << n):
            if S & bit:
                slack = tab[S] - ysum[S]
                if slack < room:
                    room = slack
        y[i] = room
        if room:
            for S in range(1 << n):
                if S & bit:
                    ysum[S] += room
    return tuple(y)


def violated_set(f: SubmodularFunction, x: Sequence[Fraction]) -> int | None:
    """Return a subset with ``x(S) > f(S)`` (lowest mask), or None if ``x in P``."""
    if len(x) != f.n:
        raise PreconditionError(f"vector has length {len(x)}, expected {f.n}")
    if any(v < 0 for v in x):
        raise PreconditionError("vector has a negative entry")
    tab = f.table
    sums = [ZERO] * (1 << f.n)
    for S in range(1, 1 << f.n):
        low = S & -S
        sums[S] = sums[S ^ low] + x[low.bit_length() - 1]
        if sums[S] > tab[S]:
            return S
    return None


def is_feasible(f: SubmodularFunction, x: Sequence[Fraction]) -> bool:
    return violated_set(f, x) is None


def require_feasible(f: SubmodularFunction, x: Sequence[Fraction]) -> None:
    bad = violated_set(f, x)
    if bad is not None:
        raise PreconditionError(
            f"x is infeasible: x({format_set(bad)}) = {subset_sum(x, bad)} > f = {f(bad)}"
        )


def is_tight(f: SubmodularFunction, x: Sequence[Fraction], S) -> bool:
    """Exact test of ``x(S) == f(S)`` for a feasible ``x``."""
    require_feasible(f, x)
    mask = as_mask(S)
    return subset_sum(x, mask) == f(mask)


def tight_sets(f: SubmodularFunction, x: Sequence[Fraction]) -> list[int]:
    """All tight subsets of a feasible ``x``, by enumeration."""
    require_feasible(f, x)
    tab = f.table
    out = [0]
    sums = [ZERO] * (1 << f.n)
    for S in range(1, 1 << f.n):
        low = S & -S
        sums[S] = sums[S ^ low] + x[low.bit_length() - 1]
        if sums[S] == tab[S]:
            out.append(S)
    return out

