"""Ability-to-pay functions and the demand they induce.

An ability-to-pay function is the lower envelope of finitely many affine
pieces ``a + b*x`` with ``a, b >= 0``, pinned to zero at ``x = 0``.  A hard
budget ``B`` is the single piece ``(B, 0)``; an average budget ``beta`` is the
single piece ``(0, beta)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import PreconditionError
from .polymatroid import ZERO, rational

INF = float("inf")


@dataclass(frozen=True)
class AbilityToPay:
    """Concave nondecreasing payment cap ``alpha``.

    ``pieces`` holds ``(intercept, slope)`` pairs in canonical form: dominated
    and duplicate pieces removed, sorted by intercept.
    """

    pieces: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("ability-to-pay needs at least one piece")
        for a, b in self.pieces:
            if a < 0 or b < 0:
                raise ValueError(f"piece ({a}, {b}) has a negative coefficient")

    @classmethod
    def from_pieces(cls, pieces: Iterable) -> "AbilityToPay":
        raw = []
        for piece in pieces:
            a, b = piece
            raw.append((rational(a), rational(b)))
        if not raw:
            raise ValueError("ability-to-pay needs at least one piece")
        for a, b in raw:
            if a < 0 or b < 0:
                raise ValueError(f"piece ({a}, {b}) has a negative coefficient")
        kept = set()
        for p in raw:
            dominated = any(
                q != p and q[0] <= p[0] and q[1] <= p[1] for q in raw
            )
            if not dominated:
                kept.add(p)
        return cls(tuple(sorted(kept)))

    @classmethod
    def hard_budget(cls, budget) -> "AbilityToPay":
        return cls.from_pieces([(budget, 0)])

    @classmethod
    def average_budget(cls, beta) -> "AbilityToPay":
        return cls.from_pieces([(0, beta)])

    def __call__(self, x) -> Fraction:
        return alpha_eval(self, x)


@dataclass(frozen=True)
class Agent:
    value: Fraction
    alpha: AbilityToPay

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"agent value must be nonnegative, got {self.value}")

    @classmethod
    def make(cls, value, pieces) -> "Agent":
        alpha = pieces if isinstance(pieces, AbilityToPay) else AbilityToPay.from_pieces(pieces)
        return cls(rational(value), alpha)


def alpha_eval(alpha: AbilityToPay, x) -> Fraction:
    x = rational(x)
    if x < 0:
        raise PreconditionError(f"allocation must be nonnegative, got {x}")
    if x == 0:
        return ZERO
    return min(a + b * x for a, b in alpha.pieces)


def beta(alpha: AbilityToPay):
    """Initial slope ``lim alpha(x)/x`` as ``x`` decreases to 0.

    Only zero-intercept pieces keep the ratio bounded, so this is their
    smallest slope, or ``inf`` (a float) if every piece has a positive
    intercept.
    """
    slopes = [b for a, b in alpha.pieces if a == 0]
    return min(slopes) if slopes else INF


def is_admissible(alpha: AbilityToPay, x, payment) -> bool:
    return rational(payment) <= alpha_eval(alpha, x)


def demand(agent: Agent, x, payment, price, cap) -> Fraction:
    """Largest extra quantity ``z`` with ``(x + z, payment + price*z)``
    admissible, or 0 once the price reaches the agent's value.

    An unbounded demand is reported as ``cap``; callers pass ``f([n])``.
    """
    x, payment, price, cap = rational(x), rational(payment), rational(price), rational(cap)
    if not is_admissible(agent.alpha, x, payment):
        raise PreconditionError(
            f"state (x={x}, payment={payment}) is outside the admissible set"
        )
    if price >= agent.value:
        return ZERO
    best = None
    for a, b in agent.alpha.pieces:
        if b < price:
            z = (a + b * x - payment) / (price - b)
            if best is None or z < best:
                best = z
    if best is None or best > cap:
        return cap
    return best
