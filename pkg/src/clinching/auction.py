"""Ascending-clock clinching auctions over polymatroids.

:func:`run` drives the round-robin price clock.  Each iteration computes
demands, lets every agent clinch the part of the remnant supply the others
cannot absorb, refreshes demands (the checkpoint), and raises one agent's
price by ``epsilon``.  Multi-unit environments use the remnant-supply formula,
every other environment the capped-rank formula; both give the same numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import InvariantViolation, PreconditionError
from .payment import INF, Agent, beta, demand
from .polymatroid import (
    MULTI_UNIT, ZERO, SubmodularFunction, capped_eval, full_mask, rational,
    require_feasible,
)

CLINCHED_FULL_DEMAND = "ClinchedFullDemand"
PRICE_REACHED_VALUE = "PriceReachedValue"
AVERAGE_BUDGET_BINDING = "AverageBudgetBinding"
UNCLASSIFIED = "Unclassified"

TRACE_FULL = "full"
TRACE_SUMMARY = "summary"

ALGORITHMS = ("auto", "multi_unit", "polyhedral")


@dataclass(frozen=True)
class Scenario:
    f: SubmodularFunction
    agents: tuple[Agent, ...]
    epsilon: Fraction
    price_order: tuple[int, ...] = ()
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "epsilon", rational(self.epsilon))
        if len(self.agents) != self.f.n:
            raise ValueError(f"{len(self.agents)} agents for a ground set of size {self.f.n}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        order = tuple(self.price_order) or tuple(range(self.f.n))
        if sorted(order) != list(range(self.f.n)):
            raise ValueError(f"price order {order} is not a permutation of the agents")
        object.__setattr__(self, "price_order", order)

    @property
    def n(self) -> int:
        return self.f.n

    def assumption1_violations(self) -> list[str]:
        """Values and finite initial slopes that are off the price grid."""
        eps = self.epsilon
        out = []
        for i, agent in enumerate(self.agents):
            if (agent.value / eps).denominator != 1:
                out.append(f"agent {i}: value {agent.value} is not a multiple of epsilon {eps}")
            b = beta(agent.alpha)
            if b != INF and (b / eps).denominator != 1:
                out.append(f"agent {i}: beta {b} is not a multiple of epsilon {eps}")
        return out

    def assumption1_holds(self) -> bool:
        return not self.assumption1_violations()

    def with_value(self, i: int, value) -> "Scenario":
        agents = list(self.agents)
        agents[i] = Agent(rational(value), agents[i].alpha)
        return Scenario(self.f, tuple(agents), self.epsilon, self.price_order, self.seed)


@dataclass(frozen=True)
class AuctionState:
    x: tuple[Fraction, ...]
    payments: tuple[Fraction, ...]
    prices: tuple[Fraction, ...]
    demand: tuple[Fraction, ...]


@dataclass(frozen=True)
class Outcome:
    x: tuple[Fraction, ...]
    payments: tuple[Fraction, ...]


@dataclass(frozen=True)
class InvariantReport:
    """Exact checks at a checkpoint; each failure list holds
    ``(agent, lhs, rhs)`` witnesses."""

    maximality: tuple = ()
    all_goods_sold: tuple = ()
    self_unsaturation: tuple = ()

    @property
    def ok(self) -> bool:
        return not (self.maximality or self.all_goods_sold or self.self_unsaturation)

    def status(self) -> dict[str, bool]:
        return {
            "I": not self.maximality,
            "II": not self.all_goods_sold,
            "III": not self.self_unsaturation,
        }


@dataclass(frozen=True)
class Checkpoint:
    """Record taken after clinching and the demand refresh.

    ``next_agent`` is the agent whose price rises right after this point.
    The state fields are only kept by full traces.
    """

    iteration: int
    next_agent: int
    positive: int
    state: AuctionState | None = None
    demand_before: tuple[Fraction, ...] | None = None
    clinched: tuple[Fraction, ...] | None = None
    saturation: tuple[int, int] | None = None
    invariants: InvariantReport | None = None


@dataclass(frozen=True)
class ClinchEvent:
    iteration: int
    agent: int
    amount: Fraction
    price: Fraction


@dataclass(frozen=True)
class TightBlock:
    """One level of the nested tight family: ``T = S - S_prev`` and the
    agent whose drop (without clinching everything) closed it."""

    S: int
    T: int
    dropper: int
    price: Fraction


@dataclass
class AuctionTrace:
    price_order: tuple[int, ...]
    epsilon: Fraction
    mode: str
    algorithm: str
    checkpoints: list[Checkpoint] = field(default_factory=list)
    clinch_events: list[ClinchEvent] = field(default_factory=list)
    dropping_prices: list[Fraction | None] = field(default_factory=list)
    dropping_reasons: list[tuple[str, ...]] = field(default_factory=list)
    drop_iterations: list[int | None] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.checkpoints)

    def positive_sets(self) -> list[int]:
        """Distinct nonempty positive-demand sets, in order of appearance."""
        out = []
        for cp in self.checkpoints:
            if cp.positive and (not out or out[-1] != cp.positive):
                out.append(cp.positive)
        return out

    def tight_family(self) -> list[TightBlock]:
        """Nested family ``S_1 < S_2 < ... < S_k`` (smallest first).

        Each shrink of the positive-demand set between consecutive checkpoints
        closes a block; its dropper is the agent whose price had just risen.
        """
        blocks = []
        for before, after in zip(self.checkpoints, self.checkpoints[1:]):
            if after.positive != before.positive:
                dropper = before.next_agent
                blocks.append(TightBlock(before.positive, before.positive & ~after.positive,
                                         dropper, self.dropping_prices[dropper]))
        blocks.reverse()
        return blocks


def _positive_mask(d: Sequence[Fraction]) -> int:
    mask = 0
    for i, v in enumerate(d):
        if v > 0:
            mask |= 1 << i
    return mask


def _clinch(f: SubmodularFunction, x, d) -> tuple[Fraction, ...]:
    n = f.n
    N = full_mask(n)
    psi = [a + b for a, b in zip(x, d)]
    base = capped_eval(f, psi, N)
    out = []
    for i in range(n):
        if not d[i]:
            out.append(ZERO)
            continue
        saved = psi[i]
        psi[i] = x[i]
        diff = base - capped_eval(f, psi, N)
        psi[i] = saved
        out.append(diff if diff > 0 else ZERO)
    return tuple(out)


def clinch_amounts(f: SubmodularFunction, x: Sequence, d: Sequence) -> tuple[Fraction, ...]:
    """``delta_i = [f_{x+d}([n]) - f_{x+(0,d_-i)}([n])]^+`` for every agent,
    where ``(0, d_-i)`` zeroes agent ``i``'s demand."""
    x = tuple(rational(v) for v in x)
    d = tuple(rational(v) for v in d)
    if len(x) != f.n or len(d) != f.n:
        raise PreconditionError("x and d must have one entry per agent")
    if any(v < 0 for v in d):
        raise PreconditionError("demands must be nonnegative")
    require_feasible(f, x)
    return _clinch(f, x, d)


def clinch_amounts_multiunit(supply, x: Sequence, d: Sequence) -> tuple[Fraction, ...]:
    """Remnant supply left over by everybody else's demand,
    ``[supply - sum(x) - sum_{j != i} d_j]^+``, never more than ``d_i``."""
    supply = rational(supply)
    x = tuple(rational(v) for v in x)
    d = tuple(rational(v) for v in d)
    taken = sum(x, ZERO)
    if taken > supply:
        raise PreconditionError(f"allocated {taken} exceeds supply {supply}")
    remnant = supply - taken
    total_d = sum(d, ZERO)
    out = []
    for di in d:
        amt = remnant - (total_d - di)
        if amt < 0:
            amt = ZERO
        # the clamp only binds when total demand falls short of the remnant
        out.append(min(amt, di))
    return tuple(out)


def saturation_partition(f: SubmodularFunction, x: Sequence, d: Sequence, k: int) -> tuple[int, int]:
    """Split agents into ``k``-unsaturated and ``k``-saturated masks.

    With ``psi = x + d`` except ``psi_k = x_k``, agent ``i`` is unsaturated
    exactly when ``psi_i = f_psi([n]) - f_psi([n] - i)``.
    """
    n = f.n
    N = full_mask(n)
    psi = [rational(a) + rational(b) for a, b in zip(x, d)]
    psi[k] = rational(x[k])
    top = capped_eval(f, psi, N)
    unsat = 0
    for i in range(n):
        if psi[i] == top - capped_eval(f, psi, N & ~(1 << i)):
            unsat |= 1 << i
    return unsat, N & ~unsat


def check_invariants(f: SubmodularFunction, x: Sequence, d: Sequence) -> InvariantReport:
    """Maximality of clinching (I), all goods sold (II) and
    self-unsaturation (III) at a checkpoint state."""
    n = f.n
    N = full_mask(n)
    x = [rational(v) for v in x]
    psi = [a + rational(b) for a, b in zip(x, d)]
    top = capped_eval(f, psi, N)
    inv1, inv3 = [], []
    inv2 = () if top == f.total else ((None, top, f.total),)
    for i in range(n):
        saved = psi[i]
        psi[i] = x[i]
        without = capped_eval(f, psi, N)
        if without != top:
            inv1.append((i, top, without))
        rest = capped_eval(f, psi, N & ~(1 << i)) + x[i]
        if without != rest:
            inv3.append((i, without, rest))
        psi[i] = saved
    return InvariantReport(tuple(inv1), inv2, tuple(inv3))


def iteration_bound(scenario: Scenario) -> int:
    vmax = max((a.value for a in scenario.agents), default=ZERO)
    return scenario.n * (math.ceil(vmax / scenario.epsilon) + 2)


def _drop_reasons(agent: Agent, d_before, delta, x, pay, price) -> tuple[str, ...]:
    reasons = []
    if delta > 0 and delta == d_before:
        reasons.append(CLINCHED_FULL_DEMAND)
    if price >= agent.value:
        reasons.append(PRICE_REACHED_VALUE)
    b = beta(agent.alpha)
    if b != INF and pay == b * x and price > b:
        reasons.append(AVERAGE_BUDGET_BINDING)
    return tuple(reasons) or (UNCLASSIFIED,)


def run(scenario: Scenario, check: bool = False, trace: str = TRACE_FULL,
        algorithm: str = "auto", invariants: bool | None = None):
    """Run the auction; returns ``(Outcome, AuctionTrace)``.

    ``check=True`` evaluates the three invariants at every checkpoint and
    raises :class:`InvariantViolation` on the first failure.  ``invariants``
    records the reports without raising (defaults to ``check``).
    """
    if trace not in (TRACE_FULL, TRACE_SUMMARY):
        raise ValueError(f"unknown trace mode {trace!r}")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if invariants is None:
        invariants = check
    f = scenario.f
    if algorithm == "auto":
        algorithm = "multi_unit" if f.kind == MULTI_UNIT else "polyhedral"
    if algorithm == "multi_unit":
        if f.kind != MULTI_UNIT:
            raise ValueError("the multi-unit clinching rule needs a multi-unit environment")
        supply = f.supply

        def clinch(x, d):
            return clinch_amounts_multiunit(supply, x, d)
    else:
        def clinch(x, d):
            return _clinch(f, x, d)

    n = scenario.n
    agents = scenario.agents
    eps = scenario.epsilon
    order = scenario.price_order
    cap = f.total
    full = trace == TRACE_FULL

    x = [ZERO] * n
    pay = [ZERO] * n
    p = [ZERO] * n
    tr = AuctionTrace(order, eps, trace, algorithm,
                      dropping_prices=[None] * n, dropping_reasons=[()] * n,
                      drop_iterations=[None] * n)
    pos = 0
    bound = iteration_bound(scenario)
    it = 0
    while True:
        if it > bound:
            raise InvariantViolation(f"auction exceeded its iteration bound {bound}")
        d_before = tuple(demand(agents[i], x[i], pay[i], p[i], cap) for i in range(n))
        delta = clinch(x, d_before)
        for i in range(n):
            if delta[i]:
                x[i] += delta[i]
                pay[i] += p[i] * delta[i]
                tr.clinch_events.append(ClinchEvent(it, i, delta[i], p[i]))
        d = tuple(demand(agents[i], x[i], pay[i], p[i], cap) for i in range(n))
        for i in range(n):
            if not d[i] and tr.dropping_prices[i] is None:
                tr.dropping_prices[i] = p[i]
                tr.drop_iterations[i] = it
                tr.dropping_reasons[i] = _drop_reasons(agents[i], d_before[i], delta[i],
                                                       x[i], pay[i], p[i])
        hat = order[pos]
        report = check_invariants(f, x, d) if invariants else None
        cp = Checkpoint(
            iteration=it,
            next_agent=hat,
            positive=_positive_mask(d),
            state=AuctionState(tuple(x), tuple(pay), tuple(p), d) if full else None,
            demand_before=d_before if full else None,
            clinched=delta if full else None,
            saturation=saturation_partition(f, x, d, hat) if full else None,
            invariants=report,
        )
        tr.checkpoints.append(cp)
        if check and not report.ok:
            raise InvariantViolation(
                f"invariant failure at iteration {it}: {report.status()}", cp, report)
        if not any(d):
            break
        p[hat] += eps
        pos = (pos + 1) % n
        it += 1
    return Outcome(tuple(x), tuple(pay)), tr
