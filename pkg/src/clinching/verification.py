"""Certificates for auction outcomes.

Everything here is exact.  Pareto-efficiency is decided by an LP over all
alternative outcomes; incentive compatibility by rerunning the auction on every
grid misreport; clinched amounts by an oracle that tests the definition
directly on the vertices of the remnant polytope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence

from . import lp as lpmod
from .auction import (
    CLINCHED_FULL_DEMAND, TRACE_SUMMARY, AuctionTrace, Outcome, Scenario, run,
)
from .errors import GridMisalignmentError, PreconditionError, UnsupportedSizeError
from .payment import INF, Agent, alpha_eval, beta, is_admissible
from .polymatroid import (
    MULTI_UNIT, ZERO, SubmodularFunction, format_set, full_mask, greedy_max, members,
    rational, subset_sum, violated_set,
)

PASS, FAIL, WARN = "pass", "fail", "warn"

MAX_PARETO_N = 10
MAX_ORACLE_N = 5


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str = ""
    witness: object = None

    @property
    def passed(self) -> bool:
        return self.status != FAIL


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)
    assumption1: list[str] = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        self.checks.append(result)

    def extend(self, results) -> None:
        self.checks.extend(results)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if c.status == FAIL]


def utility(agent: Agent, x, payment) -> Fraction:
    return agent.value * x - payment


def welfare(agents: Sequence[Agent], x) -> Fraction:
    return sum((a.value * xi for a, xi in zip(agents, x)), ZERO)


# -- basic properties ---------------------------------------------------------

def basic_checks(f: SubmodularFunction, agents: Sequence[Agent], outcome: Outcome,
                 clinching: bool = False) -> list[CheckResult]:
    """Feasibility, admissibility, individual rationality and, for clinching
    outcomes, that every good was sold."""
    out = []
    bad = violated_set(f, outcome.x)
    if bad is None:
        out.append(CheckResult("feasible", PASS))
    else:
        out.append(CheckResult(
            "feasible", FAIL,
            f"x({format_set(bad)}) = {subset_sum(outcome.x, bad)} > f = {f(bad)}", bad))

    bad_adm = [i for i, a in enumerate(agents)
               if not is_admissible(a.alpha, outcome.x[i], outcome.payments[i])]
    out.append(CheckResult(
        "admissible", FAIL if bad_adm else PASS,
        "; ".join(f"agent {i}: payment {outcome.payments[i]} > alpha({outcome.x[i]}) = "
                  f"{alpha_eval(agents[i].alpha, outcome.x[i])}" for i in bad_adm),
        bad_adm or None))

    bad_ir = [i for i, a in enumerate(agents)
              if outcome.payments[i] > a.value * outcome.x[i]]
    out.append(CheckResult(
        "individually_rational", FAIL if bad_ir else PASS,
        "; ".join(f"agent {i}: payment {outcome.payments[i]} > value*x = "
                  f"{agents[i].value * outcome.x[i]}" for i in bad_ir),
        bad_ir or None))

    if clinching:
        sold = sum(outcome.x, ZERO)
        out.append(CheckResult(
            "all_goods_sold", PASS if sold == f.total else FAIL,
            "" if sold == f.total else f"x([n]) = {sold} != f([n]) = {f.total}"))
    return out


# -- Pareto efficiency --------------------------------------------------------

@dataclass(frozen=True)
class ParetoImprovement:
    x: tuple[Fraction, ...]
    payments: tuple[Fraction, ...]
    welfare_gain: Fraction


@dataclass(frozen=True)
class ParetoResult:
    efficient: bool
    optimum: Fraction
    welfare: Fraction
    improvement: ParetoImprovement | None = None


def pareto_lp(f: SubmodularFunction, agents: Sequence[Agent], outcome: Outcome) -> lpmod.LinearProgram:
    """Maximize welfare over outcomes that weakly improve every agent and the
    auctioneer.  Variables are ``x'_0..x'_{n-1}`` then ``pi'_0..pi'_{n-1}``."""
    n = f.n
    names = [f"x{i}" for i in range(n)] + [f"pi{i}" for i in range(n)]
    prog = lpmod.LinearProgram([a.value for a in agents] + [ZERO] * n, names=names)
    for S in range(1, 1 << n):
        row = [Fraction(1) if S >> i & 1 else ZERO for i in range(n)] + [ZERO] * n
        prog.add(row, lpmod.LE, f(S))
    for i, agent in enumerate(agents):
        for a, b in agent.alpha.pieces:
            row = [ZERO] * (2 * n)
            row[n + i] = Fraction(1)
            row[i] = -b
            prog.add(row, lpmod.LE, a)
        row = [ZERO] * (2 * n)
        row[i] = agent.value
        row[n + i] = Fraction(-1)
        prog.add(row, lpmod.GE, utility(agent, outcome.x[i], outcome.payments[i]))
    prog.add([ZERO] * n + [Fraction(1)] * n, lpmod.GE, sum(outcome.payments, ZERO))
    return prog


def _is_improvement(f, agents, outcome, x2, pi2) -> bool:
    if violated_set(f, x2) is not None:
        return False
    for i, agent in enumerate(agents):
        if not is_admissible(agent.alpha, x2[i], pi2[i]):
            return False
        if utility(agent, x2[i], pi2[i]) < utility(agent, outcome.x[i], outcome.payments[i]):
            return False
    if sum(pi2, ZERO) < sum(outcome.payments, ZERO):
        return False
    return welfare(agents, x2) > welfare(agents, outcome.x)


def pareto_check(f: SubmodularFunction, agents: Sequence[Agent], outcome: Outcome) -> ParetoResult:
    """Decide Pareto-efficiency by the exact optimum of :func:`pareto_lp`.

    The LP relaxes ``alpha(0) = 0`` to the envelope's value at 0.  An optimal
    vertex that leans on the relaxation (zero allocation, positive payment)
    is averaged with the original outcome.  Every constraint is convex, so
    the midpoint stays feasible and still gains welfare; the result is
    rechecked against the exact definitions before it is returned.
    """
    n = f.n
    if n > MAX_PARETO_N:
        raise UnsupportedSizeError(f"Pareto LP enumerates 2^n constraints; n <= {MAX_PARETO_N}")
    base = welfare(agents, outcome.x)
    sol = lpmod.solve(pareto_lp(f, agents, outcome))
    if sol.status != lpmod.OPTIMAL:
        raise PreconditionError(f"Pareto LP is {sol.status}; the outcome itself should be feasible")
    if sol.value == base:
        return ParetoResult(True, sol.value, base)
    x2, pi2 = sol.point[:n], sol.point[n:]
    if not _is_improvement(f, agents, outcome, x2, pi2):
        half = Fraction(1, 2)
        x2 = tuple(half * (a + b) for a, b in zip(x2, outcome.x))
        pi2 = tuple(half * (a + b) for a, b in zip(pi2, outcome.payments))
        if not _is_improvement(f, agents, outcome, x2, pi2):
            raise AssertionError("could not certify the LP improvement")
    return ParetoResult(False, sol.value, base,
                        ParetoImprovement(x2, pi2, welfare(agents, x2) - base))


# -- VCG on truncated values --------------------------------------------------

def truncated_values(agents: Sequence[Agent]) -> tuple[Fraction, ...]:
    """``min(v_i, beta_i)``; an infinite beta leaves the value untouched."""
    out = []
    for a in agents:
        b = beta(a.alpha)
        out.append(a.value if b == INF else min(a.value, b))
    return tuple(out)


def vcg_baseline(f: SubmodularFunction, agents: Sequence[Agent]) -> Outcome:
    """VCG with Clarke payments on ``min(v_i, beta_i)``.

    The allocation is the polymatroid greedy in decreasing truncated value
    (ties by index), which maximizes the truncated welfare.
    """
    n = f.n
    vt = truncated_values(agents)
    order = sorted(range(n), key=lambda i: (-vt[i], i))
    big = [f.total] * n
    x = greedy_max(f, big, order)
    total = sum((v * xi for v, xi in zip(vt, x)), ZERO)
    payments = []
    for i in range(n):
        caps = list(big)
        caps[i] = ZERO
        y = greedy_max(f, caps, order)
        without = sum((v * yj for v, yj in zip(vt, y)), ZERO)
        payments.append(without - (total - vt[i] * x[i]))
    return Outcome(x, tuple(payments))


# -- incentive compatibility ----------------------------------------------------

@dataclass(frozen=True)
class ICResult:
    agent: int
    ok: bool
    truthful_utility: Fraction
    misreport: Fraction | None = None
    gain: Fraction | None = None
    monotone: bool = True
    reruns: int = 0


def misreport_grid(scenario: Scenario) -> list[Fraction]:
    eps = scenario.epsilon
    vmax = max(a.value for a in scenario.agents)
    top = math.floor((vmax + eps) / eps)
    return [k * eps for k in range(top + 1)]


def ic_grid_check(scenario: Scenario, agent: int, grid: Sequence | None = None,
                  truthful: Outcome | None = None) -> ICResult:
    """Rerun the auction for every grid misreport of ``agent``.

    Fails on the first report that beats truth-telling (utility measured with
    the true value) or on an allocation that drops as the report rises.
    """
    if grid is None:
        grid = misreport_grid(scenario)
    grid = sorted(rational(g) for g in grid)
    true_value = scenario.agents[agent].value
    if truthful is None:
        truthful, _ = run(scenario, trace=TRACE_SUMMARY)
    u_true = true_value * truthful.x[agent] - truthful.payments[agent]
    last_x = None
    monotone = True
    first_bad = None
    for report in grid:
        if report == true_value:
            out = truthful
        else:
            out, _ = run(scenario.with_value(agent, report), trace=TRACE_SUMMARY)
        u = true_value * out.x[agent] - out.payments[agent]
        if first_bad is None and u > u_true:
            first_bad = (report, u - u_true)
        if last_x is not None and out.x[agent] < last_x:
            monotone = False
        last_x = out.x[agent]
    if first_bad is None:
        return ICResult(agent, monotone, u_true, monotone=monotone, reruns=len(grid))
    return ICResult(agent, False, u_true, first_bad[0], first_bad[1], monotone, len(grid))


# -- clinching oracle ---------------------------------------------------------

def _on_grid(q: Fraction, step: Fraction) -> bool:
    return (q / step).denominator == 1


def grid_for(f: SubmodularFunction, *vectors) -> Fraction:
    """Coarsest step ``1/L`` that divides every table value and entry."""
    den = 1
    for q in list(f.table) + [v for vec in vectors for v in vec]:
        den = den * q.denominator // math.gcd(den, q.denominator)
    return Fraction(1, den)


def _remnant_vertices(f: SubmodularFunction, x, d, i: int) -> list[tuple[Fraction, ...]]:
    """Greedy maximal points of ``{y : y_i = 0, x + y in P, 0 <= y <= d}``,
    one per ordering of the other agents, computed against ``f`` directly."""
    n = f.n
    others = [j for j in range(n) if j != i]
    pts = []
    for order in permutations(others):
        y = [ZERO] * n
        for j in order:
            room = d[j]
            for S in range(1 << n):
                if S >> j & 1:
                    slack = f(S) - subset_sum(x, S) - subset_sum(y, S)
                    if slack < room:
                        room = slack
            y[j] = room
        t = tuple(y)
        if t not in pts:
            pts.append(t)
    return pts


def brute_force_clinch(f: SubmodularFunction, x: Sequence, d: Sequence, grid_step) -> tuple[Fraction, ...]:
    """Clinched amounts straight from the definition.

    ``delta_i`` is the largest grid multiple ``z`` such that giving ``z`` to
    agent ``i`` keeps every allocation the others could get (every greedy
    vertex of their remnant polytope) feasible.
    """
    n = f.n
    if n > MAX_ORACLE_N:
        raise UnsupportedSizeError(f"clinching oracle enumerates orderings; n <= {MAX_ORACLE_N}")
    step = rational(grid_step)
    if step <= 0:
        raise ValueError("grid step must be positive")
    x = tuple(rational(v) for v in x)
    d = tuple(rational(v) for v in d)
    for q in list(f.table) + list(x) + list(d):
        if not _on_grid(q, step):
            raise GridMisalignmentError(f"{q} is not a multiple of the grid step {step}")
    if violated_set(f, x) is not None:
        raise PreconditionError("x is infeasible")

    def fits(i, z, vertices):
        for g in vertices:
            y = list(g)
            y[i] = z
            for S in range(1 << n):
                if subset_sum(x, S) + subset_sum(y, S) > f(S):
                    return False
        return True

    out = []
    for i in range(n):
        vertices = _remnant_vertices(f, x, d, i)
        lo, hi = 0, int(d[i] / step)  # lo always fits
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if fits(i, mid * step, vertices):
                lo = mid
            else:
                hi = mid - 1
        out.append(lo * step)
    return tuple(out)


def oracle_checks(scenario: Scenario, trace: AuctionTrace) -> list[CheckResult]:
    """Compare the clinching formula with the definition-level oracle on every
    recorded pre-clinch state, and the two clinching rules on multi-unit runs."""
    f = scenario.f
    if trace.mode != "full":
        raise ValueError("oracle checks need a full trace")
    out = []
    if f.n <= MAX_ORACLE_N:
        bad = None
        x_before = [ZERO] * f.n
        for cp in trace.checkpoints:
            step = grid_for(f, x_before, cp.demand_before)
            want = brute_force_clinch(f, x_before, cp.demand_before, step)
            if want != cp.clinched:
                bad = (cp.iteration, want, cp.clinched)
                break
            x_before = list(cp.state.x)
        out.append(CheckResult(
            "clinch_oracle", FAIL if bad else PASS,
            f"iteration {bad[0]}: oracle {bad[1]} vs formula {bad[2]}" if bad else
            f"{len(trace.checkpoints)} states agree", bad))
    else:
        out.append(CheckResult("clinch_oracle", WARN, f"skipped: n > {MAX_ORACLE_N}"))
    if f.kind == MULTI_UNIT:
        a1 = run(scenario, algorithm="multi_unit")
        a2 = run(scenario, algorithm="polyhedral")
        same = a1[0] == a2[0] and _trace_key(a1[1]) == _trace_key(a2[1])
        out.append(CheckResult("multi_unit_equivalence", PASS if same else FAIL))
    return out


def _trace_key(tr: AuctionTrace):
    return (tr.checkpoints, tr.clinch_events, tr.dropping_prices, tr.dropping_reasons)


# -- structural properties of a run -------------------------------------------

def structure_checks(scenario: Scenario, outcome: Outcome, trace: AuctionTrace) -> list[CheckResult]:
    """Tight positive-demand sets, the nested tight family with its dropping
    prices, the dropping-price bounds and simultaneous-drop property, and for
    multi-unit runs the low/pivot/high partition."""
    f = scenario.f
    eps = scenario.epsilon
    agents = scenario.agents
    phi = trace.dropping_prices
    reasons = trace.dropping_reasons
    x, pay = outcome.x, outcome.payments
    out = []

    untight = [S for S in {cp.positive for cp in trace.checkpoints}
               if subset_sum(x, S) != f(S)]
    out.append(CheckResult(
        "positive_sets_tight", FAIL if untight else PASS,
        ", ".join(format_set(S) for S in sorted(untight)), untight or None))

    sets = trace.positive_sets()
    nested = all(b & ~a == 0 and b != a for a, b in zip(sets, sets[1:]))
    out.append(CheckResult("positive_sets_nested", PASS if nested else FAIL))

    blocks = trace.tight_family()
    problems = []
    prev = 0
    for blk in blocks:
        if blk.S & ~prev != blk.T or prev & ~blk.S:
            problems.append(f"{format_set(blk.S)} does not extend {format_set(prev)}")
        if not blk.T >> blk.dropper & 1:
            problems.append(f"dropper {blk.dropper} outside its block {format_set(blk.T)}")
        if CLINCHED_FULL_DEMAND in reasons[blk.dropper]:
            problems.append(f"dropper {blk.dropper} clinched its whole demand")
        for i in members(blk.T):
            if i == blk.dropper:
                continue
            if phi[i] not in (blk.price - eps, blk.price):
                problems.append(f"agent {i}: phi {phi[i]} vs block price {blk.price}")
            if CLINCHED_FULL_DEMAND not in reasons[i]:
                problems.append(f"agent {i} left block {format_set(blk.T)} without clinching")
        prev = blk.S
    # agents with zero value never demand; the family covers everybody else
    start = trace.checkpoints[0].positive if trace.checkpoints else 0
    if blocks and blocks[-1].S != start:
        problems.append(f"largest tight set {format_set(blocks[-1].S)} != {format_set(start)}")
    out.append(CheckResult("tight_family", FAIL if problems else PASS, "; ".join(problems)))

    compliant = scenario.assumption1_holds()
    price_issues = []
    for i, agent in enumerate(agents):
        if phi[i] is None or phi[i] > agent.value:
            price_issues.append(f"agent {i}: phi {phi[i]} > value {agent.value}")
        if x[i] == 0 and pay[i] == 0 and phi[i] is not None:
            b = beta(agent.alpha)
            want = agent.value if b == INF else min(b + eps, agent.value)
            if phi[i] != want:
                price_issues.append(f"agent {i}: unallocated with phi {phi[i]} != {want}")
    out.append(CheckResult("dropping_price_bounds",
                           PASS if not price_issues else (FAIL if compliant else WARN),
                           "; ".join(price_issues)))

    out.append(_simultaneous_drop_check(trace))
    if f.kind == MULTI_UNIT:
        out.append(_multi_unit_partition(scenario, outcome, trace, compliant))
    return out


def _simultaneous_drop_check(trace: AuctionTrace) -> CheckResult:
    if trace.mode != "full":
        return CheckResult("simultaneous_drop", WARN, "needs a full trace")
    bad = []
    prev_d = None
    for cp in trace.checkpoints:
        d_after = cp.state.demand
        full = [i for i, (db, dl, da) in enumerate(zip(cp.demand_before, cp.clinched, d_after))
                if dl > 0 and dl == db and da == 0]
        if full:
            droppers = [
                j for j in range(len(d_after))
                if d_after[j] == 0 and (prev_d is None or prev_d[j] > 0)
                and not (cp.clinched[j] > 0 and cp.clinched[j] == cp.demand_before[j])
            ]
            if not droppers:
                bad.append(cp.iteration)
        prev_d = d_after
    return CheckResult("simultaneous_drop", FAIL if bad else PASS,
                       f"iterations {bad}" if bad else "", bad or None)


def multi_unit_partition(trace: AuctionTrace):
    """``(L, k, H)`` masks for a multi-unit run: ``k`` closes the smallest
    tight set, ``H`` is the rest of it and ``L`` everybody else."""
    blocks = trace.tight_family()
    if not blocks:
        return None
    first = blocks[0]
    k = first.dropper
    n = len(trace.dropping_prices)
    high = first.S & ~(1 << k)
    low = full_mask(n) & ~first.S
    return low, k, high


def _multi_unit_partition(scenario, outcome, trace, compliant) -> CheckResult:
    f = scenario.f
    eps = scenario.epsilon
    agents = scenario.agents
    phi = trace.dropping_prices
    x, pay = outcome.x, outcome.payments
    problems = []
    part = multi_unit_partition(trace)
    if part is None:
        return CheckResult("multi_unit_partition", PASS, "no agent ever demanded")
    low, k, high = part
    for i in members(low):
        if x[i] or pay[i]:
            problems.append(f"low agent {i} has x={x[i]}, payment={pay[i]}")
        if phi[i] > phi[k]:
            problems.append(f"low agent {i}: phi {phi[i]} > phi_k {phi[k]}")
    for i in members(high):
        if not agents[i].value > phi[i] or phi[i] not in (phi[k], phi[k] - eps):
            problems.append(f"high agent {i}: value {agents[i].value}, phi {phi[i]}, phi_k {phi[k]}")
        if pay[i] != alpha_eval(agents[i].alpha, x[i]):
            problems.append(f"high agent {i}: payment {pay[i]} below alpha({x[i]})")
    bk = beta(agents[k].alpha)
    pivot_ok = phi[k] == agents[k].value or (
        bk != INF and pay[k] == bk * x[k] and phi[k] == bk + eps)
    if not pivot_ok:
        problems.append(f"pivot agent {k}: phi {phi[k]} neither value nor beta+eps")
    if sum(x, ZERO) != f.total:
        problems.append(f"sold {sum(x, ZERO)} of {f.total}")
    status = PASS if not problems else (FAIL if compliant else WARN)
    return CheckResult("multi_unit_partition", status, "; ".join(problems), part)


# -- whole-scenario suite -----------------------------------------------------

def verify_scenario(scenario: Scenario, pareto: bool = True, ic: bool = True,
                    oracle: bool = True, structure: bool = True) -> VerificationReport:
    report = VerificationReport(assumption1=scenario.assumption1_violations())
    outcome, trace = run(scenario, invariants=True)
    f = scenario.f
    report.extend(basic_checks(f, scenario.agents, outcome, clinching=True))
    bad_inv = [cp.iteration for cp in trace.checkpoints if not cp.invariants.ok]
    report.add(CheckResult("invariants", FAIL if bad_inv else PASS,
                           f"failing checkpoints {bad_inv}" if bad_inv else
                           f"{len(trace.checkpoints)} checkpoints", bad_inv or None))
    if structure:
        report.extend(structure_checks(scenario, outcome, trace))
    if pareto:
        if f.n > MAX_PARETO_N:
            report.add(CheckResult("pareto", WARN, f"skipped: n > {MAX_PARETO_N}"))
        else:
            res = pareto_check(f, scenario.agents, outcome)
            if res.efficient:
                report.add(CheckResult("pareto", PASS, f"LP optimum {res.optimum}", res.optimum))
            else:
                status = FAIL if scenario.assumption1_holds() else WARN
                report.add(CheckResult(
                    "pareto", status,
                    f"improvement with welfare {res.optimum} > {res.welfare}", res.improvement))
    if ic:
        for i in range(f.n):
            res = ic_grid_check(scenario, i, truthful=outcome)
            detail = (f"{res.reruns} reports" if res.ok else
                      f"report {res.misreport} gains {res.gain}" if res.gain is not None else
                      "allocation not monotone in the report")
            report.add(CheckResult(f"ic_agent_{i}", PASS if res.ok else FAIL, detail, res))
    if oracle:
        report.extend(oracle_checks(scenario, trace))
    return report
