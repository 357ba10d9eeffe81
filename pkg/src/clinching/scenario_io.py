"""Scenario documents, run reports and the random scenario generator.

Documents are JSON.  Every number is an exact rational written as a string
(``"7/4"``) or a JSON integer; floats are rejected.  The schema is described
in the README.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import random
from fractions import Fraction
from typing import Any

from . import __version__
from .auction import AuctionTrace, Outcome, Scenario
from .errors import MalformedFunctionError, ScenarioError
from .payment import INF, AbilityToPay, Agent, beta
from .polymatroid import (
    EXPLICIT_TABLE, KINDS, MULTI_UNIT, SPONSORED_SEARCH, SubmodularFunction, format_set,
    members, validate,
)

MIXES = ("mixed", "hard_only", "average_only", "two_piece_only")
MAX_GENERATED_TABLE_N = 8


# -- rationals ----------------------------------------------------------------

def fmt(q) -> str:
    return str(q)


def _rational(value, path: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise ScenarioError(f"{path}: {value!r} is not an exact rational (use an integer or \"p/q\")")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(f"{path}: cannot parse {value!r} as a rational") from None
    raise ScenarioError(f"{path}: expected a rational, got {type(value).__name__}")


def _field(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    if key not in obj:
        raise ScenarioError(f"{path}.{key}: missing field")
    return obj[key]


# -- scenario documents -------------------------------------------------------

def _parse_environment(env, n: int) -> SubmodularFunction:
    kind = _field(env, "kind", "environment")
    try:
        if kind == MULTI_UNIT:
            supply = _rational(_field(env, "supply", "environment"), "environment.supply")
            return SubmodularFunction.multi_unit(n, supply)
        if kind == SPONSORED_SEARCH:
            ctrs = _field(env, "ctrs", "environment")
            if not isinstance(ctrs, list):
                raise ScenarioError("environment.ctrs: expected a list")
            if len(ctrs) != n:
                raise ScenarioError(f"environment.ctrs: {len(ctrs)} rates for {n} agents")
            return SubmodularFunction.sponsored_search(
                [_rational(c, f"environment.ctrs[{j}]") for j, c in enumerate(ctrs)])
        if kind == EXPLICIT_TABLE:
            raw = _field(env, "values", "environment")
            if not isinstance(raw, dict):
                raise ScenarioError("environment.values: expected an object keyed by bitmask")
            table = {}
            for key, val in raw.items():
                try:
                    mask = int(key)
                except ValueError:
                    raise ScenarioError(f"environment.values: key {key!r} is not a bitmask") from None
                table[mask] = _rational(val, f"environment.values[{key}]")
            f = SubmodularFunction.explicit_table(n, table)
            bad = validate(f)
            if bad:
                raise ScenarioError("environment: table is not a normalized monotone submodular function",
                                    [v.detail for v in bad])
            return f
    except MalformedFunctionError as exc:
        raise ScenarioError(f"environment: {exc}") from None
    raise ScenarioError(f"environment.kind: unknown kind {kind!r} (expected one of {', '.join(KINDS)})")


def _parse_agent(obj, j: int) -> Agent:
    path = f"agents[{j}]"
    value = _rational(_field(obj, "value", path), f"{path}.value")
    if value < 0:
        raise ScenarioError(f"{path}.value: must be nonnegative, got {value}")
    pieces = _field(obj, "ability_to_pay", path)
    if not isinstance(pieces, list) or not pieces:
        raise ScenarioError(f"{path}.ability_to_pay: expected a nonempty list of [intercept, slope]")
    parsed = []
    for k, piece in enumerate(pieces):
        if not isinstance(piece, list) or len(piece) != 2:
            raise ScenarioError(f"{path}.ability_to_pay[{k}]: expected [intercept, slope]")
        a = _rational(piece[0], f"{path}.ability_to_pay[{k}][0]")
        b = _rational(piece[1], f"{path}.ability_to_pay[{k}][1]")
        if a < 0 or b < 0:
            raise ScenarioError(f"{path}.ability_to_pay[{k}]: coefficients must be nonnegative")
        parsed.append((a, b))
    return Agent(value, AbilityToPay.from_pieces(parsed))


def scenario_from_dict(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("document: expected a JSON object")
    agents_raw = _field(doc, "agents", "document")
    if not isinstance(agents_raw, list) or not agents_raw:
        raise ScenarioError("agents: expected a nonempty list")
    agents = tuple(_parse_agent(a, j) for j, a in enumerate(agents_raw))
    f = _parse_environment(_field(doc, "environment", "document"), len(agents))
    eps = _rational(_field(doc, "epsilon", "document"), "epsilon")
    if eps <= 0:
        raise ScenarioError(f"epsilon: must be positive, got {eps}")
    order = doc.get("price_order")
    if order is not None:
        if (not isinstance(order, list) or any(isinstance(i, bool) or not isinstance(i, int) for i in order)
                or sorted(order) != list(range(len(agents)))):
            raise ScenarioError(f"price_order: {order!r} is not a permutation of 0..{len(agents) - 1}")
    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ScenarioError(f"seed: expected an integer, got {seed!r}")
    return Scenario(f, agents, eps, tuple(order or ()), seed)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises :class:`ScenarioError`; JSON syntax errors carry line and column.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def environment_to_dict(f: SubmodularFunction) -> dict:
    if f.kind == MULTI_UNIT:
        return {"kind": MULTI_UNIT, "supply": fmt(f.supply)}
    if f.kind == SPONSORED_SEARCH:
        return {"kind": SPONSORED_SEARCH, "ctrs": [fmt(c) for c in f.ctrs]}
    return {"kind": EXPLICIT_TABLE, "values": {str(m): fmt(v) for m, v in enumerate(f.values)}}


def scenario_to_dict(s: Scenario) -> dict:
    doc = {
        "environment": environment_to_dict(s.f),
        "agents": [
            {"value": fmt(a.value), "ability_to_pay": [[fmt(p), fmt(q)] for p, q in a.alpha.pieces]}
            for a in s.agents
        ],
        "epsilon": fmt(s.epsilon),
        "price_order": list(s.price_order),
    }
    if s.seed is not None:
        doc["seed"] = s.seed
    return doc


def emit_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def scenario_hash(s: Scenario) -> str:
    canon = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- generator ----------------------------------------------------------------

def _random_table(rng: random.Random, n: int) -> SubmodularFunction:
    """Weighted sum of uniform-matroid rank functions on random ground sets;
    each term is monotone submodular, hence so is the sum."""
    terms = []
    for _ in range(rng.randint(1, 3)):
        ground = [i for i in range(n) if rng.random() < 0.7] or [rng.randrange(n)]
        rank = rng.randint(1, len(ground))
        weight = Fraction(rng.randint(1, 4), rng.choice((1, 2)))
        gmask = sum(1 << i for i in ground)
        terms.append((gmask, rank, weight))
    values = []
    for S in range(1 << n):
        values.append(sum((w * min(bin(S & g).count("1"), r) for g, r, w in terms), Fraction(0)))
    return SubmodularFunction.explicit_table(n, values)


def _grid_draw(rng: random.Random, eps: Fraction, top: Fraction, low: int = 1) -> Fraction:
    return eps * rng.randint(low, max(low, int(top / eps)))


def _random_constraint(rng: random.Random, kind: str, eps: Fraction, v_max: Fraction) -> AbilityToPay:
    if kind == "hard":
        return AbilityToPay.hard_budget(Fraction(rng.randint(1, 4 * int(v_max) or 1), 2))
    b = _grid_draw(rng, eps, v_max)
    if kind == "average":
        return AbilityToPay.average_budget(b)
    budget = Fraction(rng.randint(1, 4 * int(v_max) or 1), 2)
    slope = eps * rng.randint(0, int(b / eps) - 1)
    return AbilityToPay.from_pieces([(0, b), (budget, slope)])


def generate(seed: int, n: int = 3, kind: str = MULTI_UNIT, v_max=6, epsilon="1/2",
             mix: str = "mixed", shuffle_order: bool = False) -> Scenario:
    """Deterministic random scenario.

    Values and finite average budgets are drawn as positive multiples of
    ``epsilon``, so every generated scenario satisfies the grid assumption
    the efficiency guarantee rests on.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if mix not in MIXES:
        raise ValueError(f"unknown constraint mix {mix!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if kind == EXPLICIT_TABLE and n > MAX_GENERATED_TABLE_N:
        raise ValueError(f"generated tables are limited to n <= {MAX_GENERATED_TABLE_N}")
    eps = Fraction(epsilon)
    v_max = Fraction(v_max)
    if v_max < eps:
        raise ValueError("v_max must be at least epsilon")
    rng = random.Random(seed)
    if kind == MULTI_UNIT:
        f = SubmodularFunction.multi_unit(n, rng.randint(1, 3))
    elif kind == SPONSORED_SEARCH:
        f = SubmodularFunction.sponsored_search(sorted((rng.randint(1, 4) for _ in range(n)), reverse=True))
    else:
        f = _random_table(rng, n)
    pick = {
        "mixed": ("hard", "average", "two_piece"),
        "hard_only": ("hard",),
        "average_only": ("average",),
        "two_piece_only": ("two_piece",),
    }[mix]
    agents = []
    for _ in range(n):
        value = _grid_draw(rng, eps, v_max)
        agents.append(Agent(value, _random_constraint(rng, rng.choice(pick), eps, v_max)))
    order = list(range(n))
    if shuffle_order:
        rng.shuffle(order)
    return Scenario(f, tuple(agents), eps, tuple(order), seed)


# -- reports ------------------------------------------------------------------

def jsonable(obj) -> Any:
    """Fractions become strings, dataclasses dicts, tuples lists."""
    if isinstance(obj, Fraction):
        return fmt(obj)
    if isinstance(obj, float):
        return "inf" if obj == INF else repr(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def _set(mask: int) -> list[int]:
    return members(mask)


def _checkpoint_dict(cp) -> dict:
    out = {"iteration": cp.iteration, "next_agent": cp.next_agent, "positive": _set(cp.positive)}
    if cp.invariants is not None:
        out["invariants"] = cp.invariants.status()
        if not cp.invariants.ok:
            out["invariant_witnesses"] = jsonable({
                "I": cp.invariants.maximality,
                "II": cp.invariants.all_goods_sold,
                "III": cp.invariants.self_unsaturation,
            })
    if cp.state is not None:
        out.update({
            "x": jsonable(cp.state.x),
            "payments": jsonable(cp.state.payments),
            "prices": jsonable(cp.state.prices),
            "demand": jsonable(cp.state.demand),
            "demand_before": jsonable(cp.demand_before),
            "clinched": jsonable(cp.clinched),
            "saturation": {"unsaturated": _set(cp.saturation[0]),
                           "saturated": _set(cp.saturation[1])},
        })
    return out


def build_run_report(scenario: Scenario, outcome: Outcome, trace: AuctionTrace,
                     checks=None, timing: dict | None = None) -> dict:
    """Self-contained report of one run.  ``timing`` is the only field that
    varies between identical runs and is left out unless given."""
    violations = scenario.assumption1_violations()
    report = {
        "tool": {"name": "clinching", "version": __version__},
        "scenario_sha256": scenario_hash(scenario),
        "algorithm": trace.algorithm,
        "trace": trace.mode,
        "epsilon": fmt(scenario.epsilon),
        "price_order": list(trace.price_order),
        "assumption1": {
            "holds": not violations,
            "violations": violations,
            "note": ("values and finite betas lie on the price grid" if not violations else
                     "off-grid values or betas: efficiency checks are reported as warnings"),
            "infinite_beta_agents": [i for i, a in enumerate(scenario.agents) if beta(a.alpha) == INF],
        },
        "outcome": {"x": jsonable(outcome.x), "payments": jsonable(outcome.payments)},
        "agents": [
            {
                "agent": i,
                "dropping_price": jsonable(trace.dropping_prices[i]),
                "dropping_reasons": list(trace.dropping_reasons[i]),
                "drop_iteration": trace.drop_iterations[i],
            }
            for i in range(scenario.n)
        ],
        "tight_family": [
            {"S": _set(b.S), "T": _set(b.T), "dropper": b.dropper, "price": fmt(b.price)}
            for b in trace.tight_family()
        ],
        "iterations": trace.iterations,
        "checkpoints": [_checkpoint_dict(cp) for cp in trace.checkpoints],
    }
    if trace.mode == "full":
        report["clinch_events"] = [jsonable(e) for e in trace.clinch_events]
    if checks is not None:
        report["checks"] = [check_dict(c) for c in checks]
    if timing is not None:
        report["timing"] = timing
    return report


def check_dict(c) -> dict:
    out = {"name": c.name, "status": c.status}
    if c.detail:
        out["detail"] = c.detail
    if c.witness is not None:
        out["witness"] = jsonable(c.witness)
    return out


def dump(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def describe_set(mask: int) -> str:
    return format_set(mask)
