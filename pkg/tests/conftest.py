from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from clinching.polymatroid import SubmodularFunction

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


# -- strategies ---------------------------------------------------------------

small_rationals = st.builds(Fraction, st.integers(0, 12), st.sampled_from([1, 2, 3, 4]))


@st.composite
def coverage_functions(draw, n_min=1, n_max=4):
    """Weighted coverage: each agent covers some of a few weighted items.
    Weighted coverage functions are monotone and submodular."""
    n = draw(st.integers(n_min, n_max))
    m = draw(st.integers(1, 4))
    weights = draw(st.lists(st.integers(1, 5), min_size=m, max_size=m))
    covers = draw(st.lists(st.integers(0, (1 << m) - 1), min_size=n, max_size=n))
    values = []
    for S in range(1 << n):
        items = 0
        for i in range(n):
            if S >> i & 1:
                items |= covers[i]
        values.append(Fraction(sum(w for j, w in enumerate(weights) if items >> j & 1)))
    return SubmodularFunction.explicit_table(n, values)


@st.composite
def functions(draw, n_min=1, n_max=4):
    kind = draw(st.sampled_from(["multi_unit", "sponsored_search", "table"]))
    if kind == "multi_unit":
        n = draw(st.integers(n_min, n_max))
        return SubmodularFunction.multi_unit(n, draw(st.integers(1, 4)))
    if kind == "sponsored_search":
        n = draw(st.integers(n_min, n_max))
        ctrs = sorted(draw(st.lists(st.integers(1, 5), min_size=n, max_size=n)), reverse=True)
        return SubmodularFunction.sponsored_search(ctrs)
    return draw(coverage_functions(n_min, n_max))


def vectors(n, elements=small_rationals):
    return st.lists(elements, min_size=n, max_size=n).map(tuple)
