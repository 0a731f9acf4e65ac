from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from fbannuli.wente_ode import ParamTriple

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@st.composite
def param_triples(draw, a_max=1.5, b_max=2.5, k_lo=-0.2, k_hi=0.2):
    a = draw(st.floats(1.0, a_max))
    k = draw(st.floats(k_lo, k_hi))
    b = draw(st.floats(max(1.0, -4.0 * k * a + 1e-3), b_max))
    return ParamTriple(a, b, k)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20241015)


@pytest.fixture(scope="session")
def mu_data():
    from fbannuli.fbsearch import mu_curve

    return mu_curve(-0.245, 0.01)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {msg}")
