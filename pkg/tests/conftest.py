import math
import random
import sys

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from urllc_control import ControlErrorProfile, DataBlerProfile

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=200,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def log_uniform(lo, hi):
    return st.floats(math.log10(lo), math.log10(hi)).map(lambda e: 10.0 ** e)


eps = log_uniform(1e-6, 0.5)
bler = log_uniform(1e-6, 0.9)


@st.composite
def profiles(draw):
    """Valid (control, data) pairs: rates log-uniform, p12 = p1 * u."""
    c = ControlErrorProfile(
        eps_sr=draw(eps), eps_rg=draw(eps), eps_na=draw(eps), eps_nd=draw(eps),
        eps_da=draw(eps), eps_dn=draw(eps), eps_an=draw(eps))
    p1 = draw(bler)
    d = DataBlerProfile(p1=p1, p12=p1 * draw(st.floats(0.0, 1.0)), p2=draw(bler),
                        p2d=draw(bler), p2n=draw(bler), p_bad=draw(bler))
    return c, d


def random_profiles(n, seed):
    """Same distribution as ``profiles`` from a plain seeded generator."""
    rnd = random.Random(seed)

    def lu(lo, hi):
        return 10.0 ** rnd.uniform(math.log10(lo), math.log10(hi))

    out = []
    for _ in range(n):
        c = ControlErrorProfile(*(lu(1e-6, 0.5) for _ in range(7)))
        p1 = lu(1e-6, 0.9)
        d = DataBlerProfile(p1=p1, p12=p1 * rnd.random(), p2=lu(1e-6, 0.9),
                            p2d=lu(1e-6, 0.9), p2n=lu(1e-6, 0.9), p_bad=lu(1e-6, 0.9))
        out.append((c, d))
    return out


@pytest.fixture(scope="session")
def thousand_profiles():
    return random_profiles(1000, seed=20240611)


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
