from fractions import Fraction as F

import pytest

from pdlss.errors import ConfigurationError, ConsistencyError
from pdlss.invariant import (as_rational, closed_forms, equation_residual, gamma, log_ratio_sequence,
                             normalization_gap, restriction_check, tail_identity, u1, u1_table, u2_table,
                             u3_table)
from pdlss.stochastic import exact_stationary


def test_u1_examples():
    assert u1(1, 1) == F(1, 2)
    assert u1(2, 1) == F(1, 3)
    assert u1(3, 1) == F(1, 8)
    assert u1(4, 1) == F(1, 30)
    assert u1(1, 2) == F(1, 3)
    assert gamma(3, 1) == 24


@pytest.mark.parametrize("lam", [1, 2, F(3, 2)])
def test_u1_tail_and_normalization(lam):
    assert all(tail_identity(x, lam) for x in range(1, 9))
    assert normalization_gap(40, lam) < 1e-12
    assert sum(u1_table(10, lam).values()) < 1


def test_as_rational():
    assert as_rational("3/2") == F(3, 2)
    assert as_rational(2) == 2
    for bad in (1.5, True, "x/y"):
        with pytest.raises(ConfigurationError):
            as_rational(bad)
    with pytest.raises(ConfigurationError):
        u1(1, 0)
    with pytest.raises(ConfigurationError):
        u1(0, 1)


@pytest.mark.parametrize("lam", [1, 2, F(3, 2)])
def test_master_table_properties(lam):
    t = u2_table(12, lam)
    assert all(v > 0 for v in t.u2.values())
    for (x, y) in t.u2:
        assert equation_residual(t, x, y) == 0
    defects = [restriction_check(t, 1, y) for y in range(3, 13)]
    assert all(b < a for a, b in zip(defects, defects[1:]))
    ratios = log_ratio_sequence(defects)
    # tail falls off faster than any geometric sequence
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("lam", [1, 2, 3])
def test_master_agrees_with_spin_chain(lam):
    # the first n sites all occupied is one window configuration of the chain
    t = u2_table(4, lam)
    assert float(t.u1[1]) == pytest.approx(exact_stationary(1, lam, 1, with_H=False).W[1], abs=1e-12)
    assert float(t.u2[(1, 2)]) == pytest.approx(exact_stationary(2, lam, 1, with_H=False).W[2], abs=1e-12)
    u3 = u3_table(4, lam, experimental=True)
    assert float(u3[(1, 2, 3)]) == pytest.approx(exact_stationary(3, lam, 1, with_H=False).W[3], abs=1e-12)


def test_master_values_at_one():
    t = u2_table(6, 1)
    assert t.u2[(1, 2)] == F(1, 6)
    assert t.u2[(1, 3)] == F(1, 6) and t.u2[(2, 3)] == F(1, 6)


def test_printed_form():
    t = u2_table(4, 1, form="printed")
    assert t.u2[(1, 2)] == closed_forms(1)[(1, 2)] == F(1, 4)
    assert t.u2[(2, 3)] == closed_forms(1)[(2, 3)]
    assert all(equation_residual(t, x, y) == 0 for (x, y) in t.u2)
    with pytest.raises(ConsistencyError):
        u2_table(8, 1, form="printed")


def test_table_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        u2_table(1, 1)
    with pytest.raises(ConfigurationError):
        u2_table(4, 1, form="other")
    t = u2_table(5, F(3, 2))
    with pytest.raises(ConfigurationError):
        restriction_check(t, 5)
    t.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "# lambda=3/2 form=master y_max=5"
    assert lines[1] == "kind,x,y,numerator,denominator,decimal"
    assert len(lines) == 2 + 5 + 10


def test_u3_requires_opt_in():
    with pytest.raises(ConfigurationError):
        u3_table(4, 1)
    u3 = u3_table(6, 1, experimental=True)
    assert all(v > 0 for v in u3.values())
    # restriction onto the first two particles, truncated at x_3 <= 6
    two = u2_table(6, 1).u2
    assert sum(v for k, v in u3.items() if k[:2] == (1, 2)) < two[(1, 2)]
