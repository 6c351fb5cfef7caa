import json
import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from translab import bounds as B
from translab.core import DomainError


class TestTlsiLower:
    def test_statement_one_value(self):
        b = B.lower_prob_tlsi_statements(8, 64, 64, 1 / 1024)[0]
        assert b.applicable
        assert b.value == pytest.approx(math.exp(-2) / 150, rel=1e-12)
        assert b.value == pytest.approx(9.022e-4, abs=1e-7)
        # the constant statement also applies here and dominates
        assert B.lower_prob_tlsi(8, 64, 64, 1 / 1024).value == 1 / 16

    def test_statement_two_value(self):
        b = B.lower_prob_tlsi(25, 48, 100, 1 / 48)
        st1, st2 = B.lower_prob_tlsi_statements(25, 48, 100, 1 / 48)
        assert not st1.applicable and st2.applicable
        assert b.value == 1 / 16 and b.applicable

    def test_small_d_constant(self):
        assert B.lower_prob_tlsi_statements(4, 64, 64, 1 / 1024)[0].value == pytest.approx(math.exp(-2) / 4)

    def test_inapplicable_reports_condition(self):
        b = B.lower_prob_tlsi_statements(8, 32, 64, 1 / 1024)[0]
        assert not b.applicable
        assert "m >= 8(d-1)" in b.failed_conditions

    def test_sample_complexity_max_form(self):
        # ln(1/(150 delta)) = 1 so the first branch is 1; the d/(24 eps) branch gives 32 at d=24
        b = B.sample_complexity_lower_tlsi(24, 1 / 32, 1 / (150 * math.e))
        assert b.value == pytest.approx(32.0)
        assert B.sample_complexity_lower_tlsi(12, 1 / 32, 1 / (150 * math.e)).value == pytest.approx(16.0)

    def test_theta_form_below_max_form(self):
        for d in (2, 10, 50):
            a = B.sample_complexity_lower_tlsi(d, 1 / 64, 1e-4).value
            t = B.sample_complexity_lower_tlsi_theta(d, 1 / 64, 1e-4).value
            assert a / 2 <= t <= a

    @given(st.integers(2, 50), st.sampled_from([1 / 32, 1 / 64, 1 / 100]), st.floats(1e-9, 1 / 150))
    def test_sample_complexity_scaling(self, d, eps, delta):
        a = B.sample_complexity_lower_tlsi(d, eps, delta).value
        assert B.sample_complexity_lower_tlsi(d, eps / 2, delta).value == pytest.approx(2 * a)
        a2 = B.sample_complexity_lower_tlsii(d, eps, min(delta, 1 / 80)).value
        assert B.sample_complexity_lower_tlsii(d, eps / 2, min(delta, 1 / 80)).value == pytest.approx(2 * a2)

    def test_sample_complexity_large_d_branch(self):
        b = B.sample_complexity_lower_tlsi(1000, 1 / 32, 1e-3)
        assert b.value == pytest.approx(1000 * 32 / 24)

    def test_expectation(self):
        assert B.lower_expect_tlsi(5, 16, 48).value == 0.015625
        assert B.lower_expect_tlsi(2, 16, 16).value == 1 / 256
        b = B.lower_expect_tlsi(2, 8, 16)
        assert not b.applicable and "m >= 9" in b.failed_conditions


class TestTlsiiLower:
    def test_statement_one(self):
        b = B.lower_prob_tlsii(85, 50, 400, 1 / 105)
        assert b.applicable and b.value == 1 / 80

    def test_statement_one_needs_lower_sample_condition(self):
        # m=20 meets the upper range but not m >= (d-1)/2 = 42
        st1, _ = B.lower_prob_tlsii_statements(85, 20, 400, 1 / 105)
        assert not st1.applicable and st1.raw_value == 1 / 80
        assert st1.failed_conditions == ("m >= max((d-1)/2, 10)",)

    def test_statement_two(self):
        b = B.lower_prob_tlsii(5, 64, 64, 1 / 2048)
        assert b.value == pytest.approx(math.exp(-1) / 18, rel=1e-12)
        assert b.value == pytest.approx(0.02044, abs=1e-5)

    def test_both_inapplicable(self):
        st1, st2 = B.lower_prob_tlsii_statements(30, 5, 100, 1 / 64)
        assert not st1.applicable and not st2.applicable
        assert not B.lower_prob_tlsii(30, 5, 100, 1 / 64).applicable

    def test_expectation(self):
        with mpmath.workdps(30):
            ref = float(mpmath.mpf(4) / (32 * mpmath.e) * mpmath.mpf(15) / 16)
        assert B.lower_expect_tlsii(5, 16).value == pytest.approx(ref, rel=1e-14)
        assert B.lower_expect_tlsii(5, 16).value == pytest.approx(0.043112, abs=2e-6)
        assert B.lower_expect_tlsii(2, 10 ** 8).value < 1e-8
        assert B.lower_expect_tlsii(5, 4).applicable

    def test_sample_complexity(self):
        b = B.sample_complexity_lower_tlsii(22, 1 / 32, 1 / (80 * math.e))
        assert b.value == pytest.approx(max(32.0, 21 * 32 / 21))
        assert not B.sample_complexity_lower_tlsii(5, 1 / 32, 0.05).applicable


class TestUpper:
    def test_erm_tlsi(self):
        prob, expect = B.erm_upper_tlsi(2, 100, 100, 0.1)
        assert prob.value == pytest.approx(2 * (2 * math.log(100 * math.e) + math.log(10)) / 100, rel=1e-12)
        assert prob.value == pytest.approx(0.27026, abs=1e-5)
        assert expect.value == pytest.approx(0.24421, abs=1e-5)
        assert not B.erm_upper_tlsi(2, 3, 3, 0.1)[0].applicable

    def test_corrected_takes_the_max(self):
        prob, _ = B.erm_upper_tlsi(4, 100, 200, 0.05)
        assert B.erm_upper_tlsi_corrected(4, 100, 200, 0.05).value == prob.value
        c = B.erm_upper_tlsi_corrected(2, 4, 4, 0.5)
        assert c.raw_value == pytest.approx(max(B._vc_tail_term(2, 4, 4, 0.5), math.sqrt(2) / 4))

    def test_corrected_floor_never_binds_when_m_le_u(self):
        # 2 d ln(Ne/d)/m >= 2/u > sqrt(2)/u whenever m <= u
        c = B.erm_upper_tlsi_corrected(2, 10 ** 6, 10 ** 6, 0.99)
        assert c.value == B.erm_upper_tlsi(2, 10 ** 6, 10 ** 6, 0.99)[0].value
        assert c.value > math.sqrt(2) / 10 ** 6

    def test_erm_tlsii(self):
        res = B.erm_upper_tlsii(2, 100, 100, 0.1)
        ref = (12 * math.log(100) + 3 * math.log(20) + 3 * math.log(2)) / 200 + 5 * math.log(20) / 300
        assert res.prob_direct.raw_value == pytest.approx(ref, rel=1e-12)
        assert res.prob_direct.value == pytest.approx(0.3809, abs=1e-3)
        assert res.expect.value == pytest.approx((4 * math.log(200) + 4) / (100 * math.log(2)), rel=1e-12)
        assert res.expect.value == pytest.approx(0.36347, abs=1e-5)
        assert res.ratio == pytest.approx(res.prob_direct.raw_value / res.prob_via_reduction.raw_value)

    def test_erm_tlsii_unlabeled_term_vanishes(self):
        far = B.erm_upper_tlsii(2, 100, 10 ** 12, 0.1).prob_direct.raw_value
        assert far == pytest.approx((12 * math.log(100) + 3 * math.log(20) + 3 * math.log(2)) / 200, rel=1e-9)

    def test_hanneke(self):
        prob, expect = B.hanneke_upper_tlsii(4, 64, 64, 0.05, 1.0)
        assert expect.value == 0.0625
        assert B.hanneke_upper_tlsii(4, 128, 64, 0.05, 1.0)[1].value == 0.03125
        with pytest.raises(DomainError):
            B.hanneke_upper_tlsii(4, 64, 64, 2.0, 1.0)
        with pytest.raises(DomainError):
            B.hanneke_upper_tlsii(4, 64, 64, 0.05, 0.0)

    def test_values_clipped_to_unit_interval(self):
        prob, _ = B.erm_upper_tlsi(10, 10, 10, 0.01)
        assert prob.value == 1.0 and prob.raw_value > 1


class TestRelations:
    def test_ssl_relations(self):
        e, p = B.ssl_relations(0.2, 0.1, 10 ** 4, 0.05)
        assert e == 0.2
        assert p == pytest.approx(0.1 - math.exp(-50))
        assert B.ssl_relations(0.2, 0.7, 10, 0.0)[1] == 0.0
        assert B.ssl_relations(0.2, 1.0, 10, 0.0)[1] == 0.0

    def test_cm06_examples(self):
        c = B.cm06_flaw_check(100, 100, 0.01)
        assert not c.holds
        assert c.threshold == pytest.approx((math.sqrt(202) - 1) / 100, abs=1e-15)
        assert c.threshold == pytest.approx(0.1321267, abs=1e-7)
        assert B.cm06_flaw_check(100, 100, 0.2).holds
        assert B.cm06_flaw_check(10, 10 ** 8, 0.5).threshold < 1e-3

    @settings(max_examples=200)
    @given(st.integers(1, 500), st.integers(1, 500), st.floats(1e-6, 1.0))
    def test_cm06_holds_iff_above_threshold(self, m, u, eps):
        c = B.cm06_flaw_check(m, u, eps)
        if abs(eps - c.threshold) > 1e-12:
            assert c.holds == (eps >= c.threshold)

    @pytest.mark.parametrize("m,u", [(100, 100), (5, 7), (300, 40)])
    def test_cm06_flips_at_threshold(self, m, u):
        t = B.cm06_flaw_check(m, u, 0.5).threshold
        if t <= 1:
            assert not B.cm06_flaw_check(m, u, t - 1e-12).holds
            assert B.cm06_flaw_check(m, u, t + 1e-12).holds


class TestGridProperties:
    def test_monotone(self):
        for d in range(2, 8):
            vals = [B.lower_expect_tlsi(d, m, 400).value for m in range(9, 200)]
            assert all(a >= b for a, b in zip(vals, vals[1:]))
            ups = [B.erm_upper_tlsi(d, m, 400, 0.05)[1].value for m in range(9, 200)]
            assert all(a >= b for a, b in zip(ups, ups[1:]))
        for m in (16, 64):
            vals = [B.lower_expect_tlsi(d, m, 100).value for d in range(2, 10)]
            assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_lower_below_upper_where_both_apply(self):
        for d in range(2, 12):
            for m in range(9, 120, 7):
                for u in (m, 2 * m, 400):
                    lo = B.lower_expect_tlsi(d, m, u)
                    _, up = B.erm_upper_tlsi(d, m, u, 0.05)
                    if lo.applicable and up.applicable:
                        assert lo.value <= up.value

    def test_sample_complexity_linear_in_log_delta_and_d(self):
        eps = 1 / 64
        v1 = B.sample_complexity_lower_tlsi_theta(2, eps, 1e-3).value
        v2 = B.sample_complexity_lower_tlsi_theta(4, eps, 1e-3).value
        v3 = B.sample_complexity_lower_tlsi_theta(6, eps, 1e-3).value
        assert v3 - v2 == pytest.approx(v2 - v1)
        w1 = B.sample_complexity_lower_tlsi_theta(2, eps, 1e-3).value
        w2 = B.sample_complexity_lower_tlsi_theta(2, eps, 1e-3 / math.e).value
        assert w2 - w1 == pytest.approx(1 / (64 * eps))


class TestBatch:
    def test_csv(self, tmp_path):
        path = tmp_path / "pts.json"
        path.write_text(json.dumps([{"d": 5, "m": 16, "u": 48}, {"d": 8, "m": 64, "u": 64, "epsilon": "1/1024",
                                                                  "delta": 0.05, "bounds": ["tlsi_lower_prob"]}]))
        text = B.evaluate_batch_file(str(path))
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(B.CSV_COLUMNS)
        assert any(line.startswith("tlsi_lower_expect,TLSI,lower,expectation,0.015625,true") for line in lines)
        assert lines[-1].startswith("tlsi_lower_prob,")
