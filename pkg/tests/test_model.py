import math
from datetime import datetime, timezone
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfpaas import model
from tfpaas.errors import (
    DomainError,
    EmptyUsernameError,
    FieldError,
    NoSamplesError,
)
from tfpaas.model import (
    ApplicationIdentity,
    CriterionResult,
    HttpMethod,
    LoadProfile,
    Measurement,
    MeasurementSummary,
    PerformanceCriteria,
    TestCase,
    TestVerdict,
)

T0 = datetime(2026, 3, 1, 12, 0, tzinfo=timezone.utc)


def counting_percentile(values, q):
    """Independent oracle: smallest v with |{x : x <= v}| >= ceil(q * n)."""
    need = -((-Fraction(str(q)).numerator * len(values)) // Fraction(str(q)).denominator)
    for v in sorted(values):
        if sum(1 for x in values if x <= v) >= need:
            return v
    raise AssertionError("unreachable")


class TestPercentile:
    @given(
        st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=200),
        st.sampled_from([0.01, 0.1, 0.25, 1 / 3, 0.5, 0.9, 0.95, 0.99, 1.0]),
    )
    def test_matches_counting_oracle(self, values, q):
        assert model.percentile(values, q) == counting_percentile(values, q)

    @given(st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=50))
    def test_result_is_an_element(self, values):
        assert model.percentile(values, 0.95) in values

    @given(st.lists(st.floats(min_value=0, max_value=1e6), min_size=1, max_size=50))
    def test_monotone_in_q(self, values):
        picks = [model.percentile(values, q) for q in (0.1, 0.5, 0.9, 1.0)]
        assert picks == sorted(picks)
        assert picks[-1] == max(values)

    def test_tie_handling(self):
        assert model.percentile([1.0, 1.0, 2.0], 2 / 3) == 1.0
        assert model.percentile([1.0, 1.0, 2.0], 0.67) == 2.0

    def test_p95_rank_boundary_is_exact(self):
        # with 20 samples the 95th percentile is the 19th order statistic,
        # so binary noise in 0.95 * 20 must not push the rank to 20
        values = [float(i) for i in range(1, 21)]
        assert model.percentile(values, 0.95) == 19.0

    def test_rejects_empty_and_bad_q(self):
        with pytest.raises(NoSamplesError):
            model.percentile([], 0.5)
        with pytest.raises(DomainError):
            model.percentile([1.0], 0.0)
        with pytest.raises(DomainError):
            model.percentile([1.0], 1.5)


class TestSummarize:
    def test_uniform_latencies(self):
        m = Measurement(
            latencies_ms=(10.0,) * 100,
            bytes_received=125000,
            wall_time_s=10.0,
            error_count=0,
            started_at=T0,
        )
        s = model.summarize(m, LoadProfile(requests=100, concurrency=10))
        assert s.mean_ms == 10.0
        assert s.p50_ms == 10.0
        assert s.p95_ms == 10.0
        assert s.observed_tps == 10.0
        assert s.observed_bps == 100000.0  # 125000 bytes * 8 bits / 10 s
        assert s.completed == 100
        assert s.errored == 0

    def test_ramp_latencies(self):
        m = Measurement(
            latencies_ms=tuple(float(i) for i in range(1, 101)),
            bytes_received=10**6,
            wall_time_s=2.0,
            error_count=0,
            started_at=T0,
        )
        s = model.summarize(m, LoadProfile(requests=100, concurrency=10))
        assert s.mean_ms == 50.5
        assert s.p50_ms == 50.0
        assert s.p95_ms == 95.0
        assert s.observed_tps == 50.0
        assert s.observed_bps == 4e6

    def test_errors_split_but_sum(self):
        m = Measurement(
            latencies_ms=(5.0,) * 8,
            bytes_received=800,
            wall_time_s=1.0,
            error_count=2,
            started_at=T0,
            http_error_count=3,
        )
        s = model.summarize(m, LoadProfile(requests=10, concurrency=2))
        assert s.completed == 8  # http errors still produced samples
        assert s.errored == 5

    def test_no_samples(self):
        m = Measurement(
            latencies_ms=(),
            bytes_received=0,
            wall_time_s=1.0,
            error_count=10,
            started_at=T0,
        )
        with pytest.raises(NoSamplesError):
            model.summarize(m, LoadProfile(requests=10, concurrency=1))

    def test_accounting_mismatch(self):
        m = Measurement(
            latencies_ms=(1.0,) * 9,
            bytes_received=0,
            wall_time_s=1.0,
            error_count=0,
            started_at=T0,
        )
        with pytest.raises(FieldError, match="accounting"):
            model.summarize(m, LoadProfile(requests=10, concurrency=1))


def summary_of(mean, tps, bps):
    return MeasurementSummary(
        mean_ms=mean, p50_ms=mean, p95_ms=mean,
        observed_tps=tps, observed_bps=bps, completed=10, errored=0,
    )


class TestEvaluate:
    CRITERIA = PerformanceCriteria(response_ms=3.0, tps=30.0, bps=1000.0)

    def test_all_pass(self):
        v = model.evaluate(summary_of(2.0, 40.0, 2000.0), self.CRITERIA)
        assert v.overall
        assert (v.response.passed, v.tps.passed, v.bps.passed) == (True, True, True)

    @pytest.mark.parametrize(
        "summary",
        [summary_of(3.0, 30.0, 1000.0), summary_of(3.0, 99.0, 99999.0)],
    )
    def test_boundaries_are_inclusive(self, summary):
        assert model.evaluate(summary, self.CRITERIA).overall

    def test_each_criterion_can_fail_alone(self):
        v = model.evaluate(summary_of(3.1, 30.0, 1000.0), self.CRITERIA)
        assert (v.response.passed, v.tps.passed, v.bps.passed) == (False, True, True)
        v = model.evaluate(summary_of(3.0, 29.9, 1000.0), self.CRITERIA)
        assert (v.response.passed, v.tps.passed, v.bps.passed) == (True, False, True)
        v = model.evaluate(summary_of(3.0, 30.0, 999.0), self.CRITERIA)
        assert (v.response.passed, v.tps.passed, v.bps.passed) == (True, True, False)
        assert not v.overall

    def test_verdict_echoes_declared_and_observed(self):
        v = model.evaluate(summary_of(2.5, 31.0, 1001.0), self.CRITERIA)
        assert v.response.expected == 3.0 and v.response.observed == 2.5
        assert v.tps.expected == 30.0 and v.bps.expected == 1000.0


class TestInvariants:
    def test_identity_rejects_bad_uuid(self):
        with pytest.raises(FieldError):
            ApplicationIdentity(app_id="not-a-uuid", user_name="dev")
        with pytest.raises(FieldError):
            # uppercase is not canonical
            ApplicationIdentity(
                app_id="123E4567-E89B-42D3-A456-426614174000", user_name="dev"
            )

    def test_identity_rejects_blank_user(self):
        with pytest.raises(FieldError):
            ApplicationIdentity(
                app_id="123e4567-e89b-42d3-a456-426614174000", user_name="   "
            )

    def test_case_requires_absolute_url(self):
        with pytest.raises(FieldError):
            TestCase(url="www.example.com/TFP", method=HttpMethod.GET)
        with pytest.raises(FieldError):
            TestCase(url="ftp://example.com/x", method=HttpMethod.GET)

    def test_case_message_agrees_with_method(self):
        with pytest.raises(FieldError):
            TestCase(url="http://x.example/svc", method=HttpMethod.POST)
        with pytest.raises(FieldError):
            TestCase(url="http://x.example/svc", method=HttpMethod.GET, message="hi")

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_criteria_must_be_positive_finite(self, bad):
        with pytest.raises(FieldError):
            PerformanceCriteria(response_ms=bad, tps=1.0, bps=1.0)

    def test_profile_bounds(self):
        with pytest.raises(FieldError):
            LoadProfile(requests=0, concurrency=1)
        with pytest.raises(FieldError):
            LoadProfile(requests=5, concurrency=6)

    def test_verdict_overall_must_be_conjunction(self):
        ok = CriterionResult("response", 1.0, 1.0, True)
        bad = CriterionResult("tps", 1.0, 0.5, False)
        with pytest.raises(FieldError):
            TestVerdict(response=ok, tps=bad, bps=ok, overall=True)

    def test_measurement_http_errors_bounded_by_samples(self):
        with pytest.raises(FieldError):
            Measurement(
                latencies_ms=(1.0,),
                bytes_received=0,
                wall_time_s=1.0,
                error_count=0,
                started_at=T0,
                http_error_count=2,
            )


class TestIdentityMinting:
    def test_fresh_identities_differ(self):
        a = model.new_app_identity("dev")
        b = model.new_app_identity("dev")
        assert a.app_id != b.app_id
        assert model.UUID_V4_RE.match(a.app_id)

    def test_user_name_is_trimmed(self):
        assert model.new_app_identity("  ada ").user_name == "ada"

    def test_blank_rejected(self):
        with pytest.raises(EmptyUsernameError):
            model.new_app_identity(" \t ")


class TestUrlHelpers:
    def test_normalize_prefixes_missing_scheme(self):
        assert model.normalize_url("www.example.com/TFP/") == (
            "http://www.example.com/TFP/",
            True,
        )

    def test_normalize_leaves_schemed_urls_alone(self):
        assert model.normalize_url("https://x.example/") == ("https://x.example/", False)
        assert model.normalize_url("ftp://x.example/") == ("ftp://x.example/", False)

    def test_check_absolute_url(self):
        assert model.check_absolute_url("http://x.example/a") is None
        assert model.check_absolute_url("x.example/a") is not None
        assert model.check_absolute_url("http:///nohost") is not None
