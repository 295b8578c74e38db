"""Tests for the verification engine."""

from __future__ import annotations

from fnls_lab.config import LabConfig
from fnls_lab.engine import VerificationEngine
from fnls_lab.models import CheckResult, RatioSample


def _sample(ratio: float) -> RatioSample:
    return RatioSample(family="gn", lhs=ratio, rhs=1.0, ratio=ratio)


class TestVerificationEngine:
    def setup_method(self) -> None:
        self.config = LabConfig(FNLS_OUTPUT_DIR="unused")
        self.engine = VerificationEngine(self.config)

    def test_run_check_success(self) -> None:
        def good_check() -> CheckResult:
            return CheckResult(name="good", description="passes", status="pass")

        result = self.engine.run_check(good_check)
        assert result.status == "pass"
        assert result.name == "good"

    def test_run_check_exception(self) -> None:
        def bad_check() -> CheckResult:
            raise ValueError("something broke")

        result = self.engine.run_check(bad_check)
        assert result.status == "error"
        assert result.name == "bad_check"
        assert "something broke" in result.description
        assert "ValueError" in result.details

    def test_run_suite_all_pass(self) -> None:
        def check1() -> CheckResult:
            return CheckResult(name="c1", description="d1", status="pass")

        def check2() -> CheckResult:
            return CheckResult(name="c2", description="d2", status="pass")

        report = self.engine.run_suite("verification", [check1, check2])
        assert report.suite == "verification"
        assert len(report.checks) == 2
        assert report.status == "passed"
        assert report.corpora == []

    def test_run_suite_with_failure(self) -> None:
        def passing() -> CheckResult:
            return CheckResult(name="p", description="d", status="pass")

        def failing() -> CheckResult:
            return CheckResult(name="f", description="d", status="fail")

        report = self.engine.run_suite("verification", [passing, failing])
        assert report.status == "completed"
        assert "1 passed" in report.summary
        assert "1 failed" in report.summary

    def test_run_suite_with_error(self) -> None:
        def erroring() -> CheckResult:
            raise RuntimeError("boom")

        report = self.engine.run_suite("verification", [erroring])
        assert report.status == "completed_with_errors"
        assert report.checks[0].status == "error"

    def test_corpus_outlier_fails_suite(self) -> None:
        def passing() -> CheckResult:
            return CheckResult(name="p", description="d", status="pass")

        corpora = {"gn": [_sample(1.0), _sample(1.1), _sample(50.0)]}
        report = self.engine.run_suite("verification", [passing], corpora=corpora)
        assert report.status == "completed"
        assert report.corpora[0].family == "gn"
        assert report.corpora[0].outliers == 1

    def test_run_suite_passes_kwargs(self) -> None:
        def check_with_arg(seed: int = 0, **_: object) -> CheckResult:
            return CheckResult(name="seeded", description=f"seed={seed}", status="pass")

        report = self.engine.run_suite("verification", [check_with_arg], seed=11, nodes=64)
        assert report.checks[0].description == "seed=11"

    def test_run_suite_timestamps(self) -> None:
        report = self.engine.run_suite("verification", [])
        assert report.status == "passed"
        assert report.completed_at is not None
        assert report.completed_at >= report.started_at
        assert len(report.id) > 0
