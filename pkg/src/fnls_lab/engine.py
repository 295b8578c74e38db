"""Verification engine that orchestrates check execution and result aggregation.

The VerificationEngine runs individual check functions, catches errors,
summarizes ratio corpora, and produces VerificationReport objects.
"""

from __future__ import annotations

import logging
import traceback
from collections.abc import Callable
from datetime import UTC, datetime

from fnls_lab.config import LabConfig
from fnls_lab.models import CheckResult, RatioSample, VerificationReport
from fnls_lab.stats import RatioStatistics

logger = logging.getLogger(__name__)


class VerificationEngine:
    """Executes verification checks and aggregates results."""

    def __init__(self, config: LabConfig) -> None:
        self.config = config
        self.statistics = RatioStatistics()

    def run_check(self, check_fn: Callable[..., CheckResult], **kwargs: object) -> CheckResult:
        """Execute a single check function safely.

        If the check function raises, returns a CheckResult with status='error'
        rather than propagating the exception.

        Args:
            check_fn: A callable that returns a CheckResult.
            **kwargs: Arguments passed to the check function.

        Returns:
            The CheckResult, or an error check if the function failed.
        """
        try:
            return check_fn(**kwargs)
        except Exception as exc:
            logger.error("Check %s failed: %s", check_fn.__name__, exc)
            return CheckResult(
                name=check_fn.__name__,
                description=f"Check failed with error: {exc}",
                status="error",
                details=traceback.format_exc(),
            )

    def run_suite(
        self,
        suite: str,
        check_fns: list[Callable[..., CheckResult]],
        corpora: dict[str, list[RatioSample]] | None = None,
        **kwargs: object,
    ) -> VerificationReport:
        """Run a verification suite by executing all check functions.

        Args:
            suite: Name of the suite being run.
            check_fns: List of check functions to execute.
            corpora: Ratio samples per inequality family, summarized into the report.
            **kwargs: Arguments passed to each check function.

        Returns:
            VerificationReport with all checks, corpus summaries, and a summary line.
        """
        report = VerificationReport(suite=suite, started_at=datetime.now(UTC), status="running")

        checks: list[CheckResult] = []
        for fn in check_fns:
            logger.info("Running check: %s", fn.__name__)
            checks.append(self.run_check(fn, **kwargs))

        report.checks = checks
        report.corpora = [self.statistics.summarize(family, samples) for family, samples in (corpora or {}).items()]
        report.completed_at = datetime.now(UTC)

        passed = sum(1 for c in checks if c.status == "pass")
        failed = sum(1 for c in checks if c.status == "fail")
        errors = sum(1 for c in checks if c.status == "error")
        report.summary = f"{passed} passed, {failed} failed, {errors} errors out of {len(checks)} checks"

        if errors:
            report.status = "completed_with_errors"
        elif failed > 0 or not all(corpus.sanity_ok for corpus in report.corpora):
            report.status = "completed"
        else:
            report.status = "passed"

        return report
