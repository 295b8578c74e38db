"""Markdown reports for runs and verification suites."""

from __future__ import annotations

from jinja2 import Environment, StrictUndefined

from fnls_lab.models import RunSummary, VerificationReport

_env = Environment(autoescape=False, trim_blocks=True, lstrip_blocks=True, undefined=StrictUndefined)
_env.filters["num"] = lambda value: "n/a" if value is None else f"{value:.6g}"

_RUN_TEMPLATE = _env.from_string(
    """# Run `{{ s.name }}`

Status: **{{ s.status }}** (exit code {{ s.exit_code }}){% if s.message %} - {{ s.message }}{% endif %}


## Parameters

| N | s | sigma | s_c | R | seed | dealias |
|---|---|---|---|---|---|---|
| {{ s.params.N }} | {{ s.params.s | num }} | {{ s.params.sigma | num }} | {{ s.s_c | num }} \
| {{ s.R | num }} | {{ s.seed }} | {{ s.dealias }} |

## Criteria

- branch: {{ s.verdict.branch or "none" }}
- applicable: {{ s.verdict.applicable }}
{% if s.verdict.reason %}
- reason: {{ s.verdict.reason }}
{% endif %}
- symmetry class: {{ s.verdict.symmetry_class }} (deviation {{ s.verdict.symmetry_deviation | num }})
{% if s.verdict.thresholds %}
- ground state: mass {{ s.verdict.thresholds.mass | num }}, energy {{ s.verdict.thresholds.energy | num }}, \
gradient norm {{ s.verdict.thresholds.grad_norm | num }}
{% endif %}
{% if s.verdict.comparison %}
- energy-mass condition: {{ s.verdict.comparison.energy_mass_lhs | num }} < \
{{ s.verdict.comparison.energy_mass_rhs | num }} -> {{ s.verdict.comparison.energy_mass_satisfied }}
- gradient-mass condition: {{ s.verdict.comparison.grad_lhs | num }} > {{ s.verdict.comparison.grad_rhs | num }} \
-> {{ s.verdict.comparison.grad_satisfied }}
{% endif %}

## Functionals

| | mass | energy | grad norm |
|---|---|---|---|
| initial | {{ s.initial.mass | num }} | {{ s.initial.energy | num }} | {{ s.initial.grad_norm | num }} |
{% if s.final %}
| final (t={{ s.t_final | num }}) | {{ s.final.mass | num }} | {{ s.final.energy | num }} | {{ s.final.grad_norm | num }} |
{% endif %}

## Detection

- detected: {{ s.detection.detected }}{% if s.detection.t_detect is not none %} at t={{ s.detection.t_detect | num }}\
{% endif %}

- reason: {{ s.detection.reason or "reached t_end" }}
- max gradient ratio: {{ s.detection.max_ratio | num }}
- steps: {{ s.steps }}, samples: {{ s.samples }}, dt exponent: {{ s.dt_exponent | num }}
- final boundary mass: {{ s.boundary_mass_final | num }}, max mass drift: {{ s.max_mass_drift | num }}
{% if s.growth_fit %}
- growth fit: G ~ t^{{ s.growth_fit.exponent | num }} (95% CI {{ s.growth_fit.ci_low | num }} .. \
{{ s.growth_fit.ci_high | num }}, {{ s.growth_fit.points }} points from t={{ s.growth_fit.window_start | num }})
{% endif %}
"""
)

_VERIFICATION_TEMPLATE = _env.from_string(
    """# Verification `{{ r.suite }}`

{{ r.summary }} (status: {{ r.status }})

| check | status | details |
|---|---|---|
{% for c in r.checks %}
| {{ c.name }} | {{ c.status }} | {{ c.description }} |
{% endfor %}
{% if r.corpora %}

| corpus | count | supremum | median | outliers | sanity |
|---|---|---|---|---|---|
{% for c in r.corpora %}
| {{ c.family }} | {{ c.count }} | {{ c.supremum | num }} | {{ c.median | num }} | {{ c.outliers }} | {{ c.sanity_ok }} |
{% endfor %}
{% endif %}
"""
)


def render_run_report(summary: RunSummary) -> str:
    return _RUN_TEMPLATE.render(s=summary)


def render_verification_report(report: VerificationReport) -> str:
    return _VERIFICATION_TEMPLATE.render(r=report)
