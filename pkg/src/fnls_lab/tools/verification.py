"""Verification suite: quadrature gates, exact identities, cutoff properties and inequality ratios.

Each ``check_*`` function returns a CheckResult; ratio samples produced along the
way are appended to the shared ``samples`` mapping so the engine can summarize
them per family and ratios.csv can record them.
"""

from __future__ import annotations

import math

import numpy as np

from fnls_lab.config import LabConfig
from fnls_lab.cutoffs import CylWeight
from fnls_lab.engine import VerificationEngine
from fnls_lab.exceptions import LabError
from fnls_lab.inequalities import (
    KernelQuadrature,
    chain_ratios,
    fid_identity_check,
    gaussian_corpus,
    gn_ratio,
    hessian_formula_check,
    radial_sobolev_ratio,
    random_corpus,
    ring_corpus,
    tail_scaling,
)
from fnls_lab.models import EXIT_CODES, CheckResult, ModelParams, RatioSample
from fnls_lab.reports import render_verification_report
from fnls_lab.spectral import Field, Grid
from fnls_lab.stats import RatioStatistics
from fnls_lab.tools import error_result, open_storage
from fnls_lab.virial import GATE_TOL, ResolventQuadrature, balakrishnan_check

Samples = dict[str, list[RatioSample]]

GATE_ORDERS = (0.55, 0.7, 0.9)
IDENTITY_TOL = 1e-6
PROPERTY_TOL = 1e-12
CUTOFF_RADII = (1.0, 2.0, 5.0, 10.0, 20.0)
SCAN_POINTS = 100_000
INVARIANCE_TOL = 1e-6
DILATIONS = (0.5, 1.0, 2.0, 4.0)
FID_TOL = 1e-4
REFINEMENT_TOL = 0.05
TAIL_SLACK = 1.3

# parameters of the chain corpus: sigma <= s as the tail estimate requires
CHAIN_PARAMS = ModelParams(N=3, s=0.7, sigma=0.6)


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _spread(values: list[float]) -> float:
    array = np.asarray(values)
    return float((array.max() - array.min()) / abs(array.mean()))


def check_quadrature_gate(nodes: int, **_: object) -> CheckResult:
    """The resolvent rule reproduces int m^s/(b+m)^2 dm for every gate b and order s."""
    errors = {}
    for s in GATE_ORDERS:
        quad = ResolventQuadrature.build(s, 1.0, nodes)
        errors[f"s={s}"] = quad.gate_error
    worst = max(errors.values())
    return CheckResult(
        name="quadrature_gate",
        description="Resolvent quadrature matches b^{s-1} s pi/sin(pi s)",
        status=_status(worst <= GATE_TOL),
        details=f"worst relative error {worst:.3e} with {nodes} nodes",
        metrics={"worst": worst, **errors},
    )


def check_balakrishnan(seed: int, nodes: int, **_: object) -> CheckResult:
    """sum_j W_j ||grad u_{m_j}||^2 = s ||(-Delta)^{s/2} u||^2 on seeded symmetric fields."""
    grid = Grid.cube(3, 24, 24.0)
    worst = 0.0
    for s in GATE_ORDERS:
        for u in random_corpus(grid, 4, seed, envelope_width=3.0):
            _, _, rel = balakrishnan_check(u, ResolventQuadrature.for_field(u, s, nodes))
            worst = max(worst, rel)
    return CheckResult(
        name="balakrishnan_identity",
        description="Resolvent integral of the gradient energy equals s times the fractional seminorm",
        status=_status(worst < IDENTITY_TOL),
        details=f"worst relative error {worst:.3e} over {4 * len(GATE_ORDERS)} fields",
        metrics={"worst": worst},
    )


def check_cutoff_properties(**_: object) -> CheckResult:
    """Pointwise inequalities of psi_R on a dense radial scan, the core identity and the R^{-2} bi-Laplacian decay."""
    N = 3
    worst_ineq = 0.0
    worst_core = 0.0
    sups = []
    for R in CUTOFF_RADII:
        weight = CylWeight(R, N)
        r = np.linspace(0.0, 12.0 * R, SCAN_POINTS)
        t = weight.radial_tables(r)
        lowest = min(
            float(np.min(t.psi1)),
            float(np.min(1.0 - t.ratio)),
            float(np.min(t.psi2(N))),
            float(np.min(t.ratio)),
        )
        worst_ineq = min(worst_ineq, lowest)
        core = r <= R
        worst_core = max(worst_core, float(np.max(np.abs(t.lap_psi[core] - (N - 1)))))
        sups.append(float(np.max(np.abs(t.bilap))))
    decay = [sups[i] / sups[i + 1] * (CUTOFF_RADII[i] / CUTOFF_RADII[i + 1]) ** 2 for i in range(len(sups) - 1)]
    decay_ok = all(abs(d - 1.0) <= 0.2 for d in decay)
    ok = worst_ineq >= -PROPERTY_TOL and worst_core <= PROPERTY_TOL and decay_ok
    return CheckResult(
        name="cutoff_properties",
        description="1 - psi_R'' >= 0, 1 - psi_R'/r >= 0, N-1-Delta psi_R >= 0, Delta psi_R = N-1 on r <= R",
        status=_status(ok),
        details=f"most negative {worst_ineq:.3e}, core defect {worst_core:.3e}, bi-Laplacian decay ratios {decay}",
        metrics={"most_negative": worst_ineq, "core_defect": worst_core, "worst_decay": max(abs(d - 1) for d in decay)},
    )


def check_hessian_formula(**_: object) -> CheckResult:
    """Radial Hessian formula against spectral second partials for a Gaussian and for psi_R."""
    grid = Grid.cube(2, 128, 32.0)
    gaussian = Field.from_function(grid, lambda x, y: np.exp(-0.5 * (x**2 + y**2)))
    worst_g, scale_g = hessian_formula_check(
        gaussian, lambda r: (-r * np.exp(-0.5 * r**2), (r**2 - 1) * np.exp(-0.5 * r**2))
    )
    weight = CylWeight(1.0, 3)
    profile = Field.from_function(grid, lambda x, y: weight.psi_r(np.sqrt(x**2 + y**2), 0))
    worst_p, scale_p = hessian_formula_check(profile, lambda r: (weight.psi_r(r, 1), weight.psi_r(r, 2)))
    ok = worst_g < 1e-6 * scale_g and worst_p < 1e-5 * scale_p
    return CheckResult(
        name="hessian_formula",
        description="(delta_kl - x_k x_l/r^2) f'/r + x_k x_l/r^2 f'' matches spectral second partials",
        status=_status(ok),
        details=f"gaussian {worst_g / scale_g:.3e}, cutoff profile {worst_p / scale_p:.3e} (relative)",
        metrics={"gaussian": worst_g / scale_g, "cutoff": worst_p / scale_p},
    )


def check_kernel_self_test(**_: object) -> CheckResult:
    """The periodic singular-kernel quadrature maps a Fourier mode to 2|k|^s."""
    grid = Grid.cube(1, 256, 40.0)
    errors = {f"s={s}": KernelQuadrature(grid, s).self_test() for s in (0.5, 0.6, 0.7)}
    return CheckResult(
        name="kernel_self_test",
        description="Pair integral of a single mode equals 2|k|^s",
        status="pass",
        details=f"worst relative error {max(errors.values()):.3e}",
        metrics=errors,
    )


def check_pointwise_identity(**_: object) -> CheckResult:
    """(-d^2)^{s/2}|u|^2 = 2|u|(-d^2)^{s/2}|u| - I_s(|u|,|u|) for a Gaussian and a sech profile."""
    grid = Grid.cube(1, 512, 40.0)
    cases = {
        "gaussian s=0.6": (Field.from_function(grid, lambda x: np.exp(-(x**2))), 0.6),
        "sech s=0.5": (Field.from_function(grid, lambda x: 1.0 / np.cosh(x)), 0.5),
    }
    metrics = {}
    for label, (u, s) in cases.items():
        residual, scale = fid_identity_check(u, s)
        metrics[label] = residual / scale
    worst = max(metrics.values())
    return CheckResult(
        name="pointwise_identity",
        description="Fractional Leibniz identity with the singular pair integral",
        status=_status(worst < FID_TOL),
        details=f"worst residual {worst:.3e} of sup|(-d^2)^(s/2)|u|^2|",
        metrics=metrics,
    )


def check_scale_invariance(samples: Samples, **_: object) -> CheckResult:
    """Ratios of both interpolation inequalities do not change along dilation families."""
    line = Grid.cube(1, 1024, 40.0)
    gn = [
        gn_ratio(Field.from_function(line, lambda x, lam=lam: np.exp(-lam * x**2)), 4.0, 0.7, family="gn-dilation")
        for lam in DILATIONS
    ]
    plane = Grid.cube(2, 256, 32.0)
    radial = [
        radial_sobolev_ratio(
            Field.from_function(plane, lambda x, y, lam=lam: np.exp(-lam * (x**2 + y**2))),
            1.0 / math.sqrt(lam),
            0.7,
            family="radial-dilation",
        )
        for lam in DILATIONS
    ]
    for sample, lam in zip(gn + radial, DILATIONS * 2, strict=True):
        sample.parameters["lambda"] = lam
    samples.setdefault("gn-dilation", []).extend(gn)
    samples.setdefault("radial-dilation", []).extend(radial)
    spread_gn = _spread([r.ratio for r in gn])
    spread_radial = _spread([r.ratio for r in radial])
    return CheckResult(
        name="scale_invariance",
        description="Gagliardo-Nirenberg and radial Sobolev ratios agree across dilations",
        status=_status(max(spread_gn, spread_radial) < INVARIANCE_TOL),
        details=f"relative spread gn {spread_gn:.3e}, radial {spread_radial:.3e}",
        metrics={"gn": spread_gn, "radial": spread_radial},
    )


def _radial_bumps(grid: Grid, count: int, seed: int) -> list[tuple[Field, float]]:
    rng = np.random.default_rng(seed)
    bumps = []
    for _ in range(count):
        amplitudes = rng.uniform(0.2, 1.0, 3) * rng.choice([-1.0, 1.0], 3)
        rates = rng.uniform(0.3, 3.0, 3)
        radius = float(rng.uniform(0.5, 3.0))

        def profile(*xs: np.ndarray, a: np.ndarray = amplitudes, lam: np.ndarray = rates) -> np.ndarray:
            r2 = sum(x**2 for x in xs)
            return sum(a_j * np.exp(-lam_j * r2) for a_j, lam_j in zip(a, lam, strict=True))

        bumps.append((Field.from_function(grid, profile), radius))
    return bumps


def check_corpus_ratios(seed: int, samples: Samples, **_: object) -> CheckResult:
    """Random corpora give finite ratios inside the sanity bound, stable under grid refinement."""
    stats = RatioStatistics()
    line = Grid.cube(1, 256, 40.0)
    gn = [gn_ratio(u, 4.0, 0.7) for u in random_corpus(line, 100, seed, envelope_width=4.0)]
    samples.setdefault("gn", []).extend(gn)

    plane = Grid.cube(2, 64, 16.0)
    radial = [radial_sobolev_ratio(f, radius, 0.7) for f, radius in _radial_bumps(plane, 50, seed)]
    refined = [radial_sobolev_ratio(f, radius, 0.7) for f, radius in _radial_bumps(plane.refined(), 50, seed)]
    samples.setdefault("radial", []).extend(radial)

    summaries = [stats.summarize("gn", gn), stats.summarize("radial", radial)]
    sup_coarse = max(r.ratio for r in radial)
    sup_fine = max(r.ratio for r in refined)
    refinement = abs(sup_fine - sup_coarse) / sup_fine
    ok = all(s.sanity_ok and math.isfinite(s.supremum) for s in summaries) and refinement < REFINEMENT_TOL
    return CheckResult(
        name="corpus_ratios",
        description="Empirical inequality constants over seeded corpora",
        status=_status(ok),
        details="; ".join(f"{s.family}: sup {s.supremum:.4g}, median {s.median:.4g}" for s in summaries)
        + f"; refinement change {refinement:.2e}",
        metrics={
            **{f"{s.family}_supremum": s.supremum for s in summaries},
            "refinement_change": refinement,
        },
    )


def check_chain_ratios(seed: int, samples: Samples, **_: object) -> CheckResult:
    """Links of the exterior tail estimate stay finite and the tail decays at least like R^{-sigma(N-2)}."""
    params = CHAIN_PARAMS
    grid = Grid.create([32, 32, 32], [32.0, 32.0, 32.0])
    corpus = gaussian_corpus(grid, [2.0, 3.0]) + ring_corpus(grid, [3.0, 5.0])
    corpus += random_corpus(grid, 16, seed, envelope_width=4.0)
    # the tail link is not homogeneous in the amplitude, so every field is scaled to unit peak
    corpus = [u.scaled(1.0 / float(np.max(np.abs(u.physical())))) for u in corpus]
    finite = True
    for u in corpus:
        for R in (2.0, 4.0):
            record = chain_ratios(u, params, R)
            for sample in (record.sup_exterior, record.xn_power, record.tail):
                samples.setdefault(sample.family, []).append(sample)
                finite = finite and math.isfinite(sample.ratio)
    decay = tail_scaling(corpus[1], params, [2.0, 4.0])
    samples.setdefault("tail-decay", []).extend(decay)
    decay_ok = all(sample.lhs <= TAIL_SLACK * sample.rhs for sample in decay)
    return CheckResult(
        name="chain_ratios",
        description="Sup-exterior, x_N-power and tail links over a 20-field corpus",
        status=_status(finite and decay_ok),
        details=f"{len(corpus)} fields, tail decay {decay[0].lhs:.3e} against {decay[0].rhs:.3e}",
        metrics={"tail_decay": decay[0].lhs, "tail_decay_bound": decay[0].rhs},
    )


VERIFICATION_CHECKS = [
    check_quadrature_gate,
    check_balakrishnan,
    check_cutoff_properties,
    check_hessian_formula,
    check_kernel_self_test,
    check_pointwise_identity,
    check_scale_invariance,
    check_corpus_ratios,
    check_chain_ratios,
]


def run_verification(config: LabConfig, out: str | None = None, seed: int = 0, suite: str = "verification") -> dict:
    """Run the verification suite and write verification.json, ratios.csv and report.md.

    Args:
        config: Application configuration.
        out: Output directory, defaults to FNLS_OUTPUT_DIR.
        seed: Seed of the random corpora.
        suite: Name of the suite and of its run directory.

    Returns:
        Dict with the report; the exit code is 0 only when every check passed.
    """
    engine = VerificationEngine(config)
    samples: Samples = {}
    report = engine.run_suite(
        suite,
        VERIFICATION_CHECKS,
        corpora=samples,
        seed=seed,
        nodes=config.quadrature_nodes,
        samples=samples,
    )
    try:
        storage = open_storage(config, out)
        storage.save_verification(suite, report)
        storage.write_ratios(suite, [sample for family in samples.values() for sample in family])
        storage.write_report(suite, render_verification_report(report))
    except LabError as exc:
        return error_result(exc)
    return {
        "status": report.status,
        "exit_code": 0 if report.status == "passed" else EXIT_CODES["check-failed"],
        "summary": report.summary,
        "report": report.model_dump(mode="json"),
    }
