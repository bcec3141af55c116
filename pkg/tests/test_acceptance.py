"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also collected in the
terminal summary).  Criteria that cannot be met are left failing.
"""

import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from frameforge.config import RunConfig
from frameforge.correction import build_correction, verify_correction
from frameforge.errors import FrameForgeError
from frameforge.frame import (bessel_bound, coeff_lq_ratio, decompose_ordered_sum, expand, min_gap,
                              random_span_function)
from frameforge.grid import build_grid, make_w0, mu_measure, norm_u, total_mass, weight_u
from frameforge.induction import perturbations, run_induction
from frameforge.intervals import PeriodicIntervalSet
from frameforge.translate import gaussian_oracle, plancherel_g, verify_translate_expansion
from frameforge.trigpoly import TrigPoly

from conftest import DESK_CFG


def test_criterion_01_correction_contract(acceptance):
    try:
        b = build_correction(0.3, 4, 2048)
    except FrameForgeError as exc:
        d = exc.to_dict()
        acceptance(1, False, f"build_correction(0.3, q=4, deg_cap=2048) raised {d['error']}: {d['message']}")
        pytest.fail(d["message"])
    rep = verify_correction(b)
    acceptance(1, rep.passed, "; ".join(f"{c.name}={c.value:.4g}" for c in rep.checks))
    assert rep.passed


def test_criterion_02_riesz_premise(acceptance, desk_result):
    etas = (0.2, 0.1)
    lines, ok = [], False
    cfg = RunConfig(K=2, eta=etas)  # T = 32, N_grid = 2^16, w0 = 1
    try:
        r = run_induction(2, cfg)
        pert = perturbations(r)
        ok = all(p < 4 * e for p, e in zip(pert, etas)) and sum(p * p for p in pert) < 0.8
        lines.append(f"strict: perturbations {[round(p, 4) for p in pert]}")
    except FrameForgeError as exc:
        lines.append(f"strict run aborted with {type(exc).__name__}: {exc}")
    pert = perturbations(desk_result)
    lines.append(f"desk run: perturbations {[round(p, 4) for p in pert]} vs 4 eta {[4 * e for e in etas]}, "
                 f"sum of squares {sum(p * p for p in pert):.4f} vs 0.8")
    acceptance(2, ok, " | ".join(lines))
    assert ok


def test_criterion_03_biorthogonality(acceptance, desk_frame):
    err = desk_frame.biorthogonality("gauss")
    ind = desk_frame.biorthogonality("independent")
    ok = err < 1e-8 and ind < 1e-8
    acceptance(3, ok, f"max|<x_j, psi_k> - delta| = {err:.3g} (independent rule {ind:.3g}) < 1e-8; "
                      f"Gram condition {desk_frame.cond:.4g}")
    assert ok


def test_criterion_04_expansion_convergence(acceptance, desk_frame, desk_config):
    rng = np.random.default_rng(desk_config.seed)
    tol = max(5e-3, 10 * desk_frame.result.ls_floor)
    worst, mono = 0.0, 0.0
    for _ in range(20):
        f = random_span_function(desk_frame, rng)
        prof = expand(f, desk_frame)
        worst = max(worst, prof.terminal / prof.norm_f)
        be = prof.block_errors()
        mono = max([mono] + [b - a for a, b in zip(be, be[1:])])
    ok = worst < tol and mono <= 0
    acceptance(4, ok, f"worst terminal relative error {worst:.4g} < {tol:.4g} "
                      f"(10 x residual floor {desk_frame.result.ls_floor:.4g}); block-boundary increase {mono:.3g}")
    assert ok


def test_criterion_05_decomposition_identity(acceptance, desk_frame, desk_config):
    rng = np.random.default_rng(desk_config.seed)
    f = random_span_function(desk_frame, rng)
    a = desk_frame.dual_coefficients(f)
    n = len(desk_frame.points)
    js = rng.integers(1, n + 1, size=25)
    res, ex3, ex2 = 0.0, -math.inf, -math.inf
    for j in js:
        sp = decompose_ordered_sum(desk_frame, int(j), coefficients=a)
        res = max(res, sp.residual)
        ex3 = max(ex3, sp.norms["S3"] - sp.bounds["S3"])
        ex2 = max(ex2, sp.norms["S2"] - (sp.bounds["S2"] + 1e-6))
    ok = res < 1e-10 and ex3 <= 0 and ex2 <= 0
    acceptance(5, ok, f"identity residual {res:.3g} < 1e-10; max ||S'''|| - bound {ex3:.4g}; "
                      f"max ||S''|| - (10|a_k| + 1e-6) {ex2:.4g}")
    assert ok


def test_criterion_06_separation_exact(acceptance, desk_result):
    lam = desk_result.Lambda
    gap = min_gap(lam)
    ordered = True
    prev_hi = Fraction(0)
    for s in desk_result.steps:
        blocks = [s.Q_m(m) for m, _ in s.P.items()]
        ordered &= all(x.spectrum_bounds()[1] < y.spectrum_bounds()[0] for x, y in zip(blocks, blocks[1:]))
        lo, hi = s.block().spectrum_bounds()
        ordered &= lo > prev_hi
        prev_hi = hi
    keys = [(p.k, p.m, p.n) for p in desk_result.points]
    injective = len(set(keys)) == len(keys) == len(set(lam))
    ok = gap >= 1 - Fraction(2, 17) and ordered and injective
    acceptance(6, ok, f"min gap {gap} = {float(gap):.6f} >= 15/17; blocks ordered {ordered}; "
                      f"provenance injective {injective} ({len(keys)} points)")
    assert ok


def test_criterion_07_lq_coefficients(acceptance, desk_frame, desk_config):
    rng = np.random.default_rng(desk_config.seed)
    fs = [random_span_function(desk_frame, rng) for _ in range(50)]
    r4 = np.array([coeff_lq_ratio(f, desk_frame, 4) for f in fs])
    r2 = np.array([coeff_lq_ratio(f, desk_frame, 2) for f in fs])
    # finite-dimensional ceiling: ||c||_4 <= max_k ||scalars_k||_4 * ||a||_2 <= ... * sqrt(Bessel) ||f||
    sk = [np.sum(np.abs([p.scalar for p in desk_frame.points if p.k == k]) ** 4) ** 0.25
          for k in range(1, desk_frame.K + 1)]
    ceiling = max(sk) * math.sqrt(bessel_bound(desk_frame, samples=1)[1])
    running = np.maximum.accumulate(r4)
    ok = bool(np.all(np.isfinite(r4)) and running[-1] <= ceiling and np.all(r2 > r4))
    acceptance(7, ok, f"q=4 max ratio {r4.max():.4g} (first 25: {running[24]:.4g}, ceiling {ceiling:.4g}); "
                      f"q=2 max ratio {r2.max():.4g}, larger for every f")
    assert ok


def test_criterion_08_measure_lemmas(acceptance, default_grid, desk_config):
    u = weight_u(make_w0("one", default_grid), default_grid)
    rng = np.random.default_rng(desk_config.seed)
    worst_mufz, worst_per = -math.inf, -math.inf
    for _ in range(10):
        den = int(rng.integers(4, 200))
        cuts = np.unique(rng.integers(0, den + 1, size=2 * int(rng.integers(1, 6))))
        ivs = [(Fraction(int(a), den), Fraction(int(b), den)) for a, b in zip(cuts[::2], cuts[1::2])]
        E = PeriodicIntervalSet(ivs, int(rng.integers(1, 20)))
        worst_mufz = max(worst_mufz, mu_measure(E, u).value - float(E.measure()))
    for _ in range(10):
        n = int(rng.integers(1, 30))
        P = TrigPoly(zip(rng.integers(-40, 41, n).tolist(), (rng.standard_normal(n) + 1j * rng.standard_normal(n)).tolist()))
        worst_per = max(worst_per, norm_u(P, u) - P.l2_period_norm())
    mass = total_mass(u).value
    ok = worst_mufz <= 1e-6 and worst_per <= 1e-6 and mass <= math.pi / 10 + 1e-6
    acceptance(8, ok, f"max m_u(F+Z) - m(F) = {worst_mufz:.4g}; max ||g||_u - ||g||_[0,1] = {worst_per:.4g}; "
                      f"int u = {mass:.12f} vs pi/10 = {math.pi / 10:.12f}")
    assert ok


def test_criterion_09_translate_pullback(acceptance, desk_frame, desk_tframe):
    x1 = desk_frame.X[0]
    ref = expand(x1, desk_frame)
    prof = verify_translate_expansion(desk_tframe.image(x1), desk_tframe, reference=ref)
    gauss = gaussian_oracle()
    gn, wn = plancherel_g(desk_tframe)
    ok = prof.mismatch <= 1e-6 + prof.tolerance and gauss < 1e-8 and abs(gn - wn) < 1e-8
    acceptance(9, ok, f"profile mismatch {prof.mismatch:.4g} <= 1e-6 + window tolerance {prof.tolerance:.4g}; "
                      f"Gaussian oracle {gauss:.3g}; | ||g|| - (int w)^1/2 | = {abs(gn - wn):.3g}")
    assert ok


def test_criterion_10_determinism(acceptance, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        subprocess.run([sys.executable, "-m", "frameforge.cli", "--quiet", "construct", "--config", str(DESK_CFG),
                        "--out", str(out)], check=True, capture_output=True)
        outs.append((out / "result.json").read_bytes())
    ok = outs[0] == outs[1]
    acceptance(10, ok, f"two runs, {len(outs[0])} bytes each, identical: {ok}")
    assert ok
