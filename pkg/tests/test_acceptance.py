"""End-to-end acceptance checks, one printed pass/fail line per criterion."""

import time

import numpy as np
import pytest
import scipy.optimize

import dualprecon as dp


def _report(name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"{status}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def _doubling_run(inst, x0_seed, max_iters=1000):
    f, k = dp.build_problem(inst)
    x0 = np.random.default_rng(x0_seed).standard_normal(inst.d)
    cfg = dp.SolverConfig(step_rule="doubling", L0=1.0, max_iters=max_iters, tol_kgap=1e-10)
    return dp.solve(f, k, x0, cfg)


def test_benchmark_reproduction_desk_scale(fig1_instance):
    t0 = time.perf_counter()
    tr100 = _doubling_run(fig1_instance, x0_seed=100)
    elapsed = time.perf_counter() - t0
    evals100 = tr100.records[-1].grad_evals
    ok = (
        tr100.termination_reason == "kgap_tol"
        and tr100.records[-1].k_gap <= 1e-10
        and evals100 <= 120
        and elapsed < 60.0
    )
    _report(
        "benchmark d=100: k_gap<=1e-10 within <=120 gradient evals in <60s",
        ok,
        f"{evals100} evals, {elapsed:.1f}s, k_gap={tr100.records[-1].k_gap:.2e}",
    )

    large = dp.generate_random_instance("pnorm", d=1000, n=10000, p=4.0, seed=1)
    tr1000 = _doubling_run(large, x0_seed=101)
    evals1000 = tr1000.records[-1].grad_evals
    ok = (
        tr1000.termination_reason == "kgap_tol"
        and 0.5 * evals100 <= evals1000 <= 1.5 * evals100
    )
    _report(
        "benchmark d=1000: eval count within +-50% of d=100",
        ok,
        f"{evals1000} vs {evals100} evals",
    )


def test_sublinear_bound_on_penalty_box():
    inst = dp.generate_random_instance("exp_penalty", d=2, tau=0.1, seed=0)
    f, k = dp.build_problem(inst)
    ref = scipy.optimize.minimize(
        lambda x: f.value(x),
        np.zeros(2),
        jac=lambda x: f.gradient(x),
        hess=lambda x: f.hessian(x),
        method="trust-constr",
        options={"gtol": 1e-14, "xtol": 1e-16, "maxiter": 2000},
    )
    x0 = np.array([0.3, 0.9])  # interior of the box
    cfg = dp.SolverConfig(step_rule="adaptive", L0=1.0, max_iters=300, tol_kgap=1e-12)
    tr = dp.solve(f, k, x0, cfg)
    out = dp.verify_rate_bounds(tr, f_min=float(ref.fun), tol=1e-10)
    _report(
        "sublinear bound holds at every iteration on the penalty box",
        out["sublinear_ok"],
        f"worst margin {out['worst_sublinear_margin']:.3e} over {len(tr)} iterations",
    )


def test_linear_rate_on_quartic():
    f, k = dp.power1d_problem(b=1.0, p=4.0)
    cfg = dp.SolverConfig(
        step_rule="fixed", L0=3.0, max_iters=40, tol_kgap=0.0, store_iterates=True
    )
    tr = dp.solve(f, k, np.array([9.0]), cfg)

    out = dp.verify_rate_bounds(tr, f_min=0.0, mu_star=1.0, L_star=3.0, tol=1e-10)
    _report(
        "linear rate bound with factor (1 - 1/3) on the quartic",
        out["sublinear_ok"] and out["linear_ok"],
        f"worst linear margin {out['worst_linear_margin']:.3e}",
    )

    worst = 0.0
    for i, rec in enumerate(tr.records):
        expect = 8.0 * (2.0 / 3.0) ** i
        worst = max(worst, abs((rec.x[0] - 1.0) - expect) / expect)
    _report(
        "quartic iterates follow x_i - 1 = 8*(2/3)^i to rel err 1e-10",
        worst <= 1e-10,
        f"worst rel err {worst:.2e} over {len(tr)} iterates",
    )


def test_one_step_idealizations():
    f, k = dp.power1d_problem(b=1.0, p=4.0)
    x1 = dp.dual_precon_step(f, k, np.array([9.0]), 1.0)
    err1 = abs(x1[0] - 1.0)
    ok1 = err1 <= 1e-12 * 2.0

    rng = np.random.default_rng(20)
    M = rng.standard_normal((6, 6))
    A = M @ M.T + 6.0 * np.eye(6)
    b = rng.standard_normal(6)
    fq, kq = dp.quadratic_problem(A, b, A)
    x_min, _ = fq.reference_min
    xq1 = dp.dual_precon_step(fq, kq, rng.standard_normal(6), 1.0)
    err2 = float(np.linalg.norm(xq1 - x_min))
    ok2 = err2 <= 1e-12 * (1.0 + np.linalg.norm(x_min))

    _report(
        "one-step convergence: quartic with L*=1 and quadratic with P=A",
        ok1 and ok2,
        f"errors {err1:.2e}, {err2:.2e}",
    )


def test_translation_invariance(small_pnorm_instance):
    inst = small_pnorm_instance
    f, k = dp.build_problem(inst)
    rng = np.random.default_rng(30)
    x0 = rng.standard_normal(inst.d)
    cfg = dp.SolverConfig(
        step_rule="doubling", L0=1.0, max_iters=300, tol_kgap=1e-10, store_iterates=True
    )
    base = dp.solve(f, k, x0, cfg)

    ok = True
    detail = ""
    for trial in range(5):
        z = rng.standard_normal(inst.d)
        f2, k2 = dp.build_problem(dp.translated_instance(inst, z))
        shifted = dp.solve(f2, k2, x0 + z, cfg)
        tol = 1e-10 * (1.0 + np.linalg.norm(z))
        same_L = np.array_equal(base.L_stars(), shifted.L_stars())
        worst = max(
            float(np.max(np.abs((rs.x - rb.x) - z)))
            for rb, rs in zip(base.records, shifted.records)
        )
        if not (same_L and len(base) == len(shifted) and worst <= tol):
            ok = False
            detail = f"trial {trial}: worst err {worst:.2e}, identical L {same_L}"
            break
    _report("translation invariance over 5 random shifts", ok, detail or "all shifts exact")


def test_certification_soundness(fig1_instance, box2d_instance):
    # (a) the quartic family satisfies the dual conditions with equality
    f1, k1 = dp.power1d_problem(b=1.0, p=4.0)
    sampler = dp.log_radius_pair_sampler(1, np.random.default_rng(40))
    inf_r, sup_r, _ = dp.sample_bregman_ratio(f1, k1, sampler, 500)
    ok_a = (inf_r >= 1.0 - 1e-8) and (sup_r <= 1.0 + 1e-8)
    _report(
        "certification (a): quartic divergence ratios all 1 +- 1e-8",
        ok_a,
        f"range [{inf_r:.12f}, {sup_r:.12f}]",
    )

    # (b) penalty box second-order check at the closed-form constant
    fb, kb = dp.build_problem(box2d_instance)
    L_tau = dp.exp_penalty_constants(box2d_instance, r=1.0, R=np.sqrt(2.0)).constants[
        "L_star_tau"
    ]
    assert L_tau == pytest.approx(16.0 + 4.0 * np.sqrt(2.0), rel=1e-12)
    grid_ok = True
    for xv in np.linspace(-3.0, 3.0, 21):
        for yv in np.linspace(-3.0, 3.0, 21):
            res = dp.check_second_order(fb, kb, np.array([xv, yv]), L_star=L_tau)
            grid_ok = grid_ok and res["pass"]
    _report(
        "certification (b): second-order check passes on the 21x21 box grid",
        grid_ok,
        f"L* = {L_tau:.6f}",
    )

    # (c) sampled ratios on the benchmark instance sit inside the closed forms
    rep = dp.pnorm_constants(fig1_instance, n_dirs=200, seed=0)
    f, k = dp.build_problem(fig1_instance)
    sampler = dp.log_radius_pair_sampler(fig1_instance.d, np.random.default_rng(41))
    inf_r, sup_r, _ = dp.sample_bregman_ratio(f, k, sampler, 500)
    ok_c = (sup_r <= rep.closed_form_L_star + 1e-6) and (
        inf_r >= rep.closed_form_mu_star - 1e-6
    )
    _report(
        "certification (c): sampled ratios within closed-form [mu*, L*]",
        ok_c,
        f"sampled [{inf_r:.3g}, {sup_r:.3g}] in [{rep.closed_form_mu_star:.3g}, "
        f"{rep.closed_form_L_star:.3g}]",
    )


def test_derivative_correctness():
    inst_p = dp.generate_random_instance("pnorm", d=5, n=25, p=4.0, seed=50)
    inst_e = dp.generate_random_instance("exp_penalty", d=4, tau=1.0, seed=0)
    fp, kp = dp.build_problem(inst_p)
    fe, ke = dp.build_problem(inst_e)
    rng = np.random.default_rng(51)
    M = rng.standard_normal((4, 4))
    fq, kq = dp.quadratic_problem(M @ M.T + 4.0 * np.eye(4), rng.standard_normal(4), np.eye(4))
    f1, k1 = dp.power1d_problem(b=0.5, p=4.0)

    cases = [
        ("pnorm objective", fp, lambda r: r.standard_normal(5)),
        ("pnorm reference", kp, lambda r: r.standard_normal(5) * 10.0 ** r.uniform(-1, 1)),
        ("penalty objective", fe, lambda r: r.uniform(-1.5, 1.5, 4)),
        ("penalty reference", ke, lambda r: r.standard_normal(4)),
        ("quadratic objective", fq, lambda r: r.standard_normal(4)),
        ("quadratic reference", kq, lambda r: r.standard_normal(4)),
        ("quartic objective", f1, lambda r: np.array([r.uniform(1.0, 4.0)])),
        ("quartic reference", k1, lambda r: np.array([r.uniform(1.0, 4.0)])),
    ]
    worst_g, worst_h = 0.0, 0.0
    ok = True
    for name, fn, draw in cases:
        rng = np.random.default_rng(52)
        for _ in range(100):
            x = draw(rng)
            ge = np.asarray(fn.gradient(x))
            ga = dp.finite_diff_gradient(fn, x)
            eg = np.max(np.abs(ga - ge)) / max(np.max(np.abs(ge)), 1.0)
            he = np.asarray(fn.hessian(x))
            ha = dp.finite_diff_hessian(fn, x)
            eh = np.max(np.abs(ha - he)) / max(np.max(np.abs(he)), 1.0)
            worst_g, worst_h = max(worst_g, eg), max(worst_h, eh)
            ok = ok and eg <= 1e-5 and eh <= 1e-3
    _report(
        "finite differences confirm every shipped gradient and Hessian",
        ok,
        f"worst grad err {worst_g:.2e}, worst hess err {worst_h:.2e}",
    )


def test_condition_number_formulas():
    expectations = {
        1.0: (16.0 * 1.0, 9.0 * 1.0),
        2.0: (16.0 * 2.0**4, 9.0 * 2.0 ** (8.0 / 3.0)),
        10.0: (16.0 * 10.0**4, 9.0 * 10.0 ** (8.0 / 3.0)),
    }
    ok = True
    for kappa, (exp_primal, exp_dual) in expectations.items():
        primal, dual = dp.primal_dual_condition_comparison(
            np.diag([1.0, kappa]), np.zeros(2), 4.0
        )
        ok = ok and abs(primal - exp_primal) <= 1e-12 * exp_primal
        ok = ok and abs(dual - exp_dual) <= 1e-12 * exp_dual
        if kappa > 1.0:
            ok = ok and primal > dual
    _report(
        "condition-number formulas at p=4, kappa in {1,2,10}",
        ok,
        "primal p^2 k^p vs dual (p-1)^2 k^(4-q), primal larger for kappa>1",
    )


def test_adaptive_near_optimality():
    f, k = dp.power1d_problem(b=1.0, p=4.0)
    ok = True
    worst = 0.0
    for L0 in (1.0, 4.0, 0.25):
        cfg = dp.SolverConfig(step_rule="adaptive", L0=L0, max_iters=100, tol_kgap=1e-12)
        tr = dp.solve(f, k, np.array([9.0]), cfg)
        accepted = tr.L_stars()[:-1]
        worst = max(worst, float(np.max(accepted)))
        ok = ok and tr.termination_reason == "kgap_tol" and np.all(accepted < 2.0)
    _report(
        "adaptive rule accepts only L < 2 on the quartic (true constant 1)",
        ok,
        f"largest accepted L = {worst}",
    )
