"""Runtime verification harness: re-checks the library's numerical contracts.

Each check draws seeded random cases, evaluates one family of invariants,
and reports a pass flag plus the worst observed metric. The `core` suite
keeps every check cheap; `all` raises the trial counts and adds the slower
solver checks. Reports are deterministic functions of the seed.
"""

import math

import numpy as np

from . import flow, nn
from .alpha_geometry import (
    AlphaParam,
    MappedState,
    alpha_divergence,
    alpha_norm_sq,
    from_alpha_rep,
    map_tangent,
    measure_alpha_divergence,
    modified_alpha_rep,
    neg_divergence_gradient,
    project_sphere_tangent,
    q_logarithm,
    to_alpha_rep,
    unmap_tangent,
)
from .energy import DiscreteCurve, curve_alpha_energy, discretize_geodesic, perturb_curve
from .evaluation import kde_density, kde_kl, make_density_grid, swiss_roll_array
from .geodesics import (
    conditional_vector_field,
    exp_map,
    geodesic,
    geodesic_equation_residual,
    log_map,
)
from .manifold import (
    SimplexPoint,
    SimplexTangent,
    clamp_normalize,
    fisher_inner,
    make_rng,
    project_tangent,
    sample_uniform_simplex_array,
)
from .reparam import closed_form_tau, solve_tau_bvp

ALPHA_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def _random_point(rng, n, floor=1e-2) -> SimplexPoint:
    return clamp_normalize(sample_uniform_simplex_array(n, 1, rng, floor)[0], floor)


def _random_tangent(rng, mu: SimplexPoint) -> SimplexTangent:
    z = rng.uniform(-1.0, 1.0, size=mu.n)
    return project_tangent(mu, mu.probs * z)


def check_manifold(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        mu = _random_point(rng, n)
        w = rng.normal(size=n)
        once = project_tangent(mu, w)
        twice = project_tangent(mu, once.comps)
        worst = max(worst, float(np.abs(once.comps - twice.comps).max()))
        a = _random_tangent(rng, mu)
        if fisher_inner(mu, a, a) < 0.0:
            worst = math.inf
    return {"name": "manifold_invariants", "passed": worst <= 1e-12, "detail": f"max={worst:.3e}"}


def check_round_trips(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for a in ALPHA_GRID:
        alpha = AlphaParam(a)
        for _ in range(trials):
            mu = _random_point(rng, int(rng.integers(2, 6)))
            x = to_alpha_rep(mu, alpha)
            worst = max(worst, float(np.abs(from_alpha_rep(x).probs - mu.probs).max()))
            tan = _random_tangent(rng, mu)
            u = map_tangent(mu, tan, alpha)
            worst = max(worst, float(np.abs(unmap_tangent(u).comps - tan.comps).max()))
    return {"name": "alpha_round_trips", "passed": worst <= 1e-12, "detail": f"max={worst:.3e}"}


def check_norm_consistency(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for a in ALPHA_GRID:
        alpha = AlphaParam(a)
        for _ in range(trials):
            mu = _random_point(rng, int(rng.integers(2, 6)))
            tan = _random_tangent(rng, mu)
            want = fisher_inner(mu, tan, tan)
            got = alpha_norm_sq(map_tangent(mu, tan, alpha), mu)
            worst = max(worst, abs(got - want) / max(want, 1e-30))
    return {"name": "norm_consistency", "passed": worst <= 1e-10, "detail": f"rel={worst:.3e}"}


def check_divergences(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst_taylor = 0.0
    worst_fd = 0.0
    for a in (-0.5, 0.0, 0.5):
        alpha = AlphaParam(a)
        for _ in range(trials):
            mu = _random_point(rng, 3)
            tan = _random_tangent(rng, mu)
            norm_sq = fisher_inner(mu, tan, tan)
            for eps in (1e-2, 1e-3):
                nu = SimplexPoint(mu.probs + eps * tan.comps)
                ratio = alpha_divergence(mu, nu, alpha) / (0.5 * eps**2 * norm_sq)
                worst_taylor = max(worst_taylor, abs(ratio - 1.0) / (10.0 * eps))
            # finite-difference check of the divergence derivative in the first slot
            # (points kept away from the boundary so the h^2 truncation term,
            #  which scales like 1/mu^2, stays below the 1e-6 tolerance)
            mu = _random_point(rng, 3, floor=0.05)
            nu = _random_point(rng, 3, floor=0.05)
            h = 1e-5
            for i in range(3):
                shift = np.zeros(3)
                shift[i] = h
                fd = (
                    measure_alpha_divergence(mu.probs + shift, nu.probs, AlphaParam(-a))
                    - measure_alpha_divergence(mu.probs - shift, nu.probs, AlphaParam(-a))
                ) / (2.0 * h)
                ana = -float(q_logarithm(nu.probs[i] / mu.probs[i], alpha))
                worst_fd = max(worst_fd, abs(fd - ana))
    passed = worst_taylor <= 1.0 and worst_fd <= 1e-6
    return {
        "name": "divergence_properties",
        "passed": passed,
        "detail": f"taylor={worst_taylor:.3f} fd={worst_fd:.3e}",
    }


def check_gradient_identity(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for a in (-1.0, 0.0, 1.0):
        alpha = AlphaParam(a)
        for _ in range(trials):
            mu = _random_point(rng, 3)
            nu = _random_point(rng, 3)
            x = to_alpha_rep(mu, alpha)
            y = to_alpha_rep(nu, alpha)
            if a == 0.0:
                theta = math.acos(float(np.clip(np.dot(x.coords, y.coords), -1, 1)))
                tau_dot0 = theta / math.sin(theta) if theta > 1e-12 else 1.0
            else:
                tau_dot0 = 1.0
            lhs = log_map(x, y).comps / tau_dot0
            grad = neg_divergence_gradient(mu, nu, alpha)
            rhs = project_sphere_tangent(x, map_tangent(mu, grad, alpha).comps).comps
            cos = float(np.dot(lhs, rhs) / (np.linalg.norm(lhs) * np.linalg.norm(rhs)))
            worst = max(worst, 1.0 - cos, float(np.abs(lhs - rhs).max()))
    return {"name": "gradient_identity", "passed": worst <= 1e-8, "detail": f"max={worst:.3e}"}


def check_reparam(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    alpha = AlphaParam(0.0)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        x = to_alpha_rep(_random_point(rng, n), alpha)
        y = to_alpha_rep(_random_point(rng, n), alpha)
        sol = solve_tau_bvp(x, y)
        ref = closed_form_tau(x, y)
        worst = max(worst, float(np.abs(sol.tau - ref.tau).max()))
    return {"name": "reparam_closed_form", "passed": worst <= 2e-3, "detail": f"max={worst:.3e}"}


def check_geodesics(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst_closed = 0.0
    worst_numeric = 0.0
    worst_resid = 0.0
    for a in ALPHA_GRID:
        alpha = AlphaParam(a)
        for _ in range(trials):
            mu0 = _random_point(rng, 3)
            mu1 = _random_point(rng, 3)
            x = to_alpha_rep(mu0, alpha)
            y = to_alpha_rep(mu1, alpha)
            err = float(np.abs(exp_map(x, log_map(x, y), 1.0).coords - y.coords).max())
            curve = geodesic(mu0, mu1, alpha)
            bd = max(
                float(np.abs(curve.point_simplex(0.0).probs - mu0.probs).max()),
                float(np.abs(curve.point_simplex(1.0).probs - mu1.probs).max()),
            )
            if alpha.has_closed_form:
                worst_closed = max(worst_closed, err, bd)
                resid = float(np.abs(geodesic_equation_residual(curve, 0.5)).max())
                worst_resid = max(worst_resid, resid)
            else:
                worst_numeric = max(worst_numeric, err, bd)
    passed = worst_closed <= 1e-9 and worst_numeric <= 1e-2 and worst_resid <= 1e-4
    return {
        "name": "geodesic_boundary_inversion",
        "passed": passed,
        "detail": f"closed={worst_closed:.3e} numeric={worst_numeric:.3e} resid={worst_resid:.3e}",
    }


def check_energy(seed: int, pairs: int, competitors: int) -> dict:
    rng = make_rng(seed)
    violations = 0
    for a in (-1.0, -0.5, 0.0, 0.5):
        alpha = AlphaParam(a)
        for _ in range(pairs):
            mu0 = _random_point(rng, 3, floor=0.1)
            mu1 = _random_point(rng, 3, floor=0.1)
            base = discretize_geodesic(geodesic(mu0, mu1, alpha), 100)
            e0 = curve_alpha_energy(base, alpha)
            for _ in range(competitors):
                rival = perturb_curve(base, 0.05, rng)
                if curve_alpha_energy(rival, alpha) < e0:
                    violations += 1
    return {
        "name": "energy_optimality",
        "passed": violations == 0,
        "detail": f"violations={violations}",
    }


def check_nn(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(trials):
        model = nn.init_mlp(4, 2, (5, 3), rng)
        feats = rng.normal(size=(3, 4))
        upstream = rng.normal(size=(3, 2))
        out, acts = nn.forward_batch(model, feats)
        d_ws, d_bs = nn.backward_batch(model, acts, upstream)
        h = 1e-6
        for pi, (params, grads) in enumerate(((model.weights, d_ws), (model.biases, d_bs))):
            for li in range(len(params)):
                flat = params[li].ravel()
                k = int(rng.integers(0, flat.size))
                old = flat[k]
                flat[k] = old + h
                up, _ = nn.forward_batch(model, feats)
                flat[k] = old - h
                dn, _ = nn.forward_batch(model, feats)
                flat[k] = old
                fd = float(np.sum((up - dn) * upstream) / (2 * h))
                ana = float(grads[li].ravel()[k])
                worst = max(worst, abs(fd - ana) / max(abs(fd), abs(ana), 1e-8))
    return {"name": "nn_gradients", "passed": worst <= 1e-6, "detail": f"rel={worst:.3e}"}


def check_flow_loss(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst_proj = 0.0
    worst_grad = 0.0
    for a in ALPHA_GRID:
        cfg = flow.FlowConfig(alpha=AlphaParam(a), epochs=1, seed=seed, hidden=(8, 8))
        for _ in range(trials):
            mu0 = _random_point(rng, 3)
            mu1 = _random_point(rng, 3)
            t = float(rng.uniform(0.0, 0.9))
            curve = geodesic(mu0, mu1, cfg.alpha)
            x_t = curve.point_at(t)
            raw = rng.normal(size=3)
            base_loss = flow.training_loss(lambda x, tt: raw, mu1, mu0, t, cfg)
            normal_dir = (
                np.ones(3) if cfg.alpha.is_log_chart else x_t.coords
            )
            shifted = flow.training_loss(
                lambda x, tt: raw + 3.7 * normal_dir, mu1, mu0, t, cfg
            )
            worst_proj = max(worst_proj, abs(shifted - base_loss) / max(base_loss, 1e-12))
            # finite-difference gradient of the loss in the raw prediction
            u_t = conditional_vector_field(curve, t)
            v = project_sphere_tangent(x_t, raw)
            mu_t = clamp_normalize(from_alpha_rep(x_t).probs, cfg.clamp_eps)
            w = (
                mu_t.probs
                if cfg.alpha.is_log_chart
                else cfg.alpha.p**2 * mu_t.probs**cfg.alpha.alpha
            )
            grad = flow._project_transpose(
                x_t.coords[None, :], (2.0 * (v.comps - u_t.comps) * w)[None, :], cfg
            )[0]
            h = 1e-6
            for i in range(3):
                shift = np.zeros(3)
                shift[i] = h
                up = flow.training_loss(lambda x, tt: raw + shift, mu1, mu0, t, cfg)
                dn = flow.training_loss(lambda x, tt: raw - shift, mu1, mu0, t, cfg)
                fd = (up - dn) / (2 * h)
                worst_grad = max(worst_grad, abs(fd - grad[i]) / max(abs(fd), abs(grad[i]), 1e-6))
    passed = worst_proj <= 1e-10 and worst_grad <= 1e-5
    return {
        "name": "flow_loss",
        "passed": passed,
        "detail": f"proj={worst_proj:.3e} grad={worst_grad:.3e}",
    }


def check_sampling(seed: int, count: int, steps: int) -> dict:
    rng = make_rng(seed)
    worst_sum = 0.0
    clamps = 0
    target = clamp_normalize(np.array([1.0, 0.0, 0.0]), 1e-3)
    for a in ALPHA_GRID:
        alpha = AlphaParam(a)
        cfg = flow.FlowConfig(alpha=alpha, euler_steps_sample=steps, seed=seed)
        x_target = to_alpha_rep(target, alpha)

        def oracle(xb, t):
            out = np.empty_like(xb)
            for i, row in enumerate(xb):
                state = MappedState(row, alpha)
                out[i] = log_map(state, x_target).comps / (1.0 - min(t, 1.0 - 1e-3))
            return out

        mus, n_clamps, sum_err = flow.sample_paths(oracle, cfg, count, 3, make_rng(seed))
        clamps += n_clamps
        worst_sum = max(worst_sum, sum_err, float(np.abs(mus.sum(axis=1) - 1.0).max()))
        gap = float(np.abs(mus - target.probs).max())
        if gap > 1e-2:
            return {
                "name": "sampling_conservation",
                "passed": False,
                "detail": f"alpha={a} transport gap {gap:.3e}",
            }
    passed = worst_sum <= 1e-9 and clamps == 0
    return {
        "name": "sampling_conservation",
        "passed": passed,
        "detail": f"sum_err={worst_sum:.3e} clamps={clamps}",
    }


def check_kde(seed: int, count: int) -> dict:
    rng = make_rng(seed)
    pts = swiss_roll_array(count, rng)
    grid = make_density_grid(60)
    d1 = kde_density(pts[: count // 2], 0.02, grid)
    d2 = kde_density(pts[count // 2 :], 0.02, grid)
    self_kl = kde_kl(d1, d2)
    zero = kde_kl(d1, d1)
    passed = abs(zero) <= 1e-12 and 0.0 <= self_kl <= 0.05 and abs(d1.total_mass - 1.0) <= 1e-6
    return {
        "name": "kde_sanity",
        "passed": passed,
        "detail": f"self_kl={self_kl:.4f} zero={zero:.1e}",
    }


def check_continuity(seed: int, trials: int) -> dict:
    rng = make_rng(seed)
    worst_qlog = 0.0
    worst_jump = 0.0
    p_large = AlphaParam(1.0 - 2.0 / 1e4)
    for _ in range(trials):
        mu = _random_point(rng, 3, floor=0.03)
        gap = float(np.abs(modified_alpha_rep(mu, p_large) - np.log(mu.probs)).max())
        worst_qlog = max(worst_qlog, gap)
    # benchmark pairs for the sweep: clamped to margin 0.03 so the jump bound
    # reflects the alpha-dependence, not boundary blowup of the geometries
    sweep = (-1.0, -0.5, 0.0, 0.5, 0.999, 1.0)
    for _ in range(max(2, trials // 4)):
        mu0 = _random_point(rng, 3, floor=0.03)
        mu1 = _random_point(rng, 3, floor=0.03)
        mids = [geodesic(mu0, mu1, AlphaParam(a)).point_simplex(0.5).probs for a in sweep]
        for left, right in zip(mids[:-1], mids[1:]):
            worst_jump = max(worst_jump, float(np.abs(left - right).max()))
    passed = worst_qlog <= 1e-3 and worst_jump <= 0.1
    return {
        "name": "alpha_continuity",
        "passed": passed,
        "detail": f"qlog={worst_qlog:.3e} jump={worst_jump:.3e}",
    }


def run_suite(suite: str, seed: int) -> dict:
    """Run a named verification suite; returns a JSON-ready report."""
    if suite == "core":
        checks = [
            check_manifold(seed, 20),
            check_round_trips(seed + 1, 10),
            check_norm_consistency(seed + 2, 20),
            check_divergences(seed + 3, 10),
            check_gradient_identity(seed + 4, 15),
            check_reparam(seed + 5, 10),
            check_geodesics(seed + 6, 6),
            check_energy(seed + 7, pairs=2, competitors=10),
            check_nn(seed + 8, 4),
            check_flow_loss(seed + 9, 2),
            check_sampling(seed + 10, count=20, steps=100),
            check_kde(seed + 11, count=1000),
            check_continuity(seed + 12, 20),
        ]
    elif suite == "all":
        checks = [
            check_manifold(seed, 100),
            check_round_trips(seed + 1, 40),
            check_norm_consistency(seed + 2, 100),
            check_divergences(seed + 3, 30),
            check_gradient_identity(seed + 4, 50),
            check_reparam(seed + 5, 50),
            check_geodesics(seed + 6, 20),
            check_energy(seed + 7, pairs=5, competitors=50),
            check_nn(seed + 8, 10),
            check_flow_loss(seed + 9, 5),
            check_sampling(seed + 10, count=100, steps=500),
            check_kde(seed + 11, count=4000),
            check_continuity(seed + 12, 100),
        ]
    else:
        raise ValueError(f"unknown suite {suite!r}; expected 'core' or 'all'")
    from . import __version__

    checks = [
        {"name": c["name"], "passed": bool(c["passed"]), "detail": str(c["detail"])}
        for c in checks
    ]
    return {
        "suite": suite,
        "seed": seed,
        "library_version": __version__,
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks),
    }
