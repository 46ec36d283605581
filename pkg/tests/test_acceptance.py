"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test records a one-line PASS/FAIL verdict (shown in the terminal
summary) before asserting.
"""

import time
from collections import Counter

import numpy as np
import pytest

from pushift import bench, cli, density_ratio, optimizer
from pushift.bench import ExperimentConfig, run_benchmark
from pushift.data import (
    SyntheticScenario,
    analytic_ratio,
    default_scenario,
    synth_densities,
)
from pushift.losses import Loss, loss_value
from pushift.model import FeatureMap, LinearModel
from pushift.optimizer import TrainConfig
from pushift.prior_cost import TestCondition, alpha_from_shift, prior_from_alpha, reduce, sign, unify_alpha, unify_prior
from pushift.risk import (
    PU,
    PU_ASYM,
    PU_SHIFT,
    PUSample,
    RiskSpec,
    empirical_asym_risk,
    empirical_risk,
    empirical_shift_risk,
    risk_gradient,
)

SURROGATES = (Loss.SQUARED, Loss.LOGISTIC, Loss.DOUBLE_HINGE)


def test_criterion_1_equivalence_identities(acceptance):
    start = time.perf_counter()
    grid = np.arange(1, 99) / 100
    worst = max(abs(prior_from_alpha(p, alpha_from_shift(p, q)) - q) for p in grid for q in grid)
    a = alpha_from_shift(0.3, 0.5)
    pu = unify_prior(0.5, 0.3)
    au = unify_alpha(0.3, pu)
    u = reduce(TestCondition(0.3, 0.5, 0.3))
    elapsed = time.perf_counter() - start
    ok = (
        worst < 1e-12
        and abs(a - 0.3) < 1e-12
        and abs(pu - 0.7) < 1e-12
        and abs(au - 0.09 / 0.58) < 1e-12
        and (u.pi_unif, u.alpha_unif) == (pu, au)
        and elapsed < 1.0
    )
    acceptance(1, ok, f"98x98 round-trip max err {worst:.1e}; alpha={a:.12g}; unified=({pu:.12g}, {au:.12g}); {elapsed:.2f}s")
    assert ok


def test_criterion_2_bayes_sign_equivalence(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    x = np.linspace(-6, 6, 1000).reshape(-1, 1)
    agree = compared = 0
    for _ in range(20):
        pi, pp, a = rng.uniform(0.05, 0.95, 3)
        sc = SyntheticScenario([1.0], [1.0], [-1.0], [2.0], pi)
        u = reduce(TestCondition(pi, pp, a))
        p_p = synth_densities(sc, x, "p")
        combined = pp * p_p / synth_densities(sc, x, "t", pp) - a
        shifted = u.pi_unif * p_p / synth_densities(sc, x, "t", u.pi_unif) - 0.5
        asymmetric = pi * p_p / synth_densities(sc, x, "u") - u.alpha_unif
        keep = (np.abs(combined) > 1e-12) & (np.abs(shifted) > 1e-12) & (np.abs(asymmetric) > 1e-12)
        s1, s2, s3 = sign(combined[keep]), sign(shifted[keep]), sign(asymmetric[keep])
        agree += int(np.sum((s1 == s2) & (s2 == s3)))
        compared += int(keep.sum())
    elapsed = time.perf_counter() - start
    ok = agree == compared and compared > 19_000 and elapsed < 1.0
    acceptance(2, ok, f"{agree}/{compared} grid points agree across the three forms (20 draws); {elapsed:.2f}s")
    assert ok


def _supervised(loss, g_pos, g_neg, w_pos, w_neg):
    return w_pos * float(np.mean(loss_value(loss, g_pos))) + w_neg * float(np.mean(loss_value(loss, -g_neg)))


def test_criterion_3_unbiasedness(acceptance):
    start = time.perf_counter()
    pi, pp, alpha = 0.3, 0.5, 0.3
    sc = SyntheticScenario([0.7, 0.2], [1.0, 1.5], [-0.4, 0.1], [1.5, 1.0], pi)
    rng = np.random.default_rng(7)
    fmap = FeatureMap.raw(2)
    models = [LinearModel(fmap, rng.normal(0, 0.8, 3)) for _ in range(5)]

    big_pos, _ = sc.draw_counts(10**6, 0, rng)
    big_neg, _ = sc.draw_counts(0, 10**6, rng)
    phi_pos, phi_neg = fmap.transform(big_pos), fmap.transform(big_neg)

    est = {(m, loss, kind): [] for m in range(5) for loss in SURROGATES for kind in ("shift", "asym")}
    for _ in range(1000):
        xp, _ = sc.draw_counts(50, 0, rng)
        k = int(rng.binomial(200, pi))
        xu, _ = sc.draw_counts(k, 200 - k, rng)
        sample = PUSample(xp, xu, pi)
        for m, model in enumerate(models):
            for loss in SURROGATES:
                est[(m, loss, "shift")].append(empirical_shift_risk(model, sample, pp, loss))
                est[(m, loss, "asym")].append(empirical_asym_risk(model, sample, alpha, loss))

    worst = 0.0
    for (m, loss, kind), values in est.items():
        w = models[m].weights
        g_pos, g_neg = phi_pos @ w, phi_neg @ w
        if kind == "shift":
            truth = _supervised(loss, g_pos, g_neg, pp, 1 - pp)
        else:
            truth = _supervised(loss, g_pos, g_neg, pi * (1 - alpha), (1 - pi) * alpha)
        values = np.asarray(values)
        z = abs(values.mean() - truth) / (values.std(ddof=1) / np.sqrt(len(values)))
        worst = max(worst, z)
    elapsed = time.perf_counter() - start
    ok = worst < 3.0 and elapsed < 30.0
    acceptance(3, ok, f"30 (model, loss, estimator) means; worst deviation {worst:.2f} SE (limit 3); {elapsed:.1f}s")
    assert ok


def _midpoint_gaps(risk, model, sample, pairs):
    gaps = []
    for w1, w2 in pairs:
        mid = risk(model.with_weights((w1 + w2) / 2), sample)
        ends = (risk(model.with_weights(w1), sample) + risk(model.with_weights(w2), sample)) / 2
        gaps.append(mid - ends)
    return np.array(gaps)


def test_criterion_4_convexity_and_counterexample(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    sample = PUSample(rng.normal(0.5, 1, (40, 2)), rng.normal(0, 1.3, (120, 2)), 0.3)
    model = LinearModel(FeatureMap.raw(2))
    pairs = [tuple(rng.normal(0, 3, (2, 3))) for _ in range(1000)]
    worst = -np.inf
    for loss in SURROGATES:
        shift = lambda m, s, loss=loss: empirical_shift_risk(m, s, 0.6, loss)  # gamma = 0.3 >= 0
        asym = lambda m, s, loss=loss: empirical_asym_risk(m, s, 0.4, loss)  # alpha <= 0.5
        worst = max(worst, _midpoint_gaps(shift, model, sample, pairs).max(), _midpoint_gaps(asym, model, sample, pairs).max())

    # gamma < 0 witness: positives at x = 1, unlabeled at x = 0, slopes +2 and -2 with zero bias
    witness = PUSample(np.array([[1.0]]), np.array([[0.0]]), 0.7)
    line = LinearModel(FeatureMap.raw(1))
    violation = _midpoint_gaps(
        lambda m, s: empirical_shift_risk(m, s, 0.3, Loss.LOGISTIC), line, witness, [(np.array([2.0, 0.0]), np.array([-2.0, 0.0]))]
    )[0]
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and violation > 1e-6 and elapsed < 5.0
    acceptance(4, ok, f"max midpoint gap {worst:.1e} over 6x1000 pairs; gamma<0 witness violates by {violation:.3f}; {elapsed:.2f}s")
    assert ok


def _far_from_kinks(spec, model, sample, tol=1e-3):
    fm = model.feature_map
    s_p = fm.transform(sample.positives) @ model.weights
    s_u = fm.transform(sample.unlabeled) @ model.weights
    margins = np.concatenate([s_p, -s_p, -s_u])
    if any(np.min(np.abs(margins - k)) < tol for k in spec.loss.kinks):
        return False
    if spec.non_negative:
        r_neg = np.mean(loss_value(spec.loss, -s_u)) - sample.train_prior * np.mean(loss_value(spec.loss, -s_p))
        return abs(r_neg) > tol
    return True


def _finite_difference(spec, model, sample, h=1e-6):
    fd = np.zeros_like(model.weights)
    for k in range(len(fd)):
        step = np.zeros_like(fd)
        step[k] = h
        plus = empirical_risk(spec, model.with_weights(model.weights + step), sample)
        minus = empirical_risk(spec, model.with_weights(model.weights - step), sample)
        fd[k] = (plus - minus) / (2 * h)
    return fd


def test_criterion_5_gradient_correctness(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    worst, done = 0.0, 0
    while done < 100:
        pi = rng.uniform(0.1, 0.9)
        loss = SURROGATES[rng.integers(3)]
        mode = (PU, PU_SHIFT, PU_ASYM)[rng.integers(3)]
        nn = mode != PU_ASYM and bool(rng.integers(2))
        spec = RiskSpec(loss, mode, test_prior=rng.uniform(0.1, 0.9) if mode == PU_SHIFT else None,
                        fp_cost=rng.uniform(0.1, 0.9) if mode == PU_ASYM else None, non_negative=nn)
        dim = int(rng.integers(1, 4))
        sample = PUSample(rng.normal(0.5, 1, (rng.integers(5, 30), dim)), rng.normal(0, 1, (rng.integers(10, 60), dim)), pi)
        if rng.integers(2):
            fmap = FeatureMap.raw(dim)
        else:
            fmap = FeatureMap.gaussian(rng.normal(size=(int(rng.integers(2, 8)), dim)), rng.uniform(0.5, 2))
        model = LinearModel(fmap, rng.normal(0, 1.5, fmap.dim))
        if not _far_from_kinks(spec, model, sample):
            continue
        fd = _finite_difference(spec, model, sample)
        err = np.linalg.norm(risk_gradient(spec, model, sample) - fd) / max(1.0, np.linalg.norm(fd))
        worst = max(worst, err)
        done += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 5.0
    acceptance(5, ok, f"100 instances, worst relative gradient error {worst:.1e} (limit 1e-5); {elapsed:.2f}s")
    assert ok


def test_criterion_6_ratio_bounds_and_affine_transform(acceptance):
    start = time.perf_counter()
    sc = default_scenario(0.3)
    axis = np.linspace(-4, 4, 100)
    x = np.array([[u, v] for u in axis for v in axis])
    p_over_u = analytic_ratio(sc, x, "p_over_u")
    u_over_p = analytic_ratio(sc, x, "u_over_p")
    strict = bool(np.all(p_over_u < 1 / sc.train_prior) and np.all(u_over_p > sc.train_prior))
    worst = 0.0
    for pp in (0.1, 0.5, 0.9):
        direct = synth_densities(sc, x, "t", pp) / synth_densities(sc, x, "p")
        via = density_ratio.shift_ratio_transform(u_over_p, sc.train_prior, pp - sc.train_prior)
        worst = max(worst, float(np.max(np.abs(via - direct) / np.maximum(1.0, np.abs(direct)))))
    elapsed = time.perf_counter() - start
    ok = strict and worst < 1e-10 and elapsed < 1.0
    acceptance(6, ok, f"bounds strict at 10000 points: {strict}; affine transform max rel err {worst:.1e}; {elapsed:.2f}s")
    assert ok


def test_criterion_7_ulsif_quality(acceptance):
    start = time.perf_counter()
    flat, corr = [], []
    grid = np.linspace(-2, 3, 201).reshape(-1, 1)
    truth = np.exp(-grid[:, 0] ** 2 / 2 + (grid[:, 0] - 1) ** 2 / 2)
    for seed in range(5):
        same = np.random.default_rng(seed + 1000).normal(size=(500, 2))
        model = density_ratio.fit_ulsif(same, same, seed=seed)
        flat.append(float(np.mean(np.abs(density_ratio.ratio_at(model, same) - 1.0))))
        # about 3% of seeds leave the left tail without a kernel center and fall below r = 0.95
        rng = np.random.default_rng(seed)
        num = rng.normal(0, 1, (20_000, 1))
        den = rng.normal(1, 1, (20_000, 1))
        model = density_ratio.fit_ulsif(num, den, seed=seed)
        corr.append(float(np.corrcoef(density_ratio.ratio_at(model, grid), truth)[0, 1]))
    elapsed = time.perf_counter() - start
    ok = max(flat) < 0.15 and min(corr) > 0.95 and elapsed < 30.0
    acceptance(7, ok, f"same-distribution mean|w-1| max {max(flat):.3f}; Pearson r {', '.join(f'{r:.3f}' for r in corr)}; {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_8_end_to_end_reproduction(acceptance):
    start = time.perf_counter()
    config = ExperimentConfig(grid=((0.3, 0.5, 0.5), (0.3, 0.5, 0.3)), trials=10, n_p=500, n_u=2000, seed=0)
    result = run_benchmark(config)
    informed = {m: result.cell(m, 0.5).mean for m in config.methods}
    naive = {m: result.cell(m, 0.3).mean for m in config.methods}
    gains = {m: informed[m] - naive[m] for m in config.methods}
    bayes_acc = result.bayes[(0.3, 0.5)]
    best = max(informed.values())
    a = all(g >= -0.5 for g in gains.values()) and max(gains.values()) >= 2.0
    b = bayes_acc - best <= 3.0
    c = informed["dr_p_over_u"] >= informed["dr_u_over_p"] - 0.5
    elapsed = time.perf_counter() - start
    ok = a and b and c and elapsed < 600
    acceptance(
        8,
        ok,
        f"(a) min gain {min(gains.values()):+.1f}, max gain {max(gains.values()):+.1f}; "
        f"(b) best {best:.1f} vs Bayes {bayes_acc:.1f}; "
        f"(c) p/u {informed['dr_p_over_u']:.1f} vs u/p {informed['dr_u_over_p']:.1f}; {elapsed:.0f}s",
    )
    assert ok


def test_criterion_9_no_retraining_contract(acceptance, monkeypatch):
    start = time.perf_counter()
    fits, trains = Counter(), Counter()
    real_fit, real_train = density_ratio.fit_ulsif, optimizer.train

    def counting_fit(numerator, denominator, direction, *args, **kwargs):
        fits[direction] += 1
        return real_fit(numerator, denominator, direction, *args, **kwargs)

    def counting_train(spec, sample, fmap, *args, **kwargs):
        trains[(spec.loss, fmap.kind)] += 1
        return real_train(spec, sample, fmap, *args, **kwargs)

    monkeypatch.setattr(density_ratio, "fit_ulsif", counting_fit)
    monkeypatch.setattr(optimizer, "train", counting_train)
    trials, givens = 3, (0.5, 0.4, 0.3)
    config = ExperimentConfig(
        grid=tuple((0.3, 0.5, g) for g in givens), trials=trials, n_p=100, n_u=400, n_test=200, train=TrainConfig(epochs=50)
    )
    run_benchmark(config)
    dr_ok = all(fits[d] == trials for d in bench.DR_METHODS.values())
    kinds = {"lin": "raw_with_bias", "ker": "gaussian_kernel"}
    rm_ok = all(trains[(loss, kinds[k])] == trials * len(givens) for loss, k in bench.RM_METHODS.values())
    elapsed = time.perf_counter() - start
    ok = dr_ok and rm_ok and elapsed < 120
    acceptance(
        9,
        ok,
        f"fit_ulsif calls {dict(fits)} (expected {trials} each); train calls per rm method "
        f"{sorted(set(trains.values()))} (expected {trials * len(givens)}); {elapsed:.1f}s",
    )
    assert ok


def test_criterion_10_determinism(acceptance, tmp_path, capsys):
    config = tmp_path / "bench.json"
    config.write_text(
        '{"methods": ["dr_p_over_u", "dr_u_over_p", "rm_logistic_lin", "rm_dh_ker"], "grid": [[0.3, 0.5, 0.5], [0.3, 0.5, 0.3]],'
        ' "trials": 3, "n_p": 100, "n_u": 400, "n_test": 200, "train": {"epochs": 40}}'
    )
    outputs = []
    for run in range(2):
        out = tmp_path / f"run{run}.csv"
        code = cli.main(["bench", "--config", str(config), "--seed", "11", "--out", str(out)])
        outputs.append((code, out.read_bytes()))
    capsys.readouterr()
    ok = outputs[0][0] == outputs[1][0] == 0 and outputs[0][1] == outputs[1][1] and len(outputs[0][1]) > 0
    acceptance(10, ok, f"two CLI bench runs, {len(outputs[0][1])} bytes each, identical: {outputs[0][1] == outputs[1][1]}")
    assert ok
