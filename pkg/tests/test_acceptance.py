"""Acceptance suite: one test per release criterion, pinned tolerances.

Each test prints a [PASS]/[FAIL] line for its criterion so a plain pytest
run doubles as the acceptance checklist.
"""

import math
import sys
import time

import numpy as np
import pytest

from sevfuse import metrics as M
from sevfuse.boost import (
    TrainConfig,
    fit_gbdt,
    inverse_class_frequency,
    softmax,
    tree_shap,
    weighted_ce,
)
from sevfuse.boost.attrib import shap_single_tree
from sevfuse.boost.objective import ClassWeights, grad_hess
from sevfuse.cli import main as cli_main
from sevfuse.evaluate import run_ablations
from sevfuse.folds import stratified_kfold
from sevfuse.fusion import FusedMatrix, fit_scaler, read_cache, write_cache
from sevfuse.synth import make_synthetic_cohort

from test_attrib import brute_force_shapley, depth2_tree
from test_gbdt import exact_config, oracle_best_stump, oracle_first_round_gh
from test_metrics import mann_whitney_auc
from test_objective import central_grad, central_hess


def report(criterion: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] {criterion}"
    if detail:
        line += f" ({detail})"
    print(line, file=sys.__stdout__, flush=True)
    assert passed, line


class TestGradientOracle:
    def test_grad_hess_vs_central_differences(self):
        rng = np.random.default_rng(100)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(100):
            k = int(rng.integers(2, 6))
            margins = rng.standard_normal(k)
            label = int(rng.integers(0, k))
            weight = float(rng.uniform(0.5, 5.0))
            probs = softmax(margins)[None, :]
            w = ClassWeights(np.full(k, weight))
            g, h = grad_hess(probs, np.array([label]), w)
            for j in range(k):
                g_fd = central_grad(margins, label, weight, j)
                h_fd = central_hess(margins, label, weight, j)
                worst = max(worst, abs(g[0, j] - g_fd) / max(abs(g_fd), 1e-3))
                worst = max(worst, abs(h[0, j] - h_fd) / max(abs(h_fd), 1e-3))
        elapsed = time.perf_counter() - start
        report("gradient oracle: rel err < 1e-5 on 100 instances, < 1s",
               worst < 1e-5 and elapsed < 1.0,
               f"worst rel err {worst:.2e}, {elapsed:.2f}s")


class TestSoftmaxCe:
    def test_probability_rows_and_uniform_ce(self):
        rng = np.random.default_rng(101)
        margins = rng.standard_normal((500, 5)) * 10
        rows_ok = np.abs(softmax(margins).sum(axis=1) - 1.0).max() <= 1e-9
        ce_ok = True
        for k in (3, 5):
            probs = np.full((12, k), 1.0 / k)
            labels = np.arange(12) % k
            ce = weighted_ce(probs, labels, ClassWeights(np.ones(k)))
            ce_ok &= abs(ce - math.log(k)) <= 1e-12
        report("softmax rows sum to 1 +- 1e-9; uniform CE = ln K +- 1e-12",
               rows_ok and ce_ok)


class TestSplitOracle:
    def test_first_stump_exact_match(self):
        rng = np.random.default_rng(102)
        mismatches = 0
        for trial in range(20):
            n = int(rng.integers(8, 33))
            f = int(rng.integers(1, 5))
            k = int(rng.integers(2, 4))
            x = np.round(rng.standard_normal((n, f)), 3)
            y = rng.integers(0, k, n)
            while np.unique(y).size < k:
                y = rng.integers(0, k, n)
            weights = inverse_class_frequency(y, k)
            cfg = exact_config(seed=trial)
            model = fit_gbdt(x, y, weights, cfg, eval_fraction=0.0)
            g, h = oracle_first_round_gh(y, weights, k)
            for kk in range(k):
                stump = model.trees[kk][0]
                expected = oracle_best_stump(x, g[:, kk], h[:, kk],
                                             cfg.l2_lambda, cfg.min_child_weight)
                if expected is None:
                    mismatches += int(stump.feature[0] != -1)
                elif (stump.feature[0] != expected[1]
                      or stump.threshold[0] != expected[2]):
                    mismatches += 1
        report("split oracle: first stump equals exhaustive search on 20 datasets",
               mismatches == 0, f"{mismatches} mismatches")


class TestTreeShap:
    def test_local_accuracy_and_power_set_oracle(self):
        rng = np.random.default_rng(103)
        x = rng.standard_normal((80, 5))
        y = (x[:, 0] > 0).astype(int) + (x[:, 2] > 0.2).astype(int)
        cfg = TrainConfig(n_trees=10, learning_rate=0.3, max_depth=3, min_child_weight=0.5,
                          subsample=0.9, colsample=0.8, n_bins=32, seed=5)
        model = fit_gbdt(x, y, inverse_class_frequency(y, 3), cfg, eval_fraction=0.1)
        margins = model.margins(x)
        local_err = 0.0
        for i in range(x.shape[0]):
            phi, base = tree_shap(model, x[i])
            local_err = max(local_err, np.abs(base + phi.sum(axis=1) - margins[i]).max())

        brute_err = 0.0
        for _ in range(20):
            tree = depth2_tree(rng)
            point = rng.uniform(-1.5, 1.5, size=3)
            fast = shap_single_tree(tree, point, 3)
            brute = brute_force_shapley(tree, point, 3)
            brute_err = max(brute_err, np.abs(fast - brute).max())
        report("tree attribution: local accuracy <= 1e-9; power-set oracle < 1e-9",
               local_err <= 1e-9 and brute_err < 1e-9,
               f"local {local_err:.1e}, brute {brute_err:.1e}")


class TestLeakageGuards:
    def test_scaler_and_folds_ignore_validation_rows(self):
        rng = np.random.default_rng(104)
        x = rng.standard_normal((100, 30))
        train_idx = np.arange(70)
        before = fit_scaler(x[train_idx])
        x2 = x.copy()
        x2[70:] = rng.standard_normal((30, 30)) * 1e6
        after = fit_scaler(x2[train_idx])
        scaler_ok = (before.means.tobytes() == after.means.tobytes()
                     and before.stds.tobytes() == after.stds.tobytes())

        labels = rng.integers(0, 3, 100)
        plan_a = stratified_kfold(labels, 5, seed=7)
        plan_b = stratified_kfold(labels, 5, seed=7)
        plan_ok = all(
            a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
            for a, b in zip(plan_a.folds, plan_b.folds))

        strat_ok = True
        for counts in ([187, 96, 64, 43, 15], [85, 180, 140]):
            y = np.repeat(np.arange(len(counts)), counts)
            plan = stratified_kfold(y, 5, seed=11)
            for c, n_c in enumerate(counts):
                for _, val in plan.folds:
                    got = int((y[val] == c).sum())
                    strat_ok &= got in (n_c // 5, -(-n_c // 5))
        report("leakage guards: scaler/folds invariant; stratification within 1",
               scaler_ok and plan_ok and strat_ok)


class TestMetricsOracleSuite:
    def test_metric_fixtures(self):
        failures = []

        def check(name, got, want, tol=1e-9):
            if abs(got - want) > tol:
                failures.append(f"{name}: {got} vs {want}")

        # accuracy / F1 fixtures
        fixtures = [
            (np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), 0.75, 11 / 15),
            (np.array([0, 1, 2]), np.array([0, 1, 2]), 1.0, 1.0),
            (np.array([0, 0, 1, 1]), np.array([1, 1, 1, 1]), 0.5, 2 / 3 * 0.5),
            (np.array([2, 2, 2, 0]), np.array([2, 2, 2, 2]), 0.75, 0.75 * 6 / 7),
            (np.array([0, 1, 0, 1, 1]), np.array([1, 0, 0, 1, 0]), 0.4, None),
        ]
        for i, (y, pred, acc, f1w) in enumerate(fixtures):
            k = int(max(y.max(), pred.max())) + 1
            m = M.basic_metrics(y, pred, k)
            check(f"acc[{i}]", m["acc"], acc)
            if f1w is not None:
                check(f"f1w[{i}]", m["f1_weighted"], f1w)

        # MCC fixtures
        check("mcc diag", M.mcc_multiclass(np.diag([4, 5, 6, 7, 8])), 1.0)
        check("mcc uniform", M.mcc_multiclass(np.full((4, 4), 3.0)), 0.0)
        rows, cols = np.array([20.0, 30.0, 50.0]), np.array([40.0, 35.0, 25.0])
        check("mcc marginal", M.mcc_multiclass(np.outer(rows, cols) / 100.0), 0.0)
        cm = np.array([[5, 1, 0], [2, 6, 1], [0, 2, 4]], dtype=float)
        n, t, p = cm.sum(), cm.sum(axis=1), cm.sum(axis=0)
        check("mcc hand", M.mcc_multiclass(cm),
              (np.trace(cm) * n - t @ p) / np.sqrt((n**2 - t @ t) * (n**2 - p @ p)))
        cm2 = np.array([[20, 5], [10, 15]], dtype=float)
        check("mcc 2x2", M.mcc_multiclass(cm2),
              (15 * 20 - 5 * 10) / np.sqrt(20 * 25 * 25 * 30))

        # kappa fixtures
        check("kappa perfect", M.cohens_kappa(np.diag([3, 4, 5])), 1.0)
        check("kappa chance", M.cohens_kappa(np.outer([30.0, 70.0], [60.0, 40.0]) / 100), 0.0)
        check("kappa 2x2", M.cohens_kappa(cm2), 0.40)
        cm3 = np.array([[9, 1, 0], [2, 7, 1], [0, 2, 8]], dtype=float)
        p_o, p_e = 24 / 30, float(cm3.sum(axis=1) @ cm3.sum(axis=0)) / 900
        check("kappa 3x3", M.cohens_kappa(cm3), (p_o - p_e) / (1 - p_e))
        check("kappa asym", M.cohens_kappa(np.array([[45.0, 15.0], [25.0, 15.0]])),
              (0.6 - (60 * 70 + 40 * 30) / 1e4) / (1 - (60 * 70 + 40 * 30) / 1e4))

        # AUC vs Mann-Whitney on 5 fixtures (tolerance 1e-12)
        rng = np.random.default_rng(105)
        for i in range(5):
            y = rng.integers(0, 2, 24)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            scores = np.round(rng.random(24), 2)
            got = M.binary_auc(y == 1, scores)
            want = mann_whitney_auc(y == 1, scores)
            if abs(got - want) > 1e-12:
                failures.append(f"auc[{i}]: {got} vs {want}")

        # net benefit: hand case plus exact treat-all closed form
        y = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
        s = np.array([0.9, 0.8, 0.7, 0.1, 0.6, 0.2, 0.2, 0.1, 0.0, 0.0])
        check("nb hand", M.net_benefit(y == 1, s, 0.5), 0.2)
        for p_t in M.NET_BENEFIT_GRID:
            pi = 0.4
            got = M.net_benefit(np.arange(10) < 4, np.ones(10), p_t)
            want = pi - (1 - pi) * p_t / (1 - p_t)
            if abs(got - want) > 1e-12:
                failures.append(f"treat-all at {p_t}")
        check("nb perfect", M.net_benefit(y == 1, y.astype(float), 0.5), 0.4)
        check("nb none", M.net_benefit(y == 1, np.zeros(10), 0.95 - 0.05), 0.0, tol=1e-9)

        # severity fixtures
        check("rmse id", M.rmse(np.arange(4.0), np.arange(4.0)), 0.0)
        check("rmse shift", M.rmse(np.arange(4.0), np.arange(4.0) + 1.5), 1.5)
        s_t, s_h = np.arange(4.0), np.array([0.0, 1.0, 1.0, 3.0])
        check("rmse fix", M.rmse(s_t, s_h), 0.5)
        mu_s, mu_h = s_t.mean(), s_h.mean()
        cov = np.mean((s_t - mu_s) * (s_h - mu_h))
        ccc_want = 2 * cov / (np.mean((s_t - mu_s) ** 2) + np.mean((s_h - mu_h) ** 2)
                              + (mu_s - mu_h) ** 2)
        check("ccc fix", M.ccc(s_t, s_h), ccc_want)
        check("ccc id", M.ccc(s_t, s_t), 1.0)
        check("sev anchors", float(M.expected_severity(
            np.array([[0.5, 0.5, 0.0]]), [10, 30.5, 60.5])[0]), 20.25)

        report("metrics oracle suite: direct-formula fixtures at 1e-9 (AUC 1e-12)",
               not failures, "; ".join(failures[:3]))


class TestEndToEndSynthetic:
    def test_planted_text_signal_cohort(self):
        start = time.perf_counter()
        cohort = make_synthetic_cohort(400, classes=5, signal_strength=3.0, seed=7)
        cfg = TrainConfig(n_trees=60, learning_rate=0.3, max_depth=4, min_child_weight=1.0,
                          subsample=0.9, colsample=0.25, early_stopping_rounds=10,
                          n_bins=64, seed=42)
        reports = run_ablations(cohort, "dep", cfg, seeds=[42],
                                subsets=("all", "text", "face"), folds=5,
                                bootstrap_reps=0)
        elapsed = time.perf_counter() - start
        acc_all = reports["all"].metrics["acc"]
        acc_text = reports["text"].metrics["acc"]
        acc_face = reports["face"].metrics["acc"]
        ok = (acc_all >= 0.90 and abs(acc_text - acc_all) <= 0.05
              and acc_face <= 0.35 and elapsed < 300)
        report("end-to-end synthetic: fused >= 0.90, text within 0.05, face <= 0.35, < 5 min",
               ok, f"all {acc_all:.3f}, text {acc_text:.3f}, face {acc_face:.3f}, {elapsed:.0f}s")


class TestDeterminism:
    def test_two_cli_runs_byte_identical(self, tmp_path):
        flags = [
            "--synthetic", "n=100,classes=5,signal=3.0,seed=5",
            "--folds", "4", "--seeds", "42", "--task", "dep",
            "--bootstrap-reps", "25", "--shap-rows", "4",
            "--n-trees", "25", "--learning-rate", "0.3", "--max-depth", "3",
        ]
        for sub in ("a", "b"):
            code = cli_main(["train-eval", *flags,
                             "--cache-dir", str(tmp_path / sub / "cache"),
                             "--outdir", str(tmp_path / sub / "out")])
            assert code == 0
        a = (tmp_path / "a" / "out" / "DEP" / "oof_proba.csv").read_bytes()
        b = (tmp_path / "b" / "out" / "DEP" / "oof_proba.csv").read_bytes()
        report("determinism: identical manifests give byte-identical oof_proba.csv",
               a == b, f"{len(a)} bytes")


class TestCacheCriterion:
    def test_roundtrip_and_size(self, tmp_path):
        rng = np.random.default_rng(106)
        n = 17
        matrix = FusedMatrix(
            X=rng.standard_normal((n, 1536)).astype(np.float32),
            ids=[f"p{i}" for i in range(n)],
            y_dep=rng.integers(0, 5, n),
            y_ptsd=rng.integers(0, 3, n),
            modality_mask=rng.integers(0, 2, (n, 3)).astype(bool),
        )
        write_cache(matrix, tmp_path / "cache")
        size_ok = (tmp_path / "cache" / "X.f32le").stat().st_size == n * 6144
        back = read_cache(tmp_path / "cache")
        bits_ok = (np.array_equal(back.X, matrix.X) and back.ids == matrix.ids
                   and np.array_equal(back.y_dep, matrix.y_dep)
                   and np.array_equal(back.y_ptsd, matrix.y_ptsd)
                   and np.array_equal(back.modality_mask, matrix.modality_mask))
        report("cache: roundtrip bit-exact; payload is n*6144 bytes",
               size_ok and bits_ok)
