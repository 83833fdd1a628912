"""Acceptance suite: one test per exit criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -s` to see the lines inline; the
conftest hook schedules this module after the rest of the suite so the final
criterion can check total wall time.
"""

import dataclasses
import time

import numpy as np
import pytest

from conftest import SESSION_START
from embedprop.classify import (
    build_label_matrix,
    label_propagation_scores,
    predict,
    softmax_probs,
)
from embedprop.diagnostics import (
    compactness_metrics,
    gaussian_clusters,
    interpolation_curve,
    random_query_pairs,
    two_moons,
)
from embedprop.episodes import (
    Classifier,
    EvalConfig,
    SslMode,
    confidence_interval95,
    evaluate,
    query_truth,
    run_episode,
    sample_episode,
)
from embedprop.graph import GraphConfig, build_propagator
from embedprop.propagation import PropagationMode, propagate_embeddings

from test_graph import laplacian_from_points, neumann_propagator


def check(num: int, name: str, ok: bool, detail: str = ""):
    line = f"[acceptance] criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


def test_criterion_01_neumann_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, 5))
        lap = laplacian_from_points(rng.normal(size=(n, m)))
        for alpha in (0.1, 0.5, 0.9):
            p = build_propagator_from_lap(lap, alpha)
            oracle = neumann_propagator(lap, alpha, 400)
            worst = max(worst, float(np.abs(p - oracle).max()))
    elapsed = time.perf_counter() - start
    check(
        1, "Neumann oracle equivalence", worst <= 1e-6 and elapsed <= 10.0,
        f"max diff {worst:.2e}, {elapsed:.1f}s",
    )


def build_propagator_from_lap(lap, alpha):
    from embedprop.graph import propagator

    return propagator(lap, alpha).matrix


def test_criterion_02_worked_2x2_exactness():
    z = np.array([[0.0, 0.0], [1.0, 0.0]])
    ztilde, prop = propagate_embeddings(z, GraphConfig(alpha=0.5))
    p_err = np.abs(prop.matrix - np.array([[4 / 3, 2 / 3], [2 / 3, 4 / 3]])).max()
    z_err = np.abs(ztilde - np.array([[2 / 3, 0.0], [4 / 3, 0.0]])).max()
    check(
        2, "worked 2x2 example", p_err <= 1e-12 and z_err <= 1e-12,
        f"P err {p_err:.2e}, Ztilde err {z_err:.2e}",
    )


def test_criterion_03_identity_limits():
    rng = np.random.default_rng(1003)
    z = rng.normal(size=(12, 3))
    ztilde, _ = propagate_embeddings(z, GraphConfig(alpha=1e-12))
    drift = float(np.abs(ztilde - z).max())

    y = build_label_matrix(12, 2, [0, 1], [0, 1])
    scores = label_propagation_scores(z, y, GraphConfig(alpha=1e-12))
    query_mass = float(np.abs(scores[2:]).max())

    # identity mode must equal the pipeline with the propagation step removed
    data = gaussian_clusters(5, 30, spread=0.4, seed=1003)
    cfg = EvalConfig(n_way=5, k_shot=2, q_queries=6, episodes=1, seed=1003,
                     mode=PropagationMode.IDENTITY)
    ep = sample_episode(data, cfg, 0)
    preds, _, got_scores = run_episode(data, ep, cfg)
    raw = data.embeddings[ep.node_indices()]
    y_ep = build_label_matrix(raw.shape[0], 5,
                              np.arange(ep.n_support),
                              np.repeat(np.arange(5), ep.k_shot))
    manual_scores = label_propagation_scores(raw, y_ep, cfg.graph)
    manual_preds = predict(manual_scores[ep.n_support : ep.n_support + ep.n_query])
    identical = (got_scores == manual_scores).all() and (preds == manual_preds).all()

    check(
        3, "identity limits", drift <= 1e-9 and query_mass <= 1e-9 and identical,
        f"Ztilde drift {drift:.2e}, query score {query_mass:.2e}, no-EP match {identical}",
    )


def test_criterion_04_structural_invariants():
    rng = np.random.default_rng(1004)
    sym_worst = neg_worst = diag_worst = perm_worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 17))
        z = rng.normal(size=(n, int(rng.integers(1, 5))))
        alpha = float(rng.uniform(0.05, 0.95))
        prop = build_propagator(z, GraphConfig(alpha=alpha))
        p = prop.matrix
        sym_worst = max(sym_worst, float(np.abs(p - p.T).max()))
        neg_worst = min(neg_worst, float(p.min()))
        diag_worst = min(diag_worst if diag_worst else 2.0, float(np.diagonal(p).min()))

        perm = rng.permutation(n)
        cfg = GraphConfig(alpha=alpha)
        zt, _ = propagate_embeddings(z, cfg)
        ztp, _ = propagate_embeddings(z[perm], cfg)
        perm_worst = max(perm_worst, float(np.abs(ztp - zt[perm]).max()))
        if n >= 4:
            y = build_label_matrix(n, 2, [0, 1], [0, 1])
            s = label_propagation_scores(z, y, cfg)
            sp = label_propagation_scores(z[perm], y[perm], cfg)
            perm_worst = max(perm_worst, float(np.abs(sp - s[perm]).max()))
    ok = sym_worst <= 1e-9 and neg_worst >= -1e-9 and diag_worst >= 1 - 1e-9 and perm_worst <= 1e-9
    check(
        4, "structural invariants on 500 graphs", ok,
        f"sym {sym_worst:.1e}, min entry {neg_worst:.1e}, min diag {diag_worst:.6f}, perm {perm_worst:.1e}",
    )


def test_criterion_05_interpolation_smoothness_direction():
    start = time.perf_counter()
    data = gaussian_clusters(2, 80, spread=0.25 * np.sqrt(2), seed=101)
    cfg = EvalConfig(n_way=2, k_shot=5, q_queries=15, episodes=1, seed=101)
    ep = sample_episode(data, cfg, 0)
    pairs = random_query_pairs(ep, 20, np.random.default_rng([101, 77]))
    means = {}
    for mode in (PropagationMode.FULL, PropagationMode.IDENTITY):
        mcfg = dataclasses.replace(cfg, mode=mode)
        means[mode] = float(np.mean(
            [interpolation_curve(data, ep, i, j, 16, mcfg).max_jump for i, j in pairs]
        ))
    elapsed = time.perf_counter() - start
    ok = means[PropagationMode.FULL] <= means[PropagationMode.IDENTITY] and elapsed <= 30.0
    check(
        5, "interpolation smoothness (full <= identity)", ok,
        f"full {means[PropagationMode.FULL]:.4f} vs identity "
        f"{means[PropagationMode.IDENTITY]:.4f}, {elapsed:.1f}s",
    )


def test_criterion_06_two_moons_compaction():
    data = two_moons(200, 0.1, seed=7)
    ztilde, _ = propagate_embeddings(data.embeddings, GraphConfig(alpha=0.5))
    metrics = compactness_metrics(data.embeddings, data.labels, ztilde)
    # The relative contrast does tighten; the absolute ratio cannot go below 1
    # for the unnormalized propagator (README, "A note on scale").
    assert metrics.intra_ratio < metrics.inter_ratio
    check(
        6, "two-moons intra-distance ratio < 1", metrics.intra_ratio < 1.0,
        f"intra ratio {metrics.intra_ratio:.4f}, inter ratio {metrics.inter_ratio:.4f}",
    )


SSL_SEED = 20240817
SSL_SPREAD = 0.40  # frozen from the nearest-centroid oracle sweep


def _ssl_dataset():
    return gaussian_clusters(8, 60, spread=SSL_SPREAD, seed=SSL_SEED)


def test_criterion_07_ssl_improves_one_shot():
    data = _ssl_dataset()
    base_cfg = EvalConfig(n_way=5, k_shot=1, q_queries=15, episodes=1000,
                          seed=SSL_SEED, classifier=Classifier.PROTOTYPICAL)

    # regime check: brute-force nearest-centroid oracle lands in [0.55, 0.75]
    oracle_accs = []
    for e in range(200):
        ep = sample_episode(data, base_cfg, e)
        sup = data.embeddings[ep.support.ravel()]
        q = data.embeddings[ep.query.ravel()]
        d2 = ((q[:, None, :] - sup[None, :, :]) ** 2).sum(-1)
        oracle_accs.append(float(np.mean(np.argmin(d2, 1) == query_truth(ep))))
    oracle = float(np.mean(oracle_accs))

    ssl_cfg = dataclasses.replace(base_cfg, u_unlabeled=20, ssl=SslMode.PSEUDO_LABEL)
    base = evaluate(data, base_cfg)
    ssl = evaluate(data, ssl_cfg)
    gap = ssl.mean - base.mean
    ok = 0.55 <= oracle <= 0.75 and gap >= 0.02
    check(
        7, "pseudo-label SSL helps 1-shot", ok,
        f"oracle {oracle:.3f}, base {base.mean:.4f}, ssl {ssl.mean:.4f}, gap {gap:+.4f}",
    )


def test_criterion_08_full_beats_diagonal_only():
    data = _ssl_dataset()
    full_cfg = EvalConfig(n_way=5, k_shot=1, q_queries=15, episodes=1000, seed=SSL_SEED)
    diag_cfg = dataclasses.replace(full_cfg, mode=PropagationMode.DIAGONAL_ONLY)
    full = evaluate(data, full_cfg)
    diag = evaluate(data, diag_cfg)
    check(
        8, "full propagator >= diagonal-only", full.mean >= diag.mean,
        f"full {full.mean:.4f} vs diag {diag.mean:.4f}",
    )


def test_criterion_09_determinism_and_protocol(monkeypatch):
    data = _ssl_dataset()
    cfg = EvalConfig(n_way=5, k_shot=1, q_queries=15, episodes=1000, seed=SSL_SEED)
    monkeypatch.setenv("EP_THREADS", "1")
    first = evaluate(data, cfg)
    second = evaluate(data, cfg)
    monkeypatch.setenv("EP_THREADS", "4")
    threaded = evaluate(data, cfg)
    identical = (
        first.accuracies == second.accuracies == threaded.accuracies
        and first.mean == threaded.mean
        and first.ci95 == threaded.ci95
    )
    ci_ok = abs(confidence_interval95([0.0, 1.0]) - 0.98) <= 1e-12
    wired = first.ci95 == confidence_interval95(first.accuracies)
    check(
        9, "bit-identical 1000-episode runs + CI formula",
        identical and ci_ok and wired,
        f"identical {identical}, ci([0,1]) {confidence_interval95([0.0, 1.0]):.4f}",
    )


def test_criterion_10_suite_runtime():
    elapsed = time.perf_counter() - SESSION_START
    check(10, "test suite under 5 minutes", elapsed <= 300.0, f"{elapsed:.1f}s")
