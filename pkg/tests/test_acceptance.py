"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
All checks ride on property suites plus the planted block-model oracle; the
final test is dataset-gated and skips unless AMFPMC_DENG_TSV points at the
572-drug holdout TSV.
"""

import json
import os
import time

import numpy as np
import pytest

from amfpmc.formats import graph_from_index_records, parse_interactions_file, report_to_dict
from amfpmc.graph import build_graph
from amfpmc.metrics import average_precision, class_weights, multiclass_report, roc_auc
from amfpmc.model import Hyperparameters, gradient_check, init_model, predict
from amfpmc.pipeline import (
    attach_targets,
    baseline_majority,
    baseline_neighborhood,
    holdout_evaluate,
    one_hot_pairs,
    score_pairs,
    stratified_kfold,
    train,
)
from amfpmc.propagation import one_hot, propagate_target
from amfpmc.synth import SyntheticConfig, generate_synthetic


def _verdict(number: int, description: str, ok: bool, detail: str = ""):
    state = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{state}] criterion {number}: {description}{suffix}")
    assert ok, f"criterion {number} failed: {description}{suffix}"


def _random_tiny_model(rng):
    n = int(rng.integers(4, 11))
    d = int(rng.integers(2, 9))
    K = int(rng.integers(2, 7))
    hp = Hyperparameters(embedding_dim=d, dropout=0.0, seed=int(rng.integers(0, 1 << 30)))
    params = init_model(n, K, hp)
    params.drug_bias[:] = rng.uniform(-0.5, 0.5, n)
    params.class_bias[:] = rng.uniform(-0.5, 0.5, K)
    params.bias_coupling[:] = rng.uniform(0.5, 1.5, K)
    return params


def _random_batch(rng, params, size=6):
    n, K = params.n_drugs, params.n_classes
    I = rng.integers(0, n, size)
    J = (I + 1 + rng.integers(0, n - 1, size)) % n
    T = rng.dirichlet(np.ones(K), size=size)
    w = class_weights(rng.integers(1, 10, K))
    return I, J, T, w


def test_criterion_1_gradient_fidelity():
    start = time.monotonic()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        params = _random_tiny_model(rng)
        I, J, T, w = _random_batch(rng, params)
        worst = max(worst, gradient_check(params, I, J, T, w, eps=1e-5))
    elapsed = time.monotonic() - start
    _verdict(
        1,
        "analytic gradients match central finite differences below 1e-4",
        worst < 1e-4 and elapsed < 10.0,
        f"max rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_2_prediction_symmetry():
    start = time.monotonic()
    rng = np.random.default_rng(102)
    draws = 0
    exact = True
    while draws < 1000:
        params = _random_tiny_model(rng)
        for _ in range(20):
            i, j = rng.integers(0, params.n_drugs, 2)
            if i == j:
                continue
            if not np.array_equal(predict(params, int(i), int(j)), predict(params, int(j), int(i))):
                exact = False
            draws += 1
    elapsed = time.monotonic() - start
    _verdict(2, "predict(i, j) equals predict(j, i) elementwise on 1000 draws",
             exact and elapsed < 5.0, f"{draws} draws, {elapsed:.1f}s")


def test_criterion_3_metric_oracles():
    start = time.monotonic()
    rng = np.random.default_rng(103)

    def brute_force(scores, labels):
        pos = scores[labels]
        neg = scores[~labels]
        total = 0.0
        for p in pos:
            total += (p > neg).sum() + 0.5 * (p == neg).sum()
        return total / (pos.size * neg.size)

    ok = True
    for _ in range(100):
        m = int(rng.integers(5, 201))
        scores = rng.integers(0, 10, m).astype(float) / 3.0
        labels = rng.random(m) < 0.4
        if not labels.any():
            labels[0] = True
        if labels.all():
            labels[-1] = False
        ok &= roc_auc(scores, labels) == brute_force(scores, labels)

    ok &= average_precision([0.9, 0.8, 0.2, 0.1], [True, True, False, False]) == 1.0
    scores = np.linspace(1.0, 0.1, 8)
    labels = np.zeros(8, dtype=bool)
    labels[-1] = True
    ok &= abs(average_precision(scores, labels) - 1 / 8) < 1e-12
    ok &= abs(average_precision([0.9, 0.8, 0.7], [True, False, True]) - 5 / 6) < 1e-12

    for _ in range(100):
        m = int(rng.integers(5, 101))
        scores = rng.uniform(0, 1, m)
        labels = rng.random(m) < 0.5
        if not labels.any():
            labels[0] = True
        if labels.all():
            labels[-1] = False
        base = roc_auc(scores, labels)
        ok &= roc_auc(np.exp(2.0 * scores), labels) == base
        ok &= abs(roc_auc(scores, ~labels) - (1.0 - base)) < 1e-12

    elapsed = time.monotonic() - start
    _verdict(3, "rank AUROC matches brute force exactly; AP matches hand values; invariances hold",
             ok and elapsed < 10.0, f"{elapsed:.1f}s")


def test_criterion_4_propagation_identities():
    start = time.monotonic()
    data = generate_synthetic(SyntheticConfig(n_drugs=30, n_blocks=2, n_classes=4,
                                              edge_probability=0.4, seed=3))
    g = data.graph_t0
    items = g.edge_list()

    exact_onehot = all(
        np.array_equal(propagate_target(g, i, j, c, 0.0), one_hot(c, 4)) for i, j, c in items
    )

    hp = Hyperparameters(embedding_dim=8, dropout=0.0, epochs=5, batch_size=64,
                         learning_rate=0.01, alpha=0.0, seed=0)
    p_prop = train(attach_targets(items, g, 0.0), hp, 30, 4)
    p_bypass = train(one_hot_pairs(items, 4), hp, 30, 4)
    bitwise = all(np.array_equal(a, b) for a, b in zip(p_prop.arrays(), p_bypass.arrays()))

    rng = np.random.default_rng(104)
    sums_ok = True
    symmetric = True
    for _ in range(200):
        a, b = rng.integers(0, 30, 2)
        if a == b:
            continue
        label = int(rng.integers(0, 4))
        alpha = float(rng.uniform(0, 1))
        t = propagate_target(g, int(a), int(b), label, alpha)
        sums_ok &= abs(t.sum() - 1.0) < 1e-9
        symmetric &= np.array_equal(t, propagate_target(g, int(b), int(a), label, alpha))

    elapsed = time.monotonic() - start
    _verdict(4, "alpha=0 is exact one-hot and bitwise equal to bypassed training; targets normalized and symmetric",
             exact_onehot and bitwise and sums_ok and symmetric and elapsed < 10.0,
             f"{elapsed:.1f}s")


PLANTED = SyntheticConfig(n_drugs=200, n_blocks=4, n_classes=16, edge_probability=0.3,
                          label_noise=0.05, holdout_fraction=0.2, seed=7)


def test_criterion_5_planted_graph_recovery():
    start = time.monotonic()
    data = generate_synthetic(PLANTED)
    g = data.graph_t0
    truths = np.array([c for _, _, c in data.held_out])
    test_pairs = [(i, j) for i, j, _ in data.held_out]

    hp = Hyperparameters(embedding_dim=32, dropout=0.0, epochs=100, batch_size=256,
                         learning_rate=0.01, alpha=0.8, seed=0)
    params = train(attach_targets(g.edge_list(), g, hp.alpha), hp, g.n_drugs, g.n_classes)
    trained = multiclass_report(score_pairs(params, test_pairs), truths).macro_auroc

    neighborhood = multiclass_report(baseline_neighborhood(g, test_pairs), truths).macro_auroc
    majority = multiclass_report(
        baseline_majority([c for _, _, c in g.edge_list()], len(truths), g.n_classes), truths
    ).macro_auroc

    elapsed = time.monotonic() - start
    ok = trained >= 0.90 and trained >= neighborhood >= majority and elapsed < 120.0
    _verdict(5, "planted-graph macro AUROC >= 0.90 and model >= neighborhood >= majority",
             ok, f"model {trained:.4f}, neighborhood {neighborhood:.4f}, majority {majority:.4f}, {elapsed:.1f}s")


def test_criterion_6_propagation_factor_curve():
    start = time.monotonic()
    cfg = SyntheticConfig(n_drugs=200, n_blocks=4, n_classes=16, edge_probability=0.3,
                          label_noise=0.15, holdout_fraction=0.2, seed=7)
    data = generate_synthetic(cfg)
    g = data.graph_t0
    truths = np.array([c for _, _, c in data.held_out])
    test_pairs = [(i, j) for i, j, _ in data.held_out]

    scores = {}
    for alpha in (0.0, 0.6, 0.8):
        hp = Hyperparameters(embedding_dim=32, dropout=0.0, epochs=100, batch_size=256,
                             learning_rate=0.01, alpha=alpha, seed=1)
        params = train(attach_targets(g.edge_list(), g, alpha), hp, g.n_drugs, g.n_classes)
        scores[alpha] = multiclass_report(score_pairs(params, test_pairs), truths).macro_auroc

    elapsed = time.monotonic() - start
    margin6 = scores[0.6] - scores[0.0]
    margin8 = scores[0.8] - scores[0.0]
    ok = margin6 >= 0.01 and margin8 >= 0.01 and elapsed < 600.0
    _verdict(6, "macro AUROC at alpha 0.6 and 0.8 beats alpha 0 by >= 0.01 under label noise",
             ok, f"a0 {scores[0.0]:.4f}, a6 +{margin6:.4f}, a8 +{margin8:.4f}, {elapsed:.1f}s")


def _rare_class_split(seed=11):
    """Two planted blocks plus a rare cross class with 8 training edges."""
    rng = np.random.default_rng(seed)
    train_items, test_items = [], []
    for lo, hi, cls in ((0, 30, 0), (30, 60, 1)):
        block = []
        for x in range(lo, hi):
            for y in range(x + 1, hi):
                if rng.random() < 0.5:
                    block.append((x, y, cls))
        order = rng.permutation(len(block))
        half = len(block) // 2
        train_items += [block[t] for t in order[:half]]
        test_items += [block[t] for t in order[half:]]
    cross = [(a, b) for a in range(0, 30) for b in range(30, 60)]
    picked = rng.choice(len(cross), size=48, replace=False)
    rare_edges = [(cross[t][0], cross[t][1], 2) for t in picked]
    train_items += rare_edges[:8]
    test_items += rare_edges[8:]
    return train_items, test_items


def test_criterion_7_class_weight_benefit():
    start = time.monotonic()
    train_items, test_items = _rare_class_split()
    g_train = build_graph(60, 3, "holdout", train_items)
    truths = np.array([c for _, _, c in test_items])
    test_pairs = [(i, j) for i, j, _ in test_items]
    rare = truths == 2
    rare_train = sum(1 for _, _, c in train_items if c == 2)
    assert rare_train < 10

    recalls = {True: [], False: []}
    for seed in range(5):
        for balance in (True, False):
            hp = Hyperparameters(embedding_dim=16, dropout=0.0, epochs=60, batch_size=64,
                                 learning_rate=0.01, alpha=0.0, seed=seed,
                                 balance_classes=balance)
            params = train(attach_targets(train_items, g_train, 0.0), hp, 60, 3)
            preds = np.argmax(score_pairs(params, test_pairs), axis=1)
            recalls[balance].append(float((preds[rare] == 2).mean()))

    balanced = float(np.mean(recalls[True]))
    unbalanced = float(np.mean(recalls[False]))
    elapsed = time.monotonic() - start
    _verdict(7, "rare-class recall with weight balancing beats the unbalanced run",
             balanced > unbalanced and elapsed < 300.0,
             f"balanced {balanced:.3f} vs unbalanced {unbalanced:.3f} over 5 seeds, "
             f"rare class has {rare_train} training edges, {elapsed:.1f}s")


def test_criterion_8_no_leakage_and_determinism():
    start = time.monotonic()
    cfg = SyntheticConfig(n_drugs=80, n_blocks=2, n_classes=4, edge_probability=0.3,
                          label_noise=0.05, holdout_fraction=0.0, seed=9)
    graph = generate_synthetic(cfg).graph_t1
    hp = Hyperparameters(embedding_dim=8, dropout=0.0, epochs=8, batch_size=128,
                         learning_rate=0.01, alpha=0.5, seed=0)

    # independent structural check, mirroring what the harness asserts per fold
    items = graph.edge_list()
    labels = [c for _, _, c in items]
    folds = stratified_kfold(labels, 3, seed=0)
    leak_free = True
    for f in range(3):
        train_graph = build_graph(graph.n_drugs, graph.n_classes, "holdout",
                                  [items[t] for t in np.flatnonzero(folds != f)])
        for t in np.flatnonzero(folds == f):
            i, j, _ = items[t]
            if train_graph.has_edge(i, j):
                leak_free = False

    a = holdout_evaluate(graph, hp, k=3, seed=0)
    b = holdout_evaluate(graph, hp, k=3, seed=0)
    bytes_a = json.dumps([report_to_dict(r) for r in a.folds + [a.mean]]).encode()
    bytes_b = json.dumps([report_to_dict(r) for r in b.folds + [b.mean]]).encode()

    elapsed = time.monotonic() - start
    _verdict(8, "fold training graphs exclude test edges; identical seeds give byte-identical reports",
             leak_free and bytes_a == bytes_b and elapsed < 120.0, f"{elapsed:.1f}s")


def test_criterion_9_deng_dataset_if_provided():
    path = os.environ.get("AMFPMC_DENG_TSV")
    if not path:
        print("[SKIP] criterion 9: set AMFPMC_DENG_TSV to the 572-drug holdout TSV to run")
        pytest.skip("dataset-gated: AMFPMC_DENG_TSV not set")
    start = time.monotonic()
    records = parse_interactions_file(path, "indices")
    graph = graph_from_index_records(records, "holdout")
    hp = Hyperparameters(embedding_dim=512, dropout=0.3, epochs=15, batch_size=256,
                         learning_rate=0.01, alpha=0.8, seed=0)
    result = holdout_evaluate(graph, hp, k=5, seed=0)
    elapsed = time.monotonic() - start
    acc = result.mean.accuracy
    auroc = result.mean.micro_auroc
    _verdict(9, "Deng-derived holdout: 5-fold accuracy >= 0.85 and micro AUROC >= 0.99",
             acc >= 0.85 and auroc >= 0.99 and elapsed < 3600.0,
             f"accuracy {acc:.4f}, micro AUROC {auroc:.4f}, {elapsed:.0f}s")
