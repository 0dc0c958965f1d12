"""Acceptance suite: ten numbered end-to-end checks with pinned tolerances.

Each test exercises one advertised guarantee at desk scale with fixed
seeds, prints a single ``ACCEPTANCE n: PASS/FAIL`` summary line (visible
with ``pytest -s``, or in the failure report when a check fails), and
asserts both the stated tolerance and the stated runtime budget.

Check 9 fails by design: it asserts unconditional unbiasedness of the
distinct-count estimator over a full enumeration, and the estimator is
only unbiased while no duplicate class exceeds the sample size.  The
failure message carries the counterexample and the validity split.
"""

import math
import time
import warnings
from itertools import combinations

import numpy as np
from scipy.stats import spearmanr

from entity_sampler.balanced import (
    FingerprintStats,
    estimate_probs_balanced,
    goodman_estimate,
    plan_sample_size,
)
from entity_sampler.blocking import LshConfig, lsh_partition
from entity_sampler.clustering import (
    Clustering,
    brute_force_kmeans,
    kmeans_cost,
    regularized_kmeans,
)
from entity_sampler.dataset import Dataset, tv_distance, uniform_distribution
from entity_sampler.gmm import MixtureModel, em_fit, estimate_probs_gmm, plan_gmm
from entity_sampler.rejection import (
    DegenerateMapWarning,
    ProbabilityMap,
    exact_induced_distribution,
    expected_trials_per_accept,
    sample_clean,
)
from entity_sampler.ssc import (
    SameClusterOracle,
    exhaustive_losses,
    pair_losses,
    plan_pair_budget,
    ssc_select,
)
from entity_sampler.synth import (
    balanced_dataset,
    dataset_from_freqs,
    dispersed_dataset,
    mixture_tracking_dataset,
    planted_clusters,
    ratio_dataset,
    token_pair,
)

EMPTY = np.empty(0, dtype=np.int64)


def _line(num, ok, detail):
    msg = f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(msg)
    return msg


def _exact_map(data):
    counts = np.bincount(data.entity_codes)
    return ProbabilityMap(dense=counts[data.entity_codes] / data.n,
                          source="exact")


def _induced_tv(data, pmap):
    induced = exact_induced_distribution(data, pmap)
    return tv_distance(induced, uniform_distribution(induced.support))


def test_01_exact_probabilities_give_exact_uniformity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for freqs in (np.array([3, 2]),
                  rng.integers(1, 50, size=500),
                  rng.integers(1, 20, size=10_000)):
        data = dataset_from_freqs(np.asarray(freqs, dtype=np.int64), seed=0)
        worst = max(worst, _induced_tv(data, _exact_map(data)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    msg = _line(1, ok, f"worst TV {worst:.2e} over 3 datasets "
                       f"(|E| up to 10^4) in {elapsed:.2f}s")
    assert worst <= 1e-12, msg
    assert elapsed < 1.0, msg


def test_02_planned_sample_size_cleans_a_balanced_dataset():
    t0 = time.perf_counter()
    plan = plan_sample_size(0.1, 0.1, 0.01, n_entities=50, a=1.0)
    good = 0
    worst = 0.0
    for s in range(50):
        data = balanced_dataset(50, 10_000, 0.01, seed=s)
        pmap = estimate_probs_balanced(data, plan.m, seed=1000 + s)
        tv = _induced_tv(data, pmap)
        worst = max(worst, tv)
        good += tv <= 0.1
    elapsed = time.perf_counter() - t0
    ok = good >= 45 and elapsed < 10.0
    msg = _line(2, ok, f"TV <= 0.1 on {good}/50 seeds at m={plan.m} "
                       f"(worst {worst:.2e}) in {elapsed:.1f}s")
    assert good >= 45, msg
    assert elapsed < 10.0, msg


def test_03_error_table_trend_at_scale():
    fractions = [0.01, 0.02, 0.04, 0.06, 0.08, 0.1]
    dups = [0.1, 0.3]
    reps = 100
    targets = np.array([2.12, 1.64, 1.41, 1.23, 1.11, 1.16]) * 1e-3
    t0 = time.perf_counter()
    errs = np.zeros((2, len(fractions), reps))
    for di, dup in enumerate(dups):
        for rep in range(reps):
            ss = np.random.SeedSequence(entropy=(20260823, di, rep))
            s1, s2, s3 = (int(x) for x in ss.generate_state(3))
            data = dispersed_dataset(25_000, 40, dup, seed=s1)
            clean = data.entity_values().mean()
            for fi, f in enumerate(fractions):
                m = math.ceil(f * data.n)
                pmap = estimate_probs_balanced(data, m, seed=s2 + fi)
                res = sample_clean(data, pmap, p=m, seed=s3 + fi)
                est = data.values[res.record_indices].mean()
                errs[di, fi, rep] = abs(est - clean) / abs(clean)
    mean = errs.mean(axis=2)
    rhos = [spearmanr(fractions, mean[di])[0] for di in range(2)]
    gaps = mean[1] - mean[0]
    ratios = mean[0] / targets
    elapsed = time.perf_counter() - t0
    trend = all(rho <= -0.9 for rho in rhos)
    dominates = bool((gaps > 0).all())
    in_window = bool(((ratios >= 0.2) & (ratios <= 5.0)).all())
    ok = trend and dominates and in_window and elapsed < 600.0
    msg = _line(3, ok, f"rho=({rhos[0]:.3f},{rhos[1]:.3f}) "
                       f"min dominance gap {gaps.min():.1e} "
                       f"target ratios {ratios.min():.2f}..{ratios.max():.2f} "
                       f"in {elapsed:.0f}s")
    assert trend, msg
    assert dominates, msg
    assert in_window, msg
    assert elapsed < 600.0, msg


def test_04_planted_near_duplicates_co_block():
    t0 = time.perf_counter()
    cfg = LshConfig.plan(0.2, 0.1, family="minhash")
    hits = 0
    for t in range(1000):
        a, b = token_pair(40, 5, seed=t)  # Jaccard distance exactly 0.2
        data = Dataset(ids=("a", "b"), tokens=(a, b))
        blocking = lsh_partition(data, cfg, seed=t)
        hits += any(block.size == 2 for block in blocking.blocks)
    elapsed = time.perf_counter() - t0
    rate = hits / 1000
    ok = rate >= 0.9 and elapsed < 60.0
    msg = _line(4, ok, f"co-blocking rate {rate:.3f} over 1000 trials "
                       f"(rows={cfg.rows}, bands={cfg.bands}) in {elapsed:.1f}s")
    assert rate >= 0.9, msg
    assert elapsed < 60.0, msg


def test_05_clustering_matches_brute_force_and_recovers_plants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    brute_matches = 0
    for t in range(200):
        n = int(rng.integers(2, 10))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, min(n, 4) + 1))
        pts = rng.normal(0, 1, (n, d))
        c_brute = kmeans_cost(pts, brute_force_kmeans(pts, k))
        cl = regularized_kmeans(pts, k, mu_radius=1e9, seed=t)
        brute_matches += abs(
            kmeans_cost(pts, cl.labels) - c_brute) <= 1e-9 * max(c_brute, 1.0)
    hits = 0
    for seed in range(20):
        data = planted_clusters(2, 50, separation=4.0, dim=2, seed=seed)
        cl = regularized_kmeans(data.features, 2, mu_radius=1.0, seed=seed)
        truth = data.entity_codes
        got = cl.labels
        hits += cl.garbage.size == 0 and bool(
            (got == truth).all() or (got == 1 - truth).all())
    elapsed = time.perf_counter() - t0
    ok = brute_matches == 200 and hits >= 18 and elapsed < 120.0
    msg = _line(5, ok, f"{brute_matches}/200 brute-force matches, exact "
                       f"recovery on {hits}/20 planted seeds in {elapsed:.1f}s")
    assert brute_matches == 200, msg
    assert hits >= 18, msg
    assert elapsed < 120.0, msg


def _clustering_from_labels(labels):
    labels = np.asarray(labels)
    groups = [np.flatnonzero(labels == g) for g in np.unique(labels)]
    return Clustering(clusters=tuple(g for g in groups if g.size),
                      garbage=EMPTY, n=len(labels))


def _all_pairs(labels):
    pos, neg = [], []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            (pos if labels[i] == labels[j] else neg).append((i, j))
    return pos, neg


def _candidate_set(labels, rng):
    """Truth plus three distinct wrong partitions."""
    truth = _clustering_from_labels(labels)
    cands = [truth]
    if truth.k > 1:
        cands.append(_clustering_from_labels(np.zeros(len(labels), dtype=int)))
    split = np.asarray(labels).copy()
    big = int(np.flatnonzero(np.bincount(split) >= 2)[0])
    split[int(np.flatnonzero(split == big)[0])] = split.max() + 1
    cands.append(_clustering_from_labels(split))
    shuffled = np.asarray(labels).copy()
    rng.shuffle(shuffled)
    if (shuffled == labels).all():
        shuffled = np.roll(shuffled, 1)
    cands.append(_clustering_from_labels(shuffled))
    return truth, cands


def _partition_key(cl):
    return sorted(tuple(sorted(c.tolist())) for c in cl.clusters)


def test_06_pair_loss_selection_exhaustive_and_sampled():
    t0 = time.perf_counter()
    rng = np.random.default_rng(606)
    exhaustive_wins = 0
    for t in range(100):
        n = int(rng.integers(4, 10))
        labels = rng.integers(0, 3, size=n)
        truth, cands = _candidate_set(labels, rng)
        losses = [l[2] for l in exhaustive_losses(
            cands, SameClusterOracle(labels.tolist()), n)]
        w = min(range(len(cands)), key=lambda i: (losses[i], cands[i].k))
        exhaustive_wins += _partition_key(cands[w]) == _partition_key(truth)

    alpha = 0.2
    m_pairs = plan_pair_budget(4, epsilon=alpha / 2, delta=0.1)
    balanced_labels = np.repeat([0, 1], 6)
    pos, neg = _all_pairs(balanced_labels.tolist())
    gamma = len(pos) / (len(pos) + len(neg))
    query_bound = 2 * (m_pairs / gamma + m_pairs / (1 - gamma))
    within_alpha = 0
    max_queries = 0
    for s in range(50):
        srng = np.random.default_rng(s)
        labels = balanced_labels.copy()
        srng.shuffle(labels)
        truth, cands = _candidate_set(labels, srng)
        rep = ssc_select(cands, n_points=12,
                         oracle=SameClusterOracle(labels.tolist()),
                         m_pairs=m_pairs, seed=s)
        p, ng = _all_pairs(labels.tolist())
        within_alpha += pair_losses(cands[rep.winner], p, ng)[2] <= alpha
        max_queries = max(max_queries, rep.queries)
    elapsed = time.perf_counter() - t0
    ok = (exhaustive_wins == 100 and within_alpha >= 45
          and max_queries <= query_bound and elapsed < 120.0)
    msg = _line(6, ok, f"exhaustive {exhaustive_wins}/100, sampled loss <= "
                       f"{alpha} on {within_alpha}/50, max queries "
                       f"{max_queries} <= {query_bound:.0f} in {elapsed:.1f}s")
    assert exhaustive_wins == 100, msg
    assert within_alpha >= 45, msg
    assert max_queries <= query_bound, msg
    assert elapsed < 120.0, msg


def test_07_em_recovers_a_separated_mixture():
    t0 = time.perf_counter()
    good = 0
    monotone = True
    for s in range(20):
        rng = np.random.default_rng(s)
        xs = np.concatenate([rng.normal(0.0, 1.0, 5000),
                             rng.normal(6.0, 1.0, 5000)]).reshape(-1, 1)
        fit = em_fit(xs, 2, seed=s)
        monotone &= bool((np.diff(fit.loglik) >= -1e-9).all())
        order = np.argsort(fit.model.means[:, 0])
        means = fit.model.means[order, 0]
        weights = fit.model.weights[order]
        variances = np.asarray(fit.model.variances, dtype=float)[order]
        err = max(abs(means[0]), abs(means[1] - 6.0),
                  abs(weights[0] - 0.5), abs(weights[1] - 0.5),
                  abs(float(variances[0]) - 1.0),
                  abs(float(variances[1]) - 1.0))
        good += err <= 0.1
    elapsed = time.perf_counter() - t0
    ok = good >= 18 and monotone and elapsed < 60.0
    msg = _line(7, ok, f"parameters within 0.1 on {good}/20 seeds, "
                       f"log-likelihood monotone={monotone} in {elapsed:.1f}s")
    assert good >= 18, msg
    assert monotone, msg
    assert elapsed < 60.0, msg


def test_08_density_tracking_sampler_bound():
    t0 = time.perf_counter()
    xi = 0.05
    model = MixtureModel(weights=np.array([0.5, 0.5]),
                         means=np.array([[0.0], [6.0]]),
                         variances=np.array([1.0, 1.0]))
    data = mixture_tracking_dataset(model, xi, 200_000, seed=0)
    tv_true = _induced_tv(data, estimate_probs_gmm(data, model))

    # the fitted path needs a grid wide enough that a refitted Gaussian
    # can match the record law; a narrow grid truncates the tails and
    # biases the fitted variance down, which is a generator artifact,
    # not an estimator error
    plan = plan_gmm(0.1, 0.1, tau=0.05, eta_min=0.001, dim=1, k=2)
    good = 0
    worst = 0.0
    planner_covers = True
    for s in range(50):
        d = mixture_tracking_dataset(model, xi, 50_000, seed=s,
                                     grid_halfwidth_sigmas=2.5)
        # planner-sized fit clamps to the whole dataset
        planner_covers &= plan.m >= d.n
        fit = em_fit(d, 2, seed=s)
        tv = _induced_tv(d, estimate_probs_gmm(d, fit.model))
        worst = max(worst, tv)
        good += tv <= 0.1 + xi
    elapsed = time.perf_counter() - t0
    ok = tv_true <= xi + 0.02 and good >= 45 and planner_covers \
        and elapsed < 300.0
    msg = _line(8, ok, f"true-model TV {tv_true:.3f} <= {xi + 0.02}, fitted "
                       f"TV <= 0.15 on {good}/50 seeds (worst {worst:.3f}) "
                       f"in {elapsed:.0f}s")
    assert tv_true <= xi + 0.02, msg
    assert good >= 45, msg
    assert planner_covers, msg
    assert elapsed < 300.0, msg


def _partitions(n, maxpart=None):
    maxpart = n if maxpart is None else maxpart
    if n == 0:
        yield ()
        return
    for first in range(min(n, maxpart), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


def _subset_mean_estimate(profile, m):
    labels = [ci for ci, size in enumerate(profile) for _ in range(size)]
    n = len(labels)
    total = []
    for subset in combinations(range(n), m):
        counts = {}
        for idx in subset:
            counts[labels[idx]] = counts.get(labels[idx], 0) + 1
        f = {}
        for c in counts.values():
            f[c] = f.get(c, 0) + 1
        stats = FingerprintStats(m=m, r=len(counts), f=f)
        total.append(goodman_estimate(stats, n))
    return math.fsum(total) / len(total)


def test_09_distinct_count_unbiased_over_full_enumeration():
    """Asserts unconditional unbiasedness; fails by design.

    The estimator is unbiased exactly while no duplicate class exceeds
    the sample size.  The smallest counterexample is the population
    {a, a} at m=1: both 1-subsets give the fingerprint {1: 1} and the
    estimate 2, so the subset mean is 2, not 1.
    """
    t0 = time.perf_counter()
    violations = []
    checked = 0
    for n in range(2, 9):
        for profile in _partitions(n):
            for m in range(1, n):
                checked += 1
                mean = _subset_mean_estimate(profile, m)
                if abs(mean - len(profile)) > 1e-9:
                    violations.append((profile, m, mean))
    elapsed = time.perf_counter() - t0
    first = min(violations, key=lambda v: (sum(v[0]), v[1])) if violations \
        else None
    detail = (f"unbiased on {checked - len(violations)}/{checked} "
              f"(profile, m) pairs in {elapsed:.1f}s")
    if violations:
        detail += (f"; {len(violations)} biased, all with max class > m; "
                   f"smallest: classes {first[0]} at m={first[1]} gives "
                   f"mean {first[2]:.6g}")
    msg = _line(9, not violations, detail)
    assert elapsed < 60.0, msg
    assert not violations, msg


def test_10_acceptance_time_law():
    t0 = time.perf_counter()
    worst = 0.0
    details = []
    with warnings.catch_warnings():
        # the ratio-1 dataset is perfectly balanced, so every estimate is
        # equal and the map degenerates to uniform-over-records by design
        warnings.simplefilter("ignore", DegenerateMapWarning)
        for ratio in (1, 5, 10):
            data = ratio_dataset(ratio, 20, 50, seed=ratio)
            pmap = _exact_map(data)
            expected = expected_trials_per_accept(data, pmap)
            res = sample_clean(data, pmap, p=20_000, seed=100 + ratio)
            rel = abs(res.trials_per_accept - expected) / expected
            worst = max(worst, rel)
            details.append(f"{ratio}:{res.trials_per_accept:.3f}/{expected:.3f}")
    elapsed = time.perf_counter() - t0
    ok = worst <= 0.1 and elapsed < 60.0
    msg = _line(10, ok, f"measured/expected trials per accept "
                        f"{' '.join(details)} (worst rel {worst:.4f}) "
                        f"in {elapsed:.1f}s")
    assert worst <= 0.1, msg
    assert elapsed < 60.0, msg
