"""Acceptance gate: one test per checked criterion, each printed as PASS/FAIL.

Results are collected in ``conftest.ACCEPTANCE_RESULTS`` and listed in the
terminal summary. Thresholds are the stated ones; nothing is relaxed.
"""

import gzip
import itertools
import math
import time
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from somkit import (
    Dataset,
    NormalizationParams,
    SomModel,
    TrainingConfig,
    WeightMatrix,
    activation_histogram,
    build_report,
    classify,
    denormalize,
    find_bmu,
    find_two_bmus,
    fit_normalization,
    init_weights,
    learning_rate_at,
    load_csv,
    load_model,
    model_to_json,
    normalize,
    quantization_error,
    radius_at,
    save_model,
    topographic_error,
    train,
    u_matrix,
    update_step,
)
from somkit.training import TrainingMeta
from somkit.viz import PlotSpec, render_bars, render_codebook_tiles, render_heatmap

import oracles
from conftest import ACCEPTANCE_RESULTS

pytestmark = pytest.mark.acceptance


def record(name, ok, detail):
    ACCEPTANCE_RESULTS.append((bool(ok), name, detail))
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# -- 1. colours ---------------------------------------------------------------

@pytest.fixture(scope="module")
def colors_run():
    start = time.perf_counter()
    train_raw = Dataset(np.random.default_rng(42).integers(0, 256, (500, 3)).astype(float))
    params = NormalizationParams([0.0] * 3, [255.0] * 3)
    cfg = TrainingConfig(side=10, presentations=50000, initial_learning_rate=0.1, seed=42)
    model, trace = train(normalize(train_raw, params), cfg, params)
    probe = Dataset(np.random.default_rng(7).integers(0, 256, (10000, 3)).astype(float))
    assignments = classify(model, probe)
    elapsed = time.perf_counter() - start
    untrained = SomModel(init_weights(10, 3, 42), params)
    return dict(model=model, untrained=untrained, train=train_raw, probe=probe,
                assignments=assignments, elapsed=elapsed)


def test_c1_runtime(colors_run):
    a = colors_run["assignments"]
    record("1 colours: train + classify 10,000 under 60 s",
           colors_run["elapsed"] < 60 and len(a) == 10000,
           f"{colors_run['elapsed']:.1f} s, {len(a)} assignments")


def test_c1_quantization_halved(colors_run):
    # Expected to fail: see the project notes on this criterion.
    qe = {name: quantization_error(colors_run[m], colors_run[d])
          for name, (m, d) in {
              "trained/train": ("model", "train"), "untrained/train": ("untrained", "train"),
              "trained/probe": ("model", "probe"), "untrained/probe": ("untrained", "probe")}.items()}
    ratio = qe["untrained/train"] / qe["trained/train"]
    record("1 colours: trained QE at most half the untrained QE",
           ratio >= 2.0,
           "ratio {:.3f} (train: untrained {:.4f} vs trained {:.4f}; probe: {:.4f} vs {:.4f})".format(
               ratio, qe["untrained/train"], qe["trained/train"],
               qe["untrained/probe"], qe["trained/probe"]))


def test_c1_topology(colors_run):
    W = colors_run["model"].weight_matrix.grid_view()
    k = W.shape[0]
    adj = [np.linalg.norm(W[r, c] - W[r + dr, c + dc])
           for r in range(k) for c in range(k) for dr, dc in ((0, 1), (1, 0))
           if r + dr < k and c + dc < k]
    flat = W.reshape(k * k, -1)
    allp = [np.linalg.norm(flat[i] - flat[j]) for i, j in itertools.combinations(range(k * k), 2)]
    ratio = np.mean(adj) / np.mean(allp)
    record("1 colours: adjacent distance < 0.8 x all-pairs distance", ratio < 0.8, f"ratio {ratio:.3f}")


def test_c1_codebook_svg(colors_run):
    svg = render_codebook_tiles(colors_run["model"], PlotSpec("codebook-tiles"))
    root = ET.fromstring(svg.encode())
    cells = [e for e in root.iter() if e.get("class") == "cell"]
    record("1 colours: codebook tiles SVG renders", len(cells) == 100, f"{len(cells)} tiles")


# -- 2. iris ------------------------------------------------------------------

@pytest.fixture(scope="module")
def iris_run():
    raw = load_csv("tests/data/iris.csv", has_header=True, label_column="species")
    params = fit_normalization(raw)
    norm = normalize(raw, params)
    model, _ = train(norm, TrainingConfig(side=8, presentations=20000, seed=0), params)
    report = build_report(model, classify(model, raw), raw)
    return raw, norm, report


def test_c2_purity_vs_kmeans(iris_run):
    raw, norm, report = iris_run
    km = oracles.kmeans_purity(norm.rows.tolist(), list(raw.labels), k=3, restarts=10)
    gap = abs(report.overall_purity - km)
    record("2 iris: SOM purity within 0.10 of k-means purity", gap <= 0.10,
           f"SOM {report.overall_purity:.4f}, k-means {km:.4f}, gap {gap:.4f}")


def test_c2_setosa_disjoint(iris_run):
    _, _, report = iris_run
    setosa = {n.position.flat_index for n in report.per_neuron if n.majority_label == "setosa"}
    others = {n.position.flat_index for n in report.per_neuron
              if n.majority_label is not None and n.majority_label != "setosa"}
    mixed = [n.position.flat_index for n in report.per_neuron
             if n.label_counts.get("setosa") and len(n.label_counts) > 1]
    record("2 iris: setosa neurons disjoint from the other classes",
           setosa and not (setosa & others) and not mixed,
           f"{len(setosa)} setosa neurons, {len(others)} other, {len(mixed)} mixed")


# -- 3. MNIST -----------------------------------------------------------------

@pytest.fixture(scope="module")
def mnist_run(tmp_path_factory):
    path = tmp_path_factory.mktemp("mnist") / "mnist.csv"
    with gzip.open("tests/data/mnist_5k.csv.gz", "rb") as src:
        path.write_bytes(src.read())
    start = time.perf_counter()
    full = load_csv(path, label_column=784)
    order = np.random.default_rng(0).permutation(len(full))
    tr, te = order[:2000], order[2000:2500]
    labels = np.array(full.labels)
    train_raw = Dataset(full.rows[tr], labels=labels[tr].tolist())
    test_raw = Dataset(full.rows[te], labels=labels[te].tolist())
    params = fit_normalization(train_raw)
    model, _ = train(normalize(train_raw, params), TrainingConfig(side=15, presentations=40000, seed=0), params)
    report = build_report(model, classify(model, test_raw), test_raw)
    return report, time.perf_counter() - start


@pytest.mark.slow
def test_c3_runtime(mnist_run):
    _, elapsed = mnist_run
    record("3 MNIST: 2,000 train / 500 test, side 15, P 40000 under 10 min", elapsed < 600,
           f"{elapsed:.1f} s")


@pytest.mark.slow
def test_c3_purity(mnist_run):
    report, _ = mnist_run
    record("3 MNIST: weighted test purity >= 0.55", report.overall_purity >= 0.55,
           f"purity {report.overall_purity:.4f}, TE {report.topographic_error:.4f}")


@pytest.mark.slow
def test_c3_confusable_pairs_reported(mnist_run):
    report, _ = mnist_run
    k = report.side
    owner = {n.position.flat_index: n.majority_label for n in report.per_neuron if n.majority_label}
    touching = set()
    for j, lab in owner.items():
        r, c = divmod(j, k)
        for dr, dc in itertools.product((-1, 0, 1), repeat=2):
            rr, cc = r + dr, c + dc
            other = owner.get(rr * k + cc) if 0 <= rr < k and 0 <= cc < k else None
            if other and other != lab:
                touching.add(tuple(sorted((lab, other))))
    pairs = [p for p in (("4", "9"), ("3", "5"), ("7", "9"), ("3", "8")) if p in touching]
    # Reported only.
    print(f"[INFO] 3 MNIST: confusable pairs with adjacent majority neurons: {pairs}")
    ACCEPTANCE_RESULTS.append((True, "3 MNIST: confusable pairs (reported, not asserted)",
                               ", ".join("/".join(p) for p in pairs) or "none"))


# -- 4. determinism -----------------------------------------------------------

def test_c4_determinism(tmp_path):
    rng = np.random.default_rng(4)
    same = 0
    for i in range(5):
        n, dim = int(rng.integers(20, 120)), int(rng.integers(1, 8))
        raw = Dataset(rng.normal(0, 10, (n, dim)))
        cfg = TrainingConfig(side=int(rng.integers(1, 9)), presentations=int(rng.integers(100, 3000)),
                             initial_learning_rate=float(rng.uniform(0.05, 1.0)),
                             seed=int(rng.integers(0, 2**31)), sampling=("cyclic", "random")[i % 2])
        files = []
        for run in range(2):
            params = fit_normalization(raw)
            model, _ = train(normalize(raw, params), cfg, params)
            files.append(tmp_path / f"{i}-{run}.json")
            save_model(model, files[-1])
        same += files[0].read_bytes() == files[1].read_bytes()
    record("4 determinism: byte-identical models for 5 configs", same == 5, f"{same}/5 identical")


# -- 5. oracle equivalence ----------------------------------------------------

def _instances(seed, count=120, min_side=1):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        side, dim = int(rng.integers(min_side, 7)), int(rng.integers(1, 9))
        W = rng.random((side * side, dim))
        if rng.random() < 0.2:
            W[rng.integers(0, side * side)] = W[0]      # duplicate vectors exercise ties
        X = rng.random((int(rng.integers(1, 30)), dim))
        yield side, dim, W, X


def _model(W, side, dim):
    return SomModel(WeightMatrix(side, dim, W), NormalizationParams.identity(dim))


def test_c5_oracles():
    ok = {"find_bmu": 0, "find_two_bmus": 0, "quantization_error": 0, "topographic_error": 0, "u_matrix": 0}
    total = dict.fromkeys(ok, 0)
    rel = 1e-9
    for side, dim, W, X in _instances(5):
        wm, Wl = WeightMatrix(side, dim, W), W.tolist()
        x = X[0]
        j, d = oracles.bmu(x.tolist(), Wl)
        pos, got = find_bmu(x, wm)
        ok["find_bmu"] += pos.flat_index == j and math.isclose(got, d, rel_tol=rel, abs_tol=1e-300)
        total["find_bmu"] += 1
        m = _model(W, side, dim)
        ok["quantization_error"] += math.isclose(
            quantization_error(m, Dataset(X)), oracles.quantization_error(X.tolist(), Wl), rel_tol=rel)
        total["quantization_error"] += 1
        um = u_matrix(m)
        ok["u_matrix"] += all(math.isclose(a, b, rel_tol=rel, abs_tol=1e-15)
                              for a, b in zip(um.reshape(-1), np.ravel(oracles.u_matrix(Wl, side))))
        total["u_matrix"] += 1
    for side, dim, W, X in _instances(55, min_side=2):
        wm, Wl = WeightMatrix(side, dim, W), W.tolist()
        a, b = find_two_bmus(X[0], wm)
        ok["find_two_bmus"] += (a.flat_index, b.flat_index) == tuple(oracles.two_bmus(X[0].tolist(), Wl))
        total["find_two_bmus"] += 1
        ok["topographic_error"] += math.isclose(
            topographic_error(_model(W, side, dim), Dataset(X)),
            oracles.topographic_error(X.tolist(), Wl, side), rel_tol=rel, abs_tol=0.0)
        total["topographic_error"] += 1
    passed = all(ok[f] == total[f] >= 100 for f in ok)
    record("5 oracle equivalence (>= 100 instances each, rel 1e-9)", passed,
           ", ".join(f"{f} {ok[f]}/{total[f]}" for f in ok))


# -- 6. invariants ------------------------------------------------------------

def test_c6_invariants(tmp_path):
    rng = np.random.default_rng(6)
    failures = []

    X = rng.random((60, 4))
    cfg = TrainingConfig(side=5, presentations=1500, initial_learning_rate=0.9, seed=3)
    wm = init_weights(5, 4, 3)
    for t in range(cfg.presentations):
        update_step(wm, X[rng.integers(0, 60)], t, cfg)
        if wm.weights.min() < 0 or wm.weights.max() > 1:
            failures.append(f"weights left [0,1] at t={t}")
            break

    alphas = [learning_rate_at(t, cfg) for t in range(cfg.presentations)]
    sigmas = [radius_at(t, cfg) for t in range(cfg.presentations)]
    if any(b > a for a, b in zip(alphas, alphas[1:])) or any(b > a for a, b in zip(sigmas, sigmas[1:])):
        failures.append("schedule not monotone")
    if min(alphas) <= 0 or min(sigmas) < 1:
        failures.append("schedule out of range")

    raw = Dataset(rng.normal(50, 30, (80, 4)))
    params = fit_normalization(raw)
    model, _ = train(normalize(raw, params), cfg, params)
    before = model_to_json(model)
    classify(model, Dataset(rng.normal(50, 30, (200, 4))))
    if model_to_json(model) != before:
        failures.append("classify changed the model")

    back = denormalize(normalize(raw, params).rows, params)
    err = float(np.max(np.abs(back - raw.rows) / np.maximum(1.0, np.abs(raw.rows))))
    if err > 1e-9:
        failures.append(f"normalize round trip error {err}")

    save_model(model, tmp_path / "m.json")
    if load_model(tmp_path / "m.json").weights.tobytes() != model.weights.tobytes():
        failures.append("persistence round trip not bitwise")

    a = classify(model, raw)
    svgs = {
        "activation heatmap": (render_heatmap(a.activation_counts, PlotSpec("activation-heatmap")), "cell", 25),
        "u-matrix heatmap": (render_heatmap(u_matrix(model), PlotSpec("umatrix-heatmap", "log1p")), "cell", 25),
        "bars": (render_bars(activation_histogram(a), PlotSpec("activation-bars")), "bar",
                 len(activation_histogram(a))),
    }
    for name, (svg, cls, expected) in svgs.items():
        try:
            n = sum(1 for e in ET.fromstring(svg.encode()).iter() if e.get("class") == cls)
        except ET.ParseError as exc:
            failures.append(f"{name}: {exc}")
            continue
        if n != expected:
            failures.append(f"{name}: {n} {cls} elements, expected {expected}")

    record("6 invariant suite", not failures, "; ".join(failures) or "all invariants hold")


# -- 7. single step -----------------------------------------------------------

def test_c7_single_step():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        side, dim = int(rng.integers(1, 11)), int(rng.integers(1, 9))
        P = int(rng.integers(1, 500))
        cfg = TrainingConfig(side=side, presentations=P, initial_learning_rate=float(rng.uniform(0.01, 1)),
                             initial_radius=float(rng.uniform(1, max(1.0, side))), seed=0)
        t = int(rng.integers(0, P))
        W = rng.random((side * side, dim))
        x = rng.random(dim)
        expected = np.array(oracles.full_update(W.tolist(), x.tolist(), side,
                                                learning_rate_at(t, cfg), radius_at(t, cfg)))
        got = update_step(WeightMatrix(side, dim, W.copy()), x, t, cfg).weights
        worst = max(worst, float(np.max(np.abs(got - expected))))
    record("7 single step: cutoff update within 1e-6 of full update", worst <= 1e-6,
           f"max component difference {worst:.2e} over 100 steps")
