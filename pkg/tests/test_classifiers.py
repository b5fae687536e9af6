"""Per-user authenticators: SMO solver, forest, FFNN, and the facade."""

import numpy as np
import pytest

from gaitauth.classifiers import (FAMILIES, GENUINE, IMPOSTOR, ModelSpec,
                                  decide, decide_rows, load_model, save_model,
                                  score, score_rows, train)
from gaitauth.classifiers.svm import (linear_kernel, rbf_kernel, resolve_gamma,
                                      smo_solve)


def blobs(seed=0, n=40, d=4, sep=0.35):
    """Linearly separable genuine/impostor clouds inside the unit cube."""
    rng = np.random.default_rng(seed)
    genuine = np.clip(rng.normal(0.75, 0.06, size=(n, d)), 0, 1)
    impostor = np.clip(rng.normal(0.75 - sep, 0.06, size=(2 * n, d)), 0, 1)
    return genuine, impostor


# ---- spec facade -------------------------------------------------------------


def test_model_spec_families_and_alias():
    assert set(FAMILIES) == {"linsvm", "rbfsvm", "rndf", "ffnn"}
    assert ModelSpec("LINSVM").family == "linsvm"
    assert ModelSpec("tfdnn").family == "ffnn"  # accepted alias
    with pytest.raises(ValueError):
        ModelSpec("boosting")
    with pytest.raises(ValueError):
        ModelSpec("linsvm", hyperparameters={"learning_rate": 0.1})


def test_model_spec_defaults_merge():
    spec = ModelSpec("rndf", hyperparameters={"n_trees": 10})
    assert spec.hyperparameters["n_trees"] == 10
    assert "max_features" in spec.hyperparameters
    base = ModelSpec("rndf")
    assert base.hyperparameters["n_trees"] == 100


# ---- SMO solver --------------------------------------------------------------


def test_smo_hand_computed_toy():
    # Two points on a line: x=0 labeled -1, x=1 labeled +1, C=10.
    # The dual optimum is alpha = [2, 2], giving f(x) = 2x - 1 and rho = 1:
    # maximizing the margin puts the boundary halfway at x = 0.5.
    x = np.array([[0.0], [1.0]])
    y = np.array([-1.0, 1.0])
    k = linear_kernel(x, x)
    alpha, rho, _, _ = smo_solve(k, y, c=10.0)
    np.testing.assert_allclose(alpha, [2.0, 2.0], atol=1e-9)
    assert rho == pytest.approx(1.0, abs=1e-9)
    decision = (alpha * y) @ k - rho
    np.testing.assert_allclose(decision, [-1.0, 1.0], atol=1e-9)


def test_smo_objective_is_monotone():
    rng = np.random.default_rng(1)
    x = rng.random((40, 3))
    y = np.where(x[:, 0] + 0.3 * rng.standard_normal(40) > 0.5, 1.0, -1.0)
    k = rbf_kernel(x, x, gamma=1.5)
    _, _, _, trace = smo_solve(k, y, c=1.0, record_objective=True)
    assert len(trace) > 1
    diffs = np.diff(np.asarray(trace))
    assert np.all(diffs >= -1e-9), "dual objective must not decrease"


def test_smo_satisfies_kkt_within_tolerance():
    rng = np.random.default_rng(2)
    x = rng.random((60, 4))
    y = np.where(x[:, 1] > 0.5, 1.0, -1.0)
    c = 2.0
    k = linear_kernel(x, x)
    alpha, rho, _, _ = smo_solve(k, y, c=c, tol=1e-3)
    # box constraints and the equality constraint
    assert np.all(alpha >= -1e-12) and np.all(alpha <= c + 1e-12)
    assert abs(float(alpha @ y)) < 1e-9
    # maximal violating pair criterion at the solution
    q = k * np.outer(y, y)
    grad = q @ alpha - 1.0
    up = ((y > 0) & (alpha < c - 1e-12)) | ((y < 0) & (alpha > 1e-12))
    low = ((y > 0) & (alpha > 1e-12)) | ((y < 0) & (alpha < c - 1e-12))
    m_up = np.max(-y[up] * grad[up])
    m_low = np.min(-y[low] * grad[low])
    assert m_up - m_low < 1e-3 + 1e-9


def test_gamma_scale_convention():
    rng = np.random.default_rng(3)
    x = rng.random((30, 5))
    expected = 1.0 / (5 * x.var(axis=0).mean())
    assert resolve_gamma(x, "scale") == pytest.approx(expected)
    assert resolve_gamma(x, 2.5) == 2.5
    constant = np.full((4, 2), 0.3)
    assert resolve_gamma(constant, "scale") == 1.0  # zero-variance fallback


# ---- training across families -------------------------------------------------


@pytest.mark.parametrize("family", ["linsvm", "rbfsvm", "rndf", "ffnn"])
def test_families_separate_blobs(family):
    genuine, impostor = blobs(seed=10)
    model = train(ModelSpec(family), genuine, impostor, seed=0, user_id="u")
    assert model.feature_dim == 4
    g_scores = score_rows(model, genuine)
    i_scores = score_rows(model, impostor)
    assert np.all((g_scores >= 0.0) & (g_scores <= 1.0))
    acc = (np.mean(g_scores >= 0.5) + np.mean(i_scores < 0.5)) / 2
    assert acc == 1.0, f"{family} failed to separate clean blobs"
    assert np.all(decide_rows(model, genuine))  # True = genuine
    assert not np.any(decide_rows(model, impostor))
    assert decide(model, genuine[0]) == GENUINE
    assert decide(model, impostor[0]) == IMPOSTOR


def test_rbf_solves_xor():
    rng = np.random.default_rng(4)
    centers = np.array([[0.2, 0.2], [0.8, 0.8], [0.2, 0.8], [0.8, 0.2]])
    labels = [1, 1, 0, 0]
    pts, ys = [], []
    for c, l in zip(centers, labels):
        pts.append(np.clip(c + rng.normal(0, 0.05, size=(30, 2)), 0, 1))
        ys.extend([l] * 30)
    pts = np.vstack(pts)
    ys = np.asarray(ys)
    model = train(ModelSpec("rbfsvm"), pts[ys == 1], pts[ys == 0], seed=0)
    preds = score_rows(model, pts) >= 0.5
    assert np.mean(preds == (ys == 1)) >= 0.95


def test_decision_threshold_semantics():
    genuine, impostor = blobs(seed=11)
    model = train(ModelSpec("rndf"), genuine, impostor, seed=0)
    row = genuine[0]
    s = score(model, row)
    model.threshold = s  # tie: score == threshold decides genuine
    assert decide(model, row) == GENUINE
    model.threshold = np.nextafter(s, 2.0)
    assert decide(model, row) == IMPOSTOR


def test_raising_threshold_never_accepts_more():
    genuine, impostor = blobs(seed=12)
    model = train(ModelSpec("ffnn"), genuine, impostor, seed=1)
    probes = np.random.default_rng(5).random((300, 4))
    scores = score_rows(model, probes)
    prev = None
    for thr in np.linspace(0.0, 1.0, 21):
        accepted = set(np.flatnonzero(scores >= thr).tolist())
        if prev is not None:
            assert accepted <= prev, "higher threshold accepted new rows"
        prev = accepted


@pytest.mark.parametrize("family", ["linsvm", "rbfsvm", "rndf", "ffnn"])
def test_training_is_deterministic(family):
    genuine, impostor = blobs(seed=13)
    probes = np.random.default_rng(6).random((50, 4))
    a = train(ModelSpec(family), genuine, impostor, seed=3)
    b = train(ModelSpec(family), genuine, impostor, seed=3)
    np.testing.assert_array_equal(score_rows(a, probes), score_rows(b, probes))


def test_forest_tie_votes_genuine():
    # Identical rows with both labels: leaf majorities tie and must vote
    # genuine (reject-by-default would hide false accepts from the attack).
    row = np.full((8, 3), 0.5)
    model = train(ModelSpec("rndf", hyperparameters={"n_trees": 5,
                                                     "bootstrap": False}),
                  row[:4], row[4:], seed=0)
    assert score(model, row[0]) == pytest.approx(1.0)


def test_forest_finds_axis_threshold():
    # Single informative feature with a clean cut at 0.5: every tree should
    # classify held-out points by that axis alone.
    rng = np.random.default_rng(7)
    genuine = rng.uniform(0.55, 1.0, size=(50, 1))
    impostor = rng.uniform(0.0, 0.45, size=(50, 1))
    model = train(ModelSpec("rndf"), genuine, impostor, seed=2)
    probes = np.array([[0.05], [0.3], [0.42], [0.58], [0.7], [0.95]])
    np.testing.assert_array_equal(score_rows(model, probes) >= 0.5,
                                  [False, False, False, True, True, True])


def test_ffnn_loss_trace_decreases():
    genuine, impostor = blobs(seed=14)
    model = train(ModelSpec("ffnn"), genuine, impostor, seed=4)
    trace = model.parameters.loss_trace
    assert trace[-1] < trace[0] * 0.5


def test_score_rows_validation():
    genuine, impostor = blobs(seed=15)
    model = train(ModelSpec("linsvm"), genuine, impostor, seed=0)
    with pytest.raises(ValueError):
        score_rows(model, np.random.random((3, 7)))  # wrong width
    bad = np.full((1, 4), np.nan)
    with pytest.raises(ValueError):
        score_rows(model, bad)


def test_train_input_validation():
    genuine, impostor = blobs(seed=16)
    with pytest.raises(ValueError):
        train(ModelSpec("linsvm"), np.zeros((0, 4)), impostor, seed=0)
    with pytest.raises(ValueError):
        train(ModelSpec("linsvm"), genuine * 3.0, impostor, seed=0)  # off-cube


@pytest.mark.parametrize("family", ["linsvm", "rbfsvm", "rndf", "ffnn"])
def test_save_load_round_trip(family, tmp_path):
    genuine, impostor = blobs(seed=17)
    model = train(ModelSpec(family), genuine, impostor, seed=5, user_id="bob")
    path = tmp_path / f"{family}.model"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.user_id == "bob"
    assert loaded.spec.family == family
    assert loaded.threshold == model.threshold
    probes = np.random.default_rng(8).random((100, 4))
    np.testing.assert_array_equal(score_rows(model, probes),
                                  score_rows(loaded, probes))
    # a second save must be byte-identical (no timestamps, no dict-order noise)
    path2 = tmp_path / "again.model"
    save_model(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()
