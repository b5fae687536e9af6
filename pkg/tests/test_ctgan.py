"""Tabular GAN pieces: mixtures, encoding, conditionals, nets, training."""

import numpy as np
import pytest

from gaitauth.ctgan import (ColumnMixture, Critic, Generator, ModeNormalizer,
                            TrainConfig, build_cond_sampler, build_layout,
                            decode_rows, encode_rows, fit_column_mixture,
                            fit_mode_normalizer, generate, gradient_penalty,
                            load_synth_model, sample_cond_batch,
                            save_synth_model, train_synth_model)
from gaitauth.ctgan.conditional import (matching_real_indices,
                                        sample_generation_cond_batch)
from gaitauth.dataio import ColumnSpec, FeatureTable


def bimodal_column(n=600, lo=0.0, hi=10.0, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    return np.concatenate([rng.normal(lo, 0.2, half), rng.normal(hi, 0.2, n - half)])


# ---- mixture fitting ----------------------------------------------------------


def test_mixture_recovers_two_separated_modes():
    values = bimodal_column()
    mix = fit_column_mixture(values, max_modes=10, seed=1)
    assert mix.n_modes == 2
    means = np.sort(mix.means)
    assert abs(means[0] - 0.0) < 0.3 and abs(means[1] - 10.0) < 0.3
    np.testing.assert_allclose(mix.weights, [0.5, 0.5], atol=0.05)


def test_mixture_unimodal_collapses_to_one():
    rng = np.random.default_rng(2)
    mix = fit_column_mixture(rng.normal(3.0, 1.0, 500), max_modes=10, seed=0)
    assert mix.n_modes == 1
    assert mix.weights[0] == pytest.approx(1.0)


def test_mixture_constant_column():
    mix = fit_column_mixture(np.full(100, 4.2), max_modes=10, seed=0)
    assert mix.n_modes == 1
    assert mix.means[0] == pytest.approx(4.2)
    assert mix.stds[0] > 0  # floored, never zero


def test_mixture_prunes_negligible_modes():
    mix = fit_column_mixture(bimodal_column(), max_modes=10, seed=3)
    assert np.all(mix.weights >= 0.005)


def test_posterior_rows_are_distributions():
    mix = fit_column_mixture(bimodal_column(), max_modes=10, seed=4)
    post = mix.posterior(np.array([-0.1, 5.0, 9.9]))
    np.testing.assert_allclose(post.sum(axis=1), 1.0, rtol=1e-12)
    assert post[0].argmax() != post[2].argmax()


def test_mixture_validation():
    with pytest.raises(ValueError):
        ColumnMixture(means=[0.0], stds=[0.0], weights=[1.0])
    with pytest.raises(ValueError):
        ColumnMixture(means=[0.0, 1.0], stds=[1.0, 1.0], weights=[0.9, 0.3])


# ---- encoding -----------------------------------------------------------------


def two_col_setup(seed=5):
    schema = [ColumnSpec(name="c", kind="continuous"),
              ColumnSpec(name="d", kind="discrete", categories=("a", "b", "c"))]
    rng = np.random.default_rng(seed)
    cont = bimodal_column(300, seed=seed)
    disc = rng.integers(0, 3, size=300).astype(np.float64)
    rows = np.column_stack([cont, disc])
    normalizer = fit_mode_normalizer(rows, schema, seed=0)
    return schema, rows, normalizer


def test_layout_widths():
    schema, rows, normalizer = two_col_setup()
    spans, width = build_layout(normalizer, schema)
    m = normalizer.mixture_for(0).n_modes
    assert width == 1 + m + 3
    kinds = [s.kind for s in spans]
    assert kinds == ["alpha", "mode", "category"]
    assert spans[0].width == 1 and spans[1].width == m and spans[2].width == 3


def test_layout_matches_dimension_arithmetic():
    # 5 continuous columns with 10 modes each encode to 5 * (1 + 10) = 55.
    schema = [ColumnSpec(name=f"c{j}", kind="continuous") for j in range(5)]
    mix = ColumnMixture(means=np.linspace(0, 9, 10), stds=np.full(10, 0.1),
                        weights=np.full(10, 0.1))
    normalizer = ModeNormalizer(mixtures=(mix,) * 5)
    _, width = build_layout(normalizer, schema)
    assert width == 55


def test_encode_decode_round_trip():
    schema, rows, normalizer = two_col_setup()
    enc = encode_rows(rows, normalizer, schema)
    spans, width = build_layout(normalizer, schema)
    assert enc.shape == (300, width)
    # alpha in (-1, 1); one-hot blocks exactly one-hot
    assert np.all(np.abs(enc[:, 0]) < 1.0)
    m = normalizer.mixture_for(0).n_modes
    np.testing.assert_array_equal(enc[:, 1:1 + m].sum(axis=1), 1.0)
    np.testing.assert_array_equal(enc[:, 1 + m:].sum(axis=1), 1.0)
    dec = decode_rows(enc, normalizer, schema)
    np.testing.assert_allclose(dec[:, 0], rows[:, 0], atol=1e-9)
    np.testing.assert_array_equal(dec[:, 1], rows[:, 1])


def test_encode_is_deterministic():
    schema, rows, normalizer = two_col_setup()
    a = encode_rows(rows, normalizer, schema)
    b = encode_rows(rows, normalizer, schema)
    np.testing.assert_array_equal(a, b)


def test_decode_rejects_dead_blocks():
    schema, rows, normalizer = two_col_setup()
    enc = encode_rows(rows[:5], normalizer, schema)
    enc[:, 1:] = 0.0  # kill every indicator block
    with pytest.raises(ValueError, match="decode"):
        decode_rows(enc, normalizer, schema)


def test_encode_rejects_bad_category():
    schema, rows, normalizer = two_col_setup()
    bad = rows[:2].copy()
    bad[0, 1] = 7.0
    with pytest.raises(ValueError):
        encode_rows(bad, normalizer, schema)


# ---- conditional sampling -------------------------------------------------------


def test_cond_sampler_shapes_and_weights():
    schema, rows, _ = two_col_setup()
    sampler = build_cond_sampler(rows, schema)
    assert sampler.has_discrete
    assert sampler.cond_width == 3
    counts = np.bincount(rows[:, 1].astype(int), minlength=3)
    expected = np.log(counts + 1.0)
    np.testing.assert_allclose(sampler.log_weights[0],
                               expected / expected.sum())

    rng = np.random.default_rng(0)
    cond, col_idx, cat_idx = sample_cond_batch(sampler, 40, rng)
    assert cond.shape == (40, 3)
    np.testing.assert_array_equal(cond.sum(axis=1), 1.0)
    assert np.all(col_idx == 0)
    rows_sel = matching_real_indices(sampler, col_idx, cat_idx, len(rows), rng)
    assert np.all(rows[rows_sel, 1].astype(int) == cat_idx)


def test_cond_sampler_without_discrete_columns():
    schema = [ColumnSpec(name="c", kind="continuous")]
    rows = np.random.default_rng(1).random((50, 1))
    sampler = build_cond_sampler(rows, schema)
    assert not sampler.has_discrete
    rng = np.random.default_rng(2)
    cond, col_idx, cat_idx = sample_cond_batch(sampler, 8, rng)
    assert cond.shape == (8, 0)
    picks = matching_real_indices(sampler, col_idx, cat_idx, len(rows), rng)
    assert picks.shape == (8,) and np.all((picks >= 0) & (picks < 50))


def test_generation_conditions_follow_frequency():
    schema = [ColumnSpec(name="d", kind="discrete", categories=("x", "y"))]
    rows = np.array([[0.0]] * 90 + [[1.0]] * 10)
    sampler = build_cond_sampler(rows, schema)
    rng = np.random.default_rng(3)
    cond = sample_generation_cond_batch(sampler, 5000, rng)
    share = cond[:, 0].mean()
    assert abs(share - 0.9) < 0.03  # plain frequency, not log-damped


# ---- networks -------------------------------------------------------------------


def test_generator_output_structure():
    schema, rows, normalizer = two_col_setup()
    spans, width = build_layout(normalizer, schema)
    rng = np.random.default_rng(4)
    gen = Generator(z_dim=16, cond_width=3, spans=spans, rng=rng)
    from gaitauth.autodiff import Tensor
    z = Tensor(rng.standard_normal((6, 16)))
    cond = Tensor(np.eye(3)[rng.integers(0, 3, 6)])
    soft, logits = gen.forward(z, cond, tau=0.2, rng=rng)
    assert soft.shape == (6, width)
    m = normalizer.mixture_for(0).n_modes
    alpha = soft.data[:, 0]
    assert np.all((alpha > -1.0) & (alpha < 1.0))
    np.testing.assert_allclose(soft.data[:, 1:1 + m].sum(axis=1), 1.0,
                               rtol=1e-9)
    np.testing.assert_allclose(soft.data[:, 1 + m:].sum(axis=1), 1.0,
                               rtol=1e-9)


def test_critic_width_arithmetic():
    # pac=10 rows of width 55 with no conditional: first layer reads 550.
    rng = np.random.default_rng(5)
    critic = Critic(row_width=55, cond_width=0, pac=10, rng=rng)
    assert critic.fc1.weight.shape[0] == 550
    from gaitauth.autodiff import Tensor
    rows = Tensor(rng.standard_normal((20, 55)))
    out = critic.forward(rows, Tensor(np.zeros((20, 0))))
    assert out.shape == (2, 1)
    with pytest.raises(ValueError):
        critic.forward(Tensor(rng.standard_normal((7, 55))),
                       Tensor(np.zeros((7, 0))))


def test_gradient_penalty_positive_and_finite():
    rng = np.random.default_rng(6)
    critic = Critic(row_width=8, cond_width=0, pac=2, rng=rng)
    real = rng.standard_normal((10, 16))
    fake = rng.standard_normal((10, 16))
    # joined pac-group inputs: (n_groups, pac*row_width)
    penalty = gradient_penalty(critic, real, fake, gp_lambda=10.0,
                               rng=np.random.default_rng(7))
    value = float(penalty.data)
    assert np.isfinite(value) and value >= 0.0


# ---- training and generation ------------------------------------------------------


def small_table(n=60, seed=8):
    schema = [ColumnSpec(name="c0", kind="continuous"),
              ColumnSpec(name="c1", kind="continuous")]
    rng = np.random.default_rng(seed)
    rows = np.column_stack([rng.random(n), rng.random(n)])
    users = np.array(["imp"] * n, dtype=object)
    return FeatureTable(schema=schema, rows=rows, user_ids=users)


def quick_config(**kw):
    base = dict(epochs=4, batch=20, pac=4, z_dim=8, max_modes=3)
    base.update(kw)
    return TrainConfig(**base)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch=55, pac=10)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_training_produces_finite_trace_and_samples():
    table = small_table()
    model = train_synth_model(table, config=quick_config(), seed=0)
    assert model.fitted
    assert model.loss_trace.shape == (4, 2)
    assert np.all(np.isfinite(model.loss_trace))
    out = generate(model, 30, seed=1)
    assert out.n_rows == 30
    assert out.schema == table.schema
    assert set(out.origins.tolist()) == {"gan_synth"}
    assert np.all(np.isfinite(out.rows))


def test_generation_is_deterministic_and_seed_sensitive():
    model = train_synth_model(small_table(), config=quick_config(), seed=2)
    a = generate(model, 25, seed=5)
    b = generate(model, 25, seed=5)
    np.testing.assert_array_equal(a.rows, b.rows)
    c = generate(model, 25, seed=6)
    assert not np.array_equal(a.rows, c.rows)


def test_generate_zero_rows():
    model = train_synth_model(small_table(), config=quick_config(), seed=3)
    out = generate(model, 0, seed=0)
    assert out.n_rows == 0


def test_batch_shrinks_to_pac_multiple():
    table = small_table(n=23)
    model = train_synth_model(table, config=quick_config(batch=40), seed=4)
    assert model.fitted  # 23 rows -> effective batch 20
    tiny = small_table(n=3)
    with pytest.raises(ValueError):
        train_synth_model(tiny, config=quick_config(), seed=0)


def test_training_with_discrete_column():
    schema = [ColumnSpec(name="c", kind="continuous"),
              ColumnSpec(name="d", kind="discrete", categories=("p", "q"))]
    rng = np.random.default_rng(9)
    rows = np.column_stack([rng.random(40), rng.integers(0, 2, 40).astype(float)])
    table = FeatureTable(schema=schema, rows=rows,
                         user_ids=np.array(["i"] * 40, dtype=object))
    model = train_synth_model(table, config=quick_config(epochs=3), seed=5)
    out = generate(model, 20, seed=7)
    assert set(np.unique(out.rows[:, 1]).tolist()) <= {0.0, 1.0}


def test_synth_model_round_trip(tmp_path):
    model = train_synth_model(small_table(), config=quick_config(), seed=6)
    path = tmp_path / "synth.model"
    save_synth_model(model, path)
    loaded = load_synth_model(path)
    a = generate(model, 15, seed=11)
    b = generate(loaded, 15, seed=11)
    np.testing.assert_array_equal(a.rows, b.rows)
    # resave must be byte-identical
    path2 = tmp_path / "resave.model"
    save_synth_model(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()
