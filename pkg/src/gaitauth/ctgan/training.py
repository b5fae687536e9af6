"""Wasserstein-gradient-penalty training of the tabular GAN, and sampling.

One model learns one table of real impostor feature rows.  Per step the
critic sees pac-grouped real and generated encoded rows (with their
conditional vectors when discrete columns exist) and is regularized by the
gradient penalty lambda * (||grad_xhat C(xhat)||_2 - 1)^2 computed on
per-group interpolates; the generator minimizes -E[C(fake)] plus, when
conditioning, the cross-entropy between each row's requested category and
the corresponding generated logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn, serialize
from ..autodiff import Tensor, grad, logsumexp, mul, narrow, sqrt, tsum
from ..dataio import ORIGIN_GAN, ColumnSpec, FeatureTable
from .conditional import (CondSampler, build_cond_sampler,
                          matching_real_indices, sample_cond_batch,
                          sample_generation_cond_batch)
from .encoding import build_layout, decode_rows, encode_rows
from .mixture import ColumnMixture, ModeNormalizer, fit_mode_normalizer
from .networks import Critic, Generator


@dataclass(frozen=True)
class TrainConfig:
    """Training recipe; all knobs config-exposed, batch must be pac-divisible."""

    epochs: int = 300
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.9
    batch: int = 500
    pac: int = 10
    z_dim: int = 128
    gumbel_tau: float = 0.2
    gp_lambda: float = 10.0
    critic_steps: int = 1
    max_modes: int = 10
    weight_decay: float = 1e-6

    def __post_init__(self):
        if self.batch % self.pac:
            raise ValueError("batch must be divisible by pac")
        if self.epochs < 1 or self.batch < 1 or self.pac < 1 or self.z_dim < 1:
            raise ValueError("epochs, batch, pac, z_dim must be positive")


@dataclass
class SynthModel:
    """Fitted tabular GAN: encoders, cond sampler, networks, loss trace."""

    schema: list
    normalizer: ModeNormalizer
    cond_sampler: CondSampler
    generator: Generator
    critic: Critic
    config: TrainConfig
    loss_trace: np.ndarray = None  # (epochs, 2): critic loss, generator loss
    fitted: bool = False


def _interpolate_groups(real: np.ndarray, fake: np.ndarray, pac: int,
                        rng: np.random.Generator) -> np.ndarray:
    """One uniform coefficient per pac group, broadcast across the group."""
    n, width = real.shape
    u = rng.random((n // pac, 1, 1))
    u = np.broadcast_to(u, (n // pac, pac, width)).reshape(n, width)
    return u * real + (1.0 - u) * fake


def gradient_penalty(critic: Critic, real_joined: np.ndarray,
                     fake_joined: np.ndarray, gp_lambda: float,
                     rng: np.random.Generator) -> Tensor:
    """Penalty on per-group interpolates of pre-joined critic inputs.

    The critic runs without dropout here so the penalized function is the
    one actually evaluated at the interpolates; the result stays connected
    to the critic parameters for the outer backward pass.
    """
    n_groups, width = real_joined.shape
    u = rng.random((n_groups, 1))
    interp = Tensor(u * real_joined + (1.0 - u) * fake_joined)
    scores = critic.forward_joined(interp, rng=None, training=False)
    g = grad(tsum(scores), interp, create_graph=True)
    norms = sqrt(tsum(mul(g, g), axis=1))
    deviation = norms - 1.0
    return tsum(mul(deviation, deviation)) * (gp_lambda / n_groups)


def _cond_cross_entropy(logits: Tensor, cond: np.ndarray, which: np.ndarray,
                        sampler: CondSampler, spans) -> Tensor:
    """Mean cross-entropy between each row's requested category and the
    generated logits of the chosen discrete column."""
    n = cond.shape[0]
    total = Tensor(0.0)
    category_spans = [s for s in spans if s.kind == "category"]
    for d, span in enumerate(category_spans):
        rows_mask = (which == d).astype(np.float64)
        if rows_mask.sum() == 0:
            continue
        offset = sampler.category_offsets[d]
        onehot = cond[:, offset:offset + span.width]
        block = narrow(logits, 1, span.start, span.width)
        ce_rows = logsumexp(block, axis=1) - tsum(mul(block, Tensor(onehot)), axis=1)
        total = total + tsum(mul(ce_rows, Tensor(rows_mask)))
    return total * (1.0 / n)


def train_synth_model(impostor_table: FeatureTable, config: TrainConfig,
                      seed: int) -> SynthModel:
    """Fit the GAN on real impostor rows; deterministic per seed."""
    rows = impostor_table.rows
    schema = impostor_table.schema
    n = rows.shape[0]
    if n < config.pac:
        raise ValueError(f"need at least pac={config.pac} rows, got {n}")
    batch = min(config.batch, (n // config.pac) * config.pac)

    rng = np.random.default_rng(seed)
    normalizer = fit_mode_normalizer(rows, schema, max_modes=config.max_modes,
                                     seed=seed)
    spans, encoded_width = build_layout(normalizer, schema)
    encoded = encode_rows(rows, normalizer, schema)
    sampler = build_cond_sampler(rows, schema)

    generator = Generator(config.z_dim, sampler.cond_width, spans, rng)
    critic = Critic(encoded_width, sampler.cond_width, config.pac, rng)
    g_params = generator.parameters()
    c_params = critic.parameters()
    opt_g = nn.Adam(g_params, lr=config.learning_rate,
                    betas=(config.beta1, config.beta2),
                    weight_decay=config.weight_decay)
    opt_c = nn.Adam(c_params, lr=config.learning_rate,
                    betas=(config.beta1, config.beta2),
                    weight_decay=config.weight_decay)

    steps_per_epoch = max(n // batch, 1)
    trace = np.zeros((config.epochs, 2))
    for epoch in range(config.epochs):
        d_losses, g_losses = [], []
        for _ in range(steps_per_epoch):
            for _ in range(config.critic_steps):
                cond, which, cats = sample_cond_batch(sampler, batch, rng)
                z = rng.standard_normal((batch, config.z_dim))
                fake_soft, _ = generator.forward(Tensor(z), Tensor(cond),
                                                 config.gumbel_tau, rng)
                fake_data = fake_soft.data  # critic step: generator is frozen
                real_idx = matching_real_indices(sampler, which, cats, n, rng)
                real_data = encoded[real_idx]

                real_joined = critic.join(Tensor(real_data), Tensor(cond))
                fake_joined = critic.join(Tensor(fake_data), Tensor(cond))
                d_real = critic.forward_joined(real_joined, rng, training=True)
                d_fake = critic.forward_joined(fake_joined, rng, training=True)
                penalty = gradient_penalty(critic, real_joined.data,
                                           fake_joined.data, config.gp_lambda,
                                           rng)
                loss_d = d_fake.mean() - d_real.mean() + penalty
                opt_c.step(grad(loss_d, c_params))
                d_losses.append(float(loss_d.data))

            cond, which, cats = sample_cond_batch(sampler, batch, rng)
            z = rng.standard_normal((batch, config.z_dim))
            fake_soft, logits = generator.forward(Tensor(z), Tensor(cond),
                                                  config.gumbel_tau, rng)
            d_fake = critic.forward(fake_soft, Tensor(cond), rng, training=True)
            loss_g = -d_fake.mean()
            if sampler.has_discrete:
                loss_g = loss_g + _cond_cross_entropy(logits, cond, which,
                                                      sampler, spans)
            opt_g.step(grad(loss_g, g_params))
            g_losses.append(float(loss_g.data))
        trace[epoch, 0] = float(np.mean(d_losses))
        trace[epoch, 1] = float(np.mean(g_losses))
        if not np.all(np.isfinite(trace[epoch])):
            raise FloatingPointError(f"training diverged at epoch {epoch}")

    return SynthModel(schema=schema, normalizer=normalizer, cond_sampler=sampler,
                      generator=generator, critic=critic, config=config,
                      loss_trace=trace, fitted=True)


def generate(model: SynthModel, count: int, seed: int,
             user_id: str = "_synth") -> FeatureTable:
    """Sample `count` decoded rows; deterministic per seed, origin gan_synth."""
    if not model.fitted:
        raise ValueError("cannot generate from an unfitted model")
    if count < 0:
        raise ValueError("count must be >= 0")
    schema = model.schema
    if count == 0:
        return FeatureTable(schema=schema, rows=np.zeros((0, len(schema))),
                            user_ids=np.asarray([], dtype=object),
                            origins=np.asarray([], dtype=object))
    rng = np.random.default_rng(seed)
    batch = model.config.batch
    chunks = []
    produced = 0
    while produced < count:
        z = rng.standard_normal((batch, model.config.z_dim))
        cond = sample_generation_cond_batch(model.cond_sampler, batch, rng)
        soft, _ = model.generator.forward(Tensor(z), Tensor(cond),
                                          model.config.gumbel_tau, rng)
        chunks.append(decode_rows(soft.data, model.normalizer, schema))
        produced += batch
    rows = np.concatenate(chunks, axis=0)[:count]
    return FeatureTable(schema=schema, rows=rows,
                        user_ids=np.asarray([user_id] * count, dtype=object),
                        origins=np.asarray([ORIGIN_GAN] * count, dtype=object))


# ---- serialization -----------------------------------------------------------


def save_synth_model(model: SynthModel, path) -> None:
    meta = {
        "format": "gaitauth-synthmodel",
        "version": 1,
        "schema": [
            {"name": c.name, "kind": c.kind, "categories": list(c.categories)}
            for c in model.schema
        ],
        "config": {
            "epochs": model.config.epochs,
            "learning_rate": model.config.learning_rate,
            "beta1": model.config.beta1,
            "beta2": model.config.beta2,
            "batch": model.config.batch,
            "pac": model.config.pac,
            "z_dim": model.config.z_dim,
            "gumbel_tau": model.config.gumbel_tau,
            "gp_lambda": model.config.gp_lambda,
            "critic_steps": model.config.critic_steps,
            "max_modes": model.config.max_modes,
            "weight_decay": model.config.weight_decay,
        },
        "cond": {
            "discrete_columns": list(model.cond_sampler.discrete_columns),
            "category_offsets": list(model.cond_sampler.category_offsets),
            "cond_width": model.cond_sampler.cond_width,
            "log_weights": [list(w) for w in model.cond_sampler.log_weights],
            "raw_weights": [list(w) for w in model.cond_sampler.raw_weights],
        },
        "mixture_columns": [
            j for j, c in enumerate(model.schema) if c.kind == "continuous"
        ],
    }
    arrays = {}
    for j, mix in enumerate(model.normalizer.mixtures):
        if mix is None:
            continue
        arrays[f"mix{j:03d}_means"] = mix.means
        arrays[f"mix{j:03d}_stds"] = mix.stds
        arrays[f"mix{j:03d}_weights"] = mix.weights
    for tag, params in (("gen", model.generator.parameters()),
                        ("crit", model.critic.parameters())):
        for i, p in enumerate(params):
            arrays[f"{tag}{i:02d}"] = p.data
    meta["loss_trace_rows"] = int(model.loss_trace.shape[0])
    arrays["loss_trace"] = model.loss_trace
    serialize.save_blobs(path, meta, arrays)


def load_synth_model(path) -> SynthModel:
    meta, arrays = serialize.load_blobs(path)
    if meta.get("format") != "gaitauth-synthmodel":
        raise ValueError(f"{path}: not a synth-model file")
    schema = [
        ColumnSpec(name=c["name"], kind=c["kind"],
                   categories=tuple(c["categories"]))
        for c in meta["schema"]
    ]
    config = TrainConfig(**meta["config"])
    mixtures = []
    for j, col in enumerate(schema):
        if col.kind == "continuous":
            mixtures.append(ColumnMixture(means=arrays[f"mix{j:03d}_means"],
                                          stds=arrays[f"mix{j:03d}_stds"],
                                          weights=arrays[f"mix{j:03d}_weights"]))
        else:
            mixtures.append(None)
    normalizer = ModeNormalizer(mixtures=tuple(mixtures))
    cond_meta = meta["cond"]
    sampler = CondSampler(
        discrete_columns=tuple(cond_meta["discrete_columns"]),
        category_offsets=tuple(cond_meta["category_offsets"]),
        cond_width=cond_meta["cond_width"],
        log_weights=tuple(tuple(w) for w in cond_meta["log_weights"]),
        raw_weights=tuple(tuple(w) for w in cond_meta["raw_weights"]),
        matching_rows=(),  # training-only state; not persisted
    )
    spans, encoded_width = build_layout(normalizer, schema)
    rng = np.random.default_rng(0)  # weights overwritten below
    generator = Generator(config.z_dim, sampler.cond_width, spans, rng)
    critic = Critic(encoded_width, sampler.cond_width, config.pac, rng)
    for tag, params in (("gen", generator.parameters()),
                        ("crit", critic.parameters())):
        for i, p in enumerate(params):
            p.data = arrays[f"{tag}{i:02d}"].copy()
    return SynthModel(schema=schema, normalizer=normalizer, cond_sampler=sampler,
                      generator=generator, critic=critic, config=config,
                      loss_trace=arrays["loss_trace"], fitted=True)
