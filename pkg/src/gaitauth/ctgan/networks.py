"""Generator and pac-critic networks for the tabular GAN.

Generator (residual-by-concatenation, widths fixed by the architecture):
    h0 = z (+) cond
    h1 = h0 (+) relu(batchnorm(fc: |cond|+|z|        -> 256))
    h2 = h1 (+) relu(batchnorm(fc: |cond|+|z|+256    -> 256))
    heads read width |cond|+|z|+512: tanh for each alpha scalar,
    gumbel-softmax (tau 0.2) for each mode/category block.

Critic: pac rows and their conds are concatenated into one input of width
pac*(|r|+|cond|), followed by two (fc -> leaky 0.2 -> dropout 0.5) layers of
width 256 and a final fc to one scalar.
"""

from __future__ import annotations

import numpy as np

from .. import nn
from ..autodiff import Tensor, concat, leaky_relu, narrow, relu, tanh

HIDDEN = 256


class Generator:
    def __init__(self, z_dim: int, cond_width: int, spans,
                 rng: np.random.Generator):
        self.z_dim = z_dim
        self.cond_width = cond_width
        self.spans = list(spans)
        self.encoded_width = sum(s.width for s in self.spans)
        in0 = z_dim + cond_width
        self.fc1 = nn.Linear(in0, HIDDEN, rng)
        self.bn1 = nn.BatchNorm1d(HIDDEN)
        self.fc2 = nn.Linear(in0 + HIDDEN, HIDDEN, rng)
        self.bn2 = nn.BatchNorm1d(HIDDEN)
        self.head = nn.Linear(in0 + 2 * HIDDEN, self.encoded_width, rng)

    def parameters(self):
        return (self.fc1.parameters() + self.bn1.parameters()
                + self.fc2.parameters() + self.bn2.parameters()
                + self.head.parameters())

    def forward(self, z: Tensor, cond: Tensor, tau: float,
                rng: np.random.Generator):
        """Soft encoded rows plus the raw head logits (for the cond loss)."""
        h0 = concat([z, cond], axis=1) if self.cond_width else z
        h1 = concat([h0, relu(self.bn1(self.fc1(h0)))], axis=1)
        h2 = concat([h1, relu(self.bn2(self.fc2(h1)))], axis=1)
        logits = self.head(h2)
        pieces = []
        for span in self.spans:
            block = narrow(logits, 1, span.start, span.width)
            if span.kind == "alpha":
                pieces.append(tanh(block))
            else:
                pieces.append(nn.gumbel_softmax(block, tau, rng))
        return concat(pieces, axis=1), logits


class Critic:
    def __init__(self, row_width: int, cond_width: int, pac: int,
                 rng: np.random.Generator, dropout_rate: float = 0.5,
                 leak: float = 0.2):
        self.row_width = row_width
        self.cond_width = cond_width
        self.pac = pac
        self.dropout_rate = dropout_rate
        self.leak = leak
        in0 = pac * (row_width + cond_width)
        self.fc1 = nn.Linear(in0, HIDDEN, rng)
        self.fc2 = nn.Linear(HIDDEN, HIDDEN, rng)
        self.fc3 = nn.Linear(HIDDEN, 1, rng)

    def parameters(self):
        return (self.fc1.parameters() + self.fc2.parameters()
                + self.fc3.parameters())

    def forward_joined(self, joined: Tensor, rng: np.random.Generator = None,
                       training: bool = False) -> Tensor:
        """Score pre-flattened pac groups: (n_groups, pac*(|r|+|cond|)) -> (n_groups, 1)."""
        h = leaky_relu(self.fc1(joined), self.leak)
        h = nn.dropout(h, self.dropout_rate, rng, training)
        h = leaky_relu(self.fc2(h), self.leak)
        h = nn.dropout(h, self.dropout_rate, rng, training)
        return self.fc3(h)

    def join(self, rows: Tensor, cond: Tensor) -> Tensor:
        """Concatenate rows with conds and flatten pac consecutive rows."""
        batch = rows.shape[0]
        if batch % self.pac:
            raise ValueError(f"batch {batch} not divisible by pac {self.pac}")
        x = concat([rows, cond], axis=1) if self.cond_width else rows
        return x.reshape(batch // self.pac, self.pac * (self.row_width + self.cond_width))

    def forward(self, rows: Tensor, cond: Tensor, rng: np.random.Generator = None,
                training: bool = False) -> Tensor:
        return self.forward_joined(self.join(rows, cond), rng, training)


def critic_forward(critic: Critic, rows, conds) -> float:
    """Score exactly one pac group of encoded rows (evaluation mode)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] != critic.pac:
        raise ValueError(f"expected exactly pac={critic.pac} rows, got {rows.shape[0]}")
    conds = np.asarray(conds, dtype=np.float64).reshape(critic.pac, critic.cond_width)
    value = critic.forward(Tensor(rows), Tensor(conds), rng=None, training=False)
    return float(value.data[0, 0])
