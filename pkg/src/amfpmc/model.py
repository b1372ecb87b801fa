"""Shared-embedding factorization network over drug pairs.

Both input slots read the same embedding matrix E and the same per-drug bias
vector b, so the network cannot decompose the symmetric adjacency matrix
asymmetrically. For a pair (i, j):

    h        = drop(E[i]) * drop(E[j])          elementwise product
    logits_k = (W h)_k + c_k + u_k * (b[i] + b[j])
    probs    = softmax(logits)

Dropout masks are inverted and drawn independently per slot during training
only; with training off the forward pass is exactly symmetric in (i, j).
Training minimizes class-weighted cross-entropy against soft targets with
hand-written gradients and a plain Adam optimizer, all in float64 so runs are
bitwise reproducible given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (
    EmptyBatchError,
    InvalidDimensionsError,
    SelfLoopError,
    ShapeMismatchError,
)
from .graph import Roster

LOG_CLAMP = 1e-12
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Hyperparameters:
    """Training knobs; defaults follow the tuned holdout configuration."""

    embedding_dim: int = 512
    dropout: float = 0.3
    epochs: int = 15
    batch_size: int = 256
    learning_rate: float = 0.01
    alpha: float = 0.6
    seed: int = 0
    balance_classes: bool = True

    def validate(self) -> "Hyperparameters":
        if self.embedding_dim < 1:
            raise InvalidDimensionsError("embedding_dim must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidDimensionsError("dropout must be in [0, 1)")
        if self.epochs < 0:
            raise InvalidDimensionsError("epochs must be >= 0")
        if self.batch_size < 1:
            raise InvalidDimensionsError("batch_size must be >= 1")
        if self.learning_rate <= 0.0:
            raise InvalidDimensionsError("learning_rate must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidDimensionsError("alpha must be in [0, 1]")
        return self

    def with_(self, **changes) -> "Hyperparameters":
        return replace(self, **changes)


@dataclass
class ModelParameters:
    """All trainable arrays; embeddings and drug_bias are shared by both slots."""

    embeddings: np.ndarray    # (n, d)
    drug_bias: np.ndarray     # (n,)
    class_proj: np.ndarray    # (K, d)
    class_bias: np.ndarray    # (K,)
    bias_coupling: np.ndarray  # (K,)

    @property
    def n_drugs(self) -> int:
        return self.embeddings.shape[0]

    @property
    def n_classes(self) -> int:
        return self.class_proj.shape[0]

    @property
    def embedding_dim(self) -> int:
        return self.embeddings.shape[1]

    def arrays(self) -> list[np.ndarray]:
        return [self.embeddings, self.drug_bias, self.class_proj, self.class_bias, self.bias_coupling]

    def copy(self) -> "ModelParameters":
        return ModelParameters(*(a.copy() for a in self.arrays()))


@dataclass
class Gradients:
    """Loss gradients, same shapes as ModelParameters (dense, zeros elsewhere)."""

    embeddings: np.ndarray
    drug_bias: np.ndarray
    class_proj: np.ndarray
    class_bias: np.ndarray
    bias_coupling: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [self.embeddings, self.drug_bias, self.class_proj, self.class_bias, self.bias_coupling]


@dataclass
class OptimizerState:
    """Adam first/second moment accumulators plus the step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParameters) -> "OptimizerState":
        return cls(
            m=[np.zeros_like(a) for a in params.arrays()],
            v=[np.zeros_like(a) for a in params.arrays()],
        )


def init_model(
    n_drugs: int,
    n_classes: int,
    hp: Hyperparameters,
    rng: Optional[np.random.Generator] = None,
) -> ModelParameters:
    """Seeded initialization: E, W uniform on +-1/sqrt(d); b, c zero; u one."""
    if n_drugs < 2:
        raise InvalidDimensionsError("need at least 2 drugs")
    if n_classes < 2:
        raise InvalidDimensionsError("need at least 2 classes")
    hp.validate()
    if rng is None:
        rng = np.random.default_rng(hp.seed)
    d = hp.embedding_dim
    scale = 1.0 / np.sqrt(d)
    return ModelParameters(
        embeddings=rng.uniform(-scale, scale, size=(n_drugs, d)),
        drug_bias=np.zeros(n_drugs, dtype=np.float64),
        class_proj=rng.uniform(-scale, scale, size=(n_classes, d)),
        class_bias=np.zeros(n_classes, dtype=np.float64),
        bias_coupling=np.ones(n_classes, dtype=np.float64),
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _as_index_arrays(i, j) -> tuple[np.ndarray, np.ndarray]:
    I = np.atleast_1d(np.asarray(i, dtype=np.int64))
    J = np.atleast_1d(np.asarray(j, dtype=np.int64))
    if I.shape != J.shape:
        raise ShapeMismatchError("pair index arrays differ in shape")
    if np.any(I == J):
        raise SelfLoopError("forward pass on a self pair")
    return I, J


def _dropout_masks(shape, dropout: float, rng: np.random.Generator) -> np.ndarray:
    keep = 1.0 - dropout
    return (rng.random(shape) >= dropout) / keep


def forward_batch(
    params: ModelParameters,
    i,
    j,
    dropout: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Logits for a batch of pairs, shape (B, K).

    dropout > 0 requires an rng and is meant for training steps only;
    inference (the default) is deterministic and symmetric in (i, j).
    """
    I, J = _as_index_arrays(i, j)
    Ei = params.embeddings[I]
    Ej = params.embeddings[J]
    if dropout > 0.0:
        if rng is None:
            raise ValueError("dropout requires an rng")
        Ei = Ei * _dropout_masks(Ei.shape, dropout, rng)
        Ej = Ej * _dropout_masks(Ej.shape, dropout, rng)
    h = Ei * Ej
    pair_bias = params.drug_bias[I] + params.drug_bias[J]
    return h @ params.class_proj.T + params.class_bias + params.bias_coupling * pair_bias[:, None]


def forward(params: ModelParameters, i: int, j: int) -> np.ndarray:
    """Inference logits for one pair, shape (K,)."""
    return forward_batch(params, [i], [j])[0]


def predict(params: ModelParameters, i: int, j: int) -> np.ndarray:
    """Softmax class distribution for one pair; symmetric in (i, j)."""
    return softmax(forward(params, i, j))


def predict_batch(params: ModelParameters, i, j) -> np.ndarray:
    """Softmax class distributions for a batch of pairs, shape (B, K)."""
    return softmax(forward_batch(params, i, j))


def _sample_weights(targets: np.ndarray, class_weights: np.ndarray) -> np.ndarray:
    # per-sample weight is looked up at the argmax of the (possibly soft) target
    return class_weights[np.argmax(targets, axis=1)]


def loss(probs: np.ndarray, targets: np.ndarray, class_weights: np.ndarray) -> float:
    """Mean over the batch of w[argmax t] * cross_entropy(t, p)."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape:
        raise ShapeMismatchError(f"probs {probs.shape} vs targets {targets.shape}")
    if class_weights.shape != (probs.shape[1],):
        raise ShapeMismatchError("class_weights length must equal the class count")
    ce = -(targets * np.log(np.maximum(probs, LOG_CLAMP))).sum(axis=1)
    return float(np.mean(_sample_weights(targets, class_weights) * ce))


def backward(
    params: ModelParameters,
    i,
    j,
    targets: np.ndarray,
    class_weights: np.ndarray,
    dropout: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, Gradients]:
    """Loss and exact analytic gradients for one mini-batch.

    Shared parameters accumulate contributions from both slots; embedding rows
    and bias entries of drugs absent from the batch keep zero gradient.
    """
    I, J = _as_index_arrays(i, j)
    if I.size == 0:
        raise EmptyBatchError("empty batch")
    T = np.asarray(targets, dtype=np.float64)
    if T.shape != (I.size, params.n_classes):
        raise ShapeMismatchError(f"targets shape {T.shape}, expected {(I.size, params.n_classes)}")
    B = I.size

    Ei = params.embeddings[I]
    Ej = params.embeddings[J]
    if dropout > 0.0:
        if rng is None:
            raise ValueError("dropout requires an rng")
        mask_i = _dropout_masks(Ei.shape, dropout, rng)
        mask_j = _dropout_masks(Ej.shape, dropout, rng)
    else:
        mask_i = mask_j = None
    Ei_d = Ei * mask_i if mask_i is not None else Ei
    Ej_d = Ej * mask_j if mask_j is not None else Ej

    h = Ei_d * Ej_d
    pair_bias = params.drug_bias[I] + params.drug_bias[J]
    logits = h @ params.class_proj.T + params.class_bias + params.bias_coupling * pair_bias[:, None]
    P = softmax(logits)

    w = _sample_weights(T, class_weights)
    ce = -(T * np.log(np.maximum(P, LOG_CLAMP))).sum(axis=1)
    batch_loss = float(np.mean(w * ce))

    # d(mean loss)/dlogits; softmax-cross-entropy collapses to w * (p - t) / B
    G = (w[:, None] * (P - T)) / B

    grad_W = G.T @ h
    grad_c = G.sum(axis=0)
    grad_u = (G * pair_bias[:, None]).sum(axis=0)

    dh = G @ params.class_proj
    dEi = dh * Ej_d
    dEj = dh * Ei_d
    if mask_i is not None:
        dEi = dEi * mask_i
        dEj = dEj * mask_j
    grad_E = np.zeros_like(params.embeddings)
    np.add.at(grad_E, I, dEi)
    np.add.at(grad_E, J, dEj)

    db_pair = G @ params.bias_coupling
    grad_b = np.zeros_like(params.drug_bias)
    np.add.at(grad_b, I, db_pair)
    np.add.at(grad_b, J, db_pair)

    return batch_loss, Gradients(grad_E, grad_b, grad_W, grad_c, grad_u)


def adam_step(
    params: ModelParameters,
    grads: Gradients,
    state: OptimizerState,
    learning_rate: float,
) -> tuple[ModelParameters, OptimizerState]:
    """One in-place Adam update with standard constants and bias correction."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for p, g, m, v in zip(params.arrays(), grads.arrays(), state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatchError("gradient shape disagrees with parameter shape")
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * np.square(g)
        p -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return params, state


def gradient_check(
    params: ModelParameters,
    i,
    j,
    targets: np.ndarray,
    class_weights: np.ndarray,
    eps: float = 1e-5,
) -> float:
    """Max relative error of analytic vs central finite-difference gradients.

    Dropout must be off (the loss has to be a deterministic function of the
    parameters). Relative error uses a small absolute floor so that exactly
    untouched parameters compare as zero against zero.
    """
    _, analytic = backward(params, i, j, targets, class_weights)

    def loss_at() -> float:
        probs = predict_batch(params, i, j)
        return loss(probs, targets, class_weights)

    worst = 0.0
    for arr, g in zip(params.arrays(), analytic.arrays()):
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss_at()
            flat[idx] = orig - eps
            down = loss_at()
            flat[idx] = orig
            numeric = (up - down) / (2.0 * eps)
            denom = max(abs(gflat[idx]) + abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[idx] - numeric) / denom)
    return worst


def export_embeddings(params: ModelParameters, roster: Roster) -> tuple[list[str], np.ndarray]:
    """External ids paired with a copy of the embedding matrix, roster order."""
    if len(roster) != params.n_drugs:
        raise ShapeMismatchError("roster size disagrees with the embedding row count")
    return roster.external_ids, params.embeddings.copy()
