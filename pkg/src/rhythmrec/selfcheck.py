"""Finite-difference audit of the fusion ops and a tiny end-to-end model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import embeddings as emb
from .model import ModelConfig, SeqRecModel
from .numerics import Tensor, cross_entropy, make_rng
from .numerics.gradcheck import check_gradients

FUSION_TOL = 1e-4
MODEL_TOL = 1e-3


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    worst_param: str

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def _summarise(name: str, errors: dict[str, float], tol: float) -> CheckResult:
    worst = max(errors, key=errors.get)
    return CheckResult(name, errors[worst], tol, worst)


def check_fusion(kind: str, n: int = 6, d: int = 4, seed: int = 0) -> CheckResult:
    """Gradients of sum(M * R) for a random R w.r.t. both tables and all projections."""
    rng = make_rng(seed, "selfcheck", kind)
    theta_table = Tensor(rng.normal(size=(n, d)), requires_grad=True)
    omega_table = Tensor(rng.normal(size=(n + 2, d)), requires_grad=True)
    buckets = rng.integers(0, n + 2, size=n)
    weights = rng.normal(size=(n, d))
    fusion = emb.init_fusion_params(kind, d, seed=seed)
    for t in fusion.tensors.values():
        t.data = rng.normal(scale=0.5, size=t.shape)
    pos_table = emb.EmbeddingTable(theta_table)
    rhythm_table = emb.EmbeddingTable(omega_table)

    def loss():
        theta = emb.embed_positions(pos_table, n)
        omega = emb.embed_rhythm(rhythm_table, buckets)
        return (emb.fuse(theta, omega, fusion) * weights).sum()

    params = {"pos_emb": theta_table, "rhythm_emb": omega_table, **fusion.tensors}
    return _summarise(f"fusion-{kind}", check_gradients(loss, params), FUSION_TOL)


def tiny_config(kind: str) -> ModelConfig:
    return ModelConfig(vocab_size=10, bucket_count=6, num_layers=1, num_heads=1, hidden_dim=8, inner_dim=16,
                       dropout=0.0, attention_dropout=0.0, max_len=4, fusion_kind=kind)


def check_model(kind: str, seed: int = 0) -> CheckResult:
    """Every parameter of a d=8, n=4, vocab=10 single-layer model under the masked CE loss."""
    model = SeqRecModel.create(tiny_config(kind), seed)
    rng = make_rng(seed, "selfcheck-model", kind)
    for name, t in model.params.items():
        # move away from the degenerate init (unit gains, zero biases) so every path carries signal
        t.data = t.data + rng.normal(scale=0.3, size=t.shape)
    items = np.array([[3, 1, 4, 1], [0, 5, 9, 2]])
    buckets = np.array([[0, 2, 5, 1], [0, 0, 3, 4]])
    mask = items > 0
    targets = np.array([[1, 4, 1, 5], [0, 9, 2, 6]])

    def loss():
        logits = model.forward(items, buckets, mask)
        return cross_entropy(logits.reshape(-1, 10), targets.reshape(-1), mask.reshape(-1))

    return _summarise(f"model-{kind}", check_gradients(loss, model.params), MODEL_TOL)


def run_selfcheck() -> list[CheckResult]:
    results = [check_fusion(kind) for kind in ("bf", "mf", "gf")]
    results += [check_model(kind) for kind in ("none", "bf", "mf", "gf")]
    return results
