"""Embedding tables and the positional-morphing fusions.

Three ways to morph the absolute-position matrix ``theta`` with the rhythm
matrix ``omega`` (both ``(..., n, d)``):

* ``bf``: element-wise sum.
* ``mf``: a perceptron applied to the row-wise concatenation ``[theta, omega]``.
* ``gf``: a sigmoid gate mixing ``tanh(h_p(theta))`` and ``tanh(h_r(omega))``.

The morphed matrix is added to the item embeddings to form the encoder input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Tensor, concat, gelu, make_rng, sigmoid, take_rows, tanh

FUSION_KINDS = ("none", "bf", "mf", "gf")
INIT_STD = 0.02


def trunc_normal(rng: np.random.Generator, shape, std: float = INIT_STD) -> np.ndarray:
    """Zero-mean normal samples, redrawn until they fall inside +-2 std."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2 * std
    return out


@dataclass
class EmbeddingTable:
    weights: Tensor

    @property
    def num_entries(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def lookup(self, indices) -> Tensor:
        return take_rows(self.weights, indices)


def embed_items(table: EmbeddingTable, item_indices) -> Tensor:
    return table.lookup(item_indices)


def embed_positions(table: EmbeddingTable, n: int) -> Tensor:
    if n > table.num_entries:
        raise ValueError(f"sequence length {n} exceeds max_len {table.num_entries}")
    return table.lookup(np.arange(n))


def embed_rhythm(table: EmbeddingTable, buckets) -> Tensor:
    return table.lookup(buckets)


def _check_same(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def _linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    return x @ weight + bias


@dataclass
class FusionParams:
    """Learnable projections of one fusion kind, keyed by checkpoint name."""

    kind: str
    dim: int
    tensors: dict[str, Tensor] = field(default_factory=dict)
    linear_only: bool = False

    def __getitem__(self, key: str) -> Tensor:
        return self.tensors["fusion." + key]


def init_fusion_params(kind: str, dim: int, seed: int = 0, linear_only: bool = False) -> FusionParams:
    """Weights ~ truncated normal(0.02), biases zero.  ``linear_only`` makes MF a single 2d->d layer."""
    if kind not in FUSION_KINDS:
        raise ValueError(f"unknown fusion kind {kind!r}; expected one of {FUSION_KINDS}")
    d = dim
    if kind == "mf":
        shapes = {"mlp.0": (2 * d, d)} if linear_only else {"mlp.0": (2 * d, d), "mlp.1": (d, d)}
    elif kind == "gf":
        shapes = {"h_p": (d, d), "h_r": (d, d), "h_c": (2 * d, d)}
    else:
        shapes = {}
    tensors = {}
    for layer, shape in shapes.items():
        w_name, b_name = f"fusion.{layer}.weight", f"fusion.{layer}.bias"
        tensors[w_name] = Tensor(trunc_normal(make_rng(seed, w_name), shape), requires_grad=True, name=w_name)
        tensors[b_name] = Tensor(np.zeros(shape[1]), requires_grad=True, name=b_name)
    return FusionParams(kind, d, tensors, linear_only and kind == "mf")


def fuse_basic(theta: Tensor, omega: Tensor) -> Tensor:
    _check_same(theta, omega, "fuse_basic")
    return theta + omega


def fuse_mlp(theta: Tensor, omega: Tensor, params: FusionParams) -> Tensor:
    _check_same(theta, omega, "fuse_mlp")
    hidden = _linear(concat([theta, omega], axis=-1), params["mlp.0.weight"], params["mlp.0.bias"])
    if params.linear_only:
        return hidden
    return _linear(gelu(hidden), params["mlp.1.weight"], params["mlp.1.bias"])


def gate(theta: Tensor, omega: Tensor, params: FusionParams) -> Tensor:
    return sigmoid(_linear(concat([theta, omega], axis=-1), params["h_c.weight"], params["h_c.bias"]))


def fuse_gated(theta: Tensor, omega: Tensor, params: FusionParams) -> Tensor:
    _check_same(theta, omega, "fuse_gated")
    theta_p = tanh(_linear(theta, params["h_p.weight"], params["h_p.bias"]))
    omega_p = tanh(_linear(omega, params["h_r.weight"], params["h_r.bias"]))
    w = gate(theta, omega, params)
    return w * theta_p + (1.0 - w) * omega_p


def fuse(theta: Tensor, omega: Tensor | None, params: FusionParams) -> Tensor:
    """Morphed position matrix for ``params.kind``; ``none`` returns ``theta`` unchanged."""
    if params.kind == "none":
        return theta
    if params.kind == "bf":
        return fuse_basic(theta, omega)
    if params.kind == "mf":
        return fuse_mlp(theta, omega, params)
    return fuse_gated(theta, omega, params)


def compose_input(psi: Tensor, morphed: Tensor) -> Tensor:
    if psi.shape[-2:] != morphed.shape[-2:]:
        raise ValueError(f"compose_input: shape mismatch {psi.shape} vs {morphed.shape}")
    return psi + morphed
