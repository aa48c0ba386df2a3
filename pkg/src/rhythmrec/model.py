"""Causal self-attention next-item model with optional rhythm fusion."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import embeddings as emb
from .numerics import Tensor, dropout, gelu, layer_norm, make_rng, softmax, take_rows

PAD_LOGIT = -1e9

PRESETS = {
    "lightsans-cfg": {"hidden_dim": 64, "inner_dim": 256},
    "sasrec-cfg": {"hidden_dim": 128, "inner_dim": 256},
}
PRESETS["sasrec-large"] = PRESETS["sasrec-cfg"]


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    bucket_count: int = 801
    num_layers: int = 2
    num_heads: int = 2
    hidden_dim: int = 64
    inner_dim: int = 256
    dropout: float = 0.5
    attention_dropout: float = 0.5
    max_len: int = 50
    fusion_kind: str = "none"
    mlp_linear_only: bool = False
    freeze_zero_rhythm: bool = False

    def __post_init__(self):
        if self.hidden_dim % self.num_heads:
            raise ValueError(f"hidden_dim {self.hidden_dim} not divisible by num_heads {self.num_heads}")
        for p in (self.dropout, self.attention_dropout):
            if not 0.0 <= p < 1.0:
                raise ValueError(f"dropout must lie in [0, 1), got {p}")
        if self.fusion_kind not in emb.FUSION_KINDS:
            raise ValueError(f"unknown fusion kind {self.fusion_kind!r}")
        if self.vocab_size < 2:
            raise ValueError("vocab_size must include padding plus at least one item")

    def to_dict(self) -> dict:
        return asdict(self)


def _layer_shapes(cfg: ModelConfig, layer: int) -> dict[str, tuple[int, ...]]:
    d, inner = cfg.hidden_dim, cfg.inner_dim
    pre = f"layers.{layer}."
    shapes = {pre + "attn_norm.gain": (d,), pre + "attn_norm.bias": (d,)}
    for proj in ("q", "k", "v", "out"):
        shapes[pre + f"attn.{proj}.weight"] = (d, d)
        shapes[pre + f"attn.{proj}.bias"] = (d,)
    shapes.update({
        pre + "ffn_norm.gain": (d,), pre + "ffn_norm.bias": (d,),
        pre + "ffn.0.weight": (d, inner), pre + "ffn.0.bias": (inner,),
        pre + "ffn.1.weight": (inner, d), pre + "ffn.1.bias": (d,),
    })
    return shapes


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    d = cfg.hidden_dim
    shapes = {"item_emb": (cfg.vocab_size, d), "pos_emb": (cfg.max_len, d)}
    if cfg.fusion_kind != "none":
        shapes["rhythm_emb"] = (cfg.bucket_count, d)
    fusion = emb.init_fusion_params(cfg.fusion_kind, d, linear_only=cfg.mlp_linear_only)
    shapes.update({n: t.shape for n, t in fusion.tensors.items()})
    for layer in range(cfg.num_layers):
        shapes.update(_layer_shapes(cfg, layer))
    shapes["final_norm.gain"] = (d,)
    shapes["final_norm.bias"] = (d,)
    return shapes


def init_params(cfg: ModelConfig, seed: int) -> dict[str, Tensor]:
    """Fresh parameters.  Each tensor draws from its own named stream, so the
    values of shared tensors do not depend on which fusion kind is configured."""
    params: dict[str, Tensor] = {}
    for name, shape in parameter_shapes(cfg).items():
        if name.endswith(".gain"):
            data = np.ones(shape)
        elif name.endswith(".bias"):
            data = np.zeros(shape)
        elif name == "rhythm_emb" and cfg.freeze_zero_rhythm:
            data = np.zeros(shape)
        else:
            data = emb.trunc_normal(make_rng(seed, name), shape)
        if name == "item_emb":
            data[0] = 0.0
        params[name] = Tensor(data, requires_grad=True, name=name)
    if "rhythm_emb" in params and cfg.freeze_zero_rhythm:
        params["rhythm_emb"].requires_grad = False
    return params


def attention_mask(mask: np.ndarray) -> np.ndarray:
    """(B, n) validity -> (B, 1, n, n) allowed-key mask.

    Query i may attend to key j <= i when j is a real position.  A padded query
    is allowed to attend to itself so that its softmax row is never empty.
    """
    n = mask.shape[-1]
    causal = np.tril(np.ones((n, n), dtype=bool))
    allowed = causal[None] & (mask[:, None, :] | np.eye(n, dtype=bool)[None])
    return allowed[:, None]


def causal_attention_block(x: Tensor, params: dict[str, Tensor], layer: int, cfg: ModelConfig,
                           allowed: np.ndarray, training: bool, rng, return_weights: bool = False):
    """Pre-norm multi-head causal self-attention with a residual connection."""
    pre = f"layers.{layer}."
    b, n, d = x.shape
    h = cfg.num_heads
    dh = d // h
    y = layer_norm(x, params[pre + "attn_norm.gain"], params[pre + "attn_norm.bias"])

    def heads(name):
        z = y @ params[pre + f"attn.{name}.weight"] + params[pre + f"attn.{name}.bias"]
        return z.reshape(b, n, h, dh).transpose(0, 2, 1, 3)

    q, k, v = heads("q"), heads("k"), heads("v")
    scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(dh))
    weights = softmax(scores, allowed)
    attn = dropout(weights, cfg.attention_dropout, training, rng)
    ctx = (attn @ v).transpose(0, 2, 1, 3).reshape(b, n, d)
    out = ctx @ params[pre + "attn.out.weight"] + params[pre + "attn.out.bias"]
    result = x + dropout(out, cfg.dropout, training, rng)
    if return_weights:
        return result, weights.data
    return result


def feed_forward_block(x: Tensor, params: dict[str, Tensor], layer: int, cfg: ModelConfig,
                       training: bool, rng) -> Tensor:
    pre = f"layers.{layer}."
    y = layer_norm(x, params[pre + "ffn_norm.gain"], params[pre + "ffn_norm.bias"])
    y = gelu(y @ params[pre + "ffn.0.weight"] + params[pre + "ffn.0.bias"])
    y = y @ params[pre + "ffn.1.weight"] + params[pre + "ffn.1.bias"]
    return x + dropout(y, cfg.dropout, training, rng)


class SeqRecModel:
    def __init__(self, cfg: ModelConfig, params: dict[str, Tensor]):
        expected = parameter_shapes(cfg)
        if set(expected) != set(params):
            missing = sorted(set(expected) - set(params))
            extra = sorted(set(params) - set(expected))
            raise ValueError(f"parameters do not match config (missing={missing}, unexpected={extra})")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ValueError(f"parameter {name!r} has shape {params[name].shape}, config expects {shape}")
        self.cfg = cfg
        self.params = params
        fusion_tensors = {n: t for n, t in params.items() if n.startswith("fusion.")}
        self.fusion = emb.FusionParams(cfg.fusion_kind, cfg.hidden_dim, fusion_tensors, cfg.mlp_linear_only)

    @classmethod
    def create(cls, cfg: ModelConfig, seed: int = 0) -> "SeqRecModel":
        return cls(cfg, init_params(cfg, seed))

    @classmethod
    def from_arrays(cls, cfg: ModelConfig, arrays: dict[str, np.ndarray]) -> "SeqRecModel":
        params = {n: Tensor(np.array(a, dtype=np.float64), requires_grad=True, name=n) for n, a in arrays.items()}
        if "rhythm_emb" in params and cfg.freeze_zero_rhythm:
            params["rhythm_emb"].requires_grad = False
        return cls(cfg, params)

    def arrays(self) -> dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self.params.items()}

    def trainable(self) -> dict[str, Tensor]:
        return {n: t for n, t in self.params.items() if t.requires_grad}

    # -- forward ----------------------------------------------------------
    def encode(self, items, buckets, mask, training: bool = False, rng=None) -> Tensor:
        """Final-layer hidden states, shape (B, n, d)."""
        items = np.atleast_2d(np.asarray(items, dtype=np.int64))
        buckets = np.atleast_2d(np.asarray(buckets, dtype=np.int64))
        mask = np.atleast_2d(np.asarray(mask, dtype=bool))
        if not items.shape == buckets.shape == mask.shape:
            raise ValueError(f"items {items.shape}, buckets {buckets.shape}, mask {mask.shape} must agree")
        b, n = items.shape
        if n > self.cfg.max_len:
            raise ValueError(f"sequence length {n} exceeds max_len {self.cfg.max_len}")
        if training and rng is None:
            raise ValueError("training forward needs a random generator")
        p = self.params
        psi = take_rows(p["item_emb"], items)
        # inputs narrower than max_len are the right-hand end of a left-padded frame
        positions = np.arange(self.cfg.max_len - n, self.cfg.max_len)
        theta = take_rows(p["pos_emb"], np.broadcast_to(positions, (b, n)))
        omega = take_rows(p["rhythm_emb"], buckets) if self.cfg.fusion_kind != "none" else None
        x = emb.compose_input(psi, emb.fuse(theta, omega, self.fusion))
        x = dropout(x, self.cfg.dropout, training, rng)
        allowed = attention_mask(mask)
        for layer in range(self.cfg.num_layers):
            x = causal_attention_block(x, p, layer, self.cfg, allowed, training, rng)
            x = feed_forward_block(x, p, layer, self.cfg, training, rng)
        return layer_norm(x, p["final_norm.gain"], p["final_norm.bias"])

    def output_logits(self, hidden: Tensor) -> Tensor:
        """Scores against the (tied) item table; the padding column is pushed to PAD_LOGIT."""
        table = self.params["item_emb"]
        logits = hidden @ table.transpose()
        pad = np.zeros(self.cfg.vocab_size)
        pad[0] = PAD_LOGIT
        return logits + pad

    def forward(self, items, buckets, mask, training: bool = False, rng=None) -> Tensor:
        """Per-position next-item logits, (B, n, vocab_size); 1-D inputs give (n, vocab_size)."""
        single = np.ndim(items) == 1
        logits = self.output_logits(self.encode(items, buckets, mask, training, rng))
        return logits.reshape(logits.shape[1:]) if single else logits

    def score_last(self, items, buckets, mask) -> np.ndarray:
        """Eval-mode scores at the last position, (B, vocab_size)."""
        hidden = self.encode(items, buckets, mask, training=False).data[:, -1, :]
        scores = hidden @ self.params["item_emb"].data.T
        scores[:, 0] = PAD_LOGIT
        return scores


def resolve_config(vocab_size: int, preset: str | None = None, **overrides) -> ModelConfig:
    values = dict(PRESETS[preset]) if preset else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ModelConfig(vocab_size=vocab_size, **values)


def with_fusion(cfg: ModelConfig, kind: str, **changes) -> ModelConfig:
    return replace(cfg, fusion_kind=kind, **changes)
