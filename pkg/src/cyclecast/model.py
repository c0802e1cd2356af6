"""Compact encoder-decoder transformer forecasting residual cycle rows.

The encoder reads H rows of residual+metadata features, the decoder reads
F rows of RHP+metadata and the encoder hidden state, and a zero-initialized
projection emits all F residual rows in a single pass. No attention mask is
used anywhere, so a fresh model predicts exactly zero residuals and falls
back to the RHP baseline.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, asdict, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, DimensionError, InputError
from .frames import WindowSample
from .series import NormStats

CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    cycle_len: int = 24  # D
    meta_width: int = 9  # M
    history_len: int = 21  # H, in cycles
    forecast_len: int = 7  # F, in cycles
    d_model: int = 64
    n_heads: int = 4
    n_encoder_layers: int = 1
    n_decoder_layers: int = 1
    d_ff: int = 128
    dropout: float = 0.1
    use_positional_encoding: bool = True
    decoder_self_attention: bool = True
    seed: int = 0

    def __post_init__(self):
        extents = (self.cycle_len, self.meta_width, self.history_len,
                   self.forecast_len, self.d_model, self.n_heads,
                   self.n_encoder_layers, self.n_decoder_layers, self.d_ff)
        if any(e < 1 for e in extents[:2] + extents[4:]):
            raise ConfigError(f"all extents must be positive: {self}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}"
            )

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def input_width(self) -> int:
        return self.cycle_len + self.meta_width


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def sinusoidal_encoding(length: int, width: int) -> np.ndarray:
    position = np.arange(length)[:, None]
    dim = np.arange(0, width, 2)[None, :]
    angle = position / np.power(10000.0, dim / width)
    enc = np.zeros((length, width))
    enc[:, 0::2] = np.sin(angle)
    enc[:, 1::2] = np.cos(angle[:, : enc[:, 1::2].shape[1]])
    return enc


class ForecastModel:
    """Parameter container plus the forward computation."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.params: dict[str, T.Tensor] = {}
        rng = np.random.default_rng(cfg.seed)
        d, dm, dff = cfg.input_width, cfg.d_model, cfg.d_ff

        self._add("enc_embed.w", _glorot(rng, d, dm))
        self._add("enc_embed.b", np.zeros(dm))
        self._add("dec_embed.w", _glorot(rng, d, dm))
        self._add("dec_embed.b", np.zeros(dm))

        for i in range(cfg.n_encoder_layers):
            self._attention_params(rng, f"enc.{i}.self_attn")
            self._ln_params(f"enc.{i}.ln1")
            self._ff_params(rng, f"enc.{i}.ff", dm, dff)
            self._ln_params(f"enc.{i}.ln2")
        for i in range(cfg.n_decoder_layers):
            if cfg.decoder_self_attention:
                self._attention_params(rng, f"dec.{i}.self_attn")
                self._ln_params(f"dec.{i}.ln1")
            self._attention_params(rng, f"dec.{i}.cross_attn")
            self._ln_params(f"dec.{i}.ln2")
            self._ff_params(rng, f"dec.{i}.ff", dm, dff)
            self._ln_params(f"dec.{i}.ln3")

        # zero init keeps the untrained forecast exactly at the RHP baseline
        self._add("out_proj.w", np.zeros((dm, cfg.cycle_len)))
        self._add("out_proj.b", np.zeros(cfg.cycle_len))

        self._pos_enc = sinusoidal_encoding(
            max(cfg.history_len, cfg.forecast_len), dm
        )

    def _add(self, name: str, value: np.ndarray):
        self.params[name] = T.Tensor(value, requires_grad=True)

    def _attention_params(self, rng, prefix: str):
        dm = self.cfg.d_model
        for part in ("q", "k", "v", "o"):
            self._add(f"{prefix}.w{part}", _glorot(rng, dm, dm))
            self._add(f"{prefix}.b{part}", np.zeros(dm))

    def _ff_params(self, rng, prefix: str, dm: int, dff: int):
        self._add(f"{prefix}.w1", _glorot(rng, dm, dff))
        self._add(f"{prefix}.b1", np.zeros(dff))
        self._add(f"{prefix}.w2", _glorot(rng, dff, dm))
        self._add(f"{prefix}.b2", np.zeros(dm))

    def _ln_params(self, prefix: str):
        self._add(f"{prefix}.gain", np.ones(self.cfg.d_model))
        self._add(f"{prefix}.bias", np.zeros(self.cfg.d_model))

    @property
    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    # -- forward -------------------------------------------------------------

    def multi_head_attention(self, prefix: str, q_in: T.Tensor,
                             kv_in: T.Tensor) -> T.Tensor:
        """Scaled dot-product attention over cycle rows, no mask."""
        cfg = self.cfg
        p = self.params

        def heads(x):
            # (B, S, dm) -> (B, h, S, d_head)
            b, s = x.shape[0], x.shape[1]
            x = T.reshape(x, (b, s, cfg.n_heads, cfg.d_head))
            return T.transpose(x, (0, 2, 1, 3))

        q = heads(T.linear(q_in, p[f"{prefix}.wq"], p[f"{prefix}.bq"]))
        k = heads(T.linear(kv_in, p[f"{prefix}.wk"], p[f"{prefix}.bk"]))
        v = heads(T.linear(kv_in, p[f"{prefix}.wv"], p[f"{prefix}.bv"]))

        scores = T.mul(T.matmul(q, T.transpose(k, (0, 1, 3, 2))),
                       1.0 / np.sqrt(cfg.d_head))
        weights = T.softmax(scores, axis=-1)
        mixed = T.matmul(weights, v)  # (B, h, S_q, d_head)
        b, s = q_in.shape[0], q_in.shape[1]
        merged = T.reshape(T.transpose(mixed, (0, 2, 1, 3)),
                           (b, s, cfg.d_model))
        return T.linear(merged, p[f"{prefix}.wo"], p[f"{prefix}.bo"])

    def _sublayer(self, x, sub_out, ln_prefix, training, rng):
        p = self.params
        dropped = T.dropout(sub_out, self.cfg.dropout, training, rng)
        return T.layer_norm(T.add(x, dropped),
                            p[f"{ln_prefix}.gain"], p[f"{ln_prefix}.bias"])

    def _feed_forward(self, prefix: str, x: T.Tensor) -> T.Tensor:
        p = self.params
        hidden = T.relu(T.linear(x, p[f"{prefix}.w1"], p[f"{prefix}.b1"]))
        return T.linear(hidden, p[f"{prefix}.w2"], p[f"{prefix}.b2"])

    def forward(self, encoder_input, decoder_input, training: bool = False,
                rng: np.random.Generator | None = None) -> T.Tensor:
        """Single-pass forecast of residual rows.

        encoder_input: (B, H, D+M); decoder_input: (B, F, D+M);
        returns (B, F, D).
        """
        cfg = self.cfg
        p = self.params
        rng = rng or np.random.default_rng(0)
        enc_in = T._as_tensor(encoder_input)
        dec_in = T._as_tensor(decoder_input)
        if enc_in.ndim != 3 or enc_in.shape[2] != cfg.input_width:
            raise DimensionError(
                f"encoder input must be (B, H, {cfg.input_width}), "
                f"got {enc_in.shape}"
            )
        if dec_in.ndim != 3 or dec_in.shape[2] != cfg.input_width:
            raise DimensionError(
                f"decoder input must be (B, F, {cfg.input_width}), "
                f"got {dec_in.shape}"
            )

        x = T.linear(enc_in, p["enc_embed.w"], p["enc_embed.b"])
        if cfg.use_positional_encoding:
            x = T.add(x, self._pos_enc[: enc_in.shape[1]])
        for i in range(cfg.n_encoder_layers):
            attn = self.multi_head_attention(f"enc.{i}.self_attn", x, x)
            x = self._sublayer(x, attn, f"enc.{i}.ln1", training, rng)
            ff = self._feed_forward(f"enc.{i}.ff", x)
            x = self._sublayer(x, ff, f"enc.{i}.ln2", training, rng)
        memory = x

        y = T.linear(dec_in, p["dec_embed.w"], p["dec_embed.b"])
        if cfg.use_positional_encoding:
            y = T.add(y, self._pos_enc[: dec_in.shape[1]])
        for i in range(cfg.n_decoder_layers):
            if cfg.decoder_self_attention:
                attn = self.multi_head_attention(f"dec.{i}.self_attn", y, y)
                y = self._sublayer(y, attn, f"dec.{i}.ln1", training, rng)
            cross = self.multi_head_attention(f"dec.{i}.cross_attn", y, memory)
            y = self._sublayer(y, cross, f"dec.{i}.ln2", training, rng)
            ff = self._feed_forward(f"dec.{i}.ff", y)
            y = self._sublayer(y, ff, f"dec.{i}.ln3", training, rng)

        return T.linear(y, p["out_proj.w"], p["out_proj.b"])

    # -- inference convenience ----------------------------------------------

    def forward_sample(self, sample: WindowSample,
                       training: bool = False) -> np.ndarray:
        out = self.forward(sample.encoder_input[None], sample.decoder_input[None],
                           training=training)
        return out.data[0]

    def predict(self, sample: WindowSample, stats: NormStats) -> np.ndarray:
        """Denormalized forecast: RHP plus predicted residuals."""
        residual = self.forward_sample(sample)
        normalized = sample.target_rhp + residual
        return normalized * (stats.max - stats.min) + stats.min

    # -- checkpointing -------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]):
        for k, p in self.params.items():
            if k not in state:
                raise InputError(f"checkpoint missing parameter {k}")
            if state[k].shape != p.data.shape:
                raise InputError(
                    f"checkpoint parameter {k} has shape {state[k].shape}, "
                    f"expected {p.data.shape}"
                )
            p.data = state[k].astype(np.float64).copy()

    def save(self, path):
        doc = {
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "config": asdict(self.cfg),
            "params": {
                name: {
                    "shape": list(p.data.shape),
                    "dtype": "<f8",
                    "data": base64.b64encode(
                        np.ascontiguousarray(p.data, dtype="<f8").tobytes()
                    ).decode("ascii"),
                }
                for name, p in sorted(self.params.items())
            },
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "ForecastModel":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise InputError(
                f"unsupported checkpoint format {doc.get('format_version')}"
            )
        cfg = ModelConfig(**doc["config"])
        model = cls(cfg)
        state = {
            name: np.frombuffer(
                base64.b64decode(entry["data"]), dtype=entry["dtype"]
            ).reshape(entry["shape"]).copy()
            for name, entry in doc["params"].items()
        }
        model.load_state_dict(state)
        return model
