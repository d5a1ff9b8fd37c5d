"""Per-view MLP encoder/decoder with hand-written backpropagation.

Encoders map raw view features to the low-dimensional embedding used for
clustering. Hidden layers are ReLU, the embedding layer and the decoder
output layer are linear. Pretraining minimizes mean squared reconstruction
error end to end with Adam; the decoder is mirrored from the encoder dims
and only needed during pretraining.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Adam, Matrix, require_finite


@dataclass(frozen=True)
class MlpSpec:
    """Encoder layout: layer_dims = [input, hidden..., embedding]."""

    layer_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ValueError("layer_dims needs at least input and embedding sizes")
        if any(d < 1 for d in dims):
            raise ValueError(f"layer_dims must be positive, got {dims}")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def embedding_dim(self) -> int:
        return self.layer_dims[-1]


@dataclass
class MlpParams:
    """Weights [out x in] and biases [out] per layer; decoder present only
    when the params came from (or are headed into) reconstruction training."""

    spec: MlpSpec
    enc_w: list[np.ndarray]
    enc_b: list[np.ndarray]
    dec_w: list[np.ndarray] = field(default_factory=list)
    dec_b: list[np.ndarray] = field(default_factory=list)

    @property
    def has_decoder(self) -> bool:
        return len(self.dec_w) > 0

    def encoder_arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.enc_w, self.enc_b):
            out.append(w)
            out.append(b)
        return out

    def all_arrays(self) -> list[np.ndarray]:
        out = self.encoder_arrays()
        for w, b in zip(self.dec_w, self.dec_b):
            out.append(w)
            out.append(b)
        return out

    def set_encoder_arrays(self, arrays: list[np.ndarray]) -> None:
        n = len(self.enc_w)
        if len(arrays) != 2 * n:
            raise ValueError(f"expected {2 * n} arrays, got {len(arrays)}")
        self.enc_w = [arrays[2 * i] for i in range(n)]
        self.enc_b = [arrays[2 * i + 1] for i in range(n)]

    def set_all_arrays(self, arrays: list[np.ndarray]) -> None:
        ne, nd = len(self.enc_w), len(self.dec_w)
        if len(arrays) != 2 * (ne + nd):
            raise ValueError(f"expected {2 * (ne + nd)} arrays, got {len(arrays)}")
        self.set_encoder_arrays(arrays[: 2 * ne])
        self.dec_w = [arrays[2 * ne + 2 * i] for i in range(nd)]
        self.dec_b = [arrays[2 * ne + 2 * i + 1] for i in range(nd)]

    def drop_decoder(self) -> "MlpParams":
        return MlpParams(self.spec, list(self.enc_w), list(self.enc_b))

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.spec,
            [w.copy() for w in self.enc_w],
            [b.copy() for b in self.enc_b],
            [w.copy() for w in self.dec_w],
            [b.copy() for b in self.dec_b],
        )


def _glorot(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


def init_params(spec: MlpSpec, rng: np.random.Generator, with_decoder: bool = True) -> MlpParams:
    dims = spec.layer_dims
    enc_w = [_glorot(rng, dims[i + 1], dims[i]) for i in range(len(dims) - 1)]
    enc_b = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    params = MlpParams(spec, enc_w, enc_b)
    if with_decoder:
        rev = dims[::-1]
        params.dec_w = [_glorot(rng, rev[i + 1], rev[i]) for i in range(len(rev) - 1)]
        params.dec_b = [np.zeros(rev[i + 1]) for i in range(len(rev) - 1)]
    return params


def _forward(ws, bs, x):
    """Linear stack with ReLU on all but the last layer. Returns output and
    per-layer (input, preactivation) caches for backprop."""
    caches = []
    a = x
    last = len(ws) - 1
    for i, (w, b) in enumerate(zip(ws, bs)):
        pre = a @ w.T + b
        caches.append((a, pre))
        a = np.maximum(pre, 0.0) if i < last else pre
    return a, caches


def _backward(ws, caches, d_out):
    """Gradients of the stack given d(loss)/d(output). Returns per-array grads
    (w0, b0, w1, b1, ...) and d(loss)/d(input)."""
    grads = [None] * (2 * len(ws))
    d = d_out
    last = len(ws) - 1
    for i in range(last, -1, -1):
        a_in, pre = caches[i]
        if i < last:
            d = d * (pre > 0.0)  # ReLU subgradient, 0 at the kink
        grads[2 * i] = d.T @ a_in
        grads[2 * i + 1] = d.sum(axis=0)
        d = d @ ws[i]
    return grads, d


def encode(params: MlpParams, batch: Matrix) -> Matrix:
    """Forward pass through the encoder: [B x D_in] -> [B x D_emb]."""
    if batch.ndim != 2 or batch.shape[1] != params.spec.input_dim:
        raise ValueError(
            f"batch has shape {batch.shape}, encoder expects {params.spec.input_dim} columns"
        )
    z, _ = _forward(params.enc_w, params.enc_b, batch)
    require_finite(z, "embedding")
    return z


def decode(params: MlpParams, z: Matrix) -> Matrix:
    if not params.has_decoder:
        raise ValueError("params have no decoder")
    out, _ = _forward(params.dec_w, params.dec_b, z)
    return out


def reconstruction_grad(params: MlpParams, batch: Matrix) -> tuple[float, list[np.ndarray]]:
    """Mean squared reconstruction error over batch x dims, and its exact
    gradients w.r.t. every encoder+decoder array (same order as all_arrays)."""
    if not params.has_decoder:
        raise ValueError("reconstruction requires a decoder")
    if batch.shape[1] != params.spec.input_dim:
        raise ValueError(
            f"batch has {batch.shape[1]} columns, expected {params.spec.input_dim}"
        )
    z, enc_caches = _forward(params.enc_w, params.enc_b, batch)
    xhat, dec_caches = _forward(params.dec_w, params.dec_b, z)
    r = xhat - batch
    loss = float((r * r).mean())
    d_xhat = (2.0 / r.size) * r
    dec_grads, d_z = _backward(params.dec_w, dec_caches, d_xhat)
    enc_grads, _ = _backward(params.enc_w, enc_caches, d_z)
    return loss, enc_grads + dec_grads


def encoder_grads(params: MlpParams, batch: Matrix, d_z: Matrix) -> list[np.ndarray]:
    """Backpropagate d(loss)/d(embedding) into encoder array gradients."""
    z, caches = _forward(params.enc_w, params.enc_b, batch)
    if d_z.shape != z.shape:
        raise ValueError(f"d_z has shape {d_z.shape}, embedding has {z.shape}")
    grads, _ = _backward(params.enc_w, caches, d_z)
    return grads


def pretrain(
    spec: MlpSpec,
    data: Matrix,
    epochs: int,
    batch_size: int,
    rng: np.random.Generator,
    lr: float = 1e-3,
    keep_decoder: bool = False,
) -> tuple[MlpParams, list[float]]:
    """Reconstruction pretraining with Adam over shuffled minibatches.

    Returns trained params (decoder dropped unless keep_decoder) and the
    per-epoch mean loss history.
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = data.shape[0] if data.ndim == 2 else 0
    if n == 0:
        raise ValueError("cannot pretrain on an empty dataset")

    params = init_params(spec, rng, with_decoder=True)
    opt = Adam(lr=lr)
    arrays = params.all_arrays()
    losses = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            params.set_all_arrays(arrays)
            loss, grads = reconstruction_grad(params, data[idx])
            arrays = opt.step(arrays, grads)
            total += loss * len(idx)
        losses.append(total / n)
    params.set_all_arrays(arrays)
    if not keep_decoder:
        params = params.drop_decoder()
    return params, losses
