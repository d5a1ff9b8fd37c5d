"""Dense float64 arrays, a seedable deterministic RNG, and first-order optimizers.

All numeric state in this package is plain ``numpy.float64`` ndarrays. The RNG
is numpy's PCG64 behind a fixed construction helper so that a seed fully
determines every stream the package draws from.
"""

from __future__ import annotations

import numpy as np

Matrix = np.ndarray


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for a seed (PCG64; same stream on every platform)."""
    return np.random.Generator(np.random.PCG64(seed))


def child_seeds(seed: int, n: int) -> list[int]:
    """Derive n independent child seeds from a master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def uniform(rng: np.random.Generator, size) -> np.ndarray:
    return rng.random(size)


def normal(rng: np.random.Generator, size) -> np.ndarray:
    return rng.standard_normal(size)


def shuffle_indices(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform random permutation of range(n)."""
    return rng.permutation(n)


def as_matrix(a, name: str = "array") -> Matrix:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D array, got ndim={m.ndim}")
    require_finite(m, name)
    return m


def require_finite(a: np.ndarray, name: str = "array") -> None:
    if not np.isfinite(a).all():
        raise ValueError(f"{name}: contains non-finite entries")


def pairwise_sqdist(x: Matrix, c: Matrix) -> Matrix:
    """Squared Euclidean distances, shape [n_rows(x), n_rows(c)]."""
    if x.shape[1] != c.shape[1]:
        raise ValueError(
            f"dimension mismatch: points have {x.shape[1]} columns, "
            f"centers have {c.shape[1]}"
        )
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


class Optimizer:
    """Base class: per-parameter state, one update rule per subclass.

    ``step`` returns fresh arrays (inputs are never mutated) and is
    deterministic given the optimizer state and its inputs. Accumulator
    shapes are locked to the first parameter list seen.
    """

    kind = "base"

    def __init__(self, lr: float):
        self.lr = float(lr)
        self.step_count = 0
        self._slots: list[dict[str, np.ndarray]] | None = None

    def _check(self, params, grads) -> None:
        if len(params) != len(grads):
            raise ValueError(
                f"got {len(params)} params but {len(grads)} grads"
            )
        for i, (p, g) in enumerate(zip(params, grads)):
            if p.shape != g.shape:
                raise ValueError(
                    f"parameter {i}: shape {p.shape} does not match grad shape {g.shape}"
                )
            if not np.isfinite(g).all():
                raise ValueError(f"parameter {i}: non-finite gradient")
        if self._slots is None:
            self._slots = [self._init_slot(p) for p in params]
        elif len(self._slots) != len(params):
            raise ValueError(
                f"optimizer was initialized with {len(self._slots)} params, got {len(params)}"
            )

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        self._check(params, grads)
        self.step_count += 1
        return [
            self._update(p, g, slot)
            for p, g, slot in zip(params, grads, self._slots)
        ]

    def _init_slot(self, p: np.ndarray) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def _update(self, p, g, slot) -> np.ndarray:
        raise NotImplementedError


class SgdMomentum(Optimizer):
    """Classical momentum: buf = m*buf + g; p -= lr*buf."""

    kind = "sgd_momentum"

    def __init__(self, lr: float = 0.01, momentum: float = 0.9):
        super().__init__(lr)
        self.momentum = float(momentum)

    def _init_slot(self, p):
        return {"buf": np.zeros_like(p)}

    def _update(self, p, g, slot):
        slot["buf"] = self.momentum * slot["buf"] + g
        return p - self.lr * slot["buf"]


class Adam(Optimizer):
    """Adam with bias correction."""

    kind = "adam"

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        super().__init__(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)

    def _init_slot(self, p):
        return {"m": np.zeros_like(p), "v": np.zeros_like(p)}

    def _update(self, p, g, slot):
        t = self.step_count
        slot["m"] = self.beta1 * slot["m"] + (1.0 - self.beta1) * g
        slot["v"] = self.beta2 * slot["v"] + (1.0 - self.beta2) * g * g
        m_hat = slot["m"] / (1.0 - self.beta1 ** t)
        v_hat = slot["v"] / (1.0 - self.beta2 ** t)
        return p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Adagrad(Optimizer):
    """Accumulated squared gradients: p -= lr * g / (sqrt(sum g^2) + eps)."""

    kind = "adagrad"

    def __init__(self, lr: float = 0.01, eps: float = 1e-8):
        super().__init__(lr)
        self.eps = float(eps)

    def _init_slot(self, p):
        return {"accum": np.zeros_like(p)}

    def _update(self, p, g, slot):
        slot["accum"] = slot["accum"] + g * g
        denom = np.sqrt(slot["accum"]) + self.eps
        # denom can only be 0 where every gradient so far was 0; update is 0 there
        upd = np.divide(g, denom, out=np.zeros_like(g), where=denom > 0.0)
        return p - self.lr * upd


_OPTIMIZERS = {
    "sgd_momentum": SgdMomentum,
    "adam": Adam,
    "adagrad": Adagrad,
}


def make_optimizer(kind: str, **kwargs) -> Optimizer:
    if kind not in _OPTIMIZERS:
        raise ValueError(f"unknown optimizer kind {kind!r}; expected one of {sorted(_OPTIMIZERS)}")
    return _OPTIMIZERS[kind](**kwargs)
