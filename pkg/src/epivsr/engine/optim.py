"""AdamW with decoupled weight decay, plus the Glorot uniform initializer.

Moment accumulators are kept in float64 regardless of parameter precision.
Plain Adam is the weight_decay=0 special case.
"""

from __future__ import annotations

import numpy as np

from .tensor import ParamStore


class AdamW:
    """Decoupled-weight-decay Adam.

    Update per parameter theta with gradient g:

        m <- b1*m + (1-b1)*g
        v <- b2*v + (1-b2)*g^2
        mhat = m / (1 - b1^t),  vhat = v / (1 - b2^t)
        theta <- theta - lr * (mhat / (sqrt(vhat) + eps) + wd * theta)

    The decay term is skipped for parameters whose store entry opted out
    (biases, activation slopes).
    """

    def __init__(
        self,
        params: ParamStore,
        lr: float = 2e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.t = 0
        self.m = {k: np.zeros(t.shape, dtype=np.float64) for k, t in params.items()}
        self.v = {k: np.zeros(t.shape, dtype=np.float64) for k, t in params.items()}

    def step(self, grads: dict[str, np.ndarray], lr: float | None = None) -> None:
        """Apply one update from per-parameter gradients."""
        lr = self.lr if lr is None else float(lr)
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            if name not in grads:
                raise ValueError(f"missing gradient for parameter {name!r}")
            g = np.asarray(grads[name], dtype=np.float64)
            if g.shape != p.data.shape:
                raise ValueError(
                    f"gradient shape {g.shape} does not match parameter "
                    f"{name!r} shape {p.data.shape}"
                )
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay != 0.0 and self.params.decay_applies(name):
                update = update + self.weight_decay * p.data.astype(np.float64)
            p.data = (p.data.astype(np.float64) - lr * update).astype(p.data.dtype)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Moment tensors under prefixed names, for checkpointing."""
        out: dict[str, np.ndarray] = {}
        for k in self.params.names():
            out[f"opt.m.{k}"] = self.m[k].copy()
            out[f"opt.v.{k}"] = self.v[k].copy()
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int) -> None:
        self.t = int(t)
        for k in self.params.names():
            self.m[k] = np.asarray(arrays[f"opt.m.{k}"], dtype=np.float64).reshape(self.m[k].shape)
            self.v[k] = np.asarray(arrays[f"opt.v.{k}"], dtype=np.float64).reshape(self.v[k].shape)


def adamw_step(opt: AdamW, grads: dict[str, np.ndarray], lr: float | None = None) -> AdamW:
    """Functional spelling of one optimizer step (mutates and returns opt)."""
    opt.step(grads, lr=lr)
    return opt


def glorot_fans(shape) -> tuple[int, int]:
    """fan_in/fan_out for a kernel shape (receptive-field volume x channels)."""
    shape = tuple(int(s) for s in shape)
    if len(shape) == 0:
        raise ValueError("shape must be non-empty")
    if len(shape) == 1:
        return shape[0], shape[0]
    receptive = 1
    for s in shape[:-2]:
        receptive *= s
    return shape[-2] * receptive, shape[-1] * receptive


def glorot_uniform_init(shape, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    """Uniform samples on [-b, b] with b = sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = glorot_fans(shape)
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=tuple(shape)).astype(dtype)
