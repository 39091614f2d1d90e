"""Dense float tensors with reverse-mode automatic differentiation.

Values are plain numpy arrays (float32 by default; float64 is supported and
preserved). An operation whose inputs require gradients records its parents
and a backward closure on the output node; `backward` replays the graph from
a scalar loss and returns one gradient array per named parameter.

All operations are pure given immutable inputs. Gradient recording is
controlled by a module-level switch (`no_grad`) so inference pays nothing.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

_FLOAT_DTYPES = (np.float32, np.float64)

_grad_enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the context (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A numpy array plus the bookkeeping needed for reverse-mode autodiff.

    `data` is read-only once wrapped. Leaf tensors created with
    `requires_grad=True` act as trainable parameters; everything else is a
    constant or an intermediate node.
    """

    __slots__ = ("data", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"


def astensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make_node(
    data: np.ndarray,
    parents: Iterable[Tensor],
    backward: Callable[[np.ndarray], Sequence[np.ndarray | None]],
) -> Tensor:
    """Wrap an op result, recording the graph edge only when it matters."""
    parents = tuple(parents)
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


class ParamStore:
    """Ordered, named collection of trainable tensors.

    Each entry carries a flag saying whether decoupled weight decay applies
    to it (kernels yes, biases and activation slopes no). Shapes are fixed
    once added; names are unique.
    """

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}
        self._decay: dict[str, bool] = {}

    def add(self, name: str, value, weight_decay: bool = True) -> Tensor:
        if name in self._tensors:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value), requires_grad=True)
        self._tensors[name] = t
        self._decay[name] = bool(weight_decay)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def decay_applies(self, name: str) -> bool:
        return self._decay[name]

    def arrays(self) -> dict[str, np.ndarray]:
        """Snapshot of current values (copies, detached from the store)."""
        return {k: v.data.copy() for k, v in self._tensors.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        """Overwrite parameter values in place; shapes must match."""
        for name, t in self._tensors.items():
            if name not in arrays:
                raise ValueError(f"missing parameter {name!r}")
            a = np.asarray(arrays[name], dtype=t.data.dtype)
            if a.shape != t.data.shape:
                raise ValueError(
                    f"shape mismatch for {name!r}: stored {a.shape}, expected {t.data.shape}"
                )
            t.data = a


def _topo_order(loss: Tensor) -> list[Tensor]:
    """Iterative topological sort of the subgraph that requires gradients."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor, params: ParamStore) -> dict[str, np.ndarray]:
    """Gradients of a recorded scalar loss with respect to every parameter.

    Parameters the loss does not depend on get zero gradients. Each graph
    node is visited exactly once.
    """
    if loss.data.shape != ():
        raise ValueError(f"loss must be a scalar, got shape {loss.data.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=loss.data.dtype)}
    if loss.requires_grad:
        for node in reversed(_topo_order(loss)):
            if node._backward is None:
                continue  # leaf: keep its accumulated gradient for collection
            g = grads.pop(id(node), None)
            if g is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else acc + pg
    out: dict[str, np.ndarray] = {}
    for name, t in params.items():
        g = grads.get(id(t))
        out[name] = np.zeros_like(t.data) if g is None else np.asarray(g, dtype=t.data.dtype)
    return out
