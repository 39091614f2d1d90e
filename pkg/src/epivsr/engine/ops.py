"""Differentiable array operations used by the refinement and synthesis nets.

Conventions:
  - convolutions are cross-correlations (no kernel flip) with zero "same"
    padding, so output extents equal input extents;
  - channels live on the last axis; 3D feature maps are (s1, a, s2, c);
  - kernels are (k1, k2, k3, c_in, c_out) / (kh, kw, c_in, c_out) with odd
    extents;
  - loss reductions accumulate in float64.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, astensor, make_node


def _check_odd_kernel(kshape) -> None:
    if any(k % 2 == 0 for k in kshape):
        raise ValueError(f"kernel extents must be odd, got {tuple(kshape)}")


def _conv_same(x: Tensor, kernel: Tensor, bias: Tensor, nsp: int) -> Tensor:
    """Shared same-padded cross-correlation over `nsp` leading axes."""
    xd, kd, bd = x.data, kernel.data, bias.data
    if xd.ndim != nsp + 1 or kd.ndim != nsp + 2:
        raise ValueError(
            f"conv{nsp}d expects input with {nsp + 1} axes and kernel with "
            f"{nsp + 2} axes, got {xd.shape} and {kd.shape}"
        )
    ksp = kd.shape[:nsp]
    c_in, c_out = kd.shape[nsp], kd.shape[nsp + 1]
    _check_odd_kernel(ksp)
    if xd.shape[-1] != c_in:
        raise ValueError(f"channel mismatch: input has {xd.shape[-1]}, kernel expects {c_in}")
    if bd.shape != (c_out,):
        raise ValueError(f"bias must have shape ({c_out},), got {bd.shape}")

    sp = xd.shape[:nsp]
    pads = tuple((k // 2, k // 2) for k in ksp) + ((0, 0),)
    xp = np.pad(xd, pads)
    # windows: (*sp, c_in, *ksp) -> cols (positions, prod(ksp)*c_in)
    win = sliding_window_view(xp, ksp, axis=tuple(range(nsp)))
    perm = tuple(range(nsp)) + tuple(range(nsp + 1, 2 * nsp + 1)) + (nsp,)
    cols = np.ascontiguousarray(win.transpose(perm)).reshape(-1, int(np.prod(ksp)) * c_in)
    w2 = kd.reshape(-1, c_out)
    y = (cols @ w2 + bd).reshape(sp + (c_out,))

    def backward_fn(g):
        g2 = g.reshape(-1, c_out)
        gk = (cols.T @ g2).reshape(kd.shape)
        gb = g2.sum(axis=0)
        gcols = (g2 @ w2.T).reshape(sp + ksp + (c_in,))
        gxp = np.zeros_like(xp)
        for off in np.ndindex(*ksp):
            sl = tuple(slice(o, o + n) for o, n in zip(off, sp)) + (slice(None),)
            gxp[sl] += gcols[(slice(None),) * nsp + off + (slice(None),)]
        core = tuple(slice(k // 2, k // 2 + n) for k, n in zip(ksp, sp)) + (slice(None),)
        return gxp[core], gk, gb

    return make_node(y, (x, kernel, bias), backward_fn)


def conv3d_same(x, kernel, bias) -> Tensor:
    """Same-padded 3D cross-correlation: (s1,a,s2,cin) -> (s1,a,s2,cout)."""
    return _conv_same(astensor(x), astensor(kernel), astensor(bias), 3)


def conv2d_same(x, kernel, bias) -> Tensor:
    """Same-padded 2D cross-correlation: (h,w,cin) -> (h,w,cout)."""
    return _conv_same(astensor(x), astensor(kernel), astensor(bias), 2)


def dense(x, weight, bias) -> Tensor:
    """Fully connected layer on a vector: y = W^T x + b with W of shape (n, m)."""
    x, weight, bias = astensor(x), astensor(weight), astensor(bias)
    xd, wd, bd = x.data, weight.data, bias.data
    if xd.ndim != 1 or wd.ndim != 2 or xd.shape[0] != wd.shape[0]:
        raise ValueError(f"dense shape mismatch: x {xd.shape}, W {wd.shape}")
    if bd.shape != (wd.shape[1],):
        raise ValueError(f"dense bias must have shape ({wd.shape[1]},), got {bd.shape}")
    y = xd @ wd + bd

    def backward_fn(g):
        return wd @ g, np.outer(xd, g), g

    return make_node(y, (x, weight, bias), backward_fn)


def prelu(x, slope) -> Tensor:
    """y = x where x >= 0 else slope * x, with one slope per channel (last axis)."""
    x, slope = astensor(x), astensor(slope)
    xd, sd = x.data, slope.data
    if sd.shape != (xd.shape[-1],):
        raise ValueError(f"slope must have shape ({xd.shape[-1]},), got {sd.shape}")
    neg = xd < 0
    y = np.where(neg, sd * xd, xd)

    def backward_fn(g):
        gx = np.where(neg, sd, np.asarray(1.0, dtype=xd.dtype)) * g
        gs = (g * xd * neg).reshape(-1, xd.shape[-1]).sum(axis=0)
        return gx, gs

    return make_node(y, (x, slope), backward_fn)


def relu(x) -> Tensor:
    x = astensor(x)
    pos = x.data > 0
    y = np.where(pos, x.data, np.asarray(0.0, dtype=x.data.dtype))

    def backward_fn(g):
        return (g * pos,)

    return make_node(y, (x,), backward_fn)


def sigmoid(x) -> Tensor:
    """Overflow-safe logistic function, 1 / (1 + exp(-x))."""
    x = astensor(x)
    xd = x.data
    y = np.empty_like(xd)
    pos = xd >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
    e = np.exp(xd[~pos])
    y[~pos] = e / (1.0 + e)

    def backward_fn(g):
        return (g * y * (1.0 - y),)

    return make_node(y, (x,), backward_fn)


def pool_over_axes(x, axes, mode: str = "avg") -> Tensor:
    """Reduce the given axes to extent 1 by arithmetic mean or maximum."""
    x = astensor(x)
    xd = x.data
    axes = tuple(int(a) for a in axes)
    if len(axes) == 0:
        raise ValueError("empty reduction: at least one axis is required")
    if len(set(axes)) != len(axes) or any(a < 0 or a >= xd.ndim for a in axes):
        raise ValueError(f"axes must be distinct and within range, got {axes}")
    if mode == "avg":
        y = xd.mean(axis=axes, keepdims=True)
        count = np.prod([xd.shape[a] for a in axes])

        def backward_fn(g):
            return (np.broadcast_to(g / count, xd.shape).astype(xd.dtype, copy=False),)

    elif mode == "max":
        y = xd.max(axis=axes, keepdims=True)
        mask = (xd == y).astype(xd.dtype)
        ties = mask.sum(axis=axes, keepdims=True)

        def backward_fn(g):
            return (mask / ties * g,)

    else:
        raise ValueError(f"mode must be 'avg' or 'max', got {mode!r}")
    return make_node(y, (x,), backward_fn)


def concat(tensors, axis: int) -> Tensor:
    tensors = [astensor(t) for t in tensors]
    if not tensors:
        raise ValueError("concat needs at least one tensor")
    datas = [t.data for t in tensors]
    nd = datas[0].ndim
    if any(d.ndim != nd for d in datas):
        raise ValueError("concat inputs must have the same rank")
    for ax in range(nd):
        if ax != axis and len({d.shape[ax] for d in datas}) != 1:
            raise ValueError(f"concat shapes differ on axis {ax}")
    y = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_node(y, tensors, backward_fn)


def broadcast_mul(x, w) -> Tensor:
    """Elementwise product where each axis of w has extent 1 or matches x."""
    x, w = astensor(x), astensor(w)
    xd, wd = x.data, w.data
    if wd.ndim != xd.ndim:
        raise ValueError(f"weight rank {wd.ndim} must match input rank {xd.ndim}")
    bcast = []
    for ax, (nx, nw) in enumerate(zip(xd.shape, wd.shape)):
        if nw == 1 and nx != 1:
            bcast.append(ax)
        elif nw != nx:
            raise ValueError(f"axis {ax}: weight extent {nw} incompatible with input {nx}")
    bcast = tuple(bcast)
    y = xd * wd

    def backward_fn(g):
        gx = g * wd
        gw = g * xd
        if bcast:
            gw = gw.sum(axis=bcast, keepdims=True)
        return gx, gw

    return make_node(y, (x, w), backward_fn)


def add(x, y) -> Tensor:
    x, y = astensor(x), astensor(y)
    if x.data.shape != y.data.shape:
        raise ValueError(f"add shape mismatch: {x.data.shape} vs {y.data.shape}")

    def backward_fn(g):
        return g, g

    return make_node(x.data + y.data, (x, y), backward_fn)


def reshape(x, shape) -> Tensor:
    x = astensor(x)
    old = x.data.shape
    y = x.data.reshape(shape)

    def backward_fn(g):
        return (g.reshape(old),)

    return make_node(y, (x,), backward_fn)


def tensor_sum(x) -> Tensor:
    """Sum of all elements as a float64 scalar."""
    x = astensor(x)
    y = x.data.sum(dtype=np.float64)

    def backward_fn(g):
        return (np.full_like(x.data, g),)

    return make_node(np.asarray(y), (x,), backward_fn)


def l1_loss(pred, target) -> Tensor:
    """Mean absolute difference, accumulated in float64."""
    pred, target = astensor(pred), astensor(target)
    pd, td = pred.data, target.data
    if pd.shape != td.shape:
        raise ValueError(f"l1_loss shape mismatch: {pd.shape} vs {td.shape}")
    diff = pd.astype(np.float64) - td.astype(np.float64)
    n = diff.size
    y = np.asarray(np.abs(diff).mean())
    sign = np.sign(diff)

    def backward_fn(g):
        gd = (g * sign / n)
        return gd.astype(pd.dtype), (-gd).astype(td.dtype)

    return make_node(y, (pred, target), backward_fn)
