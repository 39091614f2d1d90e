"""Independent reference implementations used as test oracles.

Everything here is deliberately written with plain loops (or otherwise a
different computational path than the library) so that agreement is
meaningful evidence of correctness.
"""

import numpy as np


def conv3d_ref(x, k, b):
    """Six-loop same-padded cross-correlation, float64 accumulation."""
    s1, s2, s3, cin = x.shape
    k1, k2, k3, _, cout = k.shape
    xp = np.pad(np.asarray(x, dtype=np.float64),
                ((k1 // 2,) * 2, (k2 // 2,) * 2, (k3 // 2,) * 2, (0, 0)))
    out = np.zeros((s1, s2, s3, cout))
    for p1 in range(s1):
        for p2 in range(s2):
            for p3 in range(s3):
                for co in range(cout):
                    acc = float(b[co])
                    for o1 in range(k1):
                        for o2 in range(k2):
                            for o3 in range(k3):
                                for ci in range(cin):
                                    acc += xp[p1 + o1, p2 + o2, p3 + o3, ci] * k[o1, o2, o3, ci, co]
                    out[p1, p2, p3, co] = acc
    return out


def conv2d_ref(x, k, b):
    h, w, cin = x.shape
    kh, kw, _, cout = k.shape
    xp = np.pad(np.asarray(x, dtype=np.float64), ((kh // 2,) * 2, (kw // 2,) * 2, (0, 0)))
    out = np.zeros((h, w, cout))
    for p1 in range(h):
        for p2 in range(w):
            for co in range(cout):
                acc = float(b[co])
                for o1 in range(kh):
                    for o2 in range(kw):
                        for ci in range(cin):
                            acc += xp[p1 + o1, p2 + o2, ci] * k[o1, o2, ci, co]
                out[p1, p2, co] = acc
    return out


def pool_ref(x, axes, mode):
    """Loop over the kept-index grid, reducing the pooled axes explicitly."""
    x = np.asarray(x, dtype=np.float64)
    out_shape = tuple(1 if ax in axes else n for ax, n in enumerate(x.shape))
    out = np.zeros(out_shape)
    for idx in np.ndindex(*out_shape):
        vals = []
        ranges = [range(x.shape[ax]) if ax in axes else [idx[ax]] for ax in range(x.ndim)]
        for full in np.ndindex(*[len(r) for r in ranges]):
            pos = tuple(ranges[ax][full[ax]] for ax in range(x.ndim))
            vals.append(x[pos])
        out[idx] = np.mean(vals) if mode == "avg" else np.max(vals)
    return out


def dense_ref(x, w, b):
    n, m = w.shape
    out = np.zeros(m)
    for j in range(m):
        acc = float(b[j])
        for i in range(n):
            acc += float(x[i]) * float(w[i, j])
        out[j] = acc
    return out


def broadcast_mul_ref(x, w):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    out = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        widx = tuple(0 if w.shape[ax] == 1 else idx[ax] for ax in range(w.ndim))
        out[idx] = x[idx] * w[widx]
    return out


def concat_ref(arrays, axis):
    arrays = [np.asarray(a) for a in arrays]
    total = sum(a.shape[axis] for a in arrays)
    shape = list(arrays[0].shape)
    shape[axis] = total
    out = np.zeros(shape, dtype=np.float64)
    pos = 0
    for a in arrays:
        for idx in np.ndindex(*a.shape):
            oidx = list(idx)
            oidx[axis] += pos
            out[tuple(oidx)] = a[idx]
        pos += a.shape[axis]
    return out


def l1_ref(a, b):
    total = 0.0
    fa = np.asarray(a, dtype=np.float64).ravel()
    fb = np.asarray(b, dtype=np.float64).ravel()
    for i in range(fa.size):
        total += abs(fa[i] - fb[i])
    return total / fa.size


def mse_ref(a, b):
    fa = np.asarray(a, dtype=np.float64).ravel()
    fb = np.asarray(b, dtype=np.float64).ravel()
    total = 0.0
    for i in range(fa.size):
        total += (fa[i] - fb[i]) ** 2
    return total / fa.size


def keys_kernel_ref(x, a=-0.5):
    x = abs(float(x))
    if x <= 1.0:
        return (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0
    if x < 2.0:
        return a * x**3 - 5.0 * a * x**2 + 8.0 * a * x - 4.0 * a
    return 0.0


def resize_1d_ref(values, n_out):
    """Direct Keys interpolation (no antialias) with clamped borders."""
    values = np.asarray(values, dtype=np.float64)
    n_in = values.size
    scale = n_out / n_in
    out = np.zeros(n_out)
    for i in range(n_out):
        u = (i + 0.5) / scale - 0.5
        lo = int(np.floor(u)) - 1
        ws, vs = [], []
        for j in range(lo, lo + 4):
            wgt = keys_kernel_ref(u - j)
            ws.append(wgt)
            vs.append(values[min(max(j, 0), n_in - 1)])
        ws = np.array(ws)
        out[i] = float(np.dot(ws / ws.sum(), vs))
    return out


def ssim_ref(a, b, window, k1=0.01, k2=0.03, peak=1.0):
    """Per-pixel local SSIM with explicit window loops, valid positions only."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = window.shape[0]
    h, w = a.shape
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2
    vals = []
    for y in range(h - n + 1):
        for x in range(w - n + 1):
            wa = a[y : y + n, x : x + n]
            wb = b[y : y + n, x : x + n]
            mu_a = (window * wa).sum()
            mu_b = (window * wb).sum()
            va = (window * wa * wa).sum() - mu_a**2
            vb = (window * wb * wb).sum() - mu_b**2
            cov = (window * wa * wb).sum() - mu_a * mu_b
            vals.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                        / ((mu_a**2 + mu_b**2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


def finite_difference_grads(loss_fn, arrays, h=1e-6):
    """Central finite differences of loss_fn(list_of_arrays) per coordinate."""
    grads = []
    for which, arr in enumerate(arrays):
        g = np.zeros_like(arr, dtype=np.float64)
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            i = it.multi_index
            plus = [a.copy() for a in arrays]
            minus = [a.copy() for a in arrays]
            plus[which][i] += h
            minus[which][i] -= h
            g[i] = (loss_fn(plus) - loss_fn(minus)) / (2.0 * h)
            it.iternext()
        grads.append(g)
    return grads


def relative_errors(analytic, numeric):
    """Per-coordinate |a - n| / max(|a|, |n|, 1e-6), flattened."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
    return np.abs(a - n) / denom
