"""Pure-numpy MLP kernels (fallback for the compiled ``_kernels`` module).

Parameters live in one flat float64 vector. For each layer the weight
matrix (n_out x n_in, row-major) is followed by its bias (n_out). Hidden
layers use a saturated ReLU, ``min(max(z, 0), ceiling)``; the output layer
is linear.
"""
import numpy as np


def _layers(params, sizes):
    off = 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        W = params[off:off + n_in * n_out].reshape(n_out, n_in)
        off += n_in * n_out
        b = params[off:off + n_out]
        off += n_out
        yield W, b


def forward_batch(params, sizes, X, ceiling):
    h = np.asarray(X, dtype=np.float64)
    layers = list(_layers(params, sizes))
    for i, (W, b) in enumerate(layers):
        h = h @ W.T + b
        if i < len(layers) - 1:
            np.clip(h, 0.0, ceiling, out=h)
    return h


def loss_and_grad(params, sizes, X, actions, targets, ceiling):
    """Mean squared TD error at the taken actions and its gradient."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    layers = list(_layers(params, sizes))
    hs = [X]
    zs = []
    h = X
    for i, (W, b) in enumerate(layers):
        z = h @ W.T + b
        zs.append(z)
        h = z if i == len(layers) - 1 else np.clip(z, 0.0, ceiling)
        hs.append(h)

    rows = np.arange(n)
    resid = h[rows, actions] - targets
    loss = float(np.mean(resid * resid))

    grad = np.empty_like(params)
    grads = []
    dz = np.zeros_like(h)
    dz[rows, actions] = 2.0 * resid / n
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        grads.append((dz.T @ hs[i], dz.sum(axis=0)))
        if i > 0:
            z = zs[i - 1]
            dz = (dz @ W) * ((z > 0.0) & (z < ceiling))
    off = 0
    for gW, gb in reversed(grads):
        grad[off:off + gW.size] = gW.ravel()
        off += gW.size
        grad[off:off + gb.size] = gb
        off += gb.size
    return loss, grad


def train_batch(params, sizes, X, actions, targets, lr, ceiling):
    """One in-place gradient-descent step; returns the pre-update loss."""
    loss, grad = loss_and_grad(params, sizes, X, actions, targets, ceiling)
    params -= lr * grad
    return loss
