# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled MLP kernels. Same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _sat(double z, double ceiling) nogil:
    if z < 0.0:
        return 0.0
    if z > ceiling:
        return ceiling
    return z


cdef void _forward_one(const double[::1] params, const long[::1] sizes,
                       const double* x, double* z, double* h,
                       const long[::1] unit_off, double ceiling) noexcept nogil:
    # z/h hold pre-activations/activations of every non-input unit, layer-major
    cdef Py_ssize_t nl = sizes.shape[0] - 1
    cdef Py_ssize_t l, j, k, n_in, n_out, off = 0
    cdef const double* hin
    cdef double acc
    for l in range(nl):
        n_in = sizes[l]
        n_out = sizes[l + 1]
        if l == 0:
            hin = x
        else:
            hin = h + unit_off[l - 1]
        for j in range(n_out):
            acc = params[off + n_in * n_out + j]
            for k in range(n_in):
                acc = acc + params[off + j * n_in + k] * hin[k]
            z[unit_off[l] + j] = acc
            if l < nl - 1:
                h[unit_off[l] + j] = _sat(acc, ceiling)
            else:
                h[unit_off[l] + j] = acc
        off += n_in * n_out + n_out


def _unit_offsets(long[::1] sizes):
    cdef Py_ssize_t nl = sizes.shape[0] - 1
    out = np.zeros(nl, dtype=np.int64)
    cdef long[::1] o = out
    cdef Py_ssize_t l
    for l in range(1, nl):
        o[l] = o[l - 1] + sizes[l]
    return out


def forward_batch(double[::1] params, sizes, X, double ceiling):
    cdef long[::1] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], nl = sz.shape[0] - 1, j
    cdef Py_ssize_t n_out = sz[nl]
    cdef long[::1] uo = _unit_offsets(sz)
    cdef Py_ssize_t total = uo[nl - 1] + n_out
    cdef double[::1] z = np.empty(total)
    cdef double[::1] h = np.empty(total)
    out = np.empty((n, n_out))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        _forward_one(params, sz, &x[i, 0], &z[0], &h[0], uo, ceiling)
        for j in range(n_out):
            o[i, j] = h[uo[nl - 1] + j]
    return out


cdef double _accumulate(double[::1] params, long[::1] sz, double[:, ::1] x,
                        const long[::1] acts, const double[::1] tgt,
                        double ceiling, double[::1] grad) noexcept nogil:
    # Returns the mean squared residual; grad is overwritten with its gradient.
    cdef Py_ssize_t n = x.shape[0], nl = sz.shape[0] - 1
    cdef Py_ssize_t i, l, j, k, n_in, n_out, off, np_ = params.shape[0]
    cdef double loss = 0.0, r, d
    cdef double zbuf[512]
    cdef double hbuf[512]
    cdef double dbuf[512]
    cdef long uo[64]
    cdef long po[64]
    cdef const double* hin
    uo[0] = 0
    po[0] = 0
    for l in range(1, nl):
        uo[l] = uo[l - 1] + sz[l]
    for l in range(1, nl):
        po[l] = po[l - 1] + sz[l - 1] * sz[l] + sz[l]
    for k in range(np_):
        grad[k] = 0.0
    for i in range(n):
        # forward
        off = 0
        for l in range(nl):
            n_in = sz[l]
            n_out = sz[l + 1]
            hin = &x[i, 0] if l == 0 else &hbuf[uo[l - 1]]
            for j in range(n_out):
                d = params[off + n_in * n_out + j]
                for k in range(n_in):
                    d = d + params[off + j * n_in + k] * hin[k]
                zbuf[uo[l] + j] = d
                hbuf[uo[l] + j] = _sat(d, ceiling) if l < nl - 1 else d
            off += n_in * n_out + n_out
        r = hbuf[uo[nl - 1] + acts[i]] - tgt[i]
        loss += r * r
        # backward: only the taken action's output carries error
        for j in range(sz[nl]):
            dbuf[uo[nl - 1] + j] = 0.0
        dbuf[uo[nl - 1] + acts[i]] = 2.0 * r / n
        for l in range(nl - 1, -1, -1):
            n_in = sz[l]
            n_out = sz[l + 1]
            off = po[l]
            hin = &x[i, 0] if l == 0 else &hbuf[uo[l - 1]]
            for j in range(n_out):
                d = dbuf[uo[l] + j]
                if d == 0.0:
                    continue
                for k in range(n_in):
                    grad[off + j * n_in + k] += d * hin[k]
                grad[off + n_in * n_out + j] += d
            if l > 0:
                for k in range(n_in):
                    d = 0.0
                    for j in range(n_out):
                        d = d + dbuf[uo[l] + j] * params[off + j * n_in + k]
                    if zbuf[uo[l - 1] + k] > 0.0 and zbuf[uo[l - 1] + k] < ceiling:
                        dbuf[uo[l - 1] + k] = d
                    else:
                        dbuf[uo[l - 1] + k] = 0.0
    return loss / n


def _check_shape(long[::1] sz):
    cdef Py_ssize_t l, total = 0
    if sz.shape[0] - 1 > 64:
        raise ValueError("too many layers for the compiled kernel")
    for l in range(1, sz.shape[0]):
        total += sz[l]
    if total > 512:
        raise ValueError("too many units for the compiled kernel")


def loss_and_grad(double[::1] params, sizes, X, actions, targets, double ceiling):
    cdef long[::1] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    _check_shape(sz)
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef long[::1] a = np.ascontiguousarray(actions, dtype=np.int64)
    cdef double[::1] t = np.ascontiguousarray(targets, dtype=np.float64)
    grad = np.empty(params.shape[0])
    cdef double loss = _accumulate(params, sz, x, a, t, ceiling, grad)
    return loss, grad


def train_batch(double[::1] params, sizes, X, actions, targets, double lr, double ceiling):
    cdef long[::1] sz = np.ascontiguousarray(sizes, dtype=np.int64)
    _check_shape(sz)
    cdef double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef long[::1] a = np.ascontiguousarray(actions, dtype=np.int64)
    cdef double[::1] t = np.ascontiguousarray(targets, dtype=np.float64)
    cdef double[::1] g = np.empty(params.shape[0])
    cdef double loss
    cdef Py_ssize_t k
    with nogil:
        loss = _accumulate(params, sz, x, a, t, ceiling, g)
        for k in range(params.shape[0]):
            params[k] -= lr * g[k]
    return loss
