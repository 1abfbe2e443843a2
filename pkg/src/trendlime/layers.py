# -*- coding: utf-8 -*-
"""
Kernels de capas con forward y backward explícitos (numpy).

Convención: tensores en lotes, canales al final. Cada forward devuelve
``(salida, cache)`` y el backward correspondiente recibe el gradiente de la
salida y ese cache.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import NumericError


def check_finite(values, layer):
    if not np.all(np.isfinite(values)):
        raise NumericError('non-finite activation in %s' % layer, layer=layer)
    return values


def conv2d_forward(x, w, b, layer='conv'):
    """
    Same-padded 2D convolution, stride 1.
    x: (N, H, W, Cin); w: (kh, kw, Cin, Cout); b: (Cout,).
    """
    kh, kw = w.shape[:2]
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, kh - 1 - ph), (pw, kw - 1 - pw), (0, 0)))
    # windows: (N, H, W, Cin, kh, kw)
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    out = np.tensordot(windows, w, axes=([3, 4, 5], [2, 0, 1])) + b
    return check_finite(out, layer), (x.shape, xp.shape, windows, w, (ph, pw))


def conv2d_backward(dout, cache):
    x_shape, xp_shape, windows, w, (ph, pw) = cache
    kh, kw = w.shape[:2]
    _, H, W, _ = x_shape
    dw = np.tensordot(windows, dout, axes=([0, 1, 2], [0, 1, 2])).transpose(1, 2, 0, 3)
    db = dout.sum(axis=(0, 1, 2))
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + H, j:j + W, :] += dout @ w[i, j].T
    dx = dxp[:, ph:ph + H, pw:pw + W, :]
    return dx, dw, db


def relu_forward(x):
    return np.maximum(x, 0.0), x


def relu_backward(dout, cache):
    return dout * (cache > 0)


def maxpool_forward(x, size=(2, 2)):
    """Non-overlapping max pool; trailing rows/columns that do not fill a window are dropped."""
    n, h, w, c = x.shape
    sh, sw = size
    ho, wo = h // sh, w // sw
    trimmed = x[:, :ho * sh, :wo * sw, :]
    blocks = trimmed.reshape(n, ho, sh, wo, sw, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, ho, wo, c, sh * sw)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    return out, (x.shape, arg, size)


def maxpool_backward(dout, cache):
    x_shape, arg, (sh, sw) = cache
    n, h, w, c = x_shape
    ho, wo = dout.shape[1:3]
    routed = (np.arange(sh * sw) == arg[..., None]) * dout[..., None]
    routed = routed.reshape(n, ho, wo, c, sh, sw).transpose(0, 1, 4, 2, 5, 3).reshape(n, ho * sh, wo * sw, c)
    dx = np.zeros(x_shape, dtype=dout.dtype)
    dx[:, :ho * sh, :wo * sw, :] = routed
    return dx


def dense_forward(x, w, b, layer='dense'):
    return check_finite(x @ w + b, layer), (x, w)


def dense_backward(dout, cache):
    x, w = cache
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)


def sigmoid_forward(z):
    out = expit(z)
    return out, out


def sigmoid_backward(dout, cache):
    return dout * cache * (1.0 - cache)


def lstm_forward(xs, wx, wh, b, layer='lstm'):
    """
    Run an LSTM over ``xs`` of shape (N, T, D) from zero state.
    Gate blocks in the packed weights: input, forget, output, candidate.
    Returns the final hidden state (N, H).
    """
    n, steps, _ = xs.shape
    hidden = wh.shape[0]
    h = np.zeros((n, hidden))
    c = np.zeros((n, hidden))
    caches = []
    for t in range(steps):
        a = xs[:, t, :] @ wx + h @ wh + b
        i = expit(a[:, :hidden])
        f = expit(a[:, hidden:2 * hidden])
        o = expit(a[:, 2 * hidden:3 * hidden])
        g = np.tanh(a[:, 3 * hidden:])
        c_next = f * c + i * g
        tc = np.tanh(c_next)
        h_next = o * tc
        caches.append((xs[:, t, :], h, c, i, f, o, g, tc))
        h, c = h_next, c_next
    return check_finite(h, layer), (caches, wx, wh)


def lstm_backward(dh_last, cache):
    caches, wx, wh = cache
    steps = len(caches)
    n, dim = caches[0][0].shape
    dxs = np.zeros((n, steps, dim))
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(wx.shape[1])
    dh = dh_last
    dc = np.zeros_like(dh_last)
    for t in reversed(range(steps)):
        x, h_prev, c_prev, i, f, o, g, tc = caches[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc ** 2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        da = np.hstack([di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g ** 2)])
        dwx += x.T @ da
        dwh += h_prev.T @ da
        db += da.sum(axis=0)
        dxs[:, t, :] = da @ wx.T
        dh = da @ wh.T
        dc = dc * f
    return dxs, dwx, dwh, db
