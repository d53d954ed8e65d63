"""Independent oracles shared by unit and acceptance tests."""

import numpy as np

from glumarker.network import Architecture, forward, init_params, loss


def numeric_grad(params, f_c, f_d, label, h=1e-5):
    """Central differences of the single-example loss w.r.t. every parameter array."""
    out = []
    for a in params.arrays():
        g = np.zeros_like(a)
        for i in np.ndindex(a.shape):
            orig = a[i]
            a[i] = orig + h
            lp = loss(forward(params, f_c, f_d)[0], label)
            a[i] = orig - h
            lm = loss(forward(params, f_c, f_d)[0], label)
            a[i] = orig
            g[i] = (lp - lm) / (2 * h)
        out.append(g)
    return out


def max_rel_error(analytic, numeric):
    """Elementwise |a - n| / max(|a|, |n|); entries where both are exactly 0 count as 0."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        den = np.maximum(np.abs(a), np.abs(n))
        nz = den > 0
        if nz.any():
            worst = max(worst, float((np.abs(a - n)[nz] / den[nz]).max()))
    return worst


def random_instance(rng, seed, n_c=3, n_d=6, arch=Architecture((4, 3), (5, 4, 3))):
    params = init_params(n_c, n_d, arch, seed)
    for layer in params.layers():
        layer.biases[:] = rng.normal(0, 0.3, layer.biases.shape)
    f_c = rng.normal(size=n_c)
    f_d = (rng.random(n_d) < 0.5).astype(float)
    return params, f_c, f_d, int(rng.integers(3))


def separable_data(rng, n=600, n_c=4, n_d=8):
    """Labels are the argmax of a fixed linear map of f_c, with a margin enforced."""
    W = rng.normal(size=(3, n_c))
    Fc, y = [], []
    while len(y) < n:
        x = rng.normal(size=n_c)
        s = np.sort(W @ x)
        if s[-1] - s[-2] > 0.5:
            Fc.append(x)
            y.append(int(np.argmax(W @ x)))
    Fd = (rng.random((n, n_d)) < 0.3).astype(float)
    return np.array(Fc), Fd, np.array(y)
