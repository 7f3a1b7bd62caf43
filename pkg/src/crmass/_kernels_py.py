"""numpy fallbacks for the compiled kernels, evaluated in row blocks to bound memory."""

import numpy as np

BLOCK = 512


def heis_log_pair_sum(x, y, t, m, diag):
    n = len(x)
    total = 0.0
    for s in range(0, n, BLOCK):
        e = min(s + BLOCK, n)
        xb, yb, tb = x[s:e, None], y[s:e, None], t[s:e, None]
        dx = xb - x[None, :]
        dy = yb - y[None, :]
        dt = tb - t[None, :] - 2.0 * (yb * x[None, :] - xb * y[None, :])
        r2 = dx * dx + dy * dy
        q = r2 * r2 + dt * dt
        # the diagonal entries are exactly zero; give them a harmless value
        idx = np.arange(s, e)
        q[idx - s, idx] = 1.0
        total += 0.25 * float(m[s:e] @ np.log(q) @ m)
    return total + float(np.dot(m * m, diag))


def sphere_ball_masses(c1r, c1i, c2r, c2i, z1r, z1i, z2r, z2i, w, thresh):
    nc = len(c1r)
    out = np.zeros(nc)
    t2 = thresh * thresh
    step = max(1, 4_000_000 // max(len(z1r), 1))
    for s in range(0, nc, step):
        e = min(s + step, nc)
        re = 1.0 - (np.outer(c1r[s:e], z1r) + np.outer(c1i[s:e], z1i)
                    + np.outer(c2r[s:e], z2r) + np.outer(c2i[s:e], z2i))
        im = (np.outer(c1i[s:e], z1r) - np.outer(c1r[s:e], z1i)
              + np.outer(c2i[s:e], z2r) - np.outer(c2r[s:e], z2i))
        out[s:e] = (re * re + im * im < t2) @ w
    return out
