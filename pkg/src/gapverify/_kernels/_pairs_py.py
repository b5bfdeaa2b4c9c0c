"""Pure-numpy pairwise kernels; the reference semantics for ``_pairs.pyx``."""
import numpy as np

_CHUNK = 1 << 20


def pair_projection(lattice, vec, I, J, h):
    d = lattice[J] - lattice[I]
    r2 = (d * d).sum(axis=1)
    proj = ((vec[J] - vec[I]) * d).sum(axis=1) / np.sqrt(r2.astype(np.float64))
    return proj, r2


def tan_slack(lattice, vec, I, J, h, a):
    proj, r2 = pair_projection(lattice, vec, I, J, h)
    return proj - 2.0 * a * np.tan(a * h * np.sqrt(r2.astype(np.float64)) / 2.0), r2


def ratio_max(lattice, w, h, a):
    m = lattice.shape[0]
    best, bi, bj = -1.0, -1, -1
    rows = max(1, _CHUNK // max(m, 1))
    for start in range(0, m, rows):
        stop = min(m, start + rows)
        d = lattice[None, :, :] - lattice[start:stop, None, :]
        r = np.sqrt((d * d).sum(axis=2).astype(np.float64))
        diff = w[None, :] - w[start:stop, None]
        i_idx = np.arange(start, stop)[:, None]
        upper = np.arange(m)[None, :] > i_idx
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(upper, np.abs(diff) / (2.0 * np.sin(a * h * r / 2.0)), -np.inf)
        k = int(np.argmax(val))
        ii, jj = divmod(k, m)
        if val[ii, jj] > best:
            best = float(val[ii, jj])
            i, j = start + ii, jj
            bi, bj = (i, j) if diff[ii, jj] >= 0 else (j, i)
    return best, bi, bj
