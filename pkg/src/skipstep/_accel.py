"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

The numba path is used whenever numba imports cleanly. Set the environment
variable ``SKIPSTEP_NO_NUMBA=1`` before importing the package to force the
numpy fallback (useful for debugging and for the kernel benchmark, which
times both paths explicitly).

Both paths of every kernel are exported with ``_np`` / ``_nb`` suffixes so
they can be compared directly; the unsuffixed name is the active one.
"""

import os

import numpy as np

_BLOCK = 256  # row block for the numpy pairwise fallbacks


def numba_requested() -> bool:
    """True unless SKIPSTEP_NO_NUMBA is set to a truthy value."""
    return os.environ.get("SKIPSTEP_NO_NUMBA", "").strip().lower() not in (
        "1",
        "true",
        "yes",
    )


def _numba_available() -> bool:
    if not numba_requested():
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def affine_step_np(x, eps_hat, c_x, c_eps):
    """c_x * x - c_eps * eps_hat, elementwise over a (n, dim) batch."""
    return c_x * x - c_eps * eps_hat


def affine_step_noise_np(x, eps_hat, noise, c_x, c_eps, c_noise):
    """(c_x * x - c_eps * eps_hat) + c_noise * noise."""
    return (c_x * x - c_eps * eps_hat) + c_noise * noise


def mean_cross_distance_np(a, b):
    """Mean Euclidean distance over all (i, j) pairs of rows of a and b."""
    n = a.shape[0]
    m = b.shape[0]
    row_sums = np.empty(n)
    for start in range(0, n, _BLOCK):
        blk = a[start : start + _BLOCK]
        d2 = ((blk[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        row_sums[start : start + blk.shape[0]] = np.sqrt(d2).sum(axis=1)
    return float(row_sums.sum() / (n * m))


def mean_self_distance_np(a):
    """Mean Euclidean distance over all ordered pairs i != j of rows of a."""
    n = a.shape[0]
    if n < 2:
        return 0.0
    row_sums = np.empty(n)
    for start in range(0, n, _BLOCK):
        blk = a[start : start + _BLOCK]
        d2 = ((blk[:, None, :] - a[None, :, :]) ** 2).sum(axis=2)
        row_sums[start : start + blk.shape[0]] = np.sqrt(d2).sum(axis=1)
    # the diagonal contributes exact zeros, so summing everything is the
    # i != j sum; only the pair count changes
    return float(row_sums.sum() / (n * (n - 1)))


def rbf_cross_mean_np(a, b, gamma):
    """Mean of exp(-gamma * ||a_i - b_j||^2) over all (i, j) pairs."""
    n = a.shape[0]
    m = b.shape[0]
    row_sums = np.empty(n)
    for start in range(0, n, _BLOCK):
        blk = a[start : start + _BLOCK]
        d2 = ((blk[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        row_sums[start : start + blk.shape[0]] = np.exp(-gamma * d2).sum(axis=1)
    return float(row_sums.sum() / (n * m))


def rbf_self_mean_np(a, gamma):
    """Mean of exp(-gamma * ||a_i - a_j||^2) over ordered pairs i != j."""
    n = a.shape[0]
    if n < 2:
        return 0.0
    row_sums = np.empty(n)
    for start in range(0, n, _BLOCK):
        blk = a[start : start + _BLOCK]
        d2 = ((blk[:, None, :] - a[None, :, :]) ** 2).sum(axis=2)
        row_sums[start : start + blk.shape[0]] = np.exp(-gamma * d2).sum(axis=1)
    # remove the n diagonal terms, each exp(0) = 1
    return float((row_sums.sum() - n) / (n * (n - 1)))


# ---------------------------------------------------------------------------
# numba implementations (compiled lazily at import when available)
# ---------------------------------------------------------------------------

HAS_NUMBA = _numba_available()

if HAS_NUMBA:
    from numba import njit

    @njit(cache=True)
    def affine_step_nb(x, eps_hat, c_x, c_eps):
        n, d = x.shape
        out = np.empty((n, d))
        for i in range(n):
            for k in range(d):
                out[i, k] = c_x * x[i, k] - c_eps * eps_hat[i, k]
        return out

    @njit(cache=True)
    def affine_step_noise_nb(x, eps_hat, noise, c_x, c_eps, c_noise):
        n, d = x.shape
        out = np.empty((n, d))
        for i in range(n):
            for k in range(d):
                out[i, k] = (c_x * x[i, k] - c_eps * eps_hat[i, k]) + c_noise * noise[i, k]
        return out

    @njit(cache=True)
    def mean_cross_distance_nb(a, b):
        n, d = a.shape
        m = b.shape[0]
        total = 0.0
        for i in range(n):
            row = 0.0
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    acc += diff * diff
                row += np.sqrt(acc)
            total += row
        return total / (n * m)

    @njit(cache=True)
    def mean_self_distance_nb(a):
        n, d = a.shape
        if n < 2:
            return 0.0
        total = 0.0
        for i in range(n):
            row = 0.0
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - a[j, k]
                    acc += diff * diff
                row += np.sqrt(acc)
            total += row
        return 2.0 * total / (n * (n - 1))

    @njit(cache=True)
    def rbf_cross_mean_nb(a, b, gamma):
        n, d = a.shape
        m = b.shape[0]
        total = 0.0
        for i in range(n):
            row = 0.0
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    acc += diff * diff
                row += np.exp(-gamma * acc)
            total += row
        return total / (n * m)

    @njit(cache=True)
    def rbf_self_mean_nb(a, gamma):
        n, d = a.shape
        if n < 2:
            return 0.0
        total = 0.0
        for i in range(n):
            row = 0.0
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = a[i, k] - a[j, k]
                    acc += diff * diff
                row += np.exp(-gamma * acc)
            total += row
        return 2.0 * total / (n * (n - 1))

    affine_step = affine_step_nb
    affine_step_noise = affine_step_noise_nb
    mean_cross_distance = mean_cross_distance_nb
    mean_self_distance = mean_self_distance_nb
    rbf_cross_mean = rbf_cross_mean_nb
    rbf_self_mean = rbf_self_mean_nb
else:
    affine_step = affine_step_np
    affine_step_noise = affine_step_noise_np
    mean_cross_distance = mean_cross_distance_np
    mean_self_distance = mean_self_distance_np
    rbf_cross_mean = rbf_cross_mean_np
    rbf_self_mean = rbf_self_mean_np
