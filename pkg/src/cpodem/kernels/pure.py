"""Pure-numpy implementations of the hot kernels.

Reference lane: the Cython module `_native` mirrors these semantics.
"""

import math

import numpy as np


def maxpro_pair_sum(D):
    """Sum over row pairs of the product of inverse squared coordinate gaps.

    Returns inf when any pair shares a coordinate value.
    """
    D = np.asarray(D, dtype=float)
    diff = D[:, None, :] - D[None, :, :]
    sq = diff * diff
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    pair_sq = sq[iu, ju, :]
    if np.any(pair_sq == 0.0):
        return math.inf
    return float(np.sum(1.0 / np.prod(pair_sq, axis=1)))


def _pair_products(D):
    # P[i, j] = prod_k (D[i,k]-D[j,k])^-2, symmetric, diag zeroed
    diff = D[:, None, :] - D[None, :, :]
    sq = diff * diff
    with np.errstate(divide="ignore"):
        P = 1.0 / np.prod(sq, axis=2)
    np.fill_diagonal(P, 0.0)
    return P


def anneal_lhd(D0, cols, ia, ib, u, t0, decay, sweep_len):
    """Simulated-annealing column-swap search over a Latin-hypercube design.

    Proposals (cols[m], ia[m], ib[m]) swap the values of rows ia/ib in one
    column; u[m] is the pre-drawn acceptance uniform. The criterion is
    psi = (pair_sum / C(n,2))^(1/p). Temperature starts at t0 and is
    multiplied by `decay` after each sweep of `sweep_len` proposals.

    Returns (best design, best pair sum, per-sweep trace of the incumbent
    best psi).
    """
    D = np.array(D0, dtype=float)
    n, p = D.shape
    npairs = n * (n - 1) / 2.0
    inv_p = 1.0 / p

    P = _pair_products(D)
    S = float(np.sum(np.triu(P, k=1)))
    psi = (S / npairs) ** inv_p

    best = D.copy()
    best_S = S
    best_psi = psi

    n_prop = len(cols)
    n_sweeps = n_prop // sweep_len
    trace = np.empty(n_sweeps)
    temp = t0

    m = 0
    for sweep in range(n_sweeps):
        # periodic recompute kills multiplicative drift
        P = _pair_products(D)
        S = float(np.sum(np.triu(P, k=1)))
        psi = (S / npairs) ** inv_p
        for _ in range(sweep_len):
            c, a, b = cols[m], ia[m], ib[m]
            xa, xb = D[a, c], D[b, c]
            da = xa - D[:, c]
            db = xb - D[:, c]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio_a = (da * da) / (db * db)  # row a takes xb
                ratio_b = (db * db) / (da * da)
            # own and partner entries carry no pair term
            ratio_a[a] = ratio_a[b] = 1.0
            ratio_b[a] = ratio_b[b] = 1.0
            new_Pa = P[a] * ratio_a
            new_Pb = P[b] * ratio_b
            dS = float(np.sum(new_Pa - P[a]) + np.sum(new_Pb - P[b]))
            S_new = S + dS
            psi_new = (S_new / npairs) ** inv_p
            accept = psi_new <= psi or u[m] < math.exp(-(psi_new - psi) / temp)
            if accept:
                D[a, c], D[b, c] = xb, xa
                P[a], P[:, a] = new_Pa, new_Pa
                P[b], P[:, b] = new_Pb, new_Pb
                S, psi = S_new, psi_new
                if psi < best_psi:
                    best_psi, best_S = psi, S
                    best = D.copy()
            m += 1
        trace[sweep] = best_psi
        temp *= decay
    return best, best_S, trace


def idw_apply(idx, w, fields):
    """Weighted gather: out[t, q] = sum_j w[q, j] * fields[t, idx[q, j]]."""
    fields = np.asarray(fields, dtype=float)
    return np.einsum("qj,tqj->tq", w, fields[:, idx])


def gaussian_corr(X, Y, eta):
    """Correlation matrix exp(-sum_k eta_k (x_k - y_k)^2), shape (n, m)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    d2 = ((X[:, None, :] - Y[None, :, :]) ** 2 * eta).sum(axis=2)
    return np.exp(-d2)
