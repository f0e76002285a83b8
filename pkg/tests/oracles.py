"""Brute-force reference implementations used as test oracles."""

import numpy as np

OMEGA0 = 6.0


def morlet_direct(eta):
    eta = np.asarray(eta, dtype=float)
    return np.pi ** -0.25 * np.exp(1j * OMEGA0 * eta) * np.exp(-eta ** 2 / 2)


def cwt_direct_row(x, s):
    """W(s, n) = sum_k x[k] conj(psi((k - n)/s)) / sqrt(s), by np.convolve."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    j = np.arange(-(n - 1), n)
    g = np.conj(morlet_direct(-j / s)) / np.sqrt(s)  # g[j] pairs with x[n - j]
    full = np.convolve(x, g)
    return full[n - 1:2 * n - 1]


def cwt_direct_loop(x, s, times):
    """Same quantity, summed explicitly for a few time indices."""
    x = np.asarray(x, dtype=float)
    k = np.arange(len(x))
    return np.array([np.sum(x * np.conj(morlet_direct((k - t) / s))) / np.sqrt(s) for t in times])


def youden_brute(values, abnormal):
    """Best midpoint threshold by exhaustive search; ties: widest margin, then smallest."""
    values = [float(v) for v in values]
    abnormal = [bool(a) for a in abnormal]
    uniq = sorted(set(values))
    n_ab = sum(abnormal)
    n_no = len(abnormal) - n_ab
    best = None
    for lo, hi in zip(uniq, uniq[1:]):
        th = (lo + hi) / 2
        tp = sum(1 for v, a in zip(values, abnormal) if a and v < th)
        tn = sum(1 for v, a in zip(values, abnormal) if not a and v >= th)
        j = tp / n_ab + tn / n_no - 1
        key = (round(j, 12), (hi - lo) / 2, -th)
        if best is None or key > best[0]:
            best = (key, th)
    return best[1]


def knn_brute(train_pts, train_labels, query, k):
    """Exhaustive k-NN on z-scored features; equal distances favour lower index."""
    pts = [tuple(map(float, p)) for p in train_pts]
    n = len(pts)
    means = [sum(p[d] for p in pts) / n for d in range(2)]
    sds = [(sum((p[d] - means[d]) ** 2 for p in pts) / n) ** 0.5 for d in range(2)]
    z = lambda p: [(p[d] - means[d]) / sds[d] for d in range(2)]
    zq = z(query)
    dists = []
    for i, p in enumerate(pts):
        zp = z(p)
        dists.append((sum((a - b) ** 2 for a, b in zip(zp, zq)), i))
    dists.sort()
    votes = {}
    for _, i in dists[:k]:
        votes[train_labels[i]] = votes.get(train_labels[i], 0) + 1
    return max(votes, key=votes.get)
