"""Independent brute-force reference implementations.

Pure Python per-item loops over lists, using math.log and math.fsum:
deliberately sharing no code with the vectorized library paths they
check. Conventions (tie-breaking, bin boundary rules, chunk sizes,
exact-uniform handling) follow the same documented contracts.
"""

import math
from math import fsum


def brute_entropy(p):
    c = len(p)
    if all(x == p[0] for x in p):
        return 1.0
    h = -fsum(x * math.log(x) for x in p if x > 0.0) / math.log(c)
    return min(max(h, 0.0), 1.0)


def brute_confidence(p):
    return max(p)


def brute_wvr(p):
    c = len(p)
    if all(x == p[0] for x in p):
        return 1.0
    return min(max(c * (1.0 - max(p)) / (c - 1), 0.0), 1.0)


def brute_iqv(p):
    c = len(p)
    if all(x == p[0] for x in p):
        return 1.0
    return min(max(c * (1.0 - fsum(x * x for x in p)) / (c - 1), 0.0), 1.0)


BRUTE_VARIATIONS = {
    "entropy": brute_entropy,
    "confidence": brute_confidence,
    "wvr": brute_wvr,
    "iqv": brute_iqv,
}


def brute_rank(probs, label):
    """Descending sort with ascending-index tie-break; one-hot rank indicator."""
    c = len(probs)
    order = sorted(range(c), key=lambda k: (-probs[k], k))
    q = [probs[k] for k in order]
    r = [1 if order[pos] == label else 0 for pos in range(c)]
    return q, order, r


def brute_equal_width_assign(values, num_bins, lo, hi):
    edges = [lo + k * (hi - lo) / num_bins for k in range(num_bins + 1)]
    edges[0], edges[-1] = lo, hi
    out = []
    for v in values:
        if v <= edges[0]:
            out.append(0)
            continue
        for b in range(num_bins):
            if v <= edges[b + 1]:
                out.append(b)
                break
        else:
            out.append(num_bins - 1)
    return out


def brute_equal_frequency_assign(values, num_bins):
    n = len(values)
    order = sorted(range(n), key=lambda i: (values[i], i))
    base, rem = divmod(n, num_bins)
    out = [0] * n
    pos = 0
    for b in range(num_bins):
        for _ in range(base + (1 if b < rem else 0)):
            out[order[pos]] = b
            pos += 1
    return out


def _assign(stat, num_bins, binning, lo, hi):
    if binning == "equal-width":
        return brute_equal_width_assign(stat, num_bins, lo, hi)
    return brute_equal_frequency_assign(stat, num_bins)


def brute_ece(items, num_bins, binning, domain=None):
    """items: list of (probs list, label)."""
    c = len(items[0][0])
    n = len(items)
    lo, hi = domain if domain is not None else (1.0 / c, 1.0)
    stat = [max(p) for p, _ in items]
    bins = _assign(stat, num_bins, binning, lo, hi)
    total = []
    for m in range(num_bins):
        member = [i for i in range(n) if bins[i] == m]
        if not member:
            continue
        conf = fsum(stat[i] for i in member) / len(member)
        acc = sum(1 for i in member if items[i][0].index(max(items[i][0])) == items[i][1]) / len(member)
        total.append(len(member) / n * abs(acc - conf))
    return fsum(total)


def brute_uce(items, num_bins, binning):
    n = len(items)
    stat = [brute_entropy(p) for p, _ in items]
    bins = _assign(stat, num_bins, binning, 0.0, 1.0)
    total = []
    for m in range(num_bins):
        member = [i for i in range(n) if bins[i] == m]
        if not member:
            continue
        uncert = fsum(stat[i] for i in member) / len(member)
        err = sum(1 for i in member if items[i][0].index(max(items[i][0])) != items[i][1]) / len(member)
        total.append(len(member) / n * abs(err - uncert))
    return fsum(total)


def brute_vce(items, num_bins, binning, variation="entropy", domain=(0.0, 1.0)):
    c = len(items[0][0])
    n = len(items)
    metric = BRUTE_VARIATIONS[variation]
    stat = [metric(p) for p, _ in items]
    bins = _assign(stat, num_bins, binning, domain[0], domain[1])
    ranked = [brute_rank(p, y) for p, y in items]
    total = []
    for m in range(num_bins):
        member = [i for i in range(n) if bins[i] == m]
        if not member:
            continue
        mean_q = [fsum(ranked[i][0][k] for i in member) / len(member) for k in range(c)]
        mean_r = [fsum(ranked[i][2][k] for i in member) / len(member) for k in range(c)]
        total.append(len(member) / n * abs(metric(mean_r) - metric(mean_q)))
    return fsum(total)


def dataset_items(dataset):
    """Convert an array-backed Dataset to plain (list, int) pairs."""
    return [(row, int(y)) for row, y in zip(dataset.probs.tolist(), dataset.labels.tolist())]
