"""Slow, independent reference implementations used by the tests."""
import itertools


def sqdist(a, b):
    return (a.real - b.real) ** 2 + (a.imag - b.imag) ** 2


def nearest(s, centroids):
    best, best_j = None, None
    for j, c in enumerate(centroids):
        dist = sqdist(s, c)
        if best is None or dist < best:
            best, best_j = dist, j
    return best_j


def lloyd_replay(samples, init, max_iters=300):
    """Plain-loop Lloyd iteration with the same empty-cluster rule as the library."""
    samples = [complex(s) for s in samples]
    cents = [complex(c) for c in init]

    def repair(labels):
        for j in range(len(cents)):
            if j not in labels:
                dists = [sqdist(s, cents[labels[i]]) for i, s in enumerate(samples)]
                far = max(range(len(samples)), key=lambda i: (dists[i], -i))
                cents[j] = samples[far]
                labels[far] = j
        return labels

    labels = repair([nearest(s, cents) for s in samples])
    for _ in range(max_iters):
        for j in range(len(cents)):
            members = [s for s, lab in zip(samples, labels) if lab == j]
            if members:
                cents[j] = sum(members) / len(members)
        new = repair([nearest(s, cents) for s in samples])
        if new == labels:
            break
        labels = new
    obj = sum(sqdist(s, cents[lab]) for s, lab in zip(samples, labels))
    return cents, labels, obj


def partitions(n, k):
    """All labelings of n items into exactly k non-empty groups (canonical form)."""
    for labels in itertools.product(range(k), repeat=n):
        if len(set(labels)) != k:
            continue
        seen = {}
        canon = tuple(seen.setdefault(lab, len(seen)) for lab in labels)
        if canon == labels:
            yield labels


def best_partition(samples, k):
    best = None
    for labels in partitions(len(samples), k):
        cents = []
        for j in range(k):
            members = [s for s, lab in zip(samples, labels) if lab == j]
            cents.append(sum(members) / len(members))
        obj = sum(sqdist(s, cents[lab]) for s, lab in zip(samples, labels))
        if best is None or obj < best[0]:
            best = (obj, cents)
    return best
