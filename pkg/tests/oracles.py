"""Deliberately naive scalar reference implementations, test-only.

Everything here is written with explicit Python loops over floats so the
production numpy paths have an independent implementation to agree with.
Nothing imports from the package.
"""

import math


def transform_ref(w, h):
    d = len(w)
    m = len(w[0])
    return [sum(float(w[r][c]) * float(h[c]) for c in range(m)) for r in range(d)]


def cosine_ref(a, b):
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    na = math.sqrt(sum(float(x) * float(x) for x in a))
    nb = math.sqrt(sum(float(y) * float(y) for y in b))
    return dot / (na * nb)


def _transformed(vectors, w):
    return [transform_ref(w, h) for h in vectors]


def loss_s_ref(vectors, labels, w):
    """Instance-instance loss, term by term over all ordered pairs."""
    us = _transformed(vectors, w)
    n = len(us)
    total = 0.0
    for i in range(n):
        neg = 0.0
        for jp in range(n):
            if labels[jp] != labels[i]:
                neg += math.exp(cosine_ref(us[i], us[jp]))
        for j in range(n):
            phi = 1.0 if labels[i] == labels[j] else 0.0
            theta = math.exp(phi * cosine_ref(us[i], us[j]))
            total += -math.log(theta / (theta + neg))
    return total / (n * n)


def loss_p1_ref(vectors, labels, w, p):
    us = _transformed(vectors, w)
    k = len(p)
    total = 0.0
    for i, u in enumerate(us):
        num = math.exp(cosine_ref(u, p[labels[i]]))
        den = sum(math.exp(cosine_ref(u, p[c])) for c in range(k))
        total += -math.log(num / den)
    return total / len(us)


def loss_p2_ref(vectors, labels, w, p):
    us = _transformed(vectors, w)
    total = 0.0
    for i, u in enumerate(us):
        anchor = p[labels[i]]
        num = math.exp(cosine_ref(anchor, u))
        den = num
        for j, other in enumerate(us):
            if labels[j] != labels[i]:
                den += math.exp(cosine_ref(anchor, other))
        total += -math.log(num / den)
    return total / len(us)


def total_ref(vectors, labels, w, p, lam):
    l1, l2, l3 = lam
    out = 0.0
    if l1:
        out += l1 * loss_s_ref(vectors, labels, w)
    if l2:
        out += l2 * loss_p1_ref(vectors, labels, w, p)
    if l3:
        out += l3 * loss_p2_ref(vectors, labels, w, p)
    return out


def softmax_ref(scores):
    exps = [math.exp(s) for s in scores]
    z = sum(exps)
    return [e / z for e in exps]


def micro_f1_ref(pred, gold):
    # for single-label multiclass, micro-F1 collapses to accuracy
    hits = sum(1 for p, g in zip(pred, gold) if p == g)
    return hits / len(gold)
