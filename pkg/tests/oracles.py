"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools


def naive_epoch_update(S, x_prev, ttr_prev, alpha):
    """Straight-line update over a dense list-of-lists matrix.

    Returns (x_new, ttr_new, beta). Written without any helper from the package.
    """
    n = len(S)
    x_new, ttr_new, betas = [], [], []
    for i in range(n):
        up_w = 0.0
        up_raw = 0.0
        down_w = 0.0
        down_raw = 0.0
        for j in range(n):
            up_w += S[i][j] * x_prev[j]
            up_raw += S[i][j]
            down_w += S[j][i] * x_prev[j]
            down_raw += S[j][i]
        a_u = up_w + down_raw
        if a_u == 0.0:
            betas.append(0.0)
            x_new.append(x_prev[i])
            ttr_new.append(ttr_prev[i])
            continue
        delta = up_raw + down_raw
        total = ttr_prev[i] + delta
        beta = delta / total
        d = alpha * down_w + (1.0 - alpha) * down_raw
        betas.append(beta)
        x_new.append((1.0 - beta) * x_prev[i] + beta * (up_w / (up_w + d)))
        ttr_new.append(total)
    return x_new, ttr_new, betas


def blocking_pairs(proposers, acceptors, pairs):
    """Blocking pairs straight from the definition; ``pairs`` maps proposer -> acceptor."""
    p_partner = dict(pairs)
    a_partner = {a: p for p, a in pairs.items()}

    def better(prefs, cand, cur):
        if cand not in prefs:
            return False
        return cur is None or prefs.index(cand) < prefs.index(cur)

    out = []
    for p in proposers:
        for a in acceptors:
            if better(proposers[p], a, p_partner.get(p)) and better(acceptors[a], p, a_partner.get(a)):
                out.append((p, a))
    return out


def all_stable_matchings(proposers, acceptors):
    """Every stable matching, by exhaustive search over mutually acceptable pairings."""
    plist = list(proposers)
    found = []

    def acceptable(p, a):
        return a in proposers[p] and p in acceptors[a]

    def rec(k, pairs, used):
        if k == len(plist):
            if not blocking_pairs(proposers, acceptors, pairs):
                found.append(dict(pairs))
            return
        p = plist[k]
        for a in itertools.chain(proposers[p], [None]):
            if a is not None and (a in used or not acceptable(p, a)):
                continue
            if a is not None:
                pairs[p] = a
                used.add(a)
            if not _early_block(proposers, acceptors, plist[: k + 1], pairs, used):
                rec(k + 1, pairs, used)
            if a is not None:
                del pairs[p]
                used.discard(a)

    rec(0, {}, set())
    return found


def _early_block(proposers, acceptors, decided, pairs, used):
    # a pair of a decided proposer and an already-taken acceptor can be judged now
    a_partner = {a: p for p, a in pairs.items()}
    for p in decided:
        cur = pairs.get(p)
        for a in proposers[p]:
            if a == cur:
                break
            if a in used and p in acceptors[a]:
                holder = a_partner[a]
                if acceptors[a].index(p) < acceptors[a].index(holder):
                    return True
    return False


def proposer_optimal(proposers, acceptors):
    """The stable matching every proposer weakly prefers to all others (assumed to exist)."""
    stable = all_stable_matchings(proposers, acceptors)

    def rank(p, a):
        return len(proposers[p]) if a is None else proposers[p].index(a)

    best = {}
    for p in proposers:
        options = [m.get(p) for m in stable]
        best_a = min(options, key=lambda a: rank(p, a))
        if best_a is not None:
            best[p] = best_a
    return best, stable
