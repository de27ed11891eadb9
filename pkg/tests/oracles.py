"""Slow reference implementations used to cross-check the vectorized library code.

Everything here is written with plain Python loops and dict arithmetic, on
purpose: no shared code paths with src/faircon, so agreement is evidence.
"""

import math
from collections import Counter


def sup_loss_loop(z, labels, tau):
    """Label-level contrastive loss by direct enumeration over rows."""
    m = len(z)
    total = 0.0
    for i in range(m):
        positives = [j for j in range(m) if j != i and labels[j] == labels[i]]
        if not positives:
            raise ValueError("row without a same-label companion")
        denom = [j for j in range(m) if j != i]
        scores = {j: sum(z[i][k] * z[j][k] for k in range(len(z[i]))) / tau for j in denom}
        log_z = _log_sum_exp([scores[j] for j in denom])
        for j in positives:
            total += (log_z - scores[j]) / len(positives)
    return total


def cond_loss_loop(z, labels, attrs, tau):
    """Pair-conditional loss: partner positive, same-(attr,label) denominator."""
    m = len(z)
    n = m // 2
    total = 0.0
    for i in range(m):
        partner = i + n if i < n else i - n
        cell = [
            j
            for j in range(m)
            if j != i and labels[j] == labels[i] and attrs[j] == attrs[i]
        ]
        scores = {j: sum(z[i][k] * z[j][k] for k in range(len(z[i]))) / tau for j in cell}
        log_z = _log_sum_exp([scores[j] for j in cell])
        total += (log_z - scores[partner]) / len(cell)
    return total


def _log_sum_exp(xs):
    m = max(xs)
    return m + math.log(sum(math.exp(x - m) for x in xs))


def eo_gaps_loop(records, num_classes, num_groups):
    """Per-class TPR/FPR gap sums via dict tallies.

    Returns {label: (delta_tpr, delta_fpr)} treating an undefined group rate as
    contributing zero, mirroring the library's warning-and-skip policy.  A rate
    is undefined when the group has no examples on the relevant side.
    """
    gaps = {}
    for c in range(num_classes):
        tp = Counter()
        fn = Counter()
        fp = Counter()
        tn = Counter()
        for r in records:
            hit = r.y_pred == c
            if r.y_true == c:
                (tp if hit else fn)[r.attr] += 1
            else:
                (fp if hit else tn)[r.attr] += 1
        all_tp = sum(tp.values())
        all_fn = sum(fn.values())
        all_fp = sum(fp.values())
        all_tn = sum(tn.values())
        d_tpr = _rate_gap(tp, fn, all_tp, all_fn, num_groups)
        d_fpr = _rate_gap(fp, tn, all_fp, all_tn, num_groups)
        gaps[c] = (d_tpr, d_fpr)
    return gaps


def _rate_gap(num, den_other, all_num, all_den_other, num_groups):
    if all_num + all_den_other == 0:
        return 0.0
    overall = all_num / (all_num + all_den_other)
    gap = 0.0
    for a in range(num_groups):
        support = num[a] + den_other[a]
        if support == 0:
            continue
        gap += abs(num[a] / support - overall)
    return gap


def f1_loop(records, positive):
    tp = sum(1 for r in records if r.y_pred == positive and r.y_true == positive)
    fp = sum(1 for r in records if r.y_pred == positive and r.y_true != positive)
    fn = sum(1 for r in records if r.y_pred != positive and r.y_true == positive)
    if 2 * tp + fp + fn == 0:
        return 0.0
    return 2 * tp / (2 * tp + fp + fn)


def cmi_definitional(table, u_axis, v_axis, given_axes):
    """I(U; V | W) from the definition: sum p log [ p(u,v|w) / (p(u|w) p(v|w)) ].

    ``table`` is a 4-D nested-indexable array-like; axes identify U, V, and the
    conditioning set W.  Independent of any entropy identity.
    """
    dims = _shape(table)
    cells = {}
    for idx in _indices(dims):
        p = table[idx[0]][idx[1]][idx[2]][idx[3]]
        if p <= 0:
            continue
        w = tuple(idx[ax] for ax in given_axes)
        u = idx[u_axis]
        v = idx[v_axis]
        cell = cells.setdefault(w, {"w": 0.0, "u": Counter(), "v": Counter(), "uv": Counter()})
        cell["w"] += p
        cell["u"][u] += p
        cell["v"][v] += p
        cell["uv"][(u, v)] += p
    total = 0.0
    for cell in cells.values():
        pw = cell["w"]
        for (u, v), puv in cell["uv"].items():
            total += puv * math.log(puv * pw / (cell["u"][u] * cell["v"][v]))
    return total


def infonce_tuple_value(table, scores, n_tuple):
    """Cell-conditional contrastive value by nested dict enumeration.

    ``table[a][y][c][v]`` is the joint; ``scores[v][c]`` the critic.  Draws one
    positive (code, view) pair from the cell joint and ``n_tuple - 1`` negative
    codes from the cell's code marginal, all probabilities kept in dicts.
    """
    dims = _shape(table)
    n_codes = dims[2]
    total = 0.0
    for a in range(dims[0]):
        for y in range(dims[1]):
            w_cell = sum(
                table[a][y][c][v] for c in range(n_codes) for v in range(n_codes)
            )
            if w_cell <= 0:
                continue
            pair = {
                (c, v): table[a][y][c][v] / w_cell
                for c in range(n_codes)
                for v in range(n_codes)
            }
            code = {c: sum(pair[(c, v)] for v in range(n_codes)) for c in range(n_codes)}
            neg_tuples = [((), 1.0)]
            for _ in range(n_tuple - 1):
                neg_tuples = [
                    (t + (c,), w * code[c]) for t, w in neg_tuples for c in range(n_codes)
                ]
            acc = 0.0
            for (c1, v), w_pos in pair.items():
                if w_pos <= 0:
                    continue
                for rest, w_rest in neg_tuples:
                    if w_rest <= 0:
                        continue
                    vals = [scores[v][c1]] + [scores[v][c] for c in rest]
                    acc += w_pos * w_rest * (vals[0] - _log_mean_exp_list(vals))
            total += w_cell * acc
    return total


def _log_mean_exp_list(vals):
    m = max(vals)
    return m + math.log(sum(math.exp(x - m) for x in vals) / len(vals))


def entropy_definitional(table, axes):
    """H over the named axes of a 4-D table, by marginalizing with dicts."""
    dims = _shape(table)
    mass = Counter()
    for idx in _indices(dims):
        p = table[idx[0]][idx[1]][idx[2]][idx[3]]
        if p > 0:
            mass[tuple(idx[ax] for ax in axes)] += p
    return -sum(p * math.log(p) for p in mass.values())


def _shape(table):
    dims = []
    level = table
    for _ in range(4):
        dims.append(len(level))
        level = level[0]
    return dims


def _indices(dims):
    out = [()]
    for d in dims:
        out = [idx + (i,) for idx in out for i in range(d)]
    return out
