"""Pure-Python greedy matching kernel.

Fallback for the compiled extension; same contract as
``_matchkernel.greedy_match``. Token similarity is the cosine of the
two table vectors clamped to [0, 1]; a token outside the table behaves
as a one-hot axis of its own (similarity 1 to the identical token, 0
otherwise).
"""


def _sim(i, j, rows_a, rows_b, ids_a, ids_b, vectors):
    ra, rb = rows_a[i], rows_b[j]
    if ra < 0 or rb < 0:
        return 1.0 if ids_a[i] == ids_b[j] else 0.0
    dot = 0.0
    va, vb = vectors[ra], vectors[rb]
    for k in range(len(va)):
        dot += va[k] * vb[k]
    if dot < 0.0:
        return 0.0
    if dot > 1.0:
        return 1.0
    return dot


def greedy_match(hyp_rows, ref_rows, hyp_ids, ref_ids, vectors):
    """Return (precision, recall) of greedy max-similarity matching.

    ``*_rows`` index into ``vectors`` (unit-normalized, -1 = out of
    table); ``*_ids`` are interned token identities.
    """
    n_h, n_r = len(hyp_rows), len(ref_rows)
    p_sum = 0.0
    for i in range(n_h):
        best = 0.0
        for j in range(n_r):
            s = _sim(i, j, hyp_rows, ref_rows, hyp_ids, ref_ids, vectors)
            if s > best:
                best = s
        p_sum += best
    r_sum = 0.0
    for j in range(n_r):
        best = 0.0
        for i in range(n_h):
            s = _sim(i, j, hyp_rows, ref_rows, hyp_ids, ref_ids, vectors)
            if s > best:
                best = s
        r_sum += best
    return p_sum / n_h, r_sum / n_r
