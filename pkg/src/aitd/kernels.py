"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

The backend is chosen once at import time. When numba imports cleanly and the
environment variable ``AITD_DISABLE_NUMBA`` is unset (or "0"/"false"), the
``@njit`` implementations are bound to the public names; otherwise the
vectorized numpy implementations are. ``benchmarks/bench_kernels.py`` times
the two side by side.

Both backends implement identical contracts and are compared against each
other in the test suite. Float summation order differs between them
(sequential loops vs numpy reductions), so cross-backend results agree to
rounding error rather than bit-for-bit; within a single backend every kernel
is exactly deterministic.

Shared conventions:
  - sparse matrices arrive as raw CSR arrays (indptr, indices, data) with
    strictly increasing column indices per row and no explicit zeros;
  - the boosted-tree split kernels additionally use a column-major view
    (col_indptr, col_rows, col_vals) whose entries are presorted by
    (value, row) within each column, so no sorting happens per node.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_DISABLED = os.environ.get("AITD_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}
NUMBA_ACTIVE = _HAVE_NUMBA and not NUMBA_DISABLED
BACKEND = "numba" if NUMBA_ACTIVE else "numpy"

if NUMBA_ACTIVE:
    from numba import njit
else:

    def njit(*args, **kwargs):
        """Identity decorator so the jit sources stay importable without numba."""
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap


# ---------------------------------------------------------------------------
# CSR row products
# ---------------------------------------------------------------------------


@njit(cache=True)
def _csr_row_dots_jit(indptr, indices, data, w, out):
    for r in range(indptr.shape[0] - 1):
        s = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            s += data[p] * w[indices[p]]
        out[r] = s


def _csr_row_dots_np(indptr, indices, data, w, out):
    n_rows = indptr.shape[0] - 1
    row_of = np.repeat(np.arange(n_rows), np.diff(indptr))
    # bincount accumulates in storage order: per-row sums, no cross-row error
    out[:] = np.bincount(row_of, weights=data * w[indices], minlength=n_rows)


@njit(cache=True)
def _csr_l2_normalize_jit(indptr, data):
    for r in range(indptr.shape[0] - 1):
        ss = 0.0
        for p in range(indptr[r], indptr[r + 1]):
            ss += data[p] * data[p]
        if ss > 0.0:
            inv = 1.0 / math.sqrt(ss)
            for p in range(indptr[r], indptr[r + 1]):
                data[p] *= inv


def _csr_l2_normalize_np(indptr, data):
    n_rows = indptr.shape[0] - 1
    counts = np.diff(indptr)
    row_of = np.repeat(np.arange(n_rows), counts)
    row_ss = np.bincount(row_of, weights=data * data, minlength=n_rows)
    scale = np.ones_like(row_ss)
    nz = row_ss > 0.0
    scale[nz] = 1.0 / np.sqrt(row_ss[nz])
    data *= np.repeat(scale, counts)


# ---------------------------------------------------------------------------
# Boosted-tree split search
# ---------------------------------------------------------------------------
#
# Exact greedy search over one node. Candidate thresholds sit at midpoints of
# consecutive distinct sorted feature values; rows absent from a column are an
# implicit-zero bucket spliced once at value 0.0 (columns never store explicit
# zeros, so the bucket's position is unambiguous). gain =
# 0.5*(GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam)) - gamma, and ties resolve
# to the lowest feature index then the lowest threshold via strict `>`
# comparisons in ascending scan order.


@njit(cache=True)
def _gbdt_best_split_jit(
    col_indptr,
    col_rows,
    col_vals,
    rows,
    g,
    h,
    g_node,
    h_node,
    lam,
    gamma,
    min_child_h,
    in_node,
    buf_val,
    buf_g,
    buf_h,
):
    n_cols = col_indptr.shape[0] - 1
    n_node = rows.shape[0]
    for idx in range(n_node):
        in_node[rows[idx]] = True
    parent_score = g_node * g_node / (h_node + lam)
    best_feat = np.int64(-1)
    best_thr = 0.0
    best_gain = 0.0
    for f in range(n_cols):
        k = 0
        g_nz = 0.0
        h_nz = 0.0
        for p in range(col_indptr[f], col_indptr[f + 1]):
            r = col_rows[p]
            if in_node[r]:
                buf_val[k] = col_vals[p]
                buf_g[k] = g[r]
                buf_h[k] = h[r]
                g_nz += g[r]
                h_nz += h[r]
                k += 1
        if k == 0:
            continue
        zero_pending = n_node - k > 0
        g_zero = g_node - g_nz
        h_zero = h_node - h_nz
        gl = 0.0
        hl = 0.0
        pos = 0
        prev_val = 0.0
        have_prev = False
        while pos < k or zero_pending:
            if zero_pending and (pos >= k or buf_val[pos] > 0.0):
                cur_val = 0.0
                grp_g = g_zero
                grp_h = h_zero
                zero_pending = False
            else:
                cur_val = buf_val[pos]
                grp_g = 0.0
                grp_h = 0.0
                while pos < k and buf_val[pos] == cur_val:
                    grp_g += buf_g[pos]
                    grp_h += buf_h[pos]
                    pos += 1
            if have_prev:
                hr = h_node - hl
                if hl >= min_child_h and hr >= min_child_h:
                    gr = g_node - gl
                    gain = (
                        0.5
                        * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score)
                        - gamma
                    )
                    if gain > best_gain and gain > 0.0:
                        best_gain = gain
                        best_feat = np.int64(f)
                        best_thr = 0.5 * (prev_val + cur_val)
            gl += grp_g
            hl += grp_h
            prev_val = cur_val
            have_prev = True
    for idx in range(n_node):
        in_node[rows[idx]] = False
    return best_feat, best_thr, best_gain


def _gbdt_best_split_np(
    col_indptr,
    col_rows,
    col_vals,
    rows,
    g,
    h,
    g_node,
    h_node,
    lam,
    gamma,
    min_child_h,
    in_node,
    buf_val,
    buf_g,
    buf_h,
):
    n_cols = col_indptr.shape[0] - 1
    n_node = rows.shape[0]
    in_node[rows] = True
    parent_score = g_node * g_node / (h_node + lam)
    best_feat = -1
    best_thr = 0.0
    best_gain = 0.0
    for f in range(n_cols):
        sl = slice(col_indptr[f], col_indptr[f + 1])
        seg_rows = col_rows[sl]
        keep = in_node[seg_rows]
        vals = col_vals[sl][keep]
        if vals.size == 0:
            continue
        kept_rows = seg_rows[keep]
        gs = g[kept_rows]
        hs = h[kept_rows]
        if n_node - vals.size > 0:
            pos = int(np.searchsorted(vals, 0.0))
            vals = np.insert(vals, pos, 0.0)
            gs = np.insert(gs, pos, g_node - float(np.sum(gs)))
            hs = np.insert(hs, pos, h_node - float(np.sum(hs)))
        bnd = np.nonzero(vals[1:] != vals[:-1])[0]
        if bnd.size == 0:
            continue
        gl = np.cumsum(gs)[bnd]
        hl = np.cumsum(hs)[bnd]
        gr = g_node - gl
        hr = h_node - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = (
                0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score) - gamma
            )
        # NaN candidates (0/0 under lam=0) lose every comparison in the loop
        # backend; mask them the same way here, keeping +inf selectable
        gains[(hl < min_child_h) | (hr < min_child_h) | np.isnan(gains)] = -np.inf
        bi = int(np.argmax(gains))
        if gains[bi] > best_gain and gains[bi] > 0.0:
            best_gain = float(gains[bi])
            best_feat = f
            best_thr = 0.5 * float(vals[bnd[bi]] + vals[bnd[bi] + 1])
    in_node[rows] = False
    return best_feat, best_thr, best_gain


@njit(cache=True)
def _gbdt_partition_jit(col_rows, col_vals, start, end, rows, thr, val_of, left_buf, right_buf):
    for p in range(start, end):
        val_of[col_rows[p]] = col_vals[p]
    nl = 0
    nr = 0
    for idx in range(rows.shape[0]):
        r = rows[idx]
        if val_of[r] <= thr:
            left_buf[nl] = r
            nl += 1
        else:
            right_buf[nr] = r
            nr += 1
    for p in range(start, end):
        val_of[col_rows[p]] = 0.0
    return nl, nr


def _gbdt_partition_np(col_rows, col_vals, start, end, rows, thr, val_of, left_buf, right_buf):
    val_of[col_rows[start:end]] = col_vals[start:end]
    node_vals = val_of[rows]
    val_of[col_rows[start:end]] = 0.0
    go_left = node_vals <= thr
    nl = int(np.count_nonzero(go_left))
    nr = rows.shape[0] - nl
    left_buf[:nl] = rows[go_left]
    right_buf[:nr] = rows[~go_left]
    return nl, nr


@njit(cache=True)
def _gbdt_predict_raw_jit(
    indptr,
    indices,
    data,
    node_feature,
    node_threshold,
    node_left,
    node_right,
    node_weight,
    tree_roots,
    base_score,
    learning_rate,
    n_cols,
    out,
):
    n_rows = indptr.shape[0] - 1
    row_val = np.zeros(n_cols, dtype=np.float64)
    for r in range(n_rows):
        for p in range(indptr[r], indptr[r + 1]):
            row_val[indices[p]] = data[p]
        s = base_score
        for t in range(tree_roots.shape[0]):
            node = tree_roots[t]
            while node_feature[node] >= 0:
                if row_val[node_feature[node]] <= node_threshold[node]:
                    node = node_left[node]
                else:
                    node = node_right[node]
            s += learning_rate * node_weight[node]
        out[r] = s
        for p in range(indptr[r], indptr[r + 1]):
            row_val[indices[p]] = 0.0


def _gbdt_predict_raw_np(
    indptr,
    indices,
    data,
    node_feature,
    node_threshold,
    node_left,
    node_right,
    node_weight,
    tree_roots,
    base_score,
    learning_rate,
    n_cols,
    out,
):
    # The fallback densifies and routes all rows level by level; it trades
    # memory for vectorization and is intended for modest matrices.
    n_rows = indptr.shape[0] - 1
    dense = np.zeros((n_rows, n_cols), dtype=np.float64)
    row_of = np.repeat(np.arange(n_rows), np.diff(indptr))
    dense[row_of, indices] = data
    out[:] = base_score
    for root in tree_roots:
        cur = np.full(n_rows, root, dtype=np.int64)
        while True:
            active = np.nonzero(node_feature[cur] >= 0)[0]
            if active.size == 0:
                break
            anodes = cur[active]
            go_left = dense[active, node_feature[anodes]] <= node_threshold[anodes]
            cur[active] = np.where(go_left, node_left[anodes], node_right[anodes])
        out += learning_rate * node_weight[cur]


# ---------------------------------------------------------------------------
# Pegasos SVM training loop
# ---------------------------------------------------------------------------
#
# Subgradient steps on the L2-regularized hinge loss with step 1/(lam*t),
# labels in {-1,+1}. After each step the weight vector is projected onto the
# ball of radius 1/sqrt(lam) (the Pegasos optional projection; the optimum
# lies inside it). The unregularized bias moves by its hinge subgradient with
# step 1/t. Returned weights/bias are the averages of the post-update
# iterates over all steps.


@njit(cache=True)
def _pegasos_jit(indptr, indices, data, y, order, lam, w, w_sum):
    radius2 = 1.0 / lam
    b = 0.0
    b_sum = 0.0
    n_steps = order.shape[0]
    d = w.shape[0]
    for step in range(n_steps):
        i = order[step]
        t = step + 1
        dot = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            dot += data[p] * w[indices[p]]
        margin = y[i] * (dot + b)
        scale = 1.0 - 1.0 / t
        for j in range(d):
            w[j] *= scale
        if margin < 1.0:
            eta = 1.0 / (lam * t)
            for p in range(indptr[i], indptr[i + 1]):
                w[indices[p]] += eta * y[i] * data[p]
            b += y[i] / t
        nrm2 = 0.0
        for j in range(d):
            nrm2 += w[j] * w[j]
        if nrm2 > radius2:
            f = math.sqrt(radius2 / nrm2)
            for j in range(d):
                w[j] *= f
        for j in range(d):
            w_sum[j] += w[j]
        b_sum += b
    return b, b_sum


def _pegasos_np(indptr, indices, data, y, order, lam, w, w_sum):
    radius2 = 1.0 / lam
    b = 0.0
    b_sum = 0.0
    n_steps = order.shape[0]
    for step in range(n_steps):
        i = int(order[step])
        t = step + 1
        sl = slice(indptr[i], indptr[i + 1])
        cols = indices[sl]
        xv = data[sl]
        margin = y[i] * (float(xv @ w[cols]) + b)
        w *= 1.0 - 1.0 / t
        if margin < 1.0:
            w[cols] += (y[i] / (lam * t)) * xv
            b += y[i] / t
        nrm2 = float(w @ w)
        if nrm2 > radius2:
            w *= math.sqrt(radius2 / nrm2)
        w_sum += w
        b_sum += b
    return b, b_sum


if NUMBA_ACTIVE:
    csr_row_dots = _csr_row_dots_jit
    csr_l2_normalize = _csr_l2_normalize_jit
    gbdt_best_split = _gbdt_best_split_jit
    gbdt_partition = _gbdt_partition_jit
    gbdt_predict_raw = _gbdt_predict_raw_jit
    pegasos = _pegasos_jit
else:
    csr_row_dots = _csr_row_dots_np
    csr_l2_normalize = _csr_l2_normalize_np
    gbdt_best_split = _gbdt_best_split_np
    gbdt_partition = _gbdt_partition_np
    gbdt_predict_raw = _gbdt_predict_raw_np
    pegasos = _pegasos_np
