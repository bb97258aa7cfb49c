"""Hot inner loops, each in two interchangeable flavours.

Every kernel exists as a numba ``@njit`` function and as a pure-numpy
function with the same signature and the same summation order.  The module
level names (``sturm_counts``, ``jacobi_eigh``, ...) point at the numba
versions unless numba is missing or ``SOFTWG_DISABLE_NUMBA`` is set to a
truthy value before import.  Both flavours stay importable through
``NUMBA_KERNELS`` / ``NUMPY_KERNELS`` so they can be cross-checked and
benchmarked against each other.
"""

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

# Points within this distance of the cut-locus are treated as lying on it.
CUT_TOL = 1e-12


def _env_disables_numba():
    flag = os.environ.get("SOFTWG_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _env_disables_numba()


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------------------
# Geometry: closed-form inverse of the Fermi map for the arc-plus-semilines
# curve, and potential sampling on a Cartesian grid.
# ---------------------------------------------------------------------------

def _fermi_inverse_point(R, theta, x, y):
    if theta == 0.0:
        return x, y, True
    ax = abs(x)
    if ax <= CUT_TOL and y >= R - CUT_TOL:
        return math.nan, math.nan, False
    tau = 0.5 * theta
    dy = y - R
    r = math.hypot(ax, dy)
    # polar angle about the arc centre, measured from the downward direction
    phi = math.atan2(ax, -dy)
    if phi < tau:
        s = R * phi
        t = R - r
    else:
        psi = phi - tau
        s = R * tau + r * math.sin(psi)
        t = R - r * math.cos(psi)
    if x < 0.0:
        s = -s
    return s, t, True


def _piecewise_value(t, lo, hi, vlo, vhi):
    # W(t) for a piecewise-linear profile; zero on and outside the support ends
    npieces = lo.shape[0]
    if npieces == 0 or t <= lo[0] or t >= hi[npieces - 1]:
        return 0.0
    for i in range(npieces):
        if lo[i] <= t <= hi[i]:
            width = hi[i] - lo[i]
            if width <= 0.0:
                return vlo[i]
            return vlo[i] + (vhi[i] - vlo[i]) * (t - lo[i]) / width
    return 0.0


def _constant_piece(t0, r, lo, hi, vlo, vhi):
    # t is a distance, hence 1-Lipschitz: a cell of half-diagonal r around a
    # centre at t0 sees only t in [t0 - r, t0 + r]
    for i in range(lo.shape[0]):
        if vlo[i] == vhi[i] and lo[i] < t0 - r and t0 + r < hi[i]:
            return True, vlo[i]
    return False, 0.0


def fermi_inverse_numpy(R, theta, x, y):
    """Vectorized inverse Fermi map; returns ``(s, t, ok)`` arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if theta == 0.0:
        return x.copy(), y.copy(), np.ones(x.shape, dtype=np.bool_)
    ax = np.abs(x)
    tau = 0.5 * theta
    dy = y - R
    r = np.hypot(ax, dy)
    phi = np.arctan2(ax, -dy)
    psi = phi - tau
    on_arc = phi < tau
    s = np.where(on_arc, R * phi, R * tau + r * np.sin(psi))
    t = np.where(on_arc, R - r, R - r * np.cos(psi))
    s = np.where(x < 0.0, -s, s)
    ok = ~((ax <= CUT_TOL) & (y >= R - CUT_TOL))
    s = np.where(ok, s, np.nan)
    t = np.where(ok, t, np.nan)
    return s, t, ok


def _fermi_inverse_numba_impl(R, theta, x, y):
    n = x.shape[0]
    s = np.empty(n)
    t = np.empty(n)
    ok = np.empty(n, dtype=np.bool_)
    for i in range(n):
        si, ti, oki = _fermi_inverse_point(R, theta, x[i], y[i])
        s[i] = si
        t[i] = ti
        ok[i] = oki
    return s, t, ok


def _piecewise_value_numpy(t, lo, hi, vlo, vhi):
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(t.shape)
    if lo.shape[0] == 0:
        return out
    inside = (t > lo[0]) & (t < hi[-1])
    done = ~inside
    for i in range(lo.shape[0]):
        hit = (~done) & (t >= lo[i]) & (t <= hi[i])
        width = hi[i] - lo[i]
        if width <= 0.0:
            val = np.full(t.shape, vlo[i])
        else:
            val = vlo[i] + (vhi[i] - vlo[i]) * (t - lo[i]) / width
        out = np.where(hit, val, out)
        done |= hit
    return out


def _subsample_offsets(m, h):
    return ((np.arange(m) + 0.5) / m - 0.5) * h


def cell_average_potential_numpy(R, theta, xs, ys, h, m, lo, hi, vlo, vhi, reach):
    """Average ``W(t(x))`` over each grid cell with an ``m x m`` midpoint rule.

    Nodes are ordered row-major as ``ix * ny + iy``.  With ``m == 1`` this
    is plain point sampling.  Cells whose centre lies farther than ``reach``
    from the curve are skipped (their value is zero), and cells whose
    distance band sits inside one constant piece take that value directly.
    """
    nx, ny = xs.shape[0], ys.shape[0]
    X = np.repeat(np.abs(xs), ny)
    Y = np.tile(ys, nx)
    out = np.zeros(nx * ny)
    _, t0, ok0 = fermi_inverse_numpy(R, theta, X, Y)
    cand = np.nonzero(ok0 & (np.abs(np.where(ok0, t0, 0.0)) < reach))[0]
    if cand.size == 0:
        return out
    if m > 1:
        # cells inside one constant piece are exact without subsampling
        t0c = t0[cand]
        r = 0.5 * math.sqrt(2.0) * h
        flat = np.zeros(cand.size, dtype=np.bool_)
        for i in range(lo.shape[0]):
            if vlo[i] == vhi[i]:
                hit = (~flat) & (lo[i] < t0c - r) & (t0c + r < hi[i])
                out[cand[hit]] = vlo[i]
                flat |= hit
        cand = cand[~flat]
    cx, cy = X[cand], Y[cand]
    acc = np.zeros(cand.size)
    off = _subsample_offsets(m, h)
    for i in range(m):
        for j in range(m):
            _, t, ok = fermi_inverse_numpy(R, theta, cx + off[i], cy + off[j])
            w = _piecewise_value_numpy(np.where(ok, t, np.inf), lo, hi, vlo, vhi)
            acc = acc + w
    out[cand] = acc / (m * m)
    return out


def _cell_average_numba_impl(R, theta, xs, ys, h, m, lo, hi, vlo, vhi, reach):
    nx, ny = xs.shape[0], ys.shape[0]
    out = np.zeros(nx * ny)
    off = np.empty(m)
    for i in range(m):
        off[i] = ((i + 0.5) / m - 0.5) * h
    r = 0.5 * math.sqrt(2.0) * h
    for ix in range(nx):
        x = abs(xs[ix])
        for iy in range(ny):
            y = ys[iy]
            _, t0, ok0 = _fermi_inverse_point(R, theta, x, y)
            if not ok0 or abs(t0) >= reach:
                continue
            if m > 1:
                flat, value = _constant_piece(t0, r, lo, hi, vlo, vhi)
                if flat:
                    out[ix * ny + iy] = value
                    continue
            acc = 0.0
            for i in range(m):
                for j in range(m):
                    _, t, ok = _fermi_inverse_point(R, theta, x + off[i], y + off[j])
                    if ok:
                        acc += _piecewise_value(t, lo, hi, vlo, vhi)
            out[ix * ny + iy] = acc / (m * m)
    return out


# ---------------------------------------------------------------------------
# Sparse symmetric matrices: 5-point assembly and CSR products.
# ---------------------------------------------------------------------------

def assemble_5pt_numpy(nx, ny, h, V):
    """CSR arrays of the Dirichlet 5-point Laplacian plus ``diag(V)``."""
    N = nx * ny
    rows = np.arange(N, dtype=np.int64)
    ix, iy = np.divmod(rows, ny)
    inv = 1.0 / (h * h)
    cols = np.stack([rows - ny, rows - 1, rows, rows + 1, rows + ny], axis=1)
    mask = np.stack([ix > 0, iy > 0, np.ones(N, dtype=bool), iy < ny - 1, ix < nx - 1], axis=1)
    vals = np.empty((N, 5))
    vals[:, [0, 1, 3, 4]] = -inv
    vals[:, 2] = 4.0 * inv + V
    indptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(mask.sum(axis=1), out=indptr[1:])
    return indptr, cols[mask], vals[mask]


def _assemble_5pt_numba_impl(nx, ny, h, V):
    N = nx * ny
    inv = 1.0 / (h * h)
    nnz = 5 * N - 2 * nx - 2 * ny
    indptr = np.zeros(N + 1, dtype=np.int64)
    indices = np.empty(nnz, dtype=np.int64)
    data = np.empty(nnz)
    k = 0
    for ix in range(nx):
        for iy in range(ny):
            row = ix * ny + iy
            if ix > 0:
                indices[k] = row - ny
                data[k] = -inv
                k += 1
            if iy > 0:
                indices[k] = row - 1
                data[k] = -inv
                k += 1
            indices[k] = row
            data[k] = 4.0 * inv + V[row]
            k += 1
            if iy < ny - 1:
                indices[k] = row + 1
                data[k] = -inv
                k += 1
            if ix < nx - 1:
                indices[k] = row + ny
                data[k] = -inv
                k += 1
            indptr[row + 1] = k
    return indptr, indices, data


def csr_matvec_numpy(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * x[indices], minlength=n)


def _csr_matvec_numba_impl(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        y[i] = acc
    return y


# ---------------------------------------------------------------------------
# Dense and tridiagonal eigen-kernels.
# ---------------------------------------------------------------------------

def sturm_counts_numpy(d, e2, xs, pivmin):
    """Number of eigenvalues below each shift in ``xs`` (tridiagonal matrix).

    ``d`` is the diagonal and ``e2`` the squared off-diagonal.
    """
    xs = np.asarray(xs, dtype=np.float64)
    q = d[0] - xs
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    cnt = (q < 0).astype(np.int64)
    for i in range(1, d.shape[0]):
        q = d[i] - xs - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        cnt += q < 0
    return cnt


def _sturm_counts_numba_impl(d, e2, xs, pivmin):
    n = d.shape[0]
    out = np.zeros(xs.shape[0], dtype=np.int64)
    for k in range(xs.shape[0]):
        x = xs[k]
        q = d[0] - x
        if abs(q) < pivmin:
            q = -pivmin
        cnt = 1 if q < 0 else 0
        for i in range(1, n):
            q = d[i] - x - e2[i - 1] / q
            if abs(q) < pivmin:
                q = -pivmin
            if q < 0:
                cnt += 1
        out[k] = cnt
    return out


def _rotation(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
    if theta < 0.0:
        t = -t
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c


def _offdiag_norm(A):
    n = A.shape[0]
    acc = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                acc += A[i, j] * A[i, j]
    return math.sqrt(acc)


def jacobi_eigh_numpy(A, tol, max_sweeps):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(values, vectors, offdiag_norm, sweeps)`` with unsorted values.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(A)
    off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
    sweeps = 0
    while off > tol * scale and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(A[p, p], A[q, q], apq)
                colp = A[:, p].copy()
                colq = A[:, q]
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :]
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweeps += 1
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
    return np.diag(A).copy(), V, off, sweeps


def _jacobi_eigh_numba_impl(A, tol, max_sweeps):
    A = A.copy()
    n = A.shape[0]
    V = np.eye(n)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += A[i, j] * A[i, j]
    scale = math.sqrt(scale)
    off = _offdiag_norm(A)
    sweeps = 0
    while off > tol * scale and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                c, s = _rotation(A[p, p], A[q, q], apq)
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = _offdiag_norm(A)
    vals = np.empty(n)
    for i in range(n):
        vals[i] = A[i, i]
    return vals, V, off, sweeps


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

NUMPY_KERNELS = {
    "fermi_inverse": fermi_inverse_numpy,
    "cell_average_potential": cell_average_potential_numpy,
    "assemble_5pt": assemble_5pt_numpy,
    "csr_matvec": csr_matvec_numpy,
    "sturm_counts": sturm_counts_numpy,
    "jacobi_eigh": jacobi_eigh_numpy,
}

if HAVE_NUMBA:
    _fermi_inverse_point = _njit(_fermi_inverse_point)
    _piecewise_value = _njit(_piecewise_value)
    _constant_piece = _njit(_constant_piece)
    _rotation = _njit(_rotation)
    _offdiag_norm = _njit(_offdiag_norm)
    NUMBA_KERNELS = {
        "fermi_inverse": _njit(_fermi_inverse_numba_impl),
        "cell_average_potential": _njit(_cell_average_numba_impl),
        "assemble_5pt": _njit(_assemble_5pt_numba_impl),
        "csr_matvec": _njit(_csr_matvec_numba_impl),
        "sturm_counts": _njit(_sturm_counts_numba_impl),
        "jacobi_eigh": _njit(_jacobi_eigh_numba_impl),
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def fermi_inverse(R, theta, x, y):
    x = _as_f64(np.atleast_1d(x))
    y = _as_f64(np.atleast_1d(y))
    return _ACTIVE["fermi_inverse"](float(R), float(theta), x, y)


def cell_average_potential(R, theta, xs, ys, h, m, lo, hi, vlo, vhi, reach):
    return _ACTIVE["cell_average_potential"](
        float(R), float(theta), _as_f64(xs), _as_f64(ys), float(h), int(m),
        _as_f64(lo), _as_f64(hi), _as_f64(vlo), _as_f64(vhi), float(reach),
    )


def assemble_5pt(nx, ny, h, V):
    return _ACTIVE["assemble_5pt"](int(nx), int(ny), float(h), _as_f64(V))


def csr_matvec(indptr, indices, data, x):
    return _ACTIVE["csr_matvec"](indptr, indices, data, _as_f64(x))


def sturm_counts(d, e2, xs, pivmin):
    return _ACTIVE["sturm_counts"](_as_f64(d), _as_f64(e2), _as_f64(np.atleast_1d(xs)), float(pivmin))


def jacobi_eigh(A, tol=1e-14, max_sweeps=100):
    return _ACTIVE["jacobi_eigh"](_as_f64(A), float(tol), int(max_sweeps))
