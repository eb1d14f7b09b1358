"""Small dense linear algebra that works over plain numbers and Duals alike.

numpy.linalg only handles numeric dtypes, so the generic paths here run
Gaussian elimination with partial pivoting where the pivot choice looks only
at primal magnitudes (reduced over batch axes).  For a differentiated solve
this is exact as long as the pivot pattern is locally constant, which it is
for the small well-conditioned systems crgeo builds.
"""

import numpy as np

from .dual import pmag
from .errors import DegenerateStructureError


def ocopy(arr):
    """Elementwise copy of an object array, never descending into cell values."""
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(arr.shape):
        out[idx] = arr[idx]
    return out


def solve(A, B):
    """Solve A x = B for x; B may be a vector or a matrix of columns."""
    An = np.asarray(A)
    Bn = np.asarray(B)
    if An.dtype != object and Bn.dtype != object:
        return np.linalg.solve(An, Bn)
    A = ocopy(An.astype(object) if An.dtype != object else An)
    Bm = ocopy(Bn.astype(object) if Bn.dtype != object else Bn)
    vector = Bm.ndim == 1
    if vector:
        Bm = Bm.reshape(-1, 1)
    n = A.shape[0]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: pmag(A[r, col]))
        if pmag(A[piv, col]) < 1e-300:
            raise DegenerateStructureError("singular matrix in generic solve")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            Bm[[col, piv]] = Bm[[piv, col]]
        inv_p = 1.0 / A[col, col]
        for r in range(col + 1, n):
            f = A[r, col] * inv_p
            for c in range(col + 1, n):
                A[r, c] = A[r, c] - f * A[col, c]
            for c in range(Bm.shape[1]):
                Bm[r, c] = Bm[r, c] - f * Bm[col, c]
            A[r, col] = 0.0
    X = np.empty_like(Bm)
    for c in range(Bm.shape[1]):
        for r in range(n - 1, -1, -1):
            acc = Bm[r, c]
            for k in range(r + 1, n):
                acc = acc - A[r, k] * X[k, c]
            X[r, c] = acc / A[r, r]
    return X[:, 0] if vector else X


def inv(A):
    An = np.asarray(A)
    if An.dtype != object:
        return np.linalg.inv(An)
    n = An.shape[0]
    eye = np.zeros((n, n))
    np.fill_diagonal(eye, 1.0)
    return solve(An, eye.astype(object))
