"""Small dense linear algebra over exact rationals or binary64.

Gaussian elimination with partial pivoting; exact mode pivots on the first
nonzero entry so no rounding is introduced.  Matrices are lists of row
lists.  Everything here is tiny (cycle solves and block inversions), so no
external linear algebra is pulled in and both scalar modes share one code
path.
"""

from __future__ import annotations

from fractions import Fraction


class SingularMatrix(ArithmeticError):
    pass


def mat_vec(a, v):
    out = []
    for row in a:
        acc = _zero_like(row, v)
        for r, x in zip(row, v):
            if r:
                acc = acc + r * x
        out.append(acc)
    return out


def _zero_like(row, v):
    probe = row[0] if row else (v[0] if v else 0)
    return probe * 0


def mat_mul(a, b):
    """Product of two row-major matrices, skipping zero entries."""
    if not a:
        return []
    n_inner = len(b)
    n_cols = len(b[0]) if b else 0
    zero = _zero_like(a[0], [])
    out = []
    for row in a:
        acc = [zero] * n_cols
        for k in range(n_inner):
            r = row[k]
            if not r:
                continue
            bk = b[k]
            for j in range(n_cols):
                if bk[j]:
                    acc[j] = acc[j] + r * bk[j]
        out.append(acc)
    return out


def identity(n, one=Fraction(1)):
    zero = one * 0
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def solve(a, b):
    """Solve a x = b for one right-hand-side vector."""
    return [row[0] for row in solve_columns(a, [[x] for x in b])]


def solve_columns(a, b):
    """Solve a X = B where B is given as a list of rows."""
    n = len(a)
    if n == 0:
        return []
    if any(len(row) != n for row in a) or len(b) != n:
        raise ValueError("shape mismatch in linear solve")
    exact = isinstance(a[0][0], Fraction)
    aug = [list(ra) + list(rb) for ra, rb in zip(a, b)]
    width = len(aug[0])
    for col in range(n):
        pivot_row = None
        if exact:
            for r in range(col, n):
                if aug[r][col] != 0:
                    pivot_row = r
                    break
        else:
            best = 0.0
            for r in range(col, n):
                mag = abs(aug[r][col])
                if mag > best:
                    best = mag
                    pivot_row = r
        if pivot_row is None:
            raise SingularMatrix(f"singular system at column {col}")
        if pivot_row != col:
            aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        for r in range(n):
            if r == col:
                continue
            factor = aug[r][col]
            if not factor:
                continue
            scale = factor / pivot
            row_r, row_c = aug[r], aug[col]
            for j in range(col, width):
                if row_c[j]:
                    row_r[j] = row_r[j] - scale * row_c[j]
    return [[aug[i][n + j] / aug[i][i] for j in range(len(b[0]))] for i in range(n)]


def invert(a):
    n = len(a)
    if n == 0:
        return []
    one = Fraction(1) if isinstance(a[0][0], Fraction) else 1.0
    return solve_columns(a, identity(n, one))
