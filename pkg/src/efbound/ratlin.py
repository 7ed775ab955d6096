"""Exact rational linear algebra and a certificate-producing LP solver.

Everything here computes over arbitrary-precision rationals
(`fractions.Fraction`).  There is deliberately no floating point: downstream
verification (slack matrices, factorization identities, containment proofs)
composes long chains of these operations, and a single rounded entry would
make every certificate worthless.

The LP solver is a dense two-phase simplex with Bland's rule, so it
terminates without tolerances or perturbation.  Every answer is re-checked
as a Fraction identity before it is returned:

* optimal   -- primal feasibility, dual feasibility, matching objective
               values, and complementary slackness;
* infeasible -- a Farkas vector: y_in >= 0 with
               A^T y_in + Aeq^T y_eq = 0 and b.y_in + beq.y_eq < 0;
* unbounded -- a feasible point plus a recession direction that strictly
               improves the objective.

Ranks come from fraction-free Bareiss elimination on the integer matrix
obtained by clearing denominators row by row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InputError

Rational = Fraction
ZERO = Fraction(0)
ONE = Fraction(1)


def rat(x) -> Fraction:
    """Coerce x to an exact Fraction.

    Accepts Fraction, int, and strings like "3", "-7/2".  Floats are
    rejected: a float argument almost always means the caller already lost
    exactness upstream.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        raise InputError(f"refusing float {x!r}; pass an int, Fraction, or 'p/q' string")
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse rational from {x!r}") from exc
    raise InputError(f"cannot coerce {type(x).__name__} to a rational")


def rat_str(q) -> str:
    """Canonical string form: "p" for integers, "p/q" otherwise (q > 0)."""
    q = rat(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def dot(u, v) -> Fraction:
    if len(u) != len(v):
        raise InputError(f"dot: length mismatch {len(u)} vs {len(v)}")
    return sum((a * b for a, b in zip(u, v)), ZERO)


def mat_vec(rows, x):
    return [dot(r, x) for r in rows]


class RationalMatrix:
    """Dense matrix of Fractions, row-major.

    Serialized form (used across the CLI): a dict
    ``{"rows": m, "cols": n, "entries": ["p/q", ...]}`` with entries in
    row-major order and every entry in the canonical form of rat_str.
    """

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, rows: int, cols: int, entries=None):
        if rows < 0 or cols < 0:
            raise InputError("matrix dimensions must be nonnegative")
        self.rows = rows
        self.cols = cols
        if entries is None:
            self._e = [ZERO] * (rows * cols)
        else:
            self._e = [rat(x) for x in entries]
            if len(self._e) != rows * cols:
                raise InputError(
                    f"expected {rows * cols} entries for a {rows}x{cols} matrix, got {len(self._e)}")

    @classmethod
    def from_rows(cls, rows_of_entries) -> "RationalMatrix":
        rows_of_entries = [list(r) for r in rows_of_entries]
        m = len(rows_of_entries)
        n = len(rows_of_entries[0]) if m else 0
        flat = []
        for r in rows_of_entries:
            if len(r) != n:
                raise InputError("ragged rows")
            flat.extend(r)
        return cls(m, n, flat)

    @classmethod
    def zeros(cls, m, n):
        return cls(m, n)

    @classmethod
    def identity(cls, n):
        out = cls(n, n)
        for i in range(n):
            out._e[i * n + i] = ONE
        return out

    def __getitem__(self, key):
        i, j = key
        return self._e[i * self.cols + j]

    def __setitem__(self, key, value):
        i, j = key
        self._e[i * self.cols + j] = rat(value)

    def row(self, i):
        return self._e[i * self.cols:(i + 1) * self.cols]

    def col(self, j):
        return self._e[j::self.cols] if self.cols else []

    def tolist(self):
        return [self.row(i) for i in range(self.rows)]

    def copy(self):
        out = RationalMatrix(self.rows, self.cols)
        out._e = self._e[:]
        return out

    def transpose(self) -> "RationalMatrix":
        out = RationalMatrix(self.cols, self.rows)
        for i in range(self.rows):
            base = i * self.cols
            for j in range(self.cols):
                out._e[j * self.rows + i] = self._e[base + j]
        return out

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and self._e == other._e

    def __add__(self, other):
        self._check_same_shape(other)
        out = RationalMatrix(self.rows, self.cols)
        out._e = [a + b for a, b in zip(self._e, other._e)]
        return out

    def __sub__(self, other):
        self._check_same_shape(other)
        out = RationalMatrix(self.rows, self.cols)
        out._e = [a - b for a, b in zip(self._e, other._e)]
        return out

    def __mul__(self, scalar):
        s = rat(scalar)
        out = RationalMatrix(self.rows, self.cols)
        out._e = [s * a for a in self._e]
        return out

    __rmul__ = __mul__

    def __matmul__(self, other) -> "RationalMatrix":
        if self.cols != other.rows:
            raise InputError(
                f"matmul shape mismatch: {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = RationalMatrix(self.rows, other.cols)
        bt = other.transpose()
        for i in range(self.rows):
            ri = self.row(i)
            base = i * other.cols
            for j in range(other.cols):
                out._e[base + j] = dot(ri, bt.row(j))
        return out

    def is_nonneg(self) -> bool:
        return all(a >= 0 for a in self._e)

    def min_entry(self):
        if not self._e:
            raise InputError("empty matrix has no minimum entry")
        return min(self._e)

    def _check_same_shape(self, other):
        if self.rows != other.rows or self.cols != other.cols:
            raise InputError(
                f"shape mismatch: {self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    @classmethod
    def hstack(cls, mats):
        mats = list(mats)
        if not mats:
            raise InputError("hstack of nothing")
        m = mats[0].rows
        if any(a.rows != m for a in mats):
            raise InputError("hstack: row counts differ")
        rows = [sum((a.row(i) for a in mats), []) for i in range(m)]
        return cls.from_rows(rows) if m else cls(0, sum(a.cols for a in mats))

    @classmethod
    def vstack(cls, mats):
        mats = list(mats)
        if not mats:
            raise InputError("vstack of nothing")
        n = mats[0].cols
        if any(a.cols != n for a in mats):
            raise InputError("vstack: column counts differ")
        out = cls(sum(a.rows for a in mats), n)
        out._e = [x for a in mats for x in a._e]
        return out

    def to_json(self) -> dict:
        return {"rows": self.rows, "cols": self.cols,
                "entries": [rat_str(x) for x in self._e]}

    @classmethod
    def from_json(cls, d) -> "RationalMatrix":
        try:
            rows, cols, entries = d["rows"], d["cols"], d["entries"]
        except (KeyError, TypeError) as exc:
            raise InputError("matrix JSON needs keys rows, cols, entries") from exc
        return cls(int(rows), int(cols), entries)

    def __repr__(self):
        return f"RationalMatrix({self.rows}x{self.cols})"

    def __str__(self):
        return "\n".join(" ".join(rat_str(x) for x in self.row(i)) for i in range(self.rows))


def _as_row_lists(M):
    """Accept RationalMatrix or nested iterables; return (rows, m, n)."""
    if isinstance(M, RationalMatrix):
        return M.tolist(), M.rows, M.cols
    rows = [[rat(x) for x in r] for r in M]
    m = len(rows)
    n = len(rows[0]) if m else 0
    if any(len(r) != n for r in rows):
        raise InputError("ragged rows")
    return rows, m, n


def mat_rank(M) -> int:
    """Rank over the rationals, by fraction-free Bareiss elimination.

    Denominators are cleared per row first (row scaling preserves rank), so
    the elimination runs on integers and the exact divisions stay exact.
    """
    rows, m, n = _as_row_lists(M)
    irows = []
    for r in rows:
        den = math.lcm(*(x.denominator for x in r)) if r else 1
        irows.append([int(x * den) for x in r])
    prev = 1
    rank = 0
    for col in range(n):
        piv = next((i for i in range(rank, m) if irows[i][col]), None)
        if piv is None:
            continue
        irows[rank], irows[piv] = irows[piv], irows[rank]
        p = irows[rank][col]
        for i in range(rank + 1, m):
            ric = irows[i][col]
            ri, rr = irows[i], irows[rank]
            for j in range(col + 1, n):
                # one-step Bareiss update; the division by the previous
                # pivot is exact
                ri[j] = (ri[j] * p - ric * rr[j]) // prev
            ri[col] = 0
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


@dataclass
class LpResult:
    """Outcome of lp_solve, with exact certificates.

    status is "optimal", "infeasible" or "unbounded".

    optimal:    point, value, dual_ineq, dual_eq.  The duals satisfy
                A^T dual_ineq + Aeq^T dual_eq = c and
                b.dual_ineq + beq.dual_eq = value, with dual_ineq >= 0 when
                sense is "max" and <= 0 when sense is "min".
    infeasible: farkas_ineq >= 0 and farkas_eq with
                A^T farkas_ineq + Aeq^T farkas_eq = 0 and
                b.farkas_ineq + beq.farkas_eq < 0.
    unbounded:  point is feasible and ray satisfies A ray <= 0,
                Aeq ray = 0, with c.ray > 0 ("max") or < 0 ("min").
    """

    status: str
    value: Fraction | None = None
    point: list | None = None
    dual_ineq: list | None = None
    dual_eq: list | None = None
    farkas_ineq: list | None = None
    farkas_eq: list | None = None
    ray: list | None = None


def _norm_system(M, rhs, n, label):
    if M is None and rhs is None:
        return [], []
    if M is None or rhs is None:
        raise InputError(f"{label} and its right-hand side must be given together")
    rows, m, ncols = _as_row_lists(M)
    rhs = [rat(x) for x in rhs]
    if m and ncols != n:
        raise InputError(f"{label} has {ncols} columns, expected {n}")
    if len(rhs) != m:
        raise InputError(f"{label} has {m} rows but its rhs has {len(rhs)} entries")
    return rows, rhs


def lp_solve(A, b, Aeq, beq, c, sense="max") -> LpResult:
    """Solve max (or min) c.x subject to A x <= b and Aeq x = beq.

    Variables are free; pass explicit rows for bounds.  A/b or Aeq/beq may
    be None.  Bland's rule makes the run deterministic, and the returned
    result has already been verified exactly (see LpResult).
    """
    if sense not in ("max", "min"):
        raise InputError(f"sense must be 'max' or 'min', got {sense!r}")
    if c is None:
        raise InputError("objective c is required (use zeros for feasibility checks)")
    c = [rat(x) for x in c]
    n = len(c)
    if n == 0:
        raise InputError("lp_solve needs at least one variable")
    Ar, br = _norm_system(A, b, n, "A")
    Er, er = _norm_system(Aeq, beq, n, "Aeq")

    flip = sense == "min"
    res = _simplex_max(Ar, br, Er, er, [-x for x in c] if flip else c)
    if flip and res.status == "optimal":
        res = LpResult("optimal", value=-res.value, point=res.point,
                       dual_ineq=[-y for y in res.dual_ineq],
                       dual_eq=[-w for w in res.dual_eq])
    _verify_lp(Ar, br, Er, er, c, sense, res)
    return res


def _simplex_max(A, b, E, e, c):
    """Two-phase simplex for max c.x, A x <= b, E x = e, x free.

    Free variables are split x = u - v; every row is sign-normalized so the
    rhs is nonnegative; one artificial per row.  The artificial block of the
    tableau is the running basis inverse, which is what makes exact dual and
    Farkas extraction a single dot product at the end.
    """
    n = len(c)
    mi, me = len(A), len(E)
    m = mi + me
    nu = 2 * n
    art0 = nu + mi
    ncol = art0 + m

    T = []
    basis = []
    sigma = []
    for i in range(m):
        row = A[i] if i < mi else E[i - mi]
        rhs = b[i] if i < mi else e[i - mi]
        sg = -ONE if rhs < 0 else ONE
        line = [ZERO] * (ncol + 1)
        for j in range(n):
            line[j] = sg * row[j]
            line[n + j] = -sg * row[j]
        if i < mi:
            line[nu + i] = sg
        line[art0 + i] = ONE
        line[-1] = sg * rhs
        T.append(line)
        basis.append(art0 + i)
        sigma.append(sg)

    # phase 1: minimize the sum of artificials
    obj = [ZERO] * (ncol + 1)
    for j in range(art0, art0 + m):
        obj[j] = ONE
    for line in T:
        for j in range(ncol + 1):
            obj[j] -= line[j]
    grew = _iterate(T, basis, obj, art0)
    assert grew is None, "phase 1 objective is bounded below"
    if -obj[-1] > 0:
        # infeasible; multipliers from the artificial block give a Farkas vector
        pi = [sum((T[r][art0 + i] for r in range(m) if basis[r] >= art0), ZERO)
              for i in range(m)]
        y = [-sigma[i] * pi[i] for i in range(m)]
        return LpResult("infeasible", farkas_ineq=y[:mi], farkas_eq=y[mi:])

    # drive artificials out of the basis; rows where that is impossible are
    # identically zero and stay inert
    for i in range(m):
        if basis[i] >= art0:
            enter = next((j for j in range(art0) if T[i][j] != 0), None)
            if enter is not None:
                _pivot(T, basis, obj, i, enter)

    # phase 2: minimize -c.x
    cost = [ZERO] * (ncol + 1)
    for j in range(n):
        cost[j] = -c[j]
        cost[n + j] = c[j]
    obj = cost[:]
    for r, line in enumerate(T):
        cb = cost[basis[r]]
        if cb != 0:
            for j in range(ncol + 1):
                obj[j] -= cb * line[j]

    grew = _iterate(T, basis, obj, art0)
    point = _current_point(T, basis, n)
    if grew is not None:
        ray = [ZERO] * n
        _add_direction(ray, grew, ONE, n)
        for i in range(m):
            _add_direction(ray, basis[i], -T[i][grew], n)
        return LpResult("unbounded", point=point, ray=ray)

    value = dot(c, point)
    pi = [sum((cost[basis[r]] * T[r][art0 + i] for r in range(m)), ZERO)
          for i in range(m)]
    y = [-sigma[i] * pi[i] for i in range(m)]
    return LpResult("optimal", value=value, point=point,
                    dual_ineq=y[:mi], dual_eq=y[mi:])


def _iterate(T, basis, obj, art0):
    """Run Bland pivots to optimality; return None, or the entering column
    index if the objective is unbounded (no admissible leaving row)."""
    m = len(T)
    while True:
        enter = -1
        for j in range(art0):
            if obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return None
        leave = -1
        best = None
        for i in range(m):
            aij = T[i][enter]
            if aij > 0:
                ratio = T[i][-1] / aij
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return enter
        _pivot(T, basis, obj, leave, enter)


def _pivot(T, basis, obj, r, j):
    p = T[r][j]
    if p != 1:
        T[r] = [x / p for x in T[r]]
    prow = T[r]
    for line in T:
        if line is prow:
            continue
        f = line[j]
        if f != 0:
            for k in range(len(line)):
                line[k] -= f * prow[k]
    f = obj[j]
    if f != 0:
        for k in range(len(obj)):
            obj[k] -= f * prow[k]
    basis[r] = j


def _current_point(T, basis, n):
    x = [ZERO] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] += T[i][-1]
        elif bv < 2 * n:
            x[bv - n] -= T[i][-1]
    return x


def _add_direction(ray, col, coef, n):
    if coef == 0:
        return
    if col < n:
        ray[col] += coef
    elif col < 2 * n:
        ray[col - n] -= coef


def _verify_lp(A, b, E, e, c, sense, res):
    """Exact post-check of every lp_solve outcome; a failure here is a bug."""
    if res.status == "optimal":
        x = res.point
        assert all(dot(row, x) <= bi for row, bi in zip(A, b))
        assert all(dot(row, x) == ei for row, ei in zip(E, e))
        assert dot(c, x) == res.value
        y, w = res.dual_ineq, res.dual_eq
        if sense == "max":
            assert all(v >= 0 for v in y)
        else:
            assert all(v <= 0 for v in y)
        for j in range(len(c)):
            lhs = sum((y[i] * A[i][j] for i in range(len(A))), ZERO) \
                + sum((w[k] * E[k][j] for k in range(len(E))), ZERO)
            assert lhs == c[j]
        assert dot(y, b) + dot(w, e) == res.value
        assert all(y[i] * (b[i] - dot(A[i], x)) == 0 for i in range(len(A)))
    elif res.status == "infeasible":
        y, w = res.farkas_ineq, res.farkas_eq
        assert all(v >= 0 for v in y)
        for j in range(len(c)):
            lhs = sum((y[i] * A[i][j] for i in range(len(A))), ZERO) \
                + sum((w[k] * E[k][j] for k in range(len(E))), ZERO)
            assert lhs == 0
        assert dot(y, b) + dot(w, e) < 0
    elif res.status == "unbounded":
        x, r = res.point, res.ray
        assert all(dot(row, x) <= bi for row, bi in zip(A, b))
        assert all(dot(row, x) == ei for row, ei in zip(E, e))
        assert all(dot(row, r) <= 0 for row in A)
        assert all(dot(row, r) == 0 for row in E)
        if sense == "max":
            assert dot(c, r) > 0
        else:
            assert dot(c, r) < 0
    else:
        raise AssertionError(f"unknown status {res.status!r}")
