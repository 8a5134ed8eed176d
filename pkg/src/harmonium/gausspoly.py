"""Closed algebra of multivariate polynomial-times-Gaussian functions.

The building blocks are :class:`SparsePolynomial` (exponent vector to
coefficient map, exact over int/Fraction or float), :class:`GaussianKernel`
(``exp(-x'Ax/2 + b'x + c)`` with symmetric ``A``) and their product
:class:`GaussPolyFunction`.  The algebra is closed under multiplication,
linear changes of variables and marginalization, which makes it sufficient
to represent every wave function and density matrix of the model exactly.

Integration eliminates one variable at a time by completing the square;
each polynomial power of the eliminated variable reduces to a shifted
Gaussian moment (see :func:`gaussian_shifted_moment`).
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

Exponents = tuple[int, ...]

# Relative magnitude below which float coefficients are dropped after an
# integration step (roundoff dust control).
PRUNE_REL_TOL = 1e-14

# Antisymmetrization is a permutation sum; beyond this subset size the
# factorial cost is prohibitive and the caller should use a product form.
MAX_ANTISYMMETRIZE_SIZE = 8

# Dense fast path limits for polynomial products (see _mul_dense).
_DENSE_MAX_ENTRIES = 30_000_000
_DENSE_MIN_WORK = 100_000

_PIVOT_TOL = 1e-300

# Entries of the quadratic form below this relative magnitude are roundoff
# from matrix products, not structure; keeping them would route diagonal
# directions through the (far costlier) shifted-moment path.
_KERNEL_DUST_REL = 5e-15


def _snap_dust(matrix: np.ndarray) -> np.ndarray:
    if matrix.size:
        cap = np.abs(matrix).max() * _KERNEL_DUST_REL
        if cap > 0.0:
            matrix[np.abs(matrix) < cap] = 0.0
    return matrix


class NonPositiveDefiniteError(ValueError):
    """An integration direction of the Gaussian kernel is not bound."""


class CapacityError(RuntimeError):
    """Requested operation exceeds the supported combinatorial size."""


def _is_exact(value) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


class SparsePolynomial:
    """Multivariate polynomial stored as exponent-vector -> coefficient.

    Zero coefficients are never stored; the zero polynomial has an empty
    term map.  Coefficients may be int/Fraction (exact) or float; arithmetic
    preserves exactness until a float enters.
    """

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Mapping[Exponents, object] | None = None):
        if num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        self.num_vars = int(num_vars)
        clean: dict[Exponents, object] = {}
        if terms:
            for exps, coeff in terms.items():
                if len(exps) != num_vars:
                    raise ValueError(
                        f"exponent vector {exps} has length {len(exps)}, expected {num_vars}"
                    )
                if any(e < 0 for e in exps):
                    raise ValueError(f"negative exponent in {exps}")
                if coeff != 0:
                    clean[tuple(exps)] = coeff
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, num_vars: int, value) -> "SparsePolynomial":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "SparsePolynomial":
        if not 0 <= index < num_vars:
            raise ValueError(f"variable index {index} out of range for {num_vars} vars")
        exps = [0] * num_vars
        exps[index] = 1
        return cls(num_vars, {tuple(exps): 1})

    @classmethod
    def linear_form(cls, coeffs: Sequence) -> "SparsePolynomial":
        """Polynomial sum_i coeffs[i] * x_i."""
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            if c != 0:
                e = [0] * n
                e[i] = 1
                terms[tuple(e)] = c
        return cls(n, terms)

    # -- basic queries -----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        """Total degree (zero polynomial reports -1)."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def var_degrees(self) -> tuple[int, ...]:
        """Maximum exponent per variable."""
        degs = [0] * self.num_vars
        for exps in self.terms:
            for i, e in enumerate(exps):
                if e > degs[i]:
                    degs[i] = e
        return tuple(degs)

    def has_exact_coeffs(self) -> bool:
        return all(_is_exact(c) for c in self.terms.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePolynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __repr__(self) -> str:
        return f"SparsePolynomial(num_vars={self.num_vars}, terms={len(self.terms)})"

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "SparsePolynomial") -> "SparsePolynomial":
        if self.num_vars != other.num_vars:
            raise ValueError("dimension mismatch in polynomial addition")
        out = dict(self.terms)
        for exps, coeff in other.terms.items():
            acc = out.get(exps, 0) + coeff
            if acc == 0:
                out.pop(exps, None)
            else:
                out[exps] = acc
        return self._wrap(self.num_vars, out)

    def __neg__(self) -> "SparsePolynomial":
        return self._wrap(self.num_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "SparsePolynomial") -> "SparsePolynomial":
        return self + (-other)

    def __mul__(self, other) -> "SparsePolynomial":
        if isinstance(other, SparsePolynomial):
            if self.num_vars != other.num_vars:
                raise ValueError("dimension mismatch in polynomial product")
            if _dense_mul_profitable(self, other):
                return _mul_dense(self, other)
            return _mul_dict(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, factor) -> "SparsePolynomial":
        if factor == 0:
            return SparsePolynomial(self.num_vars)
        return self._wrap(self.num_vars, {e: c * factor for e, c in self.terms.items()})

    def __pow__(self, n: int) -> "SparsePolynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("polynomial power must be a non-negative integer")
        result = SparsePolynomial.constant(self.num_vars, 1)
        for _ in range(n):
            result = result * self
        return result

    # -- evaluation --------------------------------------------------------

    def evaluate(self, point: Sequence[float]) -> float:
        if len(point) != self.num_vars:
            raise ValueError("point length does not match num_vars")
        total = 0.0
        for exps, coeff in self.terms.items():
            term = float(coeff)
            for x, e in zip(point, exps):
                if e:
                    term *= x**e
            total += term
        return total

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (n_points, num_vars) array of points."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.num_vars:
            raise ValueError("points must have shape (n, num_vars)")
        if not self.terms:
            return np.zeros(points.shape[0])
        degs = self.var_degrees()
        powers = [
            np.vander(points[:, i], degs[i] + 1, increasing=True) if degs[i] else None
            for i in range(self.num_vars)
        ]
        total = np.zeros(points.shape[0])
        for exps, coeff in self.terms.items():
            term = np.full(points.shape[0], float(coeff))
            for i, e in enumerate(exps):
                if e:
                    term = term * powers[i][:, e]
            total += term
        return total

    # -- structural operations ---------------------------------------------

    def map_variables(self, positions: Sequence[int], new_num_vars: int) -> "SparsePolynomial":
        """Embed into a larger variable space; old var i becomes positions[i]."""
        if len(positions) != self.num_vars:
            raise ValueError("positions must list a target for every variable")
        out: dict[Exponents, object] = {}
        for exps, coeff in self.terms.items():
            new = [0] * new_num_vars
            for pos, e in zip(positions, exps):
                new[pos] = e
            out[tuple(new)] = coeff
        return self._wrap(new_num_vars, out)

    def drop_variables(self, indices: Iterable[int]) -> "SparsePolynomial":
        """Remove variables that carry zero exponent in every term."""
        drop = sorted(set(indices), reverse=True)
        for exps in self.terms:
            for i in drop:
                if exps[i] != 0:
                    raise ValueError(f"variable {i} appears with nonzero exponent")
        out = {}
        for exps, coeff in self.terms.items():
            e = list(exps)
            for i in drop:
                del e[i]
            out[tuple(e)] = coeff
        return self._wrap(self.num_vars - len(drop), out)

    def substitute_linear(self, matrix: np.ndarray) -> "SparsePolynomial":
        """Return p(M y): variable i is replaced by the linear form row i of M."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != self.num_vars:
            raise ValueError("matrix must have one row per variable")
        new_n = matrix.shape[1]
        if not self.terms:
            return SparsePolynomial(new_n)
        degs = self.var_degrees()
        # Powers of each substituted linear form, computed once.
        pows: list[list[SparsePolynomial]] = []
        for i in range(self.num_vars):
            base = SparsePolynomial.linear_form(matrix[i])
            row = [SparsePolynomial.constant(new_n, 1)]
            for _ in range(degs[i]):
                row.append(row[-1] * base)
            pows.append(row)
        result = SparsePolynomial(new_n)
        for exps, coeff in self.terms.items():
            term = SparsePolynomial.constant(new_n, float(coeff))
            for i, e in enumerate(exps):
                if e:
                    term = term * pows[i][e]
            result = result + term
        return result

    def prune(self, rel_tol: float = PRUNE_REL_TOL) -> "SparsePolynomial":
        """Drop float terms smaller than rel_tol times the largest magnitude."""
        if not self.terms or self.has_exact_coeffs():
            return self
        cap = max(abs(c) for c in self.terms.values()) * rel_tol
        return self._wrap(
            self.num_vars, {e: c for e, c in self.terms.items() if abs(c) > cap}
        )

    @classmethod
    def _wrap(cls, num_vars: int, terms: dict) -> "SparsePolynomial":
        """Construct without re-validation (internal, inputs already clean)."""
        obj = cls.__new__(cls)
        obj.num_vars = num_vars
        obj.terms = {e: c for e, c in terms.items() if c != 0}
        return obj


def _mul_dict(p: SparsePolynomial, q: SparsePolynomial) -> SparsePolynomial:
    out: dict[Exponents, object] = {}
    small, big = (p, q) if len(p.terms) <= len(q.terms) else (q, p)
    for e1, c1 in small.terms.items():
        for e2, c2 in big.terms.items():
            key = tuple(a + b for a, b in zip(e1, e2))
            acc = out.get(key, 0) + c1 * c2
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
    return SparsePolynomial._wrap(p.num_vars, out)


def _dense_mul_profitable(p: SparsePolynomial, q: SparsePolynomial) -> bool:
    work = len(p.terms) * len(q.terms)
    if work < _DENSE_MIN_WORK or p.num_vars == 0:
        return False
    if any(isinstance(c, Fraction) for c in p.terms.values()):
        return False
    if any(isinstance(c, Fraction) for c in q.terms.values()):
        return False
    size = 1
    for a, b in zip(p.var_degrees(), q.var_degrees()):
        size *= a + b + 1
        if size > _DENSE_MAX_ENTRIES:
            return False
    return True


def _to_dense(p: SparsePolynomial, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.zeros(shape)
    if p.terms:
        idx = np.array(list(p.terms.keys()), dtype=np.intp).T
        vals = np.array([float(c) for c in p.terms.values()])
        arr[tuple(idx)] = vals
    return arr


def _from_dense(arr: np.ndarray, num_vars: int) -> SparsePolynomial:
    if num_vars == 0:
        val = float(arr.reshape(()))
        return SparsePolynomial._wrap(0, {(): val} if val else {})
    idx = np.argwhere(arr)
    vals = arr[tuple(idx.T)]
    terms = dict(zip(map(tuple, idx.tolist()), vals.tolist()))
    return SparsePolynomial._wrap(num_vars, terms)


def _mul_dense(p: SparsePolynomial, q: SparsePolynomial) -> SparsePolynomial:
    """Product via dense shift-and-add (nd convolution with exact float adds)."""
    dp, dq = p.var_degrees(), q.var_degrees()
    out_shape = tuple(a + b + 1 for a, b in zip(dp, dq))
    small, big = (p, q) if len(p.terms) <= len(q.terms) else (q, p)
    big_arr = _to_dense(big, tuple(d + 1 for d in big.var_degrees()))
    out = np.zeros(out_shape)
    big_slices_base = big_arr.shape
    for exps, coeff in small.terms.items():
        sl = tuple(slice(e, e + s) for e, s in zip(exps, big_slices_base))
        out[sl] += float(coeff) * big_arr
    return _from_dense(out, p.num_vars)


def _dense_integration_profitable(p: SparsePolynomial) -> bool:
    if len(p.terms) < 64 or p.num_vars == 0:
        return False
    if any(isinstance(c, Fraction) for c in p.terms.values()):
        return False
    size = 1
    for d in p.var_degrees():
        size *= d + 1
        if size > _DENSE_MAX_ENTRIES:
            return False
    return True


def _trim_dense(arr: np.ndarray) -> np.ndarray:
    """Shrink to the bounding box of the nonzero coefficients."""
    if arr.ndim == 0 or not arr.size or not np.any(arr):
        return arr[tuple(slice(0, 1) for _ in range(arr.ndim))] if arr.ndim else arr
    slices = []
    for axis in range(arr.ndim):
        other = tuple(i for i in range(arr.ndim) if i != axis)
        mask = np.any(arr != 0.0, axis=other)
        slices.append(slice(0, int(np.max(np.nonzero(mask))) + 1))
    return arr[tuple(slices)]


def _dense_convolve_into(out: np.ndarray, a: np.ndarray, b: np.ndarray) -> None:
    """out[corner] += conv(a, b), iterating the sparser factor."""
    small, big = (a, b) if np.count_nonzero(a) <= np.count_nonzero(b) else (b, a)
    for idx in np.argwhere(small):
        sl = tuple(slice(int(e), int(e) + s) for e, s in zip(idx, big.shape))
        out[sl] += small[tuple(idx)] * big


def _dense_contract_even(arr: np.ndarray, k: int, alpha: float) -> np.ndarray:
    moments = np.array(
        [gaussian_even_moment(alpha, n) for n in range(arr.shape[k])]
    )
    return np.tensordot(arr, moments, axes=([k], [0]))


def _dense_contract_shifted(
    arr: np.ndarray, k: int, alpha: float, bk: float, row: np.ndarray
) -> np.ndarray:
    """Integrate axis k of a dense coefficient array with a linear shift.

    beta = bk - row . x_rest; each slice of fixed power n contributes
    sum_j weight_j beta^{power_j} (the exp(beta^2/4a) factor has already
    been folded into the kernel by the caller).
    """
    deg_k = arr.shape[k] - 1
    rest_shape = arr.shape[:k] + arr.shape[k + 1 :]
    n_rest = len(rest_shape)
    # beta as a dense linear polynomial over the remaining variables
    beta_shape = tuple(2 if row[i] != 0.0 else 1 for i in range(n_rest))
    beta = np.zeros(beta_shape)
    beta[(0,) * n_rest] = bk
    for i in range(n_rest):
        if row[i] != 0.0:
            beta[tuple(1 if j == i else 0 for j in range(n_rest))] = -row[i]
    beta_pows = [np.ones((1,) * n_rest)]
    for _ in range(deg_k):
        prev = beta_pows[-1]
        nxt = np.zeros(tuple(a + c - 1 for a, c in zip(prev.shape, beta.shape)))
        _dense_convolve_into(nxt, prev, beta)
        beta_pows.append(nxt)
    out_shape = tuple(
        r + beta_pows[deg_k].shape[i] - 1 for i, r in enumerate(rest_shape)
    )
    out = np.zeros(out_shape)
    moved = np.moveaxis(arr, k, 0)
    for n in range(deg_k + 1):
        slice_n = moved[n]
        if not np.any(slice_n):
            continue
        r_shape = beta_pows[n].shape
        r_n = np.zeros(r_shape)
        for power, weight in _shifted_moment_coefficients(alpha, n):
            src = beta_pows[power]
            r_n[tuple(slice(0, s) for s in src.shape)] += weight * src
        _dense_convolve_into(out, r_n, slice_n)
    return out


# ---------------------------------------------------------------------------
# Named polynomial constructors
# ---------------------------------------------------------------------------


def hermite(n: int) -> SparsePolynomial:
    """Physicists' Hermite polynomial H_n in one variable (exact integers).

    Recurrence H_{n+1} = 2 x H_n - 2 n H_{n-1}; leading coefficient is 2**n.
    """
    if not isinstance(n, int) or n < 0:
        raise ValueError("Hermite index must be a non-negative integer")
    h_prev = SparsePolynomial.constant(1, 1)
    if n == 0:
        return h_prev
    x = SparsePolynomial.variable(1, 0)
    h = x.scale(2)
    for k in range(1, n):
        h, h_prev = x.scale(2) * h - h_prev.scale(2 * k), h
    return h


def vandermonde(num_vars: int, indices: Sequence[int]) -> SparsePolynomial:
    """Product of pairwise differences prod_{i<j} (x_{indices[i]} - x_{indices[j]}).

    A single index gives the empty product, i.e. the constant 1.
    """
    if len(indices) == 0:
        raise ValueError("vandermonde requires at least one variable")
    if len(set(indices)) != len(indices):
        raise ValueError("vandermonde indices must be distinct")
    result = SparsePolynomial.constant(num_vars, 1)
    for i, j in itertools.combinations(indices, 2):
        result = result * (
            SparsePolynomial.variable(num_vars, i) - SparsePolynomial.variable(num_vars, j)
        )
    return result


def antisymmetrize(p: SparsePolynomial, subset: Sequence[int]) -> SparsePolynomial:
    """Signed sum over all permutations of the given variable subset.

    The output flips sign under any transposition within the subset and can
    be identically zero (the operation does not preserve normalization).
    Subsets larger than MAX_ANTISYMMETRIZE_SIZE raise CapacityError.
    """
    subset = list(subset)
    if len(set(subset)) != len(subset):
        raise ValueError("antisymmetrize subset indices must be distinct")
    for i in subset:
        if not 0 <= i < p.num_vars:
            raise ValueError(f"subset index {i} out of range")
    if len(subset) > MAX_ANTISYMMETRIZE_SIZE:
        raise CapacityError(
            f"antisymmetrization over {len(subset)} variables exceeds the "
            f"supported maximum of {MAX_ANTISYMMETRIZE_SIZE} ({math.factorial(len(subset))} terms)"
        )
    result = SparsePolynomial(p.num_vars)
    for perm in itertools.permutations(range(len(subset))):
        sign = _permutation_sign(perm)
        mapping = {subset[i]: subset[perm[i]] for i in range(len(subset))}
        out: dict[Exponents, object] = {}
        for exps, coeff in p.terms.items():
            e = list(exps)
            for src, dst in mapping.items():
                e[dst] = exps[src]
            key = tuple(e)
            acc = out.get(key, 0) + sign * coeff
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
        result = result + SparsePolynomial._wrap(p.num_vars, out)
    return result


def _permutation_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# Gaussian moments
# ---------------------------------------------------------------------------


def gaussian_even_moment(kappa: float, n: int) -> float:
    """Integral of exp(-kappa z^2) z^n over the real line.

    Zero for odd n; kappa**(-(n+1)/2) * Gamma((n+1)/2) for even n.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if not isinstance(n, int) or n < 0:
        raise ValueError("moment order must be a non-negative integer")
    if n % 2 == 1:
        return 0.0
    # log space avoids intermediate overflow at high order / small kappa
    return math.exp(math.lgamma((n + 1) / 2) - (n + 1) / 2 * math.log(kappa))


def gaussian_shifted_moment(alpha: float, beta: float, n: int) -> float:
    """Integral of exp(-alpha z^2 + beta z) z^n over the real line.

    Evaluated by the finite sum
    exp(beta^2/4alpha) * sum_k C(n,2k) alpha^-(k+1/2) (beta/2alpha)^(n-2k) Gamma(k+1/2).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not isinstance(n, int) or n < 0:
        raise ValueError("moment order must be a non-negative integer")
    half_shift = beta / (2.0 * alpha)
    total = 0.0
    for k in range(n // 2 + 1):
        total += (
            math.comb(n, 2 * k)
            * alpha ** (-(k + 0.5))
            * half_shift ** (n - 2 * k)
            * math.gamma(k + 0.5)
        )
    return math.exp(beta * beta / (4.0 * alpha)) * total


def _shifted_moment_coefficients(alpha: float, n: int) -> list[tuple[int, float]]:
    """Pairs (power of beta, weight) such that the z^n shifted moment equals
    exp(beta^2/4alpha) * sum_j weight_j * beta**power_j."""
    out = []
    inv2a = 1.0 / (2.0 * alpha)
    for k in range(n // 2 + 1):
        weight = (
            math.comb(n, 2 * k)
            * alpha ** (-(k + 0.5))
            * inv2a ** (n - 2 * k)
            * math.gamma(k + 0.5)
        )
        out.append((n - 2 * k, weight))
    return out


# ---------------------------------------------------------------------------
# Gaussian kernel
# ---------------------------------------------------------------------------


class GaussianKernel:
    """exp(-x'Ax/2 + b'x + c) with symmetric A.

    Positive definiteness of A is not required at construction; it is
    checked per direction at integration time.
    """

    __slots__ = ("num_vars", "A", "b", "c")

    def __init__(self, A: np.ndarray, b: np.ndarray | None = None, c: float = 0.0):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if A.size and not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * (1 + np.abs(A).max())):
            raise ValueError("A must be symmetric")
        self.num_vars = A.shape[0]
        self.A = (A + A.T) / 2.0
        self.A.flags.writeable = False
        self.b = np.zeros(self.num_vars) if b is None else np.asarray(b, dtype=float).copy()
        if self.b.shape != (self.num_vars,):
            raise ValueError("b has wrong shape")
        self.b.flags.writeable = False
        self.c = float(c)

    @classmethod
    def zero(cls, num_vars: int) -> "GaussianKernel":
        """The constant-1 kernel."""
        return cls(np.zeros((num_vars, num_vars)))

    def log_value(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        if x.shape != (self.num_vars,):
            raise ValueError("point length does not match num_vars")
        return float(-0.5 * x @ self.A @ x + self.b @ x + self.c)

    def evaluate(self, point: Sequence[float]) -> float:
        return math.exp(self.log_value(point))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        quad = np.einsum("ni,ij,nj->n", points, self.A, points)
        return np.exp(-0.5 * quad + points @ self.b + self.c)

    def __mul__(self, other: "GaussianKernel") -> "GaussianKernel":
        if self.num_vars != other.num_vars:
            raise ValueError("dimension mismatch in kernel product")
        return GaussianKernel(self.A + other.A, self.b + other.b, self.c + other.c)

    def compose_linear(self, matrix: np.ndarray) -> "GaussianKernel":
        """Kernel of x -> self(M x): A -> M'AM, b -> M'b."""
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != self.num_vars:
            raise ValueError("matrix must have one row per kernel variable")
        return GaussianKernel(m.T @ self.A @ m, m.T @ self.b, self.c)

    def __repr__(self) -> str:
        return f"GaussianKernel(num_vars={self.num_vars}, c={self.c:.6g})"


# ---------------------------------------------------------------------------
# GaussPolyFunction
# ---------------------------------------------------------------------------


def _default_labels(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


class GaussPolyFunction:
    """kernel(x) * poly(x) over labelled variables.

    Instances are immutable values; every operation returns a new object,
    so concurrent use requires no synchronization.
    """

    __slots__ = ("kernel", "poly", "labels")

    def __init__(
        self,
        kernel: GaussianKernel,
        poly: SparsePolynomial,
        labels: Sequence[str] | None = None,
    ):
        if kernel.num_vars != poly.num_vars:
            raise ValueError("kernel and polynomial dimension mismatch")
        self.kernel = kernel
        self.poly = poly
        self.labels = tuple(labels) if labels is not None else _default_labels(kernel.num_vars)
        if len(self.labels) != kernel.num_vars:
            raise ValueError("label count does not match num_vars")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")

    @property
    def num_vars(self) -> int:
        return self.kernel.num_vars

    # -- evaluation --------------------------------------------------------

    def evaluate(self, point: Sequence[float]) -> float:
        return self.kernel.evaluate(point) * self.poly.evaluate(point)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return self.kernel.evaluate_many(points) * self.poly.evaluate_many(points)

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other: "GaussPolyFunction") -> "GaussPolyFunction":
        if self.labels != other.labels:
            raise ValueError(
                f"label mismatch: {self.labels} vs {other.labels}; "
                "align or embed the factors first"
            )
        return GaussPolyFunction(self.kernel * other.kernel, self.poly * other.poly, self.labels)

    def scale_log(self, log_factor: float) -> "GaussPolyFunction":
        kernel = GaussianKernel(self.kernel.A, self.kernel.b, self.kernel.c + log_factor)
        return GaussPolyFunction(kernel, self.poly, self.labels)

    def substitute_linear(
        self, matrix: np.ndarray, new_labels: Sequence[str] | None = None
    ) -> "GaussPolyFunction":
        """Change of variables f -> f(M y) for invertible square M.

        For orthogonal M the Jacobian is 1, so integrals are preserved.
        """
        m = np.asarray(matrix, dtype=float)
        if m.shape != (self.num_vars, self.num_vars):
            raise ValueError("substitution matrix must be square of matching size")
        if self.num_vars and abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("substitution matrix is singular")
        return self.compose_linear(m, new_labels if new_labels is not None else self.labels)

    def compose_linear(
        self, matrix: np.ndarray, new_labels: Sequence[str]
    ) -> "GaussPolyFunction":
        """f -> f(M y) for an arbitrary (num_vars x new_n) matrix.

        Used for sections (e.g. restricting a density matrix to its
        diagonal) and for embedding into a larger variable space.
        """
        return GaussPolyFunction(
            self.kernel.compose_linear(matrix),
            self.poly.substitute_linear(np.asarray(matrix, dtype=float)),
            new_labels,
        )

    def embed(self, new_labels: Sequence[str]) -> "GaussPolyFunction":
        """View this function in a larger label space (extra labels inert)."""
        new_labels = tuple(new_labels)
        positions = []
        for lab in self.labels:
            try:
                positions.append(new_labels.index(lab))
            except ValueError:
                raise ValueError(f"label {lab!r} missing from target labels") from None
        m = np.zeros((self.num_vars, len(new_labels)))
        for i, pos in enumerate(positions):
            m[i, pos] = 1.0
        return self.compose_linear(m, new_labels)

    # -- integration -------------------------------------------------------

    def integrate_out(self, which: Sequence[str] | Sequence[int]) -> "GaussPolyFunction":
        """Exact marginal over the named (or indexed) variables.

        Variables are eliminated one at a time by completing the square;
        each elimination requires a positive pivot (the principal submatrix
        over the eliminated subset must be positive definite), otherwise
        NonPositiveDefiniteError signals an unbound direction.
        """
        labels = [self.labels[w] if isinstance(w, int) else str(w) for w in which]
        for lab in labels:
            if lab not in self.labels:
                raise ValueError(f"unknown variable {lab!r}")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate variables in integration subset")
        if len(labels) > 1 and _dense_integration_profitable(self.poly):
            return self._integrate_out_dense(labels)
        out = self
        for lab in labels:
            out = out._eliminate(out.labels.index(lab))
        return out

    def _integrate_out_dense(self, labels: list[str]) -> "GaussPolyFunction":
        """Eliminate a whole subset on a dense coefficient array."""
        A, b, c = self.kernel.A.copy(), self.kernel.b.copy(), self.kernel.c
        current = list(self.labels)
        degs = self.poly.var_degrees()
        arr = _to_dense(self.poly, tuple(d + 1 for d in degs))
        for lab in labels:
            k = current.index(lab)
            pivot = A[k, k]
            if not pivot > _PIVOT_TOL:
                raise NonPositiveDefiniteError(
                    f"variable {lab!r} is not integrable: pivot {pivot:.3g} <= 0 "
                    "(Gaussian unbound along this direction)"
                )
            alpha = 0.5 * pivot
            rest = [j for j in range(len(current)) if j != k]
            row = A[k, rest]
            bk = b[k]
            A = _snap_dust(A[np.ix_(rest, rest)] - np.outer(row, row) / pivot)
            b = b[rest] - bk * row / pivot
            c = c + bk * bk / (2.0 * pivot)
            arr = _trim_dense(arr)
            if bk == 0.0 and not np.any(row):
                arr = _dense_contract_even(arr, k, alpha)
            else:
                arr = _dense_contract_shifted(arr, k, alpha, bk, row)
            if arr.size:
                cap = np.abs(arr).max() * PRUNE_REL_TOL
                arr[np.abs(arr) <= cap] = 0.0
            arr = _trim_dense(arr)
            del current[k]
        kernel = GaussianKernel(A, b, c)
        poly = _from_dense(arr, len(current))
        return GaussPolyFunction(kernel, poly, tuple(current))

    def integrate_all(self) -> float:
        """Integral over all variables."""
        reduced = self.integrate_out(self.labels)
        return reduced.constant_value()

    def constant_value(self) -> float:
        if self.num_vars != 0:
            raise ValueError("function still depends on variables")
        return math.exp(self.kernel.c) * float(self.poly.terms.get((), 0))

    def _eliminate(self, k: int) -> "GaussPolyFunction":
        A, b, c = self.kernel.A, self.kernel.b, self.kernel.c
        pivot = A[k, k]
        if not pivot > _PIVOT_TOL:
            raise NonPositiveDefiniteError(
                f"variable {self.labels[k]!r} is not integrable: pivot {pivot:.3g} <= 0 "
                "(Gaussian unbound along this direction)"
            )
        alpha = 0.5 * pivot
        rest = [j for j in range(self.num_vars) if j != k]
        row = A[k, rest]
        bk = b[k]
        new_A = _snap_dust(A[np.ix_(rest, rest)] - np.outer(row, row) / pivot)
        new_b = b[rest] - bk * row / pivot
        new_c = c + bk * bk / (2.0 * pivot)
        kernel = GaussianKernel(new_A, new_b, new_c)
        labels = tuple(self.labels[j] for j in rest)

        n_rest = len(rest)
        shifted = bool(bk != 0.0 or np.any(row != 0.0))
        if not shifted:
            poly = self._contract_even(k, alpha, n_rest)
        else:
            poly = self._contract_shifted(k, alpha, bk, row, n_rest)
        return GaussPolyFunction(kernel, poly.prune(), labels)

    def _contract_even(self, k: int, alpha: float, n_rest: int) -> SparsePolynomial:
        out: dict[Exponents, object] = {}
        for exps, coeff in self.poly.terms.items():
            n = exps[k]
            if n % 2 == 1:
                continue
            key = exps[:k] + exps[k + 1 :]
            acc = out.get(key, 0) + float(coeff) * gaussian_even_moment(alpha, n)
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
        return SparsePolynomial._wrap(n_rest, out)

    def _contract_shifted(
        self, k: int, alpha: float, bk: float, row: np.ndarray, n_rest: int
    ) -> SparsePolynomial:
        # beta(x_rest) = b_k - sum_j A_kj x_j; note exp(beta^2/4a) already
        # merged into the new kernel, so only the moment sums remain here.
        beta = SparsePolynomial.linear_form(-row) + SparsePolynomial.constant(n_rest, float(bk))
        groups: dict[int, dict[Exponents, object]] = {}
        for exps, coeff in self.poly.terms.items():
            n = exps[k]
            key = exps[:k] + exps[k + 1 :]
            bucket = groups.setdefault(n, {})
            bucket[key] = bucket.get(key, 0) + coeff
        max_n = max(groups) if groups else 0
        beta_pows = [SparsePolynomial.constant(n_rest, 1.0)]
        for _ in range(max_n):
            beta_pows.append(beta_pows[-1] * beta)
        result = SparsePolynomial(n_rest)
        for n, bucket in groups.items():
            moment_poly = SparsePolynomial(n_rest)
            for power, weight in _shifted_moment_coefficients(alpha, n):
                moment_poly = moment_poly + beta_pows[power].scale(weight)
            result = result + moment_poly * SparsePolynomial._wrap(n_rest, bucket)
        return result

    # -- serialization -----------------------------------------------------

    def to_json_obj(self) -> dict:
        """JSON document: {labels, A (row-major), b, c, terms: [{exps, coeff}]}."""
        return {
            "labels": list(self.labels),
            "A": [float(v) for v in self.kernel.A.reshape(-1)],
            "b": [float(v) for v in self.kernel.b],
            "c": float(self.kernel.c),
            "terms": [
                {"exps": list(exps), "coeff": float(coeff)}
                for exps, coeff in sorted(self.poly.terms.items())
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "GaussPolyFunction":
        labels = tuple(obj["labels"])
        n = len(labels)
        A = np.array(obj["A"], dtype=float).reshape(n, n)
        kernel = GaussianKernel(A, np.array(obj["b"], dtype=float), float(obj["c"]))
        terms = {tuple(t["exps"]): float(t["coeff"]) for t in obj["terms"]}
        return cls(kernel, SparsePolynomial(n, terms), labels)

    @classmethod
    def from_json(cls, text: str) -> "GaussPolyFunction":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self) -> str:
        return (
            f"GaussPolyFunction(labels={self.labels}, terms={len(self.poly.terms)})"
        )
