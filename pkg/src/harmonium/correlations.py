"""Spatial-correlation diagnostics built on the reduced density matrices.

Joint position distributions for a pair of distinguishable or identical
particles, moment-corrected widths along the diagonal and anti-diagonal
directions, the Gaussian separation scale of identical fermions, and the
two-particle coherence decay that rules out off-diagonal long-range order.

All moments are exact (polynomial-times-Gaussian integrals); numeric
quadrature appears only in the oracle layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gausspoly import GaussPolyFunction, SparsePolynomial
from .model import ModelParams
from .rdm import (
    gaussian_widths_pair_aa,
    gaussian_widths_pair_ab,
    gaussian_widths_single,
    pair_aa_rdm,
    pair_ab_rdm,
    single_particle_rdm,
)

# Bisection settings for locating critical points of the anti-diagonal
# section: sign-change bracketing on [0, BRACKET_WIDTHS * sigma_minus],
# then bisection to ROOT_TOL.
BRACKET_WIDTHS = 10.0
BRACKET_POINTS = 4000
ROOT_TOL = 1e-10


@dataclass(frozen=True)
class WidthReport:
    """Diagonal / anti-diagonal widths of one distribution, with the
    corresponding Gaussian-decay scales for comparison."""

    diagonal: float
    antidiagonal: float
    gaussian_diagonal: float
    gaussian_antidiagonal: float
    n_pairs: int
    coupling: float


# ---------------------------------------------------------------------------
# Joint distributions
# ---------------------------------------------------------------------------


def joint_distribution_ab(params: ModelParams, axis: np.ndarray) -> np.ndarray:
    """D_ab(x_a, x_b) = rho_ab(x_a, x_b; x_a, x_b) on the grid axis x axis.

    Probability of finding a species-a particle at x_a and a species-b
    particle at x_b.  Returned with axis 0 indexing x_a.
    """
    diag = pair_ab_rdm(params).diagonal()
    return _grid_values(diag, axis)


def joint_distribution_aa(params: ModelParams, axis: np.ndarray) -> np.ndarray:
    """D_aa(x_a, x_a') on the grid: two identical species-a particles.

    Pauli exclusion makes the diagonal x_a = x_a' exactly zero; the exact
    polynomial factor (x_a - x_a')^2 / 2 is evaluated separately so that
    coincident grid points yield exact zeros rather than roundoff dust.
    """
    diag = pair_aa_rdm(params).diagonal()
    quotient, remainder_scale = _divide_out_pauli_factor(diag.poly)
    reduced = GaussPolyFunction(diag.kernel, quotient, diag.labels)
    if remainder_scale > 1e-9:
        raise ArithmeticError(
            f"Pauli factor division left a remainder of relative size {remainder_scale:.3g}"
        )
    xa, xb = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([xa.ravel(), xb.ravel()])
    values = reduced.evaluate_many(points) * 0.5 * (points[:, 0] - points[:, 1]) ** 2
    return values.reshape(len(axis), len(axis))


def _grid_values(func: GaussPolyFunction, axis: np.ndarray) -> np.ndarray:
    if func.num_vars != 2:
        raise ValueError("grid evaluation expects a two-variable function")
    xa, xb = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([xa.ravel(), xb.ravel()])
    return func.evaluate_many(points).reshape(len(axis), len(axis))


def _divide_out_pauli_factor(poly: SparsePolynomial) -> tuple[SparsePolynomial, float]:
    """Write p(u, v) = (u - v)^2/2 * q(u, v) + r and return (q, |r|/|p|).

    The diagonal of rho_aa carries the squared difference exactly; r is
    roundoff dust from the reduction pipeline.
    """
    # Rotate to s = u - v, t = u + v:  p(u, v) = P((s+t)/2, (t-s)/2).
    rot = 0.5 * np.array([[1.0, 1.0], [-1.0, 1.0]])
    in_st = poly.substitute_linear(rot)
    quotient_terms = {}
    remainder = 0.0
    scale = max(abs(float(c)) for c in in_st.terms.values()) if in_st.terms else 1.0
    for (es, et), coeff in in_st.terms.items():
        if es >= 2:
            quotient_terms[(es - 2, et)] = quotient_terms.get((es - 2, et), 0.0) + 2.0 * float(coeff)
        else:
            remainder = max(remainder, abs(float(coeff)) / scale)
    q_st = SparsePolynomial(2, quotient_terms)
    # back to (u, v): s = u - v, t = u + v
    back = np.array([[1.0, -1.0], [1.0, 1.0]])
    return q_st.substitute_linear(back), remainder


def default_grid_axis(params: ModelParams, points: int = 201, n_widths: float = 6.0) -> np.ndarray:
    """Symmetric axis covering n_widths times the largest Gaussian width."""
    widths = list(gaussian_widths_single(params)) + list(gaussian_widths_pair_ab(params))
    if params.n_pairs >= 2:
        widths += list(gaussian_widths_pair_aa(params))
    half = n_widths * max(widths)
    return np.linspace(-half, half, points)


# ---------------------------------------------------------------------------
# Corrected widths (exact second moments / critical points)
# ---------------------------------------------------------------------------


def corrected_width_single(params: ModelParams) -> tuple[float, float]:
    """Widths of rho_a along the diagonal and anti-diagonal.

    Diagonal: sqrt of the second moment of the position density
    rho_a(x, x).  Anti-diagonal: the critical point of rho_a(x, -x)
    farthest from the origin (0 for a pure Gaussian, i.e. N = 1).
    """
    rho = single_particle_rdm(params)
    diag = rho.diagonal()
    x_sq = SparsePolynomial(1, {(2,): 1})
    second_moment = GaussPolyFunction(diag.kernel, diag.poly * x_sq, diag.labels).integrate_all()
    sigma_d = math.sqrt(second_moment)

    anti = rho.func.compose_linear(np.array([[1.0], [-1.0]]), ("x",))
    sigma_ad = _farthest_critical_point(anti, gaussian_widths_single(params)[1])
    return sigma_d, sigma_ad


def _farthest_critical_point(func: GaussPolyFunction, width_scale: float) -> float:
    """Largest root of d/dx [gaussian * poly] on [0, BRACKET_WIDTHS * scale].

    The derivative's polynomial factor is q = p' + (b - a x) p; roots are
    isolated by sign-change bracketing and refined by bisection.  The
    function is even, so x = 0 is always critical and is the fallback.
    """
    a = float(func.kernel.A[0, 0])
    b = float(func.kernel.b[0])
    poly = func.poly
    derivative = _poly_derivative_1d(poly) + (
        SparsePolynomial(1, {(1,): -a, (0,): b}) * poly
    )
    if derivative.is_zero():
        return 0.0
    hi = BRACKET_WIDTHS * width_scale
    xs = np.linspace(0.0, hi, BRACKET_POINTS)
    vals = derivative.evaluate_many(xs[:, None])
    best = 0.0
    for i in range(len(xs) - 1):
        lo_v, hi_v = vals[i], vals[i + 1]
        if lo_v == 0.0:
            best = max(best, xs[i])
            continue
        if lo_v * hi_v < 0.0:
            root = _bisect(lambda x: derivative.evaluate([x]), xs[i], xs[i + 1])
            best = max(best, root)
    return best


def _poly_derivative_1d(p: SparsePolynomial) -> SparsePolynomial:
    terms = {}
    for (e,), c in p.terms.items():
        if e:
            terms[(e - 1,)] = c * e
    return SparsePolynomial(1, terms)


def _bisect(f, lo: float, hi: float) -> float:
    f_lo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < ROOT_TOL:
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _pair_widths(diag: GaussPolyFunction) -> tuple[float, float]:
    """Second moments of (u + v)/sqrt(2) and (u - v)/sqrt(2) under a
    two-variable distribution given as a GaussPolyFunction."""
    plus = SparsePolynomial(2, {(2, 0): 0.5, (0, 2): 0.5, (1, 1): 1.0})
    minus = SparsePolynomial(2, {(2, 0): 0.5, (0, 2): 0.5, (1, 1): -1.0})
    m_plus = GaussPolyFunction(diag.kernel, diag.poly * plus, diag.labels).integrate_all()
    m_minus = GaussPolyFunction(diag.kernel, diag.poly * minus, diag.labels).integrate_all()
    return math.sqrt(m_plus), math.sqrt(m_minus)


def corrected_width_pair_ab(params: ModelParams) -> tuple[float, float]:
    """(diagonal, anti-diagonal) standard deviations of D_ab along the
    rotated directions (x_a +- x_b)/sqrt(2)."""
    return _pair_widths(pair_ab_rdm(params).diagonal())


def corrected_width_pair_aa(params: ModelParams) -> tuple[float, float]:
    """(diagonal, anti-diagonal) standard deviations of D_aa."""
    return _pair_widths(pair_aa_rdm(params).diagonal())


def width_report_single(params: ModelParams) -> WidthReport:
    d, ad = corrected_width_single(params)
    g_plus, g_minus = gaussian_widths_single(params)
    return WidthReport(d, ad, g_plus, g_minus, params.n_pairs, params.coupling)


def width_report_pair_ab(params: ModelParams) -> WidthReport:
    d, ad = corrected_width_pair_ab(params)
    sigmas = gaussian_widths_pair_ab(params)
    # sigma_4 governs the total-sum direction (diagonal of D_ab), sigma_3
    # the relative direction (anti-diagonal).
    return WidthReport(d, ad, sigmas[3], sigmas[2], params.n_pairs, params.coupling)


def width_report_pair_aa(params: ModelParams) -> WidthReport:
    d, ad = corrected_width_pair_aa(params)
    g_p, _ = gaussian_widths_pair_aa(params)
    return WidthReport(d, ad, g_p, rms_separation_gaussian(params), params.n_pairs, params.coupling)


# ---------------------------------------------------------------------------
# Separation scales and coherence decay
# ---------------------------------------------------------------------------


def rms_separation_gaussian(params: ModelParams) -> float:
    """Gaussian estimate (2 kappa1)^{-1/2} = [4(1 - N Lambda)]^{-1/4} of the
    separation between two identical fermions (polynomial correction
    excluded; see rms_separation_exact)."""
    return (2.0 * params.kappa1) ** -0.5


def rms_separation_exact(params: ModelParams) -> float:
    """Root of the exact second moment of x_a - x_a' under D_aa."""
    _, anti = corrected_width_pair_aa(params)
    return math.sqrt(2.0) * anti


def odlro_check(params: ModelParams, x: float, x_prime: float) -> float:
    """|rho_ab(x, x; x', x')|: two-particle coherence between a pair
    localized near x and a pair near x'.

    Decays at the Gaussian rate odlro_decay_rate(params) in (x - x')**2,
    which precludes off-diagonal long-range order.
    """
    return abs(pair_ab_rdm(params).evaluate([x, x], [x_prime, x_prime]))


def odlro_decay_rate(params: ModelParams) -> float:
    """Coefficient R such that rho_ab(x,x;x',x') ~ exp(-R (x-x')^2) at
    fixed x + x'.  Equals 1/(4 sigma_2^2) with sigma_2 from
    gaussian_widths_pair_ab."""
    sigma2 = gaussian_widths_pair_ab(params)[1]
    return 1.0 / (4.0 * sigma2 * sigma2)


def coherence_width(params: ModelParams) -> float:
    """Gaussian scale w of the pair coherence, exp(-(x-x')^2 / w^2): twice
    the sigma_2 width of rho_ab."""
    return 2.0 * gaussian_widths_pair_ab(params)[1]
