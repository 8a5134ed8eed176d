"""Reduced density matrices of the N-pair ground state.

A bipartition keeps M_a species-a and M_b species-b particles; the matrix
elements rho(X, X') = integral of psi(X, Y) psi(X', Y) over the traced
coordinates Y are computed exactly in the polynomial-times-Gaussian algebra.

Before integration each traced species block is rotated to center-of-mass
and relative coordinates.  In these variables the relative coordinates
appear diagonally in the Gaussian and factor by species in the polynomial,
so they reduce to plain even moments; only the two center-of-mass
coordinates require shifted-moment elimination.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gausspoly import (
    CapacityError,
    GaussianKernel,
    GaussPolyFunction,
    SparsePolynomial,
)
from .model import ModelParams, center_of_mass_transform, ground_state

log = logging.getLogger(__name__)

# reduce_density_matrix builds a product over 2N + M_a + M_b coordinates;
# beyond these bounds the polynomial term count grows combinatorially.
MAX_PAIRS = 5
MAX_PRODUCT_VARS = 12


@dataclass(frozen=True)
class Bipartition:
    """Keep m_a species-a and m_b species-b particles; trace out the rest."""

    m_a: int
    m_b: int

    def __post_init__(self):
        if self.m_a < 0 or self.m_b < 0:
            raise ValueError("kept particle counts must be non-negative")
        if self.m_a == 0 and self.m_b == 0:
            raise ValueError("bipartition must keep at least one particle")

    @property
    def kept(self) -> int:
        return self.m_a + self.m_b

    def validate(self, n_pairs: int) -> None:
        if self.m_a > n_pairs or self.m_b > n_pairs:
            raise ValueError(
                f"bipartition ({self.m_a},{self.m_b}) exceeds {n_pairs} particles per species"
            )

    def is_proper(self, n_pairs: int) -> bool:
        """False for the degenerate case that keeps the whole system."""
        return not (self.m_a == n_pairs and self.m_b == n_pairs)


@dataclass(frozen=True)
class ReducedDensityMatrix:
    """rho(X, X') over kept coordinates, unprimed block then primed block.

    raw_trace records the trace accumulated by the reduction pipeline
    before the final rescaling to trace one (a float-drift diagnostic).
    """

    func: GaussPolyFunction
    bipartition: Bipartition
    n_pairs: int
    params: ModelParams
    raw_trace: float

    @property
    def kept(self) -> int:
        return self.bipartition.kept

    def evaluate(self, x, x_prime) -> float:
        point = np.concatenate([np.atleast_1d(x), np.atleast_1d(x_prime)])
        return self.func.evaluate(point)

    def diagonal(self) -> GaussPolyFunction:
        """rho(X, X) as a function of the kept coordinates only."""
        m = self.kept
        section = np.vstack([np.eye(m), np.eye(m)])
        return self.func.compose_linear(section, self.func.labels[:m])

    def trace(self) -> float:
        return self.diagonal().integrate_all()

    def to_json_obj(self) -> dict:
        return {
            "bipartition": {"m_a": self.bipartition.m_a, "m_b": self.bipartition.m_b},
            "n_pairs": self.n_pairs,
            "coupling": self.params.coupling,
            "raw_trace": self.raw_trace,
            "gausspoly": self.func.to_json_obj(),
        }


def _kept_labels(bip: Bipartition) -> tuple[str, ...]:
    unprimed = tuple(f"a{i + 1}" for i in range(bip.m_a)) + tuple(
        f"b{i + 1}" for i in range(bip.m_b)
    )
    return unprimed + tuple(lab + "'" for lab in unprimed)


def _pair_difference_poly(
    rows_x: np.ndarray, rows_xp: np.ndarray, n_vars: int
) -> SparsePolynomial:
    """Vandermonde factor of one species for both wave-function copies.

    rows_x[i] is the coefficient vector of the i-th species coordinate in
    the product variable space for psi(X, Y); rows_xp the same for
    psi(X', Y).  Traced coordinates coincide in both copies, so the
    traced-traced differences enter squared.
    """
    poly = SparsePolynomial.constant(n_vars, 1.0)
    n = rows_x.shape[0]
    for rows in (rows_x, rows_xp):
        for i in range(n):
            for j in range(i + 1, n):
                poly = poly * SparsePolynomial.linear_form(rows[i] - rows[j])
    return poly


def reduce_density_matrix(
    psi: GaussPolyFunction, bip: Bipartition, params: ModelParams
) -> ReducedDensityMatrix:
    """Trace the 2N-coordinate pure state psi down to the kept particles.

    psi must be normalized.  The kept particles are the first m_a of
    species a and the first m_b of species b (antisymmetry makes any other
    choice equivalent).  The result is rescaled to unit trace; the
    pre-rescale trace is kept as a diagnostic.
    """
    n = params.n_pairs
    bip.validate(n)
    if psi.num_vars != 2 * n:
        raise ValueError(f"psi has {psi.num_vars} coordinates, expected {2 * n}")
    m_a, m_b = bip.m_a, bip.m_b
    m = bip.kept
    n_tr_a, n_tr_b = n - m_a, n - m_b
    if n > MAX_PAIRS or 2 * n + m > MAX_PRODUCT_VARS:
        raise CapacityError(
            f"reduction for N={n}, bipartition ({m_a},{m_b}) needs a "
            f"{2 * n + m}-variable product; supported up to N={MAX_PAIRS} "
            f"with at most {MAX_PRODUCT_VARS} variables"
        )

    n_vars = 2 * m + n_tr_a + n_tr_b
    kept_labels = _kept_labels(bip)
    za_labels = tuple(f"za{i + 1}" for i in range(n_tr_a))
    zb_labels = tuple(f"zb{i + 1}" for i in range(n_tr_b))
    labels = kept_labels + za_labels + zb_labels

    # Original coordinate -> linear form over the product variables, for
    # each wave-function copy.  Traced blocks enter through the orthogonal
    # center-of-mass/relative transform (shared by both copies).
    map_x = np.zeros((2 * n, n_vars))
    map_xp = np.zeros((2 * n, n_vars))
    u_a = center_of_mass_transform(n_tr_a) if n_tr_a else None
    u_b = center_of_mass_transform(n_tr_b) if n_tr_b else None
    for j in range(n):  # species a
        if j < m_a:
            map_x[j, j] = 1.0
            map_xp[j, m + j] = 1.0
        else:
            cols = slice(2 * m, 2 * m + n_tr_a)
            map_x[j, cols] = u_a[:, j - m_a]
            map_xp[j, cols] = u_a[:, j - m_a]
    for j in range(n):  # species b
        o = n + j
        if j < m_b:
            map_x[o, m_a + j] = 1.0
            map_xp[o, m + m_a + j] = 1.0
        else:
            cols = slice(2 * m + n_tr_a, n_vars)
            map_x[o, cols] = u_b[:, j - m_b]
            map_xp[o, cols] = u_b[:, j - m_b]

    a_psi = psi.kernel.A
    a_prod = map_x.T @ a_psi @ map_x + map_xp.T @ a_psi @ map_xp
    # Zero-snap roundoff from the orthogonal-transform products: the
    # relative traced coordinates are structurally diagonal here, and the
    # integration engine picks the cheap even-moment path only for exact
    # zeros in the coupling row.
    a_prod[np.abs(a_prod) < 1e-13 * np.abs(a_prod).max()] = 0.0
    kernel = GaussianKernel(a_prod, c=2.0 * psi.kernel.c)

    poly_a = _pair_difference_poly(map_x[:n], map_xp[:n], n_vars)
    poly_b = _pair_difference_poly(map_x[n:], map_xp[n:], n_vars)

    # Relative coordinates of a traced block are diagonal in the kernel and
    # appear only in that species' polynomial factor, so each factor is
    # contracted separately before the two polynomials are multiplied.
    f = GaussPolyFunction(kernel, poly_a, labels)
    if n_tr_a > 1:
        drop = [labels.index(lab) for lab in za_labels[1:]]
        f = f.integrate_out(za_labels[1:])
        poly_b = poly_b.drop_variables(drop)
    poly_a = f.poly

    g = GaussPolyFunction(f.kernel, poly_b, f.labels)
    if n_tr_b > 1:
        drop = [f.labels.index(lab) for lab in zb_labels[1:]]
        g = g.integrate_out(zb_labels[1:])
        poly_a = poly_a.drop_variables(drop)
    combined = GaussPolyFunction(g.kernel, poly_a * g.poly, g.labels)

    cm_vars = [lab for lab in (za_labels[:1] + zb_labels[:1]) if lab]
    if cm_vars:
        combined = combined.integrate_out(cm_vars)

    raw_trace = _trace_of(combined)
    if not raw_trace > 0.0 or not math.isfinite(raw_trace):
        raise ArithmeticError(f"reduction produced a non-positive trace {raw_trace!r}")
    drift = abs(raw_trace - 1.0)
    if drift > 1e-6:
        log.warning(
            "reduce(%s, (%d,%d)): pre-rescale trace deviates by %.3g",
            params, m_a, m_b, drift,
        )
    normalized = combined.scale_log(-math.log(raw_trace))
    return ReducedDensityMatrix(
        func=normalized,
        bipartition=bip,
        n_pairs=n,
        params=params,
        raw_trace=raw_trace,
    )


def _trace_of(func: GaussPolyFunction) -> float:
    m = func.num_vars // 2
    section = np.vstack([np.eye(m), np.eye(m)])
    return func.compose_linear(section, func.labels[:m]).integrate_all()


def purity(rho: ReducedDensityMatrix) -> float:
    """Tr(rho^2) as the full integral of the squared matrix elements."""
    return (rho.func * rho.func).integrate_all()


def purity_species_closed(params: ModelParams) -> float:
    """Closed form for the all-a vs all-b bipartition:
    2 sqrt(kappa2) / (1 + kappa2), a function of N*Lambda only."""
    k2 = params.kappa2
    return 2.0 * math.sqrt(k2) / (1.0 + k2)


# ---------------------------------------------------------------------------
# Cached standard reductions
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def single_particle_rdm(params: ModelParams) -> ReducedDensityMatrix:
    """rho_a: one species-a particle kept."""
    return reduce_density_matrix(ground_state(params), Bipartition(1, 0), params)


@lru_cache(maxsize=256)
def pair_ab_rdm(params: ModelParams) -> ReducedDensityMatrix:
    """rho_ab: one particle of each species kept."""
    return reduce_density_matrix(ground_state(params), Bipartition(1, 1), params)


@lru_cache(maxsize=256)
def pair_aa_rdm(params: ModelParams) -> ReducedDensityMatrix:
    """rho_aa: two species-a particles kept (requires N >= 2)."""
    if params.n_pairs < 2:
        raise ValueError("rho_aa needs at least two particles per species")
    return reduce_density_matrix(ground_state(params), Bipartition(2, 0), params)


@lru_cache(maxsize=256)
def species_rdm(params: ModelParams) -> ReducedDensityMatrix:
    """rho over all species-a particles (the N_a | N_b bipartition)."""
    return reduce_density_matrix(
        ground_state(params), Bipartition(params.n_pairs, 0), params
    )


# ---------------------------------------------------------------------------
# Gaussian widths (closed forms) and their extraction from constructed RDMs
# ---------------------------------------------------------------------------


def gaussian_widths_single(params: ModelParams) -> tuple[float, float]:
    """(sigma_plus, sigma_minus) of rho_a:
    exp(-((x+x')/2 sigma_plus)^2 / 2 - ((x-x')/2 sigma_minus)^2 / 2)."""
    k1, k2 = params.kappa1, params.kappa2
    n = params.n_pairs
    sigma_plus = (4.0 * k1 * k2 * n / (k1 + k2 * (k1 + 2.0 * (n - 1)))) ** -0.5
    sigma_minus = ((k2 + 2.0 * k1 * (n - 1) + 1.0) / n) ** -0.5
    return sigma_plus, sigma_minus


def gaussian_widths_pair_ab(params: ModelParams) -> tuple[float, float, float, float]:
    """(sigma_1..sigma_4) of rho_ab along the four quadratic directions
    x_a -+ x_b -+ x_a' + x_b' (each factor exp(-(u/2 sigma)^2 / 4))."""
    k1, k2 = params.kappa1, params.kappa2
    n = params.n_pairs
    s1 = (2.0 * (k2 + k1 * (n - 1)) / n) ** -0.5
    s2 = (2.0 * (k1 * (n - 1) + 1.0) / n) ** -0.5
    s3 = (2.0 * k1 * k2 * n / (k1 + k2 * (n - 1))) ** -0.5
    s4 = (2.0 * k1 * n / (k1 + n - 1.0)) ** -0.5
    return s1, s2, s3, s4


def gaussian_widths_pair_aa(params: ModelParams) -> tuple[float, float]:
    """(sigma_p, sigma_m) of rho_aa in the center-of-mass pair variables
    R = (x1+x2)/sqrt(2), along R + R' and R - R'.  Requires N >= 2."""
    if params.n_pairs < 2:
        raise ValueError("rho_aa widths need at least two particles per species")
    k1, k2 = params.kappa1, params.kappa2
    n = params.n_pairs
    sigma_p = (2.0 * k1 * k2 * n / (k1 + k2 * (k1 + n - 2.0))) ** -0.5
    sigma_m = (2.0 * (k2 + k1 * (n - 2.0) + 1.0) / n) ** -0.5
    return sigma_p, sigma_m


def gaussian_decay_width(rho: ReducedDensityMatrix, direction) -> float:
    """Width sigma = (2 u'Au)^{-1/2} of the Gaussian decay of rho along a
    unit direction u in the (X, X') space.

    This reads the quadratic form of the constructed kernel, so it is an
    independent cross-check of the closed-form width formulas.
    """
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    rate = float(u @ rho.func.kernel.A @ u)
    if rate <= 0:
        raise ValueError("direction has non-positive decay rate")
    return (2.0 * rate) ** -0.5


SINGLE_DIRECTIONS = {
    "plus": (1.0, 1.0),
    "minus": (1.0, -1.0),
}

PAIR_AB_DIRECTIONS = {
    "sigma1": (1.0, -1.0, -1.0, 1.0),
    "sigma2": (1.0, 1.0, -1.0, -1.0),
    "sigma3": (1.0, -1.0, 1.0, -1.0),
    "sigma4": (1.0, 1.0, 1.0, 1.0),
}

PAIR_AA_DIRECTIONS = {
    "p": (1.0, 1.0, 1.0, 1.0),
    "m": (1.0, 1.0, -1.0, -1.0),
}
