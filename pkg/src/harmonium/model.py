"""Physics layer of the hybrid harmonic model.

Two fermionic species of N particles each, confined in a common harmonic
trap, with a harmonic coupling of dimensionless strength Lambda acting only
between particles of different species.  All quantities are dimensionless
(hbar = m = omega = 1); energies are reported in units of hbar*omega.

Coordinates x_1..x_N belong to species a, x_{N+1}..x_{2N} to species b.
The two effective frequencies are kappa1 = sqrt(1 - N*Lambda) for the 2N-2
relative modes and kappa2 = sqrt(1 - 2*N*Lambda) for the inter-species
center-of-mass mode; a bound ground state requires 2*N*Lambda < 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gausspoly import (
    GaussianKernel,
    GaussPolyFunction,
    SparsePolynomial,
    vandermonde,
)


class NoBoundStateError(ValueError):
    """The coupling exceeds the confinement: the system has no bound state."""


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters of an N-pair system.

    kappa1 and kappa2 are derived; use make_params to construct.
    """

    n_pairs: int
    coupling: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be at least 1")
        if not 2 * self.n_pairs * self.coupling < 1.0:
            raise NoBoundStateError(
                f"2*N*Lambda = {2 * self.n_pairs * self.coupling:g} >= 1: "
                "the system does not have a bound state"
            )

    @property
    def n_coupling(self) -> float:
        """The extensive parameter N*Lambda."""
        return self.n_pairs * self.coupling


def make_params(n_pairs: int, coupling: float) -> ModelParams:
    """Build ModelParams, raising NoBoundStateError when 2*N*Lambda >= 1."""
    n_pairs = int(n_pairs)
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    coupling = float(coupling)
    if not 2 * n_pairs * coupling < 1.0:
        raise NoBoundStateError(
            f"2*N*Lambda = {2 * n_pairs * coupling:g} >= 1: "
            "the system does not have a bound state"
        )
    return ModelParams(
        n_pairs=n_pairs,
        coupling=coupling,
        kappa1=math.sqrt(1.0 - n_pairs * coupling),
        kappa2=math.sqrt(1.0 - 2.0 * n_pairs * coupling),
    )


def lambda_star(n_pairs: int) -> float:
    """Near-critical repulsive preset Lambda* = 1/(2N) - 1e-6."""
    return 1.0 / (2 * n_pairs) - 1e-6


# ---------------------------------------------------------------------------
# Normal modes
# ---------------------------------------------------------------------------


def center_of_mass_transform(n: int) -> np.ndarray:
    """Orthogonal n x n matrix mapping coordinates r to (z_1, z_2..z_n).

    Row 0 is the center of mass z_1 = sum(r)/sqrt(n); row i-1 (i = 2..n) is
    z_i = [(i-1) r_i - sum_{j<i} r_j]/sqrt(i(i-1)).
    """
    if n < 1:
        raise ValueError("need at least one coordinate")
    u = np.zeros((n, n))
    u[0, :] = 1.0 / math.sqrt(n)
    for i in range(2, n + 1):
        norm = 1.0 / math.sqrt(i * (i - 1))
        u[i - 1, : i - 1] = -norm
        u[i - 1, i - 1] = (i - 1) * norm
    return u


@dataclass(frozen=True)
class NormalModeBasis:
    """Rows of `vectors` are the 2N orthonormal normal-mode vectors.

    Row 0 is the total center of mass, rows 1..N-1 are species-a relative
    modes (zero on b coordinates), rows N..2N-2 the species-b copies, and
    row 2N-1 is the inter-species center-of-mass difference.
    """

    n_pairs: int
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors.flags.writeable = False


def normal_mode_basis(n_pairs: int) -> NormalModeBasis:
    """Orthogonal basis adapted to the coupling matrix of the pair Hamiltonian."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    n = n_pairs
    dim = 2 * n
    basis = np.zeros((dim, dim))
    basis[0, :] = 1.0 / math.sqrt(dim)
    basis[dim - 1, :n] = 1.0 / math.sqrt(dim)
    basis[dim - 1, n:] = -1.0 / math.sqrt(dim)
    u = center_of_mass_transform(n)
    for i in range(1, n):
        basis[i, :n] = u[i]
        basis[n - 1 + i, n:] = u[i]
    return NormalModeBasis(n_pairs=n_pairs, vectors=basis)


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------

QuantumNumbers = Sequence[int]  # 2N normal-mode excitations


def energy_level(params: ModelParams, excitations: QuantumNumbers) -> float:
    """Energy n1 + 1/2 + kappa1 (n2+..+n_{2N-1} + N-1) + kappa2 (n_{2N}+1/2)."""
    n = params.n_pairs
    exc = list(excitations)
    if len(exc) != 2 * n:
        raise ValueError(f"expected {2 * n} quantum numbers, got {len(exc)}")
    if any((not isinstance(v, (int, np.integer))) or v < 0 for v in exc):
        raise ValueError("quantum numbers must be non-negative integers")
    middle = sum(exc[1 : 2 * n - 1])
    return exc[0] + 0.5 + params.kappa1 * (middle + n - 1) + params.kappa2 * (exc[-1] + 0.5)


def ground_state_excitations(n_pairs: int) -> tuple[int, ...]:
    """A minimal-energy excitation assignment compatible with antisymmetry.

    Each species' N-1 relative modes carry distinct excitations summing to
    N(N-1)/2; the two center-of-mass modes are unexcited.
    """
    relative = tuple(range(1, n_pairs))
    return (0,) + relative + relative + (0,)


def ground_energy(params: ModelParams) -> float:
    """E0 = kappa1 (N^2 - 1) + (kappa2 + 1)/2 in units of hbar*omega."""
    n = params.n_pairs
    return params.kappa1 * (n * n - 1) + 0.5 * (params.kappa2 + 1.0)


# ---------------------------------------------------------------------------
# Ground-state wave functions
# ---------------------------------------------------------------------------


def _fermi_sea_norm_factor(n: int) -> float:
    """2^{N(N-1)/4} [N! pi^{N/2} prod_k k!]^{-1/2}, normalizing the
    non-interacting N-fermion ground state."""
    log_prod_fact = sum(math.lgamma(k + 1) for k in range(n))
    log_val = (
        n * (n - 1) / 4.0 * math.log(2.0)
        - 0.5 * (math.lgamma(n + 1) + n / 2.0 * math.log(math.pi) + log_prod_fact)
    )
    return math.exp(log_val)


def normalization_constant(params: ModelParams) -> float:
    """Prefactor of the N-pair ground state:
    kappa2^{1/4} kappa1^{(N^2-1)/2} 2^{N(N-1)/2} [N! pi^{N/2} prod_k k!]^{-1}."""
    n = params.n_pairs
    return (
        params.kappa2**0.25
        * params.kappa1 ** ((n * n - 1) / 2.0)
        * _fermi_sea_norm_factor(n) ** 2
    )


def species_labels(n_pairs: int) -> tuple[str, ...]:
    """Coordinate labels a1..aN, b1..bN."""
    return tuple(f"a{i + 1}" for i in range(n_pairs)) + tuple(
        f"b{i + 1}" for i in range(n_pairs)
    )


def ground_state(params: ModelParams) -> GaussPolyFunction:
    """Normalized N-pair ground state over 2N labelled coordinates.

    Gaussian part: total-center-of-mass mode at unit frequency, the
    inter-species center-of-mass difference at kappa2, and all pair
    differences at kappa1.  Polynomial part: one Vandermonde factor per
    species, enforcing antisymmetry under same-species exchange.
    """
    n = params.n_pairs
    dim = 2 * n
    basis = normal_mode_basis(n).vectors
    freqs = np.concatenate(([1.0], np.full(dim - 2, params.kappa1), [params.kappa2]))
    a_matrix = basis.T @ np.diag(freqs) @ basis
    kernel = GaussianKernel(a_matrix, c=math.log(normalization_constant(params)))
    poly = vandermonde(dim, range(n)) * vandermonde(dim, range(n, dim))
    return GaussPolyFunction(kernel, poly, species_labels(n))


def single_species_normalization(n_fermions: int, coupling: float) -> float:
    """kappa1^{(N^2-1)/4} 2^{N(N-1)/4} [N! pi^{N/2} prod_k k!]^{-1/2}."""
    if not n_fermions * coupling < 1.0:
        raise NoBoundStateError(
            f"N*Lambda = {n_fermions * coupling:g} >= 1: no bound state for a "
            "single interacting species"
        )
    kappa1 = math.sqrt(1.0 - n_fermions * coupling)
    n = n_fermions
    return kappa1 ** ((n * n - 1) / 4.0) * _fermi_sea_norm_factor(n)


def single_species_ground_state(
    n_fermions: int, coupling: float, labels: Sequence[str] | None = None
) -> GaussPolyFunction:
    """Ground state of N identical fermions with all-to-all harmonic coupling.

    Gaussian widths: center of mass at unit frequency, relative modes at
    sqrt(1 - N*Lambda); one Vandermonde factor carries the antisymmetry.
    Requires N*Lambda < 1.
    """
    n = int(n_fermions)
    if n < 1:
        raise ValueError("need at least one fermion")
    norm = single_species_normalization(n, coupling)
    kappa1 = math.sqrt(1.0 - n * coupling)
    u = center_of_mass_transform(n)
    freqs = np.concatenate(([1.0], np.full(n - 1, kappa1)))
    a_matrix = u.T @ np.diag(freqs) @ u
    kernel = GaussianKernel(a_matrix, c=math.log(norm))
    if labels is None:
        labels = tuple(f"a{i + 1}" for i in range(n))
    return GaussPolyFunction(kernel, vandermonde(n, range(n)), labels)


def ground_state_factorized(params: ModelParams) -> GaussPolyFunction:
    """Equivalent form of the ground state: kappa2^{1/4} times a product of
    two single-species states times a Gaussian in the distance between the
    species centers of mass.  Pointwise equal to ground_state (used as an
    internal consistency check)."""
    n = params.n_pairs
    dim = 2 * n
    labels = species_labels(n)
    psi_a = single_species_ground_state(n, params.coupling, labels[:n]).embed(labels)
    psi_b = single_species_ground_state(n, params.coupling, labels[n:]).embed(labels)
    # (R_a - R_b)^2 = (g.x)^2 with g = (1/N,..,1/N,-1/N,..,-1/N)
    g = np.concatenate((np.full(n, 1.0 / n), np.full(n, -1.0 / n)))
    a_extra = 0.5 * n * (params.kappa2 - 1.0) * np.outer(g, g)
    cm_factor = GaussPolyFunction(
        GaussianKernel(a_extra, c=0.25 * math.log(params.kappa2)),
        SparsePolynomial.constant(dim, 1),
        labels,
    )
    return psi_a * psi_b * cm_factor


# ---------------------------------------------------------------------------
# Volume fraction estimate
# ---------------------------------------------------------------------------

VOLUME_REGIMES = ("auto", "attractive", "non-interacting", "repulsive")


def volume_fraction(params: ModelParams, regime: str = "auto") -> float:
    """Ratio of the occupied volume to the trap volume, per asymptotic regime.

    The effective-frequency identification is asymptotic: omega_eff =
    omega * sqrt(N|Lambda|) deep in the attractive regime, omega/sqrt(2)
    at the repulsive boundary, and omega for the free system.  There is no
    formula interpolating between regimes, so the regime is selected
    explicitly ("auto" picks it from the sign of the coupling).
    """
    if regime not in VOLUME_REGIMES:
        raise ValueError(f"regime must be one of {VOLUME_REGIMES}")
    if regime == "auto":
        if params.coupling < 0:
            regime = "attractive"
        elif params.coupling == 0:
            regime = "non-interacting"
        else:
            regime = "repulsive"
    if regime == "non-interacting":
        return 1.0
    if regime == "repulsive":
        return math.sqrt(2.0)
    if params.coupling >= 0:
        raise ValueError("attractive regime requires a negative coupling")
    return 1.0 / math.sqrt(-params.n_coupling)
