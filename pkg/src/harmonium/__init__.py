"""Exactly solvable hybrid system of N pairs of harmonically interacting
two-species fermions: ground state, reduced density matrices, purities, a
hybrid entanglement measure and spatial-correlation diagnostics, backed by
an exact polynomial-times-Gaussian integration engine and an independent
numeric oracle."""

__version__ = "0.1.0"

from .gausspoly import (
    CapacityError,
    GaussianKernel,
    GaussPolyFunction,
    NonPositiveDefiniteError,
    SparsePolynomial,
    antisymmetrize,
    gaussian_even_moment,
    gaussian_shifted_moment,
    hermite,
    vandermonde,
)
from .model import (
    ModelParams,
    NoBoundStateError,
    NormalModeBasis,
    energy_level,
    ground_energy,
    ground_state,
    ground_state_factorized,
    lambda_star,
    make_params,
    normal_mode_basis,
    normalization_constant,
    single_species_ground_state,
    volume_fraction,
)
from .rdm import (
    Bipartition,
    ReducedDensityMatrix,
    gaussian_widths_pair_aa,
    gaussian_widths_pair_ab,
    gaussian_widths_single,
    purity,
    purity_species_closed,
    reduce_density_matrix,
)
from .entanglement import (
    EntanglementResult,
    epsilon,
    epsilon_a,
    epsilon_aa,
    epsilon_ab,
    epsilon_species,
    epsilon_species_closed,
    fermionic_entropy,
    linear_entropy,
    slater_purity_bound,
)
from .correlations import (
    WidthReport,
    coherence_width,
    corrected_width_pair_aa,
    corrected_width_pair_ab,
    corrected_width_single,
    joint_distribution_aa,
    joint_distribution_ab,
    odlro_check,
    odlro_decay_rate,
    rms_separation_exact,
    rms_separation_gaussian,
)

__all__ = [name for name in dir() if not name.startswith("_")]
