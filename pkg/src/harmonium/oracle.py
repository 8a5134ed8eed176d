"""Independent verification layer: quadrature, Monte Carlo, finite
differences and permutation fuzzing.

Every closed form in the package (normalization constants, ground-state
energy, species purity, Gaussian and corrected widths) is reproducible here
at small N by a method that does not share code with the analytic path:
tensor Gauss-Hermite or Monte Carlo integration for normalization and
purities, five-point finite-difference stencils for the Schroedinger
residual, dense grids for the width moments, and random permutations for
the symmetry requirements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _scipy_integrate

from . import correlations, entanglement, model, rdm
from .gausspoly import GaussPolyFunction
from .model import ModelParams

DEFAULT_SEED = 0x5EED
MAX_TENSOR_DIM = 8

# Tolerances used by run_verification; keyed by check family.  Kept in a
# module dict so a harness can tighten or corrupt them deliberately.
DEFAULT_TOLERANCES = {
    "normalization": 1e-8,
    "ground_energy": 1e-4,
    "schrodinger_residual": 1e-5,
    "purity_species": 1e-8,
    "purity_quadrature": 1e-7,
    "gaussian_widths": 1e-6,
    "corrected_widths": 1e-6,
    "epsilon_zero": 1e-8,
    "slater_identity": 1e-8,
    "appendix_b_normalization": 1e-8,
    "odlro_rate": 1e-6,
    "mc_sigmas": 3.0,
    "permutation_fuzz": 0.0,
}


@dataclass(frozen=True)
class QuadratureSpec:
    """Scheme plus resolution knobs; deterministic for a fixed seed.

    points: nodes per axis (tensor scheme) or total samples (Monte Carlo).
    range_scale: node/sample spread in multiples of the Gaussian width.
    """

    scheme: str = "gauss-hermite"
    points: int = 24
    range_scale: float = 1.0
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.scheme not in ("gauss-hermite", "adaptive", "monte-carlo"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.points < 2:
            raise ValueError("need at least two nodes/samples")


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    dim: int,
    spec: QuadratureSpec,
    widths: float | Sequence[float] = 1.0,
) -> tuple[float, float]:
    """Numeric integral of f over R^dim with an error estimate.

    f must accept an (n, dim) array and return n values.  widths sets the
    coordinate scaling (a scalar or one value per axis); the spread used is
    widths * spec.range_scale.  Tensor schemes are capped at dim <= 8.
    Error estimates: node-count difference (tensor), standard error of the
    mean (Monte Carlo), library estimate (adaptive).
    """
    w = np.broadcast_to(np.asarray(widths, dtype=float), (dim,)) * spec.range_scale
    if spec.scheme == "gauss-hermite":
        if dim > MAX_TENSOR_DIM:
            raise ValueError(f"tensor quadrature capped at dim {MAX_TENSOR_DIM}")
        value = _tensor_gh(f, dim, spec.points, w)
        coarse = _tensor_gh(f, dim, max(2, spec.points - 4), w)
        return value, abs(value - coarse)
    if spec.scheme == "adaptive":
        ranges = [(-8.0 * wi, 8.0 * wi) for wi in w]
        value, err = _scipy_integrate.nquad(
            lambda *xs: float(f(np.array([xs], dtype=float))[0]),
            ranges,
            opts={"epsabs": 1e-12, "epsrel": 1e-12},
        )
        return value, err
    return _plain_mc(f, dim, spec, w)


def _tensor_gh(f, dim: int, nodes: int, w: np.ndarray) -> float:
    """Tensor Gauss-Hermite with per-axis scaling substitution x = w t."""
    t, weights = np.polynomial.hermite.hermgauss(nodes)
    log_w = np.log(weights) + t * t  # compensates the e^{-t^2} weight
    total = 0.0
    # chunk over leading axes to bound memory
    lead = max(0, dim - 3)
    tail_grids = np.meshgrid(*([t] * (dim - lead)), indexing="ij")
    tail_pts = np.column_stack([g.ravel() for g in tail_grids])
    tail_logw = sum(
        np.meshgrid(*([log_w] * (dim - lead)), indexing="ij")[i].ravel()
        for i in range(dim - lead)
    )
    if lead == 0:
        pts = tail_pts * w
        vals = f(pts)
        return float(np.sum(vals * np.exp(tail_logw)) * np.prod(w))
    for idx in np.ndindex(*(nodes,) * lead):
        head = t[list(idx)]
        head_logw = float(np.sum(log_w[list(idx)]))
        pts = np.empty((tail_pts.shape[0], dim))
        pts[:, :lead] = head
        pts[:, lead:] = tail_pts
        pts *= w
        vals = f(pts)
        total += float(np.sum(vals * np.exp(tail_logw + head_logw)))
    return total * float(np.prod(w))


def _plain_mc(f, dim: int, spec: QuadratureSpec, w: np.ndarray) -> tuple[float, float]:
    rng = np.random.default_rng(spec.seed)
    total = 0.0
    total_sq = 0.0
    n_done = 0
    log_norm = float(np.sum(np.log(w))) + dim / 2.0 * math.log(2.0 * math.pi)
    while n_done < spec.points:
        chunk = min(1 << 19, spec.points - n_done)
        x = rng.standard_normal((chunk, dim)) * w
        quad = np.sum((x / w) ** 2, axis=1)
        weights = f(x) * np.exp(0.5 * quad + log_norm)
        total += float(np.sum(weights))
        total_sq += float(np.sum(weights**2))
        n_done += chunk
    mean = total / n_done
    var = max(total_sq / n_done - mean * mean, 0.0)
    return mean, math.sqrt(var / n_done)


def integrate_gausspoly(gpf: GaussPolyFunction, spec: QuadratureSpec) -> tuple[float, float]:
    """Integral of a polynomial-times-Gaussian via its own kernel geometry.

    The kernel sets the node placement (whitening by the inverse of the
    quadratic form), so strongly anisotropic states are resolved; tensor
    Gauss-Hermite is then exact for polynomial degree below the node count.
    Monte Carlo importance-samples the kernel Gaussian with the polynomial
    as weight.
    """
    A, b, c = gpf.kernel.A, gpf.kernel.b, gpf.kernel.c
    dim = gpf.num_vars
    if dim == 0:
        return gpf.constant_value(), 0.0
    sigma = np.linalg.inv(A)
    mu = sigma @ b
    chol = np.linalg.cholesky(sigma)
    log_prefactor = c + 0.5 * float(b @ mu)
    _, logdet = np.linalg.slogdet(chol)

    if spec.scheme == "gauss-hermite":
        if dim > MAX_TENSOR_DIM:
            raise ValueError(f"tensor quadrature capped at dim {MAX_TENSOR_DIM}")
        value = _whitened_gh(gpf.poly.evaluate_many, mu, chol, dim, spec.points)
        coarse = _whitened_gh(gpf.poly.evaluate_many, mu, chol, dim, max(2, spec.points - 4))
        scale = math.exp(log_prefactor + logdet + dim / 2.0 * math.log(2.0))
        err_floor = abs(value * scale) * 1e-14
        return value * scale, max(abs(value - coarse) * scale, err_floor)

    if spec.scheme == "monte-carlo":
        rng = np.random.default_rng(spec.seed)
        total = 0.0
        total_sq = 0.0
        n_done = 0
        while n_done < spec.points:
            chunk = min(1 << 19, spec.points - n_done)
            x = mu + rng.standard_normal((chunk, dim)) @ chol.T
            vals = gpf.poly.evaluate_many(x)
            total += float(np.sum(vals))
            total_sq += float(np.sum(vals**2))
            n_done += chunk
        mean = total / n_done
        var = max(total_sq / n_done - mean * mean, 0.0)
        scale = math.exp(log_prefactor + logdet + dim / 2.0 * math.log(2.0 * math.pi))
        return mean * scale, math.sqrt(var / n_done) * scale

    # adaptive: fall back to the generic integrator with kernel widths
    widths = np.sqrt(np.diag(sigma))
    return integrate(gpf.evaluate_many, dim, spec, widths)


def _whitened_gh(poly_many, mu, chol, dim: int, nodes: int) -> float:
    """Sum of the polynomial over whitened nodes x = mu + sqrt(2) L t; the
    caller supplies the Gaussian partition factor."""
    t, weights = np.polynomial.hermite.hermgauss(nodes)
    root2 = math.sqrt(2.0)
    lead = max(0, dim - 3)
    tail_grids = np.meshgrid(*([t] * (dim - lead)), indexing="ij")
    tail_pts = np.column_stack([g.ravel() for g in tail_grids])
    tail_w = np.ones(tail_pts.shape[0])
    for g in np.meshgrid(*([weights] * (dim - lead)), indexing="ij"):
        tail_w = tail_w * g.ravel()
    if lead == 0:
        x = mu + root2 * tail_pts @ chol.T
        return float(np.sum(poly_many(x) * tail_w))
    total = 0.0
    for idx in np.ndindex(*(nodes,) * lead):
        head_w = float(np.prod(weights[list(idx)]))
        full = np.empty((tail_pts.shape[0], dim))
        full[:, :lead] = t[list(idx)]
        full[:, lead:] = tail_pts
        x = mu + root2 * full @ chol.T
        total += float(np.sum(poly_many(x) * tail_w)) * head_w
    return total


# ---------------------------------------------------------------------------
# Hamiltonian checks
# ---------------------------------------------------------------------------


def potential_energy(params: ModelParams, points: np.ndarray) -> np.ndarray:
    """Trap plus inter-species coupling at each configuration."""
    n = params.n_pairs
    trap = 0.5 * np.sum(points**2, axis=1)
    xa = points[:, :n]
    xb = points[:, n:]
    diff_sq = (xa[:, :, None] - xb[:, None, :]) ** 2
    return trap - 0.5 * params.coupling * np.sum(diff_sq, axis=(1, 2))


def _laplacian_stencil(psi: GaussPolyFunction, points: np.ndarray, step: float) -> np.ndarray:
    """Five-point central second derivative summed over all coordinates."""
    n_pts, dim = points.shape
    offsets = np.array([-2.0, -1.0, 1.0, 2.0]) * step
    coeffs = np.array([-1.0, 16.0, 16.0, -1.0]) / (12.0 * step * step)
    center_coeff = -30.0 / (12.0 * step * step)
    center_vals = psi.evaluate_many(points)
    lap = dim * center_coeff * center_vals
    for axis in range(dim):
        shifted = np.repeat(points[None, :, :], 4, axis=0)
        shifted[:, :, axis] += offsets[:, None]
        vals = psi.evaluate_many(shifted.reshape(-1, dim)).reshape(4, n_pts)
        lap = lap + coeffs @ vals
    return lap


@dataclass(frozen=True)
class ResidualReport:
    max_relative_residual: float
    evaluated: int
    skipped: int


def schrodinger_residual(
    params: ModelParams,
    n_points: int = 50,
    seed: int = DEFAULT_SEED,
    step: float = 1e-3,
) -> ResidualReport:
    """Max relative residual |H psi - E0 psi| / |E0 psi| at random points.

    Points are drawn from the state's own Gaussian; points too close to a
    node of the antisymmetry factor (tiny |psi|) are skipped and counted.
    """
    psi = model.ground_state(params)
    e0 = model.ground_energy(params)
    dim = 2 * params.n_pairs
    rng = np.random.default_rng(seed)
    sigma = np.linalg.inv(psi.kernel.A)
    chol = np.linalg.cholesky(sigma)
    # sample a surplus so that n_points survive the near-node skip
    points = rng.standard_normal((3 * n_points, dim)) @ chol.T
    psi_vals = psi.evaluate_many(points)
    scale = np.abs(psi_vals).max()
    keep = np.abs(psi_vals) > 1e-3 * scale
    skipped = int((~keep[:n_points]).sum())
    pts = points[keep][:n_points]
    vals = psi_vals[keep][:n_points]
    lap = _laplacian_stencil(psi, pts, step)
    h_psi = -0.5 * lap + potential_energy(params, pts) * vals
    residual = np.abs(h_psi - e0 * vals) / np.abs(e0 * vals)
    return ResidualReport(
        max_relative_residual=float(residual.max()) if len(residual) else 0.0,
        evaluated=len(pts),
        skipped=skipped,
    )


def hamiltonian_expectation(
    params: ModelParams, nodes: int = 24, step: float = 1e-3
) -> float:
    """<psi|H|psi> by finite-difference H psi under whitened quadrature.

    Node placement whitens with the full covariance of psi^2; the
    near-critical states are strongly anisotropic along rotated axes, so
    per-axis scaling would under-resolve them.
    """
    psi = model.ground_state(params)
    dim = 2 * params.n_pairs

    def integrand(points: np.ndarray) -> np.ndarray:
        vals = psi.evaluate_many(points)
        lap = _laplacian_stencil(psi, points, step)
        return vals * (-0.5 * lap + potential_energy(params, points) * vals)

    sq = psi * psi
    return _whitened_generic(integrand, sq.kernel.A, dim, nodes)


def _whitened_generic(f, a_matrix: np.ndarray, dim: int, nodes: int) -> float:
    """Integral of a generic integrand containing exp(-x'Ax/2): nodes at
    x = sqrt(2) L t with LL' = A^{-1}, weights compensated by e^{t^2}."""
    if dim > MAX_TENSOR_DIM:
        raise ValueError(f"tensor quadrature capped at dim {MAX_TENSOR_DIM}")
    chol = np.linalg.cholesky(np.linalg.inv(a_matrix))
    t, weights = np.polynomial.hermite.hermgauss(nodes)
    log_w = np.log(weights) + t * t
    root2 = math.sqrt(2.0)
    _, logdet = np.linalg.slogdet(chol)
    scale = math.exp(logdet + dim / 2.0 * math.log(2.0))
    lead = max(0, dim - 3)
    tail_grids = np.meshgrid(*([t] * (dim - lead)), indexing="ij")
    tail_pts = np.column_stack([g.ravel() for g in tail_grids])
    tail_logw = sum(
        np.meshgrid(*([log_w] * (dim - lead)), indexing="ij")[i].ravel()
        for i in range(dim - lead)
    )
    if lead == 0:
        x = root2 * tail_pts @ chol.T
        return float(np.sum(f(x) * np.exp(tail_logw))) * scale
    total = 0.0
    for idx in np.ndindex(*(nodes,) * lead):
        head_logw = float(np.sum(log_w[list(idx)]))
        full = np.empty((tail_pts.shape[0], dim))
        full[:, :lead] = t[list(idx)]
        full[:, lead:] = tail_pts
        x = root2 * full @ chol.T
        total += float(np.sum(f(x) * np.exp(tail_logw + head_logw)))
    return total * scale


# ---------------------------------------------------------------------------
# Permutation fuzzing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FuzzReport:
    trials: int
    sign_flip_failures: int
    species_swap_failures: int
    cross_swap_changed: int
    skipped_near_nodes: int

    @property
    def passed(self) -> bool:
        return self.sign_flip_failures == 0 and self.species_swap_failures == 0


def permutation_fuzz(
    params: ModelParams, trials: int = 1000, seed: int = DEFAULT_SEED
) -> FuzzReport:
    """Random same-species transpositions must flip the sign of psi, the
    full species swap must leave it invariant; cross-species single swaps
    generally change the value (logged, not asserted)."""
    psi = model.ground_state(params)
    n = params.n_pairs
    dim = 2 * n
    rng = np.random.default_rng(seed)
    sigma = np.linalg.inv(psi.kernel.A)
    chol = np.linalg.cholesky(sigma)
    points = rng.standard_normal((trials, dim)) @ chol.T
    base = psi.evaluate_many(points)
    scale = np.abs(base).max()

    sign_failures = 0
    swap_failures = 0
    cross_changed = 0
    skipped = 0
    # Mismatch bound: evaluation roundoff is set by the overall amplitude
    # scale, not by |psi| at the point, so the bound is scale-anchored.
    bound = 1e-11 * scale
    for trial in range(trials):
        x = points[trial]
        value = base[trial]
        if abs(value) < 1e-6 * scale:
            skipped += 1
            continue
        if n >= 2:
            species = rng.integers(0, 2)
            i, j = rng.choice(n, size=2, replace=False) + species * n
            swapped = x.copy()
            swapped[[i, j]] = swapped[[j, i]]
            if abs(psi.evaluate(swapped) + value) > bound:
                sign_failures += 1
        full_swap = np.concatenate([x[n:], x[:n]])
        if abs(psi.evaluate(full_swap) - value) > bound:
            swap_failures += 1
        i = rng.integers(0, n)
        j = rng.integers(n, dim)
        crossed = x.copy()
        crossed[[i, j]] = crossed[[j, i]]
        if abs(psi.evaluate(crossed) - value) > 1e-9 * abs(value):
            cross_changed += 1
    return FuzzReport(
        trials=trials,
        sign_flip_failures=sign_failures,
        species_swap_failures=swap_failures,
        cross_swap_changed=cross_changed,
        skipped_near_nodes=skipped,
    )


# ---------------------------------------------------------------------------
# Verification suite
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    quantity: str
    closed_form: float
    oracle_value: float
    abs_err: float
    rel_err: float
    spec: dict
    tolerance: float
    passed: bool

    def to_json_obj(self) -> dict:
        return asdict(self)


def _make_check(
    quantity: str,
    closed_form: float,
    oracle_value: float,
    tolerance: float,
    spec: dict,
    relative: bool = False,
) -> CheckResult:
    abs_err = abs(closed_form - oracle_value)
    denom = max(abs(closed_form), 1e-300)
    rel_err = abs_err / denom
    err = rel_err if relative else abs_err
    return CheckResult(
        quantity=quantity,
        closed_form=float(closed_form),
        oracle_value=float(oracle_value),
        abs_err=float(abs_err),
        rel_err=float(rel_err),
        spec=spec,
        tolerance=float(tolerance),
        passed=bool(err <= tolerance),
    )


def _verification_couplings(n: int) -> list[float]:
    return [-1.0, -0.1, 0.1 / (2 * n), model.lambda_star(n)]


def run_verification(
    n_max: int = 2,
    seed: int = DEFAULT_SEED,
    mc_samples: int = 200_000,
    tolerances: dict | None = None,
) -> list[CheckResult]:
    """Cross-check every closed form against an independent numeric oracle.

    Returns one CheckResult per comparison; all pass on a healthy build.
    """
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        tol.update(tolerances)
    checks: list[CheckResult] = []
    gh = QuadratureSpec(scheme="gauss-hermite", points=24, seed=seed)
    mc = QuadratureSpec(scheme="monte-carlo", points=mc_samples, seed=seed)

    for n in range(1, n_max + 1):
        for lam in _verification_couplings(n):
            params = model.make_params(n, lam)
            tag = {"n": n, "lambda": lam}

            psi = model.ground_state(params)
            norm, _ = integrate_gausspoly(psi * psi, gh)
            checks.append(
                _make_check(
                    "normalization", 1.0, norm, tol["normalization"],
                    {**tag, "scheme": "gauss-hermite", "nodes": gh.points},
                )
            )

            norm_mc, se = integrate_gausspoly(psi * psi, mc)
            # zero-variance weights (constant polynomial) make the MC exact;
            # floor the comparison scale at float precision of the value
            se_floor = max(se, 1e-12 * abs(norm))
            sigmas = abs(norm_mc - norm) / se_floor
            checks.append(
                _make_check(
                    "mc_vs_tensor_normalization", 0.0, sigmas, tol["mc_sigmas"],
                    {**tag, "scheme": "monte-carlo", "samples": mc_samples,
                     "seed": seed, "standard_error": se},
                )
            )

            energy = hamiltonian_expectation(params, nodes=18)
            checks.append(
                _make_check(
                    "ground_energy", model.ground_energy(params), energy,
                    tol["ground_energy"], {**tag, "method": "fd+gauss-hermite"},
                    relative=True,
                )
            )

            report = schrodinger_residual(params, n_points=50, seed=seed)
            checks.append(
                _make_check(
                    "schrodinger_residual", 0.0, report.max_relative_residual,
                    tol["schrodinger_residual"],
                    {**tag, "points": report.evaluated, "skipped": report.skipped},
                )
            )

            pur = rdm.purity(rdm.species_rdm(params))
            checks.append(
                _make_check(
                    "purity_species_pipeline", rdm.purity_species_closed(params),
                    pur, tol["purity_species"], tag,
                )
            )
            rho_sq = rdm.species_rdm(params).func
            pur_quad, _ = integrate_gausspoly(rho_sq * rho_sq, gh)
            checks.append(
                _make_check(
                    "purity_species_quadrature", rdm.purity_species_closed(params),
                    pur_quad, tol["purity_quadrature"],
                    {**tag, "scheme": "gauss-hermite"},
                )
            )

            checks.extend(_width_checks(params, tol, tag))

            fuzz = permutation_fuzz(params, trials=500, seed=seed)
            checks.append(
                _make_check(
                    "permutation_fuzz",
                    0.0,
                    float(fuzz.sign_flip_failures + fuzz.species_swap_failures),
                    tol["permutation_fuzz"],
                    {**tag, "trials": fuzz.trials, "skipped": fuzz.skipped_near_nodes},
                )
            )

            if n >= 2:
                psi_a = model.single_species_ground_state(n, lam)
                norm_a, _ = integrate_gausspoly(psi_a * psi_a, gh)
                checks.append(
                    _make_check(
                        "appendix_b_normalization", 1.0, norm_a,
                        tol["appendix_b_normalization"], tag,
                    )
                )

        free = model.make_params(n, 0.0)
        tag = {"n": n, "lambda": 0.0}
        for m_a in range(n + 1):
            for m_b in range(n + 1):
                if (m_a, m_b) in {(0, 0), (n, n)}:
                    continue
                bip = rdm.Bipartition(m_a, m_b)
                pur = rdm.purity(
                    rdm.reduce_density_matrix(model.ground_state(free), bip, free)
                )
                expected = entanglement.slater_purity_bound(n, m_a) * \
                    entanglement.slater_purity_bound(n, m_b)
                checks.append(
                    _make_check(
                        f"slater_identity_({m_a},{m_b})", expected, pur,
                        tol["slater_identity"], tag,
                    )
                )
                result = entanglement.epsilon_from_purity(free, bip, pur)
                checks.append(
                    _make_check(
                        f"epsilon_zero_({m_a},{m_b})", 0.0, result.epsilon,
                        tol["epsilon_zero"], tag,
                    )
                )
    return checks


def _width_checks(params: ModelParams, tol: dict, tag: dict) -> list[CheckResult]:
    checks = []
    n = params.n_pairs

    # Gaussian widths vs decay rates of the constructed kernels
    rho_a = rdm.single_particle_rdm(params)
    for name, direction, closed in zip(
        ("sigma_plus", "sigma_minus"),
        (rdm.SINGLE_DIRECTIONS["plus"], rdm.SINGLE_DIRECTIONS["minus"]),
        rdm.gaussian_widths_single(params),
    ):
        extracted = rdm.gaussian_decay_width(rho_a, direction)
        checks.append(
            _make_check(
                f"gaussian_width_{name}", closed, extracted,
                tol["gaussian_widths"], tag, relative=True,
            )
        )
    rho_ab = rdm.pair_ab_rdm(params)
    for (name, direction), closed in zip(
        rdm.PAIR_AB_DIRECTIONS.items(), rdm.gaussian_widths_pair_ab(params)
    ):
        extracted = rdm.gaussian_decay_width(rho_ab, direction)
        checks.append(
            _make_check(
                f"gaussian_width_{name}", closed, extracted,
                tol["gaussian_widths"], tag, relative=True,
            )
        )
    if n >= 2:
        rho_aa = rdm.pair_aa_rdm(params)
        pair_dirs = {
            "sigma_p": (1.0, 1.0, 1.0, 1.0),
            "sigma_m": (1.0, 1.0, -1.0, -1.0),
        }
        for (name, direction), closed in zip(
            pair_dirs.items(), rdm.gaussian_widths_pair_aa(params)
        ):
            extracted = rdm.gaussian_decay_width(rho_aa, direction)
            checks.append(
                _make_check(
                    f"gaussian_width_{name}", closed, extracted,
                    tol["gaussian_widths"], tag, relative=True,
                )
            )

    # Corrected widths vs dense-grid quadrature
    sig_d, sig_ad = correlations.corrected_width_single(params)
    grid_d = _grid_second_moment_1d(rho_a.diagonal())
    checks.append(
        _make_check(
            "corrected_width_single_d", sig_d, grid_d,
            tol["corrected_widths"], tag, relative=True,
        )
    )
    grid_ad = _grid_farthest_extremum(rho_a.func, rdm.gaussian_widths_single(params)[1])
    checks.append(
        _make_check(
            "corrected_width_single_ad", sig_ad, grid_ad,
            tol["corrected_widths"], {**tag, "note": "absolute for zero targets"},
            relative=bool(sig_ad > 1e-6),
        )
    )
    ab_d, ab_ad = correlations.corrected_width_pair_ab(params)
    grid_ab = _grid_pair_widths(rdm.pair_ab_rdm(params).diagonal())
    checks.append(
        _make_check(
            "corrected_width_ab_d", ab_d, grid_ab[0], tol["corrected_widths"],
            tag, relative=True,
        )
    )
    checks.append(
        _make_check(
            "corrected_width_ab_ad", ab_ad, grid_ab[1], tol["corrected_widths"],
            tag, relative=True,
        )
    )
    if n >= 2:
        aa_d, aa_ad = correlations.corrected_width_pair_aa(params)
        grid_aa = _grid_pair_widths(rdm.pair_aa_rdm(params).diagonal())
        checks.append(
            _make_check(
                "corrected_width_aa_d", aa_d, grid_aa[0], tol["corrected_widths"],
                tag, relative=True,
            )
        )
        checks.append(
            _make_check(
                "corrected_width_aa_ad", aa_ad, grid_aa[1], tol["corrected_widths"],
                tag, relative=True,
            )
        )

    # ODLRO coherence decay rate from log differences
    rate = correlations.odlro_decay_rate(params)
    measured = _odlro_rate_from_values(params)
    checks.append(
        _make_check(
            "odlro_rate", rate, measured, tol["odlro_rate"], tag, relative=True,
        )
    )
    return checks


def _grid_second_moment_1d(density: GaussPolyFunction, points: int = 60_001) -> float:
    width = float(np.max(np.abs(np.linalg.eigvalsh(density.kernel.A)) ** -0.5))
    xs = np.linspace(-10 * width, 10 * width, points)
    vals = density.evaluate_many(xs[:, None])
    norm = np.trapezoid(vals, xs)
    return math.sqrt(np.trapezoid(xs * xs * vals, xs) / norm)


def _grid_farthest_extremum(func: GaussPolyFunction, width: float, points: int = 100_001) -> float:
    """Location of the extremum of f(x, -x) farthest from the origin, by
    dense scan plus parabolic refinement."""
    xs = np.linspace(0.0, 10 * width, points)
    pts = np.column_stack([xs, -xs])
    vals = func.evaluate_many(pts)
    d = np.diff(vals)
    idx = np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0] + 1
    if len(idx) == 0:
        return 0.0
    i = int(idx.max())
    x0, x1, x2 = xs[i - 1], xs[i], xs[i + 1]
    y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
    denom = (y0 - 2 * y1 + y2)
    if denom == 0:
        return float(x1)
    return float(x1 + 0.5 * (y0 - y2) / denom * (x1 - x0))


def _grid_pair_widths(diag: GaussPolyFunction, points: int = 1501) -> tuple[float, float]:
    width = float(np.max(np.abs(np.linalg.eigvalsh(diag.kernel.A)) ** -0.5))
    xs = np.linspace(-9 * width, 9 * width, points)
    xa, xb = np.meshgrid(xs, xs, indexing="ij")
    pts = np.column_stack([xa.ravel(), xb.ravel()])
    vals = diag.evaluate_many(pts).reshape(points, points)
    h = xs[1] - xs[0]
    norm = np.sum(vals) * h * h
    plus = np.sum(((xa + xb) ** 2 / 2.0) * vals) * h * h
    minus = np.sum(((xa - xb) ** 2 / 2.0) * vals) * h * h
    return math.sqrt(plus / norm), math.sqrt(minus / norm)


def _odlro_rate_from_values(params: ModelParams) -> float:
    """Decay rate of rho_ab(x,x;x',x') in (x - x')^2 at fixed x + x',
    with the polynomial factor divided out."""
    rho = rdm.pair_ab_rdm(params)
    embed = np.array([[0.5], [0.5], [-0.5], [-0.5]])  # x = s/2, x' = -s/2
    coh = rho.func.compose_linear(embed, ("s",))
    s1, s2 = 0.5, 1.5
    g1, g2 = coh.evaluate([s1]), coh.evaluate([s2])
    p1, p2 = coh.poly.evaluate([s1]), coh.poly.evaluate([s2])
    return -(math.log(abs(g2 / p2)) - math.log(abs(g1 / p1))) / (s2 * s2 - s1 * s1)


def reports_to_json_obj(checks: list[CheckResult]) -> dict:
    return {
        "passed": all(c.passed for c in checks),
        "n_checks": len(checks),
        "n_failed": sum(not c.passed for c in checks),
        "checks": [c.to_json_obj() for c in checks],
    }
