"""Command-line front end.

Subcommands: eval (single quantity at one parameter point), sweep (grids
over N and the coupling, CSV/JSON output), grid (two-coordinate maps of
density-matrix sections) and verify (the oracle suite).

Exit codes: 0 success, 1 internal or verification failure, 2 usage or
domain error (including the no-bound-state boundary 2*N*Lambda >= 1).
Output is byte-identical for identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import correlations, entanglement, model, oracle, rdm
from .model import ModelParams, NoBoundStateError

FLOAT_FMT = "{:.17e}"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def _fmt(value: float) -> str:
    return FLOAT_FMT.format(float(value))


# ---------------------------------------------------------------------------
# Quantity registry (scalar quantities usable in eval and sweep)
# ---------------------------------------------------------------------------


def _widths_single(params, index):
    return rdm.gaussian_widths_single(params)[index]


def _widths_ab(params, index):
    return rdm.gaussian_widths_pair_ab(params)[index]


def _widths_aa(params, index):
    return rdm.gaussian_widths_pair_aa(params)[index]


QUANTITIES = {
    "energy": model.ground_energy,
    "norm_const": model.normalization_constant,
    "volume_fraction": model.volume_fraction,
    "purity_species": rdm.purity_species_closed,
    "epsilon_species": entanglement.epsilon_species_closed,
    "epsilon_species_pipeline": entanglement.epsilon_species,
    "epsilon_a": entanglement.epsilon_a,
    "epsilon_ab": entanglement.epsilon_ab,
    "epsilon_aa": entanglement.epsilon_aa,
    "widths_single_plus": lambda p: _widths_single(p, 0),
    "widths_single_minus": lambda p: _widths_single(p, 1),
    "widths_ab_1": lambda p: _widths_ab(p, 0),
    "widths_ab_2": lambda p: _widths_ab(p, 1),
    "widths_ab_3": lambda p: _widths_ab(p, 2),
    "widths_ab_4": lambda p: _widths_ab(p, 3),
    "widths_aa_p": lambda p: _widths_aa(p, 0),
    "widths_aa_m": lambda p: _widths_aa(p, 1),
    "widths_single_d": lambda p: correlations.corrected_width_single(p)[0],
    "widths_single_ad": lambda p: correlations.corrected_width_single(p)[1],
    "widths_ab_d": lambda p: correlations.corrected_width_pair_ab(p)[0],
    "widths_ab_ad": lambda p: correlations.corrected_width_pair_ab(p)[1],
    "widths_aa_d": lambda p: correlations.corrected_width_pair_aa(p)[0],
    "widths_aa_ad": lambda p: correlations.corrected_width_pair_aa(p)[1],
    "rms_separation": correlations.rms_separation_gaussian,
    "rms_separation_exact": correlations.rms_separation_exact,
    "coherence_width": correlations.coherence_width,
}

GRID_QUANTITIES = ("rho_a", "d_ab", "d_aa")


@dataclass(frozen=True)
class SweepSpec:
    n_values: tuple[int, ...]
    couplings: tuple[float, ...] | None  # explicit Lambda values
    n_couplings: tuple[float, ...] | None  # N*Lambda grid, converted per N
    quantities: tuple[str, ...]
    output: str | None
    fmt: str
    jobs: int

    def cells(self) -> list[tuple[int, float, str]]:
        cells = []
        for n in self.n_values:
            lams = self.couplings if self.couplings is not None else tuple(
                g / n for g in self.n_couplings
            )
            for lam in lams:
                if not 2 * n * lam < 1.0:
                    raise NoBoundStateError(
                        f"sweep cell N={n}, Lambda={lam:g}: 2*N*Lambda >= 1, "
                        "the system does not have a bound state"
                    )
                for q in self.quantities:
                    cells.append((n, lam, q))
        return cells


def _compute_cell(cell: tuple[int, float, str]) -> tuple[tuple[int, float, str], str, str]:
    n, lam, quantity = cell
    try:
        params = model.make_params(n, lam)
        value = QUANTITIES[quantity](params)
        return cell, _fmt(value), ""
    except Exception as exc:  # noqa: BLE001 - reported in the error column
        return cell, "", f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file mirroring the flags; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmonium",
        description="Harmonically interacting two-species fermion pairs: "
        "energies, reduced density matrices, entanglement and correlations.",
    )
    parser.add_argument("--version", action="version", version=f"harmonium {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate one quantity at one parameter point")
    p_eval.add_argument("--n", type=int, required=True, help="pairs per species")
    p_eval.add_argument("--lambda", dest="coupling", type=float, help="coupling strength")
    p_eval.add_argument("--nlambda", type=float, help="N*Lambda (converted to Lambda)")
    p_eval.add_argument("--quantity", required=True, choices=sorted(QUANTITIES))
    p_eval.add_argument("--format", choices=("text", "json", "csv"), default="text")
    _add_common(p_eval)

    p_sweep = sub.add_parser("sweep", help="tabulate quantities over N and coupling grids")
    p_sweep.add_argument("--n", required=True, help="comma list of pair counts, e.g. 2,3,4")
    p_sweep.add_argument("--lambda", dest="coupling", help="comma list of couplings")
    p_sweep.add_argument("--nlambda", help="N*Lambda grid start:stop:step or comma list")
    p_sweep.add_argument("--quantity", required=True, help="comma list of quantity names")
    p_sweep.add_argument("--output", help="output path (default stdout)")
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get("HARMONIUM_JOBS", "1")),
        help="parallel workers (default HARMONIUM_JOBS or 1)",
    )
    _add_common(p_sweep)

    p_grid = sub.add_parser("grid", help="two-coordinate map of a density-matrix section")
    p_grid.add_argument("--n", type=int, required=True)
    p_grid.add_argument("--lambda", dest="coupling", type=float, help="coupling strength")
    p_grid.add_argument("--nlambda", type=float, help="N*Lambda (converted to Lambda)")
    p_grid.add_argument("--quantity", required=True, choices=GRID_QUANTITIES)
    p_grid.add_argument("--range", dest="half_range", type=float,
                        help="half-width of the square grid (default 6 Gaussian widths)")
    p_grid.add_argument("--resolution", type=int, default=201)
    p_grid.add_argument("--output", help="output path (default stdout)")
    _add_common(p_grid)

    p_verify = sub.add_parser("verify", help="run the numeric oracle suite")
    p_verify.add_argument("--n-max", type=int, default=2)
    p_verify.add_argument("--seed", type=int, default=oracle.DEFAULT_SEED)
    p_verify.add_argument("--samples", type=int, default=200_000,
                          help="Monte Carlo samples per check")
    p_verify.add_argument("--output", help="JSON report path (default stdout)")
    _add_common(p_verify)
    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    """Fill unset flags from a key=value config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    explicit = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    with open(args.config, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{args.config}:{line_no}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            attr = key.replace("-", "_")
            if attr == "lambda":
                attr = "coupling"
            if not hasattr(args, attr):
                raise ValueError(f"{args.config}:{line_no}: unknown key {key!r}")
            if key.replace("-", "_") in explicit or (key == "lambda" and "lambda" in explicit):
                continue
            current = getattr(args, attr)
            if isinstance(current, bool):
                setattr(args, attr, value.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(args, attr, int(value))
            elif isinstance(current, float):
                setattr(args, attr, float(value))
            else:
                setattr(args, attr, value)


def _resolve_coupling(args) -> float:
    if args.coupling is None and args.nlambda is None:
        raise ValueError("one of --lambda / --nlambda is required")
    if args.coupling is not None and args.nlambda is not None:
        raise ValueError("--lambda and --nlambda are mutually exclusive")
    return args.coupling if args.coupling is not None else args.nlambda / args.n


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")


def _parse_grid(text: str) -> tuple[float, ...]:
    """start:stop:step (inclusive stop within half a step) or comma list."""
    if ":" in text:
        start, stop, step = (float(tok) for tok in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(round((stop - start) / step)) + 1
        values = tuple(start + i * step for i in range(count) if start + i * step <= stop + step / 2)
        return values
    return _parse_float_list(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_eval(args) -> int:
    coupling = _resolve_coupling(args)
    params = model.make_params(args.n, coupling)
    value = QUANTITIES[args.quantity](params)
    if args.format == "json":
        record = {
            "n": args.n,
            "lambda": coupling,
            "quantity": args.quantity,
            "value": value,
        }
        print(json.dumps(record))
    elif args.format == "csv":
        print("n,lambda,quantity,value")
        print(f"{args.n},{_fmt(coupling)},{args.quantity},{_fmt(value)}")
    else:
        print(f"{args.quantity}(N={args.n}, Lambda={coupling:g}) = {value:.12g}")
    return EXIT_OK


def _sweep_spec_from_args(args) -> SweepSpec:
    n_values = tuple(int(tok) for tok in args.n.split(",") if tok.strip() != "")
    if not n_values:
        raise ValueError("--n must list at least one pair count")
    if (args.coupling is None) == (args.nlambda is None):
        raise ValueError("exactly one of --lambda / --nlambda is required")
    quantities = tuple(tok.strip() for tok in args.quantity.split(",") if tok.strip())
    if not quantities:
        raise ValueError("quantity list is empty")
    for q in quantities:
        if q not in QUANTITIES:
            raise ValueError(f"unknown quantity {q!r}; known: {', '.join(sorted(QUANTITIES))}")
    return SweepSpec(
        n_values=n_values,
        couplings=_parse_float_list(args.coupling) if args.coupling is not None else None,
        n_couplings=_parse_grid(args.nlambda) if args.nlambda is not None else None,
        quantities=quantities,
        output=args.output,
        fmt=args.format,
        jobs=max(1, args.jobs),
    )


def cmd_sweep(spec: SweepSpec) -> int:
    cells = spec.cells()
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_compute_cell, cells, chunksize=4))
    else:
        results = [_compute_cell(cell) for cell in cells]
    # deterministic ordering: N asc, Lambda asc, quantity name asc
    results.sort(key=lambda r: (r[0][0], r[0][1], r[0][2]))
    meta = (
        f"harmonium {__version__} sweep n={','.join(str(n) for n in spec.n_values)} "
        + (
            f"lambda={','.join(_fmt(v) for v in spec.couplings)}"
            if spec.couplings is not None
            else f"nlambda={','.join(_fmt(v) for v in spec.n_couplings)}"
        )
        + f" quantities={','.join(spec.quantities)}"
    )
    if spec.fmt == "json":
        payload = {
            "meta": meta,
            "rows": [
                {
                    "n": cell[0],
                    "lambda": cell[1],
                    "quantity": cell[2],
                    "value": None if err else float(value),
                    "error": err or None,
                }
                for cell, value, err in results
            ],
        }
        _write_text(spec.output, json.dumps(payload, indent=1) + "\n")
    else:
        lines = [f"# {meta}", "n,lambda,quantity,value,error"]
        for (n, lam, quantity), value, err in results:
            lines.append(f"{n},{_fmt(lam)},{quantity},{value},{err}")
        _write_text(spec.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_grid(args) -> int:
    coupling = _resolve_coupling(args)
    params = model.make_params(args.n, coupling)
    if args.quantity == "d_aa" and args.n < 2:
        raise ValueError("d_aa needs at least two particles per species")
    if args.half_range is not None:
        axis = np.linspace(-args.half_range, args.half_range, args.resolution)
    else:
        axis = correlations.default_grid_axis(params, args.resolution)
    if args.quantity == "rho_a":
        section = rdm.single_particle_rdm(params).func
        xa, xb = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([xa.ravel(), xb.ravel()])
        values = section.evaluate_many(pts).reshape(len(axis), len(axis))
        header = "x,x_prime,value"
    elif args.quantity == "d_ab":
        values = correlations.joint_distribution_ab(params, axis)
        header = "x_a,x_b,value"
    else:
        values = correlations.joint_distribution_aa(params, axis)
        header = "x_a,x_a_prime,value"
    meta = (
        f"# harmonium {__version__} grid quantity={args.quantity} n={args.n} "
        f"lambda={_fmt(coupling)} resolution={args.resolution}"
    )
    lines = [meta, header]
    for i, x1 in enumerate(axis):
        for j, x2 in enumerate(axis):
            lines.append(f"{_fmt(x1)},{_fmt(x2)},{_fmt(values[i, j])}")
    _write_text(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = oracle.run_verification(
        n_max=args.n_max, seed=args.seed, mc_samples=args.samples
    )
    report = oracle.reports_to_json_obj(checks)
    _write_text(args.output, json.dumps(report, indent=1) + "\n")
    if not report["passed"]:
        failed = [c.quantity for c in checks if not c.passed]
        print(f"verification FAILED: {len(failed)} checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args, argv)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "sweep":
            return cmd_sweep(_sweep_spec_from_args(args))
        if args.command == "grid":
            return cmd_grid(args)
        return cmd_verify(args)
    except (NoBoundStateError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - single CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
