"""Command-line surface: verifications, sweeps, and the matching demo.

Subcommands `delaunay`, `spectrum`, `match`, `interior`, `norms` write CSV
reports (headers always present, floats at 17 significant digits) and render
SVG figures alongside them unless --no-plot is given.  Identical
configuration and seed produce byte-identical CSV output.

Configuration is a flat JSON object loaded with --config; explicit
command-line flags win over the file, which wins over built-in defaults.
The output directory defaults to $NECKGLUE_OUT, then the current directory.

Exit codes: 0 success, 1 solver failure, 2 parameter error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .delaunay import hamiltonian, integrate_orbit
from .errors import ContractViolationError, NeckglueError, ParameterError, SolverError
from .family import check_asymptotic_model, neck_radius_from_b, u_eps_radial
from .harmonics import BoundaryData, build_basis
from .linearized import picard_interior
from .matching import (assemble_match, constant_functionals, faithful_functionals,
                       synthetic_functionals, zero_functionals)
from .norms import NormSpec, norm_weighted, radial_field
from .params import Dimension, ParameterBudget
from .spectrum import (degenerate_curvature_set, family_spec, is_nondegenerate,
                       laplace_spectrum, s2xs2_discrepancy, s2xs3_discrepancy,
                       spectral_gap)

FLOAT_FMT = "%.17g"

DEFAULTS = {
    "n": 4,
    "eps": 0.1,
    "s": None,          # budget default when omitted
    "tol": None,        # per-command default when omitted
    "seed": 0,
    "out": None,
    "plot": True,
    # delaunay
    "periods": 1,
    "verify_asymptotics": False,
    # spectrum
    "family": "s2xs2",
    "k1": 3.0,
    "count": 25,
    "i_max": 10,
    # match
    "preset": "synthetic",
    "max_iter": 50,
    "h0_scale": 1.0,
    "scale": 0.12,
    # interior
    "phi_degree": 2,
    "phi_coeff": 0.01,
    "trunc": 4,
    "n_radial": 900,
    # norms
    "mu": 1.4,
    "alpha": 0.5,
    "r": 0.2,
    "levels": 6,
}


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = []
            for x in row:
                if isinstance(x, float):
                    cells.append(FLOAT_FMT % x)
                else:
                    cells.append(str(x))
            fh.write(",".join(cells) + "\n")


def _outdir(cfg) -> Path:
    out = cfg["out"] or os.environ.get("NECKGLUE_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _budget(cfg, dim):
    overrides = {}
    if cfg["s"] is not None:
        overrides["s"] = cfg["s"]
    return ParameterBudget.defaults(dim, **overrides)


def _maybe_plot(cfg, fn, *args):
    if not cfg["plot"]:
        return
    try:
        fn(*args)
    except Exception as exc:  # plotting must never change exit codes
        print(f"warning: plot skipped ({exc})", file=sys.stderr)


def cmd_delaunay(cfg) -> int:
    dim = Dimension(cfg["n"])
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-10
    orbit = integrate_orbit(dim, cfg["eps"], tol=tol)
    out = _outdir(cfg)

    h = hamiltonian(dim, orbit.v_samples, orbit.w_samples)
    rows = list(zip(orbit.t_samples.tolist(), orbit.v_samples.tolist(),
                    orbit.w_samples.tolist(), h.tolist()))
    _write_csv(out / "delaunay_profile.csv", ["t", "v", "w", "H"], rows)

    r = np.geomspace(np.exp(-cfg["periods"] * orbit.period), 1.0, 2001)
    u, ru_r, r2u_rr = u_eps_radial(orbit, r)
    _write_csv(out / "uprofile.csv", ["r", "u", "ru_r", "r2u_rr"],
               list(zip(r.tolist(), u.tolist(), ru_r.tolist(), r2u_rr.tolist())))
    print(f"period {orbit.period:.12g}  h0 {orbit.h0:.12g}  "
          f"H-drift {orbit.hamiltonian_drift():.3e}  v_max {orbit.v_max:.12g}")

    from . import plots
    _maybe_plot(cfg, plots.plot_orbit, out / "delaunay_orbit.svg",
                orbit.t_samples, orbit.v_samples, orbit.w_samples)
    _maybe_plot(cfg, plots.plot_radial_profile, out / "uprofile.svg",
                r, u, "u", "rotationally invariant solution")

    if cfg["verify_asymptotics"]:
        sups = []
        for eps_k in (0.05, 0.1, 0.2):
            o = integrate_orbit(dim, eps_k, tol=tol)
            radii = np.geomspace(eps_k**2, 1.0, 400)
            rep = check_asymptotic_model(o, radii)
            sups.append((eps_k,) + rep.sups)
            print(f"eps={eps_k}: sup ratios value/d1/d2 = "
                  f"{rep.sups[0]:.4f} {rep.sups[1]:.4f} {rep.sups[2]:.4f}")
        _write_csv(out / "asymptotic_ratios.csv",
                   ["eps", "sup_value", "sup_deriv1", "sup_deriv2"], sups)
        for j in range(1, 4):
            col = [row[j] for row in sups]
            if max(col) > 1.5 * min(col):
                print("ratio variation above 50% across the sweep")
                return 1
        print("ratios bounded across the sweep")
    return 0


def cmd_spectrum(cfg) -> int:
    spec = family_spec(cfg["family"], cfg["k1"])
    pairs = laplace_spectrum(spec, cfg["count"])
    out = _outdir(cfg)
    _write_csv(out / "spectrum.csv", ["eigenvalue", "index"],
               [(mu, "\"" + " ".join(map(str, idx)) + "\"") for mu, idx in pairs])
    ok, kernel = is_nondegenerate(spec)
    if ok:
        print(f"NONDEGENERATE  gap {spectral_gap(spec):.12g}")
    else:
        print(f"DEGENERATE  kernel {kernel}")
    crit = degenerate_curvature_set(cfg["family"], cfg["i_max"])
    _write_csv(out / "degenerate_curvatures.csv",
               ["factor", "degree", "curvature"],
               [(c.factor, c.degree, c.curvature) for c in crit])
    rep = s2xs3_discrepancy() if cfg["family"].lower() == "s2xs3" else s2xs2_discrepancy()
    if not rep.agree:
        print(f"constant discrepancy: kernel condition gives {rep.kernel_constant}, "
              f"commonly quoted {rep.quoted_constant}")

    from . import plots
    _maybe_plot(cfg, plots.plot_spectrum, out / "spectrum.svg",
                [mu for mu, _ in pairs], spec.n)
    return 0


def cmd_match(cfg) -> int:
    dim = Dimension(cfg["n"])
    budget = _budget(cfg, dim)
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-12
    orbit = integrate_orbit(dim, cfg["eps"])
    basis = build_basis(dim, 4)
    r = budget.r_eps(cfg["eps"])
    preset = cfg["preset"]
    if preset == "zero":
        funcs = zero_functionals(basis, r)
    elif preset == "constant":
        funcs = constant_functionals(basis, r, h0_value=0.01)
    elif preset == "synthetic":
        funcs = synthetic_functionals(basis, budget, cfg["eps"], seed=cfg["seed"],
                                      scale=cfg["scale"], h0_scale=cfg["h0_scale"])
    elif preset == "faithful":
        funcs = faithful_functionals(orbit, budget, basis, seed=cfg["seed"])
        tol = max(tol, 1e-10)
    else:
        raise ParameterError(f"unknown preset {preset!r}")

    result = assemble_match(orbit, budget, funcs, tol=tol,
                            max_outer=cfg["max_iter"])
    out = _outdir(cfg)
    _write_csv(out / "match.csv",
               ["iteration", "b", "lambda", "a_norm", "omega_norm",
                "theta_norm", "residual"],
               [(h.iteration, h.b, h.lam, h.a_norm, h.omega_norm, h.theta_norm,
                 h.residual) for h in result.history])
    violations = result.state.constraint_violations()
    st = result.state
    print(f"b {st.b:.12g}  lambda {st.lam:.12g}  |a| {float(np.linalg.norm(st.a)):.6g}  "
          f"residual {result.joint_residual:.3e}")

    from . import plots
    _maybe_plot(cfg, plots.plot_iteration_history, out / "match_residual.svg",
                [h.residual for h in result.history], "joint residual",
                f"matching ({preset})")
    if violations:
        print("constraint violations: " + "; ".join(violations))
        return 1
    return 0


def cmd_interior(cfg) -> int:
    dim = Dimension(cfg["n"])
    budget = _budget(cfg, dim)
    tol = cfg["tol"] if cfg["tol"] is not None else 1e-10
    orbit = integrate_orbit(dim, cfg["eps"])
    R = neck_radius_from_b(dim, cfg["eps"], 0.0)
    basis = build_basis(dim, cfg["trunc"])
    r = budget.r_eps(cfg["eps"])
    deg = cfg["phi_degree"]
    phi = BoundaryData(basis, r, {(deg, 0): cfg["phi_coeff"]})
    result = picard_interior(orbit, R, None, phi, budget, tol=tol,
                             n_radial=cfg["n_radial"], trunc=cfg["trunc"],
                             basis=basis, monitor_residuals=True)
    out = _outdir(cfg)
    rows = []
    for k, nrm in enumerate(result.iterate_norms):
        res_k = result.residual_history[k] if k < len(result.residual_history) else ""
        contraction = result.contraction_factors[k - 1] if k >= 1 else ""
        rows.append((k + 1, nrm, contraction, res_k))
    _write_csv(out / "interior.csv",
               ["iteration", "iterate_norm", "contraction", "residual"], rows)
    print(f"converged in {result.iterations} iterations  "
          f"relative residual {result.relative_residual:.3e}  "
          f"tau {result.tau_reported:.6g}  aliasing {result.aliasing_fraction:.3e}")

    rho = result.expansion.radii
    u = u_eps_radial(orbit, rho, R=R)[0]
    vphi_peak = np.zeros_like(rho)
    for (d, i), c in phi.coeffs.items():
        vphi_peak += c * (rho / r) ** d
    total = u + vphi_peak + np.max(result.expansion.profiles, axis=0)
    from . import plots
    _maybe_plot(cfg, plots.plot_radial_profile, out / "interior_profile.svg",
                rho, total * rho ** dim.a,
                "u r^{(n-2)/2}", "converged conformal factor (scaled)")
    return 0


def cmd_norms(cfg) -> int:
    n = cfg["n"]
    mu = cfg["mu"]
    f = radial_field(lambda rho: rho**mu,
                     fp=lambda rho: mu * rho ** (mu - 1),
                     fpp=lambda rho: mu * (mu - 1) * rho ** (mu - 2))
    rows = []
    for r in (cfg["r"], cfg["r"] / 2, cfg["r"] / 4):
        spec = NormSpec(n=n, k=0, alpha=cfg["alpha"], mu=mu, r=r,
                        levels=cfg["levels"], seed=cfg["seed"])
        rows.append((r, norm_weighted(f, spec)))
        print(f"r={r:.6g}: ||rho^mu|| = {rows[-1][1]:.12g}")
    out = _outdir(cfg)
    _write_csv(out / "norms.csv", ["r", "weighted_norm"], rows)
    vals = [v for _, v in rows]
    spread = max(vals) / min(vals) - 1.0
    print(f"relative spread across r: {spread:.3e}")

    from . import plots
    _maybe_plot(cfg, plots.plot_radial_profile, out / "norms.svg",
                [r for r, _ in rows], vals, "weighted norm",
                "r-stability of the homogeneous norm", True)
    return 0


COMMANDS = {
    "delaunay": cmd_delaunay,
    "spectrum": cmd_spectrum,
    "match": cmd_match,
    "interior": cmd_interior,
    "norms": cmd_norms,
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="neckglue", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--s", type=float, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--plot", dest="plot", action="store_true", default=None)
        p.add_argument("--no-plot", dest="plot", action="store_false", default=None)

    p = sub.add_parser("delaunay", help="integrate one Delaunay period")
    add_common(p)
    p.add_argument("--periods", type=int, default=None)
    p.add_argument("--verify-asymptotics", dest="verify_asymptotics", action="store_true",
                   default=None)

    p = sub.add_parser("spectrum", help="product-sphere nondegeneracy")
    add_common(p)
    p.add_argument("--family", type=str, default=None)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--i-max", dest="i_max", type=int, default=None)

    p = sub.add_parser("match", help="Cauchy-data matching demo")
    add_common(p)
    p.add_argument("--preset", type=str, default=None,
                   choices=["zero", "constant", "synthetic", "faithful"])
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    p.add_argument("--h0-scale", dest="h0_scale", type=float, default=None)
    p.add_argument("--scale", type=float, default=None)

    p = sub.add_parser("interior", help="interior Picard iteration")
    add_common(p)
    p.add_argument("--phi-degree", dest="phi_degree", type=int, default=None)
    p.add_argument("--phi-coeff", dest="phi_coeff", type=float, default=None)
    p.add_argument("--trunc", type=int, default=None)
    p.add_argument("--n-radial", dest="n_radial", type=int, default=None)

    p = sub.add_parser("norms", help="weighted-norm stability report")
    add_common(p)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--levels", type=int, default=None)
    return parser


def _merge_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ParameterError("config file must hold a flat JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        return COMMANDS[args.command](cfg)
    except (ParameterError, ContractViolationError, OSError, json.JSONDecodeError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except NeckglueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
