"""Command-line interface: ``birod params|equilibria|sweep|shape``.

Exit codes: 0 success, 2 usage or domain error, 3 index/oracle disagreement.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import closed_form as cf
from .bvp import ShootingConfig, enumerate_equilibria
from .model import (
    BRISTOL,
    LadderParams,
    PhysicalFlange,
    SolutionProfile,
    parse_params_text,
    physical_estimate,
    total_energy,
)
from .shape import export_csv, export_obj, reconstruct
from .stability import Verdict, classify, oracle_agrees, oracle_check

EXIT_OK, EXIT_USAGE, EXIT_DISAGREE = 0, 2, 3


class UsageError(ValueError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _grid(spec: str):
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise UsageError(f"grid must be a:b:n, got {spec!r}") from exc
    if n < 1 or not (math.isfinite(a) and math.isfinite(b)):
        raise UsageError(f"bad grid {spec!r}")
    return [a] if n == 1 else [float(v) for v in np.linspace(a, b, n)]


# --------------------------------------------------------------------------
# parameters


_PHYS = ("width", "thickness", "mu_over_e", "spoke", "length_dim")


def _build_params(args) -> tuple[LadderParams, PhysicalFlange | None]:
    vals = {}
    if args.config:
        try:
            vals.update(parse_params_text(Path(args.config).read_text(encoding="utf-8")))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    flange = None
    phys = {k: getattr(args, k) for k in _PHYS}
    if args.preset == "bristol" or any(v is not None for v in phys.values()):
        base = BRISTOL if args.preset == "bristol" else None
        got = {
            "w": phys["width"] if phys["width"] is not None else getattr(base, "w", None),
            "h": phys["thickness"] if phys["thickness"] is not None else getattr(base, "h", None),
            "mu_over_E": phys["mu_over_e"] if phys["mu_over_e"] is not None else getattr(base, "mu_over_E", None),
            "a": phys["spoke"] if phys["spoke"] is not None else getattr(base, "a", None),
            "L_dim": phys["length_dim"] if phys["length_dim"] is not None else getattr(base, "L_dim", None),
        }
        missing = [k for k, v in got.items() if v is None]
        if missing:
            raise UsageError(f"physical input incomplete: missing {missing}")
        flange = PhysicalFlange(**got)
        est = physical_estimate(flange, u_hat=vals.get("u_hat", 1.0))
        vals.update(b=est.params.b, gamma=est.params.gamma, L=est.params.L)
    if args.epsilon is not None:
        vals.update(b=args.epsilon, gamma=0.0)
    for key, attr in (("b", "b"), ("gamma", "gamma"), ("u_hat", "u_hat"), ("U0_hat", "u0"), ("U1_hat", "u1"), ("L", "length")):
        v = getattr(args, attr)
        if v is not None:
            vals[key] = v
    if "b" not in vals:
        raise UsageError("give --b/--gamma, --epsilon, physical flags, --preset or --config")
    vals.setdefault("gamma", 0.0)
    return LadderParams(**vals), flange


# --------------------------------------------------------------------------
# params


def cmd_params(args, out) -> int:
    p, flange = _build_params(args)
    L0 = cf.min_perversion_length(p.epsilon)
    info = {
        "b": p.b, "gamma": p.gamma, "u_hat": p.u_hat, "U0_hat": p.U0_hat, "U1_hat": p.U1_hat, "L": p.L,
        "epsilon": p.epsilon, "sqrt_eps_L": p.ell, "regime": cf.regime(p), "L0": L0, "physical": None,
    }
    if flange is not None:
        est = physical_estimate(flange, p.u_hat)
        info["physical"] = {
            "mu_over_E": flange.mu_over_E,
            "epsilon_exact": est.epsilon,
            "epsilon_rounded": est.epsilon_rounded,
            "sqrt_b_rounded": est.sqrt_b_rounded,
            "mu_over_E_rounded": est.mu_over_E_rounded,
            "L0_dim_exact": L0 * flange.a,
            "L0_dim_rounded": cf.min_perversion_length(est.epsilon_rounded) * flange.a,
        }
    if args.json:
        json.dump(info, out, indent=2, sort_keys=True)
        out.write("\n")
        return EXIT_OK
    for k in ("b", "gamma", "u_hat", "U0_hat", "U1_hat", "L", "epsilon", "sqrt_eps_L"):
        out.write(f"{k:<12}= {info[k]:.10g}\n")
    out.write(f"{'regime':<12}= {info['regime']}\n")
    out.write(f"{'L0':<12}= {L0:.10g}\n")
    ph = info["physical"]
    if ph:
        out.write("\nphysical estimate\n")
        out.write(f"  mu/E               = {ph['mu_over_E']:.4g} (rounded {ph['mu_over_E_rounded']:.2g})\n")
        out.write(f"  sqrt(b) = h/w      = {math.sqrt(p.b):.4g} (rounded {ph['sqrt_b_rounded']:.2g})\n")
        out.write(f"  epsilon exact      = {ph['epsilon_exact']:.4e}\n")
        out.write(f"  epsilon rounded    = {ph['epsilon_rounded']:.3g}\n")
        out.write(f"  L0 * a exact       = {ph['L0_dim_exact']:.4g} m\n")
        out.write(f"  L0 * a rounded     = {ph['L0_dim_rounded']:.4g} m\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# equilibria


EQ_COLUMNS = ["kind", "theta_0", "theta_L", "nu", "J", "verdict", "oracle_eig", "energy", "reason"]


def _shooting_config(args, samples: int) -> ShootingConfig:
    return ShootingConfig(grid_n=args.scan_cells, rk_tolerance=args.rk_tol,
                          residual_tol=args.residual_tol, n_out=samples)


def collect_equilibria(p: LadderParams, samples: int, shooting: bool = False, cfg: ShootingConfig | None = None):
    """``[(kind, profile, nu, verdict), ...]`` for the given parameters."""
    rows = []
    if p.u_hat == 1.0 and not shooting:
        if p.U0_hat == 0.0:
            for th, v in cf.constant_equilibria(p):
                rows.append(("constant", SolutionProfile.constant(th, p.L, samples), None, v))
        for s in cf.solve_perversion(p, samples):
            kind = "perversion" if s.contact_ok else "perversion-contact"
            rows.append((kind, s.profile, s.nu, s.verdict))
        for hand in ("left", "right"):
            for s in cf.solve_helical(p, hand, samples):
                kind = f"helix-{hand}" if s.contact_ok else f"helix-{hand}-contact"
                rows.append((kind, s.profile, s.nu, s.verdict))
    else:
        for prof in enumerate_equilibria(p, cfg or ShootingConfig(n_out=samples)):
            kind = "constant" if prof.is_constant() else "shooting"
            rows.append((kind, prof, None, classify(prof, p)))
    return rows


def cmd_equilibria(args, out) -> int:
    p, _ = _build_params(args)
    samples = args.samples if args.samples % 2 else args.samples + 1
    rows = collect_equilibria(p, samples, args.shooting, _shooting_config(args, samples))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EQ_COLUMNS)
    disagreements = 0
    n_stable = 0
    for kind, prof, nu, v in rows:
        eig = None
        if args.oracle:
            oc = oracle_check(prof, p, args.oracle_n)
            eig = oc.eig_fine
            if oracle_agrees(v, oc) is False:
                disagreements += 1
        n_stable += v.kind is Verdict.STABLE
        energy = total_energy(prof, p) if len(prof) >= 3 else None
        w.writerow([kind, _fmt(float(prof.theta[0])), _fmt(float(prof.theta[-1])), _fmt(nu),
                    _fmt(v.index_J), str(v.kind), _fmt(eig), _fmt(energy), v.reason])
    summary = [f"{len(rows)} equilibria, {n_stable} stable"]
    if p.u_hat == 1.0 and p.U0_hat == 0.0:
        nonconst_stable = sum(1 for k, pr, _, v in rows if not pr.is_constant() and v.kind is Verdict.STABLE)
        summary.append("all perversions unstable at U0 = 0" if nonconst_stable == 0
                       else f"WARNING: {nonconst_stable} stable non-constant solutions at U0 = 0")
    if args.oracle:
        summary.append(f"oracle disagreements: {disagreements}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "equilibria.csv").write_text(buf.getvalue(), encoding="utf-8")
        out.write("\n".join(summary) + "\n")
    else:
        out.write(buf.getvalue())
        sys.stderr.write("\n".join(summary) + "\n")
    return EXIT_DISAGREE if disagreements else EXIT_OK


# --------------------------------------------------------------------------
# sweep


SWEEP_COLUMNS = ["U0", "L", "helixL", "helixR", "perversion", "tri_stable", "error"]


def sweep_cell(base: LadderParams, U0: float, L: float, samples: int):
    """Stability flags of the three target states at one grid point."""
    try:
        p = base.replace(U0_hat=U0, L=L)
        if p.u_hat != 1.0:
            raise cf.UnsupportedParameters("sweep needs u_hat = 1")
        if U0 == 0.0:
            consts = {round(t, 12): v for t, v in cf.constant_equilibria(p)}
            hl = consts.get(round(0.5 * math.pi, 12))
            hr = consts.get(round(-0.5 * math.pi, 12))
            left = hl is not None and hl.kind is Verdict.STABLE
            right = hr is not None and hr.kind is Verdict.STABLE
        else:
            left = any(s.stable and s.contact_ok for s in cf.solve_helical(p, "left", samples))
            right = any(s.stable and s.contact_ok for s in cf.solve_helical(p, "right", samples))
        perv = any(s.stable and s.contact_ok for s in cf.solve_perversion(p, samples))
        return [U0, L, left, right, perv, left and right and perv, ""]
    except Exception as exc:  # recorded per cell, never aborts the sweep
        return [U0, L, None, None, None, None, f"{type(exc).__name__}: {exc}"]


def _cell(job):
    return sweep_cell(*job)


def cmd_sweep(args, out) -> int:
    p, _ = _build_params(args)
    u0s = _grid(args.grid_u0) if args.grid_u0 else [p.U0_hat]
    Ls = _grid(args.grid_l) if args.grid_l else [p.L]
    samples = args.samples if args.samples % 2 else args.samples + 1
    jobs = [(p, u0, L, samples) for u0 in u0s for L in Ls]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_cell, jobs, chunksize=max(1, len(jobs) // (4 * args.jobs))))
    else:
        results = [_cell(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in results:
        w.writerow([_fmt(x) for x in r])
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "sweep.csv").write_text(buf.getvalue(), encoding="utf-8")
        out.write(f"{len(results)} cells written to {args.out / 'sweep.csv'}\n")
    else:
        out.write(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------
# shape


SELECTORS = ("perversion", "left-helix", "right-helix", "constant", "shooting")


def select_profile(p: LadderParams, selector: str, index: int, samples: int, cfg: ShootingConfig | None = None):
    cands = []
    if selector == "shooting":
        cands = [q for q in enumerate_equilibria(p, cfg or ShootingConfig(n_out=samples)) if not q.is_constant()]
    elif selector == "constant":
        cands = [SolutionProfile.constant(t, p.L, samples) for t, _ in cf.constant_equilibria(p)]
    elif selector == "perversion":
        cands = [s.profile for s in cf.solve_perversion(p, samples)]
    else:
        hand = "left" if selector == "left-helix" else "right"
        if p.U0_hat == 0.0:
            cands = [SolutionProfile.constant((0.5 if hand == "left" else -0.5) * math.pi, p.L, samples)]
        else:
            cands = [s.profile for s in cf.solve_helical(p, hand, samples)]
    if not 0 <= index < len(cands):
        raise UsageError(f"no {selector} equilibrium with index {index} ({len(cands)} found)")
    return cands[index]


def cmd_shape(args, out) -> int:
    p, _ = _build_params(args)
    samples = args.samples if args.samples % 2 else args.samples + 1
    prof = select_profile(p, args.select, args.index, samples, _shooting_config(args, samples))
    geom = reconstruct(prof, p, spoke_every=args.spoke_every)
    outdir = args.out or Path(".")
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{args.select}-{args.index}"
    written = []
    if args.format in ("csv", "both"):
        export_csv(geom, outdir / f"{stem}.csv")
        written.append(outdir / f"{stem}.csv")
    if args.format in ("obj", "both"):
        export_obj(geom, outdir / f"{stem}.obj")
        written.append(outdir / f"{stem}.obj")
    out.write(f"spoke rigidity max deviation = {geom.rigidity_error():.3e}\n")
    out.write(f"frame angle max deviation    = {geom.angle_error():.3e}\n")
    for w_ in written:
        out.write(f"wrote {w_}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _add_param_flags(sp):
    g = sp.add_argument_group("non-dimensional parameters")
    g.add_argument("--b", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--epsilon", type=float, help="shorthand for --b EPS --gamma 0")
    g.add_argument("--u-hat", dest="u_hat", type=float)
    g.add_argument("--u0", type=float, help="U0_hat")
    g.add_argument("--u1", type=float, help="U1_hat")
    g.add_argument("--length", type=float, help="L in spoke lengths")
    h = sp.add_argument_group("physical flange (SI units)")
    h.add_argument("--width", type=float)
    h.add_argument("--thickness", type=float)
    h.add_argument("--mu-over-e", dest="mu_over_e", type=float)
    h.add_argument("--spoke", type=float)
    h.add_argument("--length-dim", dest="length_dim", type=float)
    h.add_argument("--preset", choices=["bristol"])
    sp.add_argument("--config", type=Path, help="key = value parameter file; flags override it")
    sp.add_argument("--out", type=Path, help="output directory")
    sp.add_argument("--samples", type=int, default=2001, help="samples per profile (made odd)")


def _add_shooting_flags(sp):
    g = sp.add_argument_group("shooting solver")
    g.add_argument("--scan-cells", dest="scan_cells", type=int, default=256, help="theta(0) scan cells (>= 64)")
    g.add_argument("--rk-tol", dest="rk_tol", type=float, default=1e-10, help="integrator relative tolerance")
    g.add_argument("--residual-tol", dest="residual_tol", type=float, default=1e-10,
                   help="accepted |theta'(L) - U0| for a root")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="birod", description="Equilibria and stability of a deployable elastic ladder.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", help="derived parameters and regime")
    _add_param_flags(sp)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("equilibria", help="table of equilibria with verdicts")
    _add_param_flags(sp)
    sp.add_argument("--oracle", action="store_true", help="cross-check verdicts with the Hessian oracle")
    sp.add_argument("--oracle-n", dest="oracle_n", type=int, default=512)
    sp.add_argument("--shooting", action="store_true", help="use the shooting solver even at u_hat = 1")
    _add_shooting_flags(sp)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("sweep", help="stability map over U0 and L grids")
    _add_param_flags(sp)
    sp.add_argument("--grid-u0", dest="grid_u0", help="a:b:n")
    sp.add_argument("--grid-l", dest="grid_l", help="a:b:n")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep, samples=401)

    sp = sub.add_parser("shape", help="export 3D flange geometry")
    _add_param_flags(sp)
    sp.add_argument("--select", choices=SELECTORS, required=True)
    sp.add_argument("--index", type=int, default=0)
    sp.add_argument("--format", choices=["csv", "obj", "both"], default="both")
    sp.add_argument("--spoke-every", dest="spoke_every", type=int)
    _add_shooting_flags(sp)
    sp.set_defaults(func=cmd_shape)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "samples", 3) < 3:
        ap.error("--samples must be >= 3")
    try:
        return args.func(args, sys.stdout)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"birod {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
