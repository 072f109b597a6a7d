"""Command-line front end emitting CSV artifacts from library runs.

Subcommands: phase-diagram (EoS curves and a zone raster), relax (fraction
trajectories and an equilibria summary), eigen (Jacobian spectra at
equilibrium fractions), euler (1D Riemann runs with snapshots).

Configs are flat key=value files; '#' starts a comment.  A bare config name
is also looked up among the configs bundled with the package.  All sampling
is driven by --seed (default 0), so outputs are byte-identical across runs.
Exit codes: 0 ok, 2 config error, 3 numerical failure.
"""

import argparse
import os
import sys
from importlib import resources

import numpy as np

from .errors import NotUnderDome, PhasicOutOfDomain, VdwError
from .thermo import REDUCED_VDW, TauE, critical_point, evaluate
from .phase_diagram import (build_dome, classify, equilibrium_fractions,
                            spinodal_energy)
from .relax_dynamics import (Fractions, detect_equilibrium, integrate,
                             jacobian, phasic_from_fractions,
                             write_trajectory_csv)
from . import euler1d


class ConfigError(Exception):
    pass


def _eos_comments(params):
    return [f"{k} = {format(getattr(params, k), '.17g')}"
            for k in ("a", "b", "R", "Cv", "s0")]


def _fmt(v):
    return format(float(v), ".17g")


def _write_csv(path, comments, header, rows):
    with open(path, "w") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(c) if isinstance(c, str) else _fmt(c)
                              for c in row) + "\n")


def _resolve_config(name):
    if name is None:
        return None
    if os.path.exists(name):
        return name
    bundled = resources.files("vdwrelax").joinpath("configs", name)
    if bundled.is_file():
        return str(bundled)
    raise ConfigError(f"config file not found: {name}")


def _load_kv(path):
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            raw[key.strip()] = val.strip()
    return raw


def _pop(raw, key, conv, default=None, required=False):
    if key not in raw:
        if required:
            raise ConfigError(f"missing config key '{key}'")
        return default
    try:
        return conv(raw.pop(key))
    except ValueError as err:
        raise ConfigError(f"bad value for '{key}': {err}") from None


def _triples(text):
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        vals = [float(v) for v in part.split(",")]
        if len(vals) != 3:
            raise ValueError(f"expected 3 comma-separated values, got '{part}'")
        out.append(tuple(vals))
    return out


def _pairs(text):
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        vals = [float(v) for v in part.split(",")]
        if len(vals) != 2:
            raise ValueError(f"expected 2 comma-separated values, got '{part}'")
        out.append(tuple(vals))
    return out


def _reject_unknown(raw):
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")


def _outdir(args):
    os.makedirs(args.output_dir, exist_ok=True)
    return args.output_dir


# ---------------------------------------------------------------- commands

def cmd_phase_diagram(args):
    params = REDUCED_VDW
    raw = _load_kv(_resolve_config(args.config)) if args.config else {}
    _, T_c, _, _ = critical_point(params)
    temps = _pop(raw, "isotherm_T",
                 lambda s: [float(v) for v in s.split(",")],
                 default=[0.85, 0.95, 1.0, 1.077, 1.3])
    if not any(abs(t - T_c) <= 1e-12 for t in temps):
        temps.append(T_c)
    tau_min = _pop(raw, "tau_min", float, params.b + 0.05)
    tau_max = _pop(raw, "tau_max", float, 12.0)
    n_tau = _pop(raw, "n_tau", int, 600)
    z_tau_min = _pop(raw, "zone_tau_min", float, 0.6)
    z_tau_max = _pop(raw, "zone_tau_max", float, 6.0)
    z_n_tau = _pop(raw, "zone_n_tau", int, 60)
    z_e_min = _pop(raw, "zone_e_min", float, 1.0)
    z_e_max = _pop(raw, "zone_e_max", float, 3.4)
    z_n_e = _pop(raw, "zone_n_e", int, 60)
    _reject_unknown(raw)
    out = _outdir(args)
    comments = _eos_comments(params)

    taus = np.geomspace(tau_min, tau_max, n_tau)
    rows = []
    for T in sorted(temps):
        p = params.R * T / (taus - params.b) - params.a / taus ** 2
        rows.extend((T, t_, p_) for t_, p_ in zip(taus, p))
    _write_csv(os.path.join(out, "isotherms.csv"), comments, "T,tau,p", rows)

    sp_tau = np.geomspace(params.b + 1e-3, 40.0, 500)
    rows = []
    for t_ in sp_tau:
        e_ = spinodal_energy(params, t_)
        v = evaluate(params, TauE(t_, e_))
        rows.append((t_, e_, v.p, v.T))
    _write_csv(os.path.join(out, "spinodal.csv"), comments, "tau,e,p,T", rows)

    dome = build_dome(params)
    rows = zip(dome.T, dome.p, dome.tau1, dome.e1, dome.tau2, dome.e2)
    _write_csv(os.path.join(out, "dome.csv"), comments,
               "T,p,tau1,e1,tau2,e2", rows)

    rows = []
    for e_ in np.linspace(z_e_min, z_e_max, z_n_e):
        for t_ in np.linspace(z_tau_min, z_tau_max, z_n_tau):
            try:
                zone = classify(params, dome, TauE(t_, e_))
            except VdwError:
                zone = "OutOfDomain"
            rows.append((t_, e_, zone))
    _write_csv(os.path.join(out, "zones.csv"), comments, "tau,e,zone", rows)
    print(f"phase-diagram: 4 files in {out}")
    return 0


def _sample_valid_r0(params, mix, rng, count):
    """Uniform draws in (0,1)^3, rejecting fraction triples whose phasic
    states leave the EoS domain (the integrator's precondition)."""
    out = []
    while len(out) < count:
        al, ph, xi = rng.uniform(0.0, 1.0, 3)
        if min(al, ph, xi) <= 1e-3 or max(al, ph, xi) >= 1.0 - 1e-3:
            continue
        r = Fractions(al, ph, xi)
        try:
            phasic_from_fractions(params, mix, r)
        except PhasicOutOfDomain:
            continue
        out.append(r)
    return out


def cmd_relax(args):
    params = REDUCED_VDW
    raw = _load_kv(_resolve_config(args.config))
    mix = TauE(_pop(raw, "mix_tau", float, required=True),
               _pop(raw, "mix_e", float, required=True))
    t_final = _pop(raw, "t_final", float, 200.0)
    rtol = _pop(raw, "rtol", float, 1e-8)
    atol = _pop(raw, "atol", float, 1e-10)
    explicit = _pop(raw, "r0_list", _triples, default=[])
    n_random = _pop(raw, "n_random", int, 0)
    _reject_unknown(raw)
    out = _outdir(args)

    rng = np.random.default_rng(args.seed)
    starts = [Fractions(*t) for t in explicit]
    starts += _sample_valid_r0(params, mix, rng, n_random)
    if not starts:
        raise ConfigError("no initial conditions: set r0_list or n_random")

    comments = _eos_comments(params) + [
        f"mix_tau = {_fmt(mix.tau)}", f"mix_e = {_fmt(mix.e)}",
        f"t_final = {_fmt(t_final)}", f"seed = {args.seed}"]
    summary = []
    for i, r0 in enumerate(starts):
        traj = integrate(params, mix, r0, t_final, rtol=rtol, atol=atol)
        rep = detect_equilibrium(params, mix, traj)
        name = f"trajectory_{i:03d}.csv"
        write_trajectory_csv(params, mix, traj, os.path.join(out, name),
                             comment_lines=comments + [
                                 f"r0 = {_fmt(r0.alpha)}, {_fmt(r0.phi)}, {_fmt(r0.xi)}"])
        lam = np.sort_complex(rep.eigenvalues)
        summary.append((r0.alpha, r0.phi, r0.xi, rep.kind,
                        rep.r_final.alpha, rep.r_final.phi, rep.r_final.xi,
                        rep.residual,
                        lam[0].real, lam[0].imag, lam[1].real, lam[1].imag,
                        lam[2].real, lam[2].imag))
    _write_csv(os.path.join(out, "equilibria_summary.csv"), comments,
               "r0_alpha,r0_phi,r0_xi,kind,alpha,phi,xi,residual,"
               "lam1_re,lam1_im,lam2_re,lam2_im,lam3_re,lam3_im", summary)
    kinds = sorted({row[3] for row in summary})
    print(f"relax: {len(starts)} trajectories in {out} (kinds: {', '.join(kinds)})")
    return 0


DEFAULT_EIGEN_MIXES = ((1.99, 2.1), (3.9, 2.49), (2.39, 1.59),
                       (1.79, 1.49), (1.89, 1.99))


def cmd_eigen(args):
    params = REDUCED_VDW
    raw = _load_kv(_resolve_config(args.config)) if args.config else {}
    mixes = _pop(raw, "mixes", _pairs, default=list(DEFAULT_EIGEN_MIXES))
    _reject_unknown(raw)
    out = _outdir(args)

    dome = build_dome(params)
    rows = []
    for tau, e in mixes:
        mix = TauE(tau, e)
        try:
            eq = equilibrium_fractions(params, dome, mix)
            r = Fractions(eq.alpha, eq.phi, eq.xi)
            dec = phasic_from_fractions(params, mix, r)
            kind = "Saturation"
        except NotUnderDome:
            r = Fractions(0.5, 0.5, 0.5)
            dec = phasic_from_fractions(params, mix, r)
            kind = "Identification"
        J = jacobian(params, mix, r)
        lam = np.sort_complex(np.linalg.eigvals(J))
        det = float(np.linalg.det(J))
        rows.append((kind, r.alpha, r.phi, r.xi, tau, e,
                     dec.x1.tau, dec.x1.e, dec.x2.tau, dec.x2.e,
                     lam[0].real, lam[1].real, lam[2].real,
                     float(np.max(np.abs(lam.imag))), det))
    _write_csv(os.path.join(out, "eigen.csv"), _eos_comments(params),
               "kind,alpha,phi,xi,tau,e,tau1,e1,tau2,e2,"
               "lam1,lam2,lam3,max_imag,det", rows)
    print(f"eigen: {len(rows)} rows in {out}/eigen.csv")
    return 0


def cmd_euler(args):
    params = REDUCED_VDW
    path = _resolve_config(args.config)
    try:
        cfg = euler1d.parse_config(path)
    except (KeyError, ValueError) as err:
        raise ConfigError(str(err)) from None
    out = _outdir(args)

    grid = euler1d.Grid1D(cfg.n_cells, cfg.x_min, cfg.x_max)
    W0 = euler1d.riemann_initial(params, grid, cfg)
    tot0 = W0.stack().sum(axis=1) * grid.dx
    result = euler1d.run(params, cfg, initial=W0)

    comments = _eos_comments(params) + [
        f"config = {os.path.basename(path)}", f"cfl = {_fmt(cfg.cfl)}",
        f"epsilon = {_fmt(cfg.epsilon)}", f"boundary = {cfg.boundary}"]
    x = grid.centers()
    for k, (t, W) in enumerate(zip(result.times, result.snapshots)):
        pr = euler1d.cons_to_prim(params, W)
        rows = zip(x, pr["rho"], pr["u"], pr["p"], pr["e"], pr["T"],
                   pr["alpha"], pr["phi"], pr["xi"], pr["c2"])
        _write_csv(os.path.join(out, f"snapshot_{k:03d}.csv"),
                   comments + [f"t = {_fmt(t)}"],
                   "x,rho,u,p,e,T,alpha,phi,xi,c2", rows)

    Wf = result.final
    totf = Wf.stack().sum(axis=1) * grid.dx
    names = ("rho_alpha", "rho_phi", "rho_xi", "rho", "momentum", "energy")
    drift = np.abs(totf - tot0) / np.maximum(1.0, np.abs(tot0))
    prf = euler1d.cons_to_prim(params, Wf)
    rows = [("n_steps", result.n_steps), ("t_final", result.t_final),
            ("min_rho", float(prf["rho"].min())),
            ("min_p", float(prf["p"].min())),
            ("min_c2", float(prf["c2"].min())),
            ("positivity_ok", int(prf["rho"].min() > 0.0 and prf["p"].min() > 0.0))]
    rows += [(f"drift_{n}", float(d)) for n, d in zip(names, drift)]
    _write_csv(os.path.join(out, "summary.csv"), comments, "quantity,value",
               rows)
    print(f"euler: {len(result.snapshots)} snapshots + summary in {out} "
          f"({result.n_steps} steps)")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vdwrelax",
        description="van der Waals two-phase relaxation toolkit")
    parser.add_argument("--output-dir", default="vdwrelax_out",
                        help="directory for emitted CSV files")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for all random sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phase-diagram",
                       help="isotherms, spinodal, dome and zone raster")
    p.add_argument("config", nargs="?", help="optional key=value config")
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("relax", help="fraction relaxation trajectories")
    p.add_argument("config", help="key=value config (or bundled name)")
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("eigen", help="Jacobian spectra at equilibria")
    p.add_argument("config", nargs="?", help="optional key=value config")
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("euler", help="1D two-phase Riemann solver run")
    p.add_argument("config", help="key=value config (or bundled name)")
    p.set_defaults(func=cmd_euler)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except VdwError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
