"""Command line: ``thermoport {simulate,check,carnot,compose,crn} --config FILE``.

Exit codes: 0 all checks pass, 1 a check failed, 2 invalid input.
"""

import argparse
import os
import sys as _sys

import numpy as np

from . import checks as ck
from .checks import fmt
from .config import build_signal, build_system, crn_spec, load
from .constitutive import IdealGas
from .dynamics import integrate
from .errors import ConfigError, DomainError, ThermoportError

__all__ = ["main"]

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _write_report(out_dir, lines):
    text = "\n".join(lines) + "\n"
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    _sys.stdout.write(text)


def _out_dir(args, sc):
    return args.out or (sc.output.get("dir") if sc is not None else None) or "out"


def _enabled(sc, default):
    if not sc.checks:
        return {k: {} for k in default}
    return {k: (v if isinstance(v, dict) else {}) for k, v in sc.checks.items() if v is not False}


def _apply_overrides(args, sc):
    if args.dt is not None:
        if not args.dt > 0:
            raise ConfigError("--dt", "must be positive")
        sc.integrator["dt"] = args.dt
    if args.tend is not None:
        t0 = sc.integrator["tspan"][0]
        if not args.tend > t0:
            raise ConfigError("--tend", f"must exceed the start time {t0}")
        sc.integrator["tspan"] = (t0, args.tend)
    if args.seed is not None:
        sc.seed = args.seed


def _initial(sys, sc):
    st = sc.initial.get("state")
    z0 = sys.default_state if st is None else np.asarray(st, dtype=float)
    if z0 is None:
        raise ConfigError("initial.state", "system has no default state; give one")
    if z0.size != sys.space.n - 1:
        raise ConfigError("initial.state", f"expected {sys.space.n - 1} independent coordinates, got {z0.size}")
    return z0, float(sc.initial.get("scale", 1.0))


def _static_checks(sys, enabled, rng):
    results = []
    if "feasibility" in enabled:
        results.append(ck.feasibility_suite(sys, rng, int(enabled["feasibility"].get("samples", 50))))
    if "homogeneity" in enabled:
        results.append(ck.homogeneity_suite(sys, rng, int(enabled["homogeneity"].get("samples", 10))))
    if "storage" in enabled:
        results.append(ck.storage_suite(sys, rng, int(enabled["storage"].get("samples", 50))))
    return results


def _simulate(sys, sc):
    z0, scale = _initial(sys, sc)
    sig = build_signal(sc.input, sys.n_inputs)
    it = sc.integrator
    try:
        return integrate(sys, sig, z0, it["tspan"], it["dt"], project=it["project"], gauge=it["gauge"], scale=scale)
    except DomainError as exc:
        raise ConfigError("initial.state", str(exc)) from None


def _trajectory_lines(traj):
    e = traj.energy
    ref = max(1.0, float(np.max(np.abs(e))))
    drift = (e - e[0]) / ref
    return [
        f"status: {traj.status or 'complete'}",
        f"samples: {len(traj)}",
        f"t_end: {fmt(traj.times[-1])}",
        f"E drift min: {fmt(drift.min())}",
        f"E drift max: {fmt(drift.max())}",
        f"min sigma: {fmt(traj.sigma.min())}",
        f"max residual_on: {fmt(traj.residual.max())}",
    ]


def cmd_simulate(args):
    sc = load(args.config)
    _apply_overrides(args, sc)
    sys = build_system(sc)
    rng = np.random.default_rng(sc.seed)
    enabled = _enabled(sc, ("laws", "conservation"))
    traj = _simulate(sys, sc)
    out = _out_dir(args, sc)
    os.makedirs(out, exist_ok=True)
    traj.to_tsv(os.path.join(out, "trajectory.tsv"))
    results = _static_checks(sys, enabled, rng)
    if "laws" in enabled:
        results.append(ck.laws_check(traj, sys, float(enabled["laws"].get("tol", 1e-8))))
    if "conservation" in enabled:
        results.append(ck.conservation_check(traj, float(enabled["conservation"].get("tol", 1e-9))))
    if "cyclo_lossless" in enabled:
        results.append(ck.cyclo_lossless_check(traj, float(enabled["cyclo_lossless"].get("tol", 1e-8))))
    if "equilibrium" in enabled:
        results.append(ck.equilibrium_check(sys, traj, float(enabled["equilibrium"].get("tol", 1e-6))))
    if "clausius" in enabled:
        results.append(ck.clausius_identity_check(traj, float(enabled["clausius"].get("tol", 1e-7))))
    if not traj.complete:
        results.append(ck.CheckResult("completed", False, (traj.status,)))
    lines = [f"scenario: {sc.name}", f"system: {sys.label}", f"coordinates: {', '.join(sys.space.names)}"]
    lines += _trajectory_lines(traj)
    for r in results:
        lines += r.report()
    _write_report(out, lines)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_check(args):
    sc = load(args.config)
    _apply_overrides(args, sc)
    sys = build_system(sc)
    rng = np.random.default_rng(sc.seed)
    enabled = _enabled(sc, ("feasibility", "homogeneity", "storage"))
    enabled = {k: v for k, v in enabled.items() if k in ("feasibility", "homogeneity", "storage")}
    results = _static_checks(sys, enabled, rng)
    lines = [f"scenario: {sc.name}", f"system: {sys.label}"]
    if sc.available_storage is not None:
        res, fa_lines = _available_storage(sc.available_storage, _out_dir(args, sc))
        results.append(res)
        lines += fa_lines
    for r in results:
        lines += r.report()
    _write_report(_out_dir(args, sc), lines)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _available_storage(tab, out):
    from .dissipativity import available_storage_dp, linear_scalar_step

    a, b, c = (float(tab.get(k, d)) for k, d in (("a", -1.0), ("b", 1.0), ("c", 1.0)))
    sign = float(tab.get("supply_sign", 1.0))
    dt = float(tab.get("dt", 0.01))
    xr, ur = tab.get("x_range", [-2.0, 2.0]), tab.get("u_range", [-4.0, 4.0])
    xs = np.linspace(xr[0], xr[1], int(tab.get("nx", 81)))
    us = np.linspace(ur[0], ur[1], int(tab.get("nu", 81)))
    horizon = int(tab.get("horizon", 2000))
    interp = str(tab.get("interpolation", "lower"))
    if interp not in ("lower", "linear"):
        raise ConfigError("available_storage.interpolation", "must be 'lower' or 'linear'")
    r = available_storage_dp(linear_scalar_step(a, b, c, dt, sign), [xs], us, horizon, ground=[0.0],
                             interpolation=interp)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "fa_grid.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x\tF_a\n")
        for x, v in zip(xs, r.value):
            fh.write(f"{x:.17g}\t{v:.17g}\n")
    lines = ["available storage:"] + [f"  {l}" for l in r.summary().split("\n")]
    ok = not r.diverged and r.ground_value is not None and abs(r.ground_value) <= 1e-12
    return ck.CheckResult("available storage", ok, (f"diverged: {r.diverged}",)), lines


def cmd_compose(args):
    sc = load(args.config)
    _apply_overrides(args, sc)
    sys = build_system(sc)
    rng = np.random.default_rng(sc.seed)
    res = ck.feasibility_suite(sys, rng, 50)
    lines = [f"scenario: {sc.name}", f"system: {sys.label}", f"coordinates: {', '.join(sys.space.names)}",
             f"entropy coordinates: {', '.join(sys.space.names[i] for i in sys.space.entropy_indices)}",
             f"ports: {', '.join(f'{p.label} ({p.kind})' for p in sys.ports) or 'none'}"]
    for c in getattr(sys, "couplings", ()):
        lines.append(f"coupling: {c.kind} {', '.join('.'.join(b) for b in c.bindings)}")
    if sys.default_state is not None:
        pt_z = sys.rel.full_z(sys.default_state)
        lines.append(f"default state: {', '.join(fmt(v) for v in pt_z)}")
    lines += res.report()
    _write_report(_out_dir(args, sc), lines)
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_crn(args):
    from .systems.crn import crn

    sc = load(args.config)
    _apply_overrides(args, sc)
    if sc.crn is None:
        raise ConfigError("crn", "missing [crn] table")
    spec = crn_spec(sc.crn)
    sys = crn(spec)
    z0 = np.asarray(sc.initial.get("state", np.concatenate([[0.0], np.ones(spec.n_species)])), dtype=float)
    if z0.size != spec.n_species + 1:
        raise ConfigError("initial.state", f"expected E followed by {spec.n_species} concentrations")
    it = sc.integrator
    try:
        traj = integrate(sys, None, z0, it["tspan"], it["dt"])
    except DomainError as exc:
        raise ConfigError("initial.state", str(exc)) from None
    out = _out_dir(args, sc)
    os.makedirs(out, exist_ok=True)
    traj.to_tsv(os.path.join(out, "trajectory.tsv"))
    x = traj.z[:, 2:]
    W = spec.conservation_laws()
    drift = float(np.max(np.abs((x - x[0]) @ W.T))) if W.size else 0.0
    drift /= max(1.0, float(np.max(np.abs(x[0] @ W.T)))) if W.size else 1.0
    dS = np.diff(traj.z[:, 1])
    mu = spec.chemical_potential(x[-1])
    affinity = spec.stoichiometry.T @ mu
    results = [
        ck.CheckResult("conservation", drift <= 1e-9, (f"max conserved-quantity drift: {fmt(drift)}",)),
        ck.CheckResult("entropy nondecreasing", bool(np.all(dS >= -1e-8)), (f"min dS per step: {fmt(dS.min())}",)),
    ]
    if not traj.complete:
        results.append(ck.CheckResult("completed", False, (traj.status,)))
    lines = [f"scenario: {sc.name}", f"species: {', '.join(spec.species)}",
             f"final concentrations: {', '.join(fmt(v) for v in x[-1])}",
             f"final N^T mu: {', '.join(fmt(v) for v in affinity)}",
             f"final sigma: {fmt(traj.sigma[-1])}", f"entropy change: {fmt(traj.z[-1, 1] - traj.z[0, 1])}"]
    lines += _trajectory_lines(traj)
    for r in results:
        lines += r.report()
    _write_report(out, lines)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def cmd_carnot(args):
    from .dissipativity import carnot_cycle, simulate_carnot

    sc = load(args.config) if args.config else None
    tab = dict(sc.carnot) if sc is not None else {}
    C_V = float(tab.get("C_V", 1.5 * 8.314))
    R = float(tab.get("R", 8.314))
    N = float(tab.get("N", 1.0))
    T_h, T_c = float(tab.get("T_h", 400.0)), float(tab.get("T_c", 300.0))
    V1, V2 = float(tab.get("V_1", 1.0)), float(tab.get("V_2", 2.0))
    dt = args.dt if args.dt is not None else float(tab.get("dt", 1e-4))
    try:
        gas = IdealGas(C_V, R, N)
        ana = carnot_cycle(gas, T_h, T_c, V1, V2)
        sim, _ = simulate_carnot(gas, T_h, T_c, V1, V2, dt=dt, leg_time=float(tab.get("leg_time", 0.1)))
    except ValueError as exc:
        raise ConfigError("carnot", str(exc)) from None
    out = _out_dir(args, sc)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "cycle_legs.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("source\tkind\tT_start\tT_end\tV_start\tV_end\tQ\tW\n")
        for name, rec in (("analytic", ana), ("simulated", sim)):
            for row in rec.table():
                fh.write("\t".join([name, row[0]] + [format(float(v), ".17g") for v in row[1:]]) + "\n")
    lines = ["quantity\tanalytic\tsimulated"]
    for key, fa, fs in (("Q_h", ana.Q_h, sim.Q_h), ("Q_c", ana.Q_c, sim.Q_c), ("W", ana.W_net, sim.W_net),
                        ("eta", ana.efficiency, sim.efficiency),
                        ("Q_h/T_h + Q_c/T_c", ana.clausius_sum, sim.clausius_sum)):
        lines.append(f"{key}\t{fmt(fa)}\t{fmt(fs)}")
    lines.append(f"eta_carnot: {fmt(1.0 - T_c / T_h)}")
    lines.append(f"simulated closure gap: {fmt(sim.closure_gap)}")
    ok = abs(ana.clausius_sum) <= 1e-12 and abs(sim.clausius_sum) <= 1e-6 and sim.state_closed
    lines.append(f"carnot: {'PASS' if ok else 'FAIL'}")
    _write_report(out, lines)
    return EXIT_OK if ok else EXIT_FAIL


def _parser():
    p = argparse.ArgumentParser(prog="thermoport", description="Port-thermodynamic simulation and checks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, need in (("simulate", cmd_simulate, True), ("check", cmd_check, True),
                           ("carnot", cmd_carnot, False), ("compose", cmd_compose, True), ("crn", cmd_crn, True)):
        s = sub.add_parser(name)
        s.add_argument("--config", required=need, help="scenario file (TOML)")
        s.add_argument("--out", help="output directory (default: output.dir or ./out)")
        s.add_argument("--dt", type=float, help="override the integrator step")
        s.add_argument("--tend", type=float, help="override the final time")
        s.add_argument("--seed", type=int, help="override the sampling seed")
        s.set_defaults(func=fn)
    return p


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ThermoportError as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
