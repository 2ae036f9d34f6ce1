"""Check suites shared by the command line and the tests.

Each suite returns a :class:`CheckResult` with a verdict and report lines.
"""

from dataclasses import dataclass

import numpy as np

from .dissipativity import simpson, system_storage_check, trapezoid
from .dynamics import _segments
from .dynamics import law_residuals, verify_feasible
from .phase_space import DEFAULT_LAMBDAS, CotangentPoint, check_homogeneity

__all__ = [
    "CheckResult",
    "fmt",
    "feasibility_suite",
    "homogeneity_suite",
    "storage_suite",
    "laws_check",
    "conservation_check",
    "cyclo_lossless_check",
    "equilibrium_check",
    "clausius_identity_check",
    "off_manifold_points",
]


def fmt(x):
    """Six significant digits for reports."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".6g")
    return str(x)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    lines: tuple = ()

    def report(self):
        out = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        out += [f"  {l}" for l in self.lines]
        return out


def feasibility_suite(sys, rng, n=50, tol=1e-9):
    """:func:`verify_feasible` over sampled points of L with random ray scales."""
    pts = sys.sample_points(rng, n)
    inputs = [rng.normal(size=sys.n_inputs) * sys.input_scale for _ in range(3)]
    rep = verify_feasible(sys.K, sys.rel, pts, inputs=inputs, tol=tol)
    lines = rep.summary().split("\n") + [f"violated: {v}" for v in rep.violations]
    return CheckResult("feasibility", rep.passed, tuple(lines))


def off_manifold_points(sys, rng, n):
    """Points near sampled states of L with co-vectors perturbed off L.

    On L the Hamiltonian vanishes, so its relative homogeneity error has no
    scale; perturbing ``p`` gives ``K`` of the size of its terms.
    """
    pts = []
    for pt in sys.sample_points(rng, n):
        p = np.array(pt.p)
        p = p + np.abs(p).max() * rng.normal(size=p.size)
        pts.append(CotangentPoint(pt.z, p))
    return pts


def homogeneity_suite(sys, rng, n=10, lambdas=DEFAULT_LAMBDAS, tol=1e-12):
    """Degree-1 homogeneity in ``p`` of ``K`` (drift and every input direction)."""
    worst = 0.0
    euler = 0.0
    m = sys.n_inputs
    dirs = [np.zeros(m)] + [rng.normal(size=m) * sys.input_scale for _ in range(2)] if m else [np.zeros(0)]
    for pt in off_manifold_points(sys, rng, n):
        for u in dirs:
            rep = check_homogeneity(lambda z, p, u=u: sys.K.value(z, p, u), pt, 1, lambdas)
            worst = max(worst, rep.max_rel_error)
            euler = max(euler, rep.euler_residual / (1.0 + abs(sys.K.value(pt.z, pt.p, u))))
    return CheckResult("homogeneity", worst <= tol,
                       (f"max relative error: {fmt(worst)}", f"max relative Euler residual: {fmt(euler)}"))


def storage_suite(sys, rng, n=50, tol=1e-9):
    """``F = E`` is a cyclo-lossless storage for ``s = sum y_p u``."""
    rep = system_storage_check(sys, rng, n, tol)
    return CheckResult("storage", rep.passed,
                       (f"max |dE/dt - sum y_p u|: {fmt(rep.max_abs_residual)}", f"scale: {fmt(rep.scale)}"))


def laws_check(traj, sys=None, tol=1e-8):
    """Finite-difference First-Law residual and entropy-production bound."""
    lr = law_residuals(traj, sys)
    fl = lr.max_first_law
    ok = fl <= tol * lr.scale and lr.min_sigma >= -tol
    return CheckResult("laws", ok, (f"max |dE/dt - sum y_p u|: {fmt(fl)}", f"scale: {fmt(lr.scale)}",
                                    f"min (dS/dt - sum y_re u): {fmt(lr.min_sigma)}"))


def conservation_check(traj, tol=1e-9):
    """``E(t) - E(0)`` equals the integrated port power."""
    work = np.sum(traj.work, axis=1) if traj.work.size else np.zeros(len(traj))
    gap = np.abs(traj.energy - traj.energy[0] - work)
    ref = max(1.0, float(np.max(np.abs(traj.energy))))
    drift = float(np.max(np.abs(traj.energy - traj.energy[0]))) / ref
    err = float(np.max(gap)) / ref
    return CheckResult("conservation", err <= tol,
                       (f"max |E - E0 - work| / max(1,|E|): {fmt(err)}", f"max |E - E0| / max(1,|E|): {fmt(drift)}"))


def cyclo_lossless_check(traj, tol=1e-8):
    """No entropy production along the run: ``|sigma| <= tol``."""
    m = float(np.max(np.abs(traj.sigma)))
    return CheckResult("cyclo-lossless", m <= tol, (f"max |sigma|: {fmt(m)}",))


def equilibrium_check(sys, traj, tol=1e-6):
    """Final spread of the temperatures ``dE/dS_i`` of an energy-representation system."""
    rel = sys.rel
    if not rel.energy_representation:
        return CheckResult("equilibrium", False, ("needs an energy-representation system",))
    zi = rel.independent(traj.z[-1])
    g = rel.generator.gradient(zi)
    S = [rel.independent_indices.index(i) for i in sys.space.entropy_indices]
    T = g[S]
    spread = float(np.ptp(T)) if T.size else 0.0
    return CheckResult("equilibrium", spread <= tol,
                       (f"final temperatures: {', '.join(fmt(t) for t in T)}", f"final temperature spread: {fmt(spread)}"))


def clausius_identity_check(traj, tol=1e-7):
    """``integral sum y_re u dt = Delta S_total - integral sigma dt``.

    The supply integral is the integrator's accumulator; ``sigma`` is
    integrated with Simpson's rule between input breakpoints and the
    trapezoid across them. The gap is relative to ``max(1, |Delta S|)``.
    """
    lhs = float(np.sum(traj.entropy_supply[-1])) if traj.entropy_supply.size else 0.0
    t, sg = traj.times, traj.sigma
    segs = _segments(t, traj.breakpoints)
    isig = sum(simpson(sg[a:b], t[a:b]) for a, b in segs)
    isig += sum(trapezoid(sg[b - 1:b + 1], t[b - 1:b + 1]) for _, b in segs[:-1])
    dS = float(traj.entropy[-1] - traj.entropy[0])
    rhs = dS - isig
    err = abs(lhs - rhs) / max(1.0, abs(dS))
    return CheckResult("clausius", err <= tol, (f"integral q/T: {fmt(lhs)}", f"Delta S - integral sigma: {fmt(rhs)}",
                                                f"integral sigma: {fmt(isig)}", f"relative identity gap: {fmt(err)}"))
