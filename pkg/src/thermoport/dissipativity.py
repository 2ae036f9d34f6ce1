"""Cyclo-dissipativity tools: storage certification, available storage, cycles.

Supply rates are functions of the external variables ``(u, y)``. A storage
function ``F`` certifies (cyclo-)dissipativity through the differential
dissipation inequality ``dF/dx . f(x, u) <= s(u, h(x, u))``; equality
certifies cyclo-losslessness.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numdiff
from .constitutive import IdealGas, point_on
from .dynamics import integrate
from .errors import CycleNotClosedError, DomainError
from .phase_space import CotangentPoint

__all__ = [
    "simpson",
    "trapezoid",
    "SupplyRate",
    "StorageCandidate",
    "StorageReport",
    "verify_storage",
    "system_storage_check",
    "port_power_supply",
    "discretize",
    "linear_scalar_step",
    "DPResult",
    "available_storage_dp",
    "ClausiusResult",
    "clausius_integral",
    "CycleVerdict",
    "cycle_check",
    "Leg",
    "CycleRecord",
    "carnot_cycle",
    "simulate_carnot",
    "UniquenessReport",
    "uniqueness_probe",
    "trapezoid",
]


_trapz = getattr(np, "trapezoid", None) or np.trapz


def trapezoid(values, times):
    """Trapezoidal integral of samples over ``times``."""
    return float(_trapz(np.asarray(values, dtype=float), np.asarray(times, dtype=float)))


def simpson(values, times):
    """Composite Simpson integral of uniformly spaced samples.

    An odd interval count closes with the three-point rule for the last
    interval; fewer than three samples fall back to the trapezoid.
    """
    y = np.asarray(values, dtype=float)
    t = np.asarray(times, dtype=float)
    n = y.size - 1
    if n < 2:
        return trapezoid(y, t)
    h = (t[-1] - t[0]) / n
    m = n - (n % 2)
    total = h / 3.0 * (y[0] + y[m] + 4.0 * np.sum(y[1:m:2]) + 2.0 * np.sum(y[2:m - 1:2]))
    if n % 2:
        total += h / 12.0 * (-y[n - 2] + 8.0 * y[n - 1] + 5.0 * y[n])
    return float(total)


# ---------------------------------------------------------------------------
# supply rates and storage functions


@dataclass(frozen=True)
class SupplyRate:
    """``s(u, y)``; broadcasts over leading axes of ``u`` and ``y``."""

    label: str
    fn: Callable

    def __call__(self, u, y):
        return self.fn(np.asarray(u, dtype=float), np.asarray(y, dtype=float))

    @classmethod
    def power(cls, label="y.u"):
        """``s = y^T u``."""
        return cls(label, lambda u, y: np.sum(np.asarray(y) * np.asarray(u), axis=-1))

    @classmethod
    def negated(cls, other):
        return cls(f"-({other.label})", lambda u, y: -other(u, y))


def port_power_supply():
    """``s = sum_j y_p,j u_j`` for port-thermodynamic systems."""
    return SupplyRate.power("sum y_p u")


@dataclass(frozen=True)
class StorageCandidate:
    """A state function ``F(x)`` offered as storage; gradient optional."""

    F: Callable
    label: str = "F"
    gradient: Optional[Callable] = None

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=float)
        return numdiff.gradient4(lambda q: float(self.F(q)), x)


@dataclass(frozen=True)
class StorageReport:
    """Dissipation-inequality residuals ``dF/dx . f - s`` over samples."""

    label: str
    residuals: np.ndarray
    max_residual: float
    max_abs_residual: float
    scale: float
    tol: float
    equality: bool
    worst_sample: Optional[tuple] = None

    @property
    def passed(self):
        if self.equality:
            return self.max_abs_residual <= self.tol * self.scale
        return self.max_residual <= self.tol * self.scale

    def summary(self):
        mode = "cyclo-lossless (equality)" if self.equality else "dissipation inequality"
        verdict = "PASS" if self.passed else "FAIL"
        return (f"storage {self.label}: {mode}: {verdict}\n"
                f"max residual: {self.max_residual:.6g}\nmax |residual|: {self.max_abs_residual:.6g}\n"
                f"scale: {self.scale:.6g}")


def verify_storage(F, dynamics, output, supply, samples, equality=False, tol=1e-9):
    """Evaluate the differential dissipation inequality at sampled states and inputs.

    Parameters
    ----------
    F : StorageCandidate
    dynamics : callable
        ``dynamics(x, u) -> dx/dt``.
    output : callable
        ``output(x, u) -> y``.
    supply : SupplyRate
    samples : iterable of (x, u)
    equality : bool
        Require ``|residual| <= tol * scale`` (cyclo-lossless) instead of
        ``residual <= tol * scale``.
    tol : float
        Relative tolerance; ``scale = 1 + max |dF/dx . f| + max |s|``.
    """
    res, worst, scale = [], None, 1.0
    rate_max = supply_max = 0.0
    for x, u in samples:
        x = np.asarray(x, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        rate = float(F.grad(x) @ np.asarray(dynamics(x, u), dtype=float))
        s = float(supply(u, np.atleast_1d(np.asarray(output(x, u), dtype=float))))
        r = rate - s
        rate_max = max(rate_max, abs(rate))
        supply_max = max(supply_max, abs(s))
        if worst is None or r > worst[0]:
            worst = (r, x.tolist(), u.tolist())
        res.append(r)
    res = np.array(res)
    scale = 1.0 + rate_max + supply_max
    return StorageReport(F.label, res, float(res.max(initial=-np.inf)), float(np.abs(res).max(initial=0.0)),
                         scale, tol, equality, worst)


def system_storage_check(sys, rng, n=50, tol=1e-9):
    """Certify ``F = E`` as cyclo-lossless storage for ``s = sum y_p u`` on a system.

    States are sampled with the system sampler and lifted to L; inputs are
    drawn at the system's input scale.
    """
    rel = sys.rel
    e = sys.space.energy_index
    dep = rel.dependent_index
    m = sys.n_inputs

    def full(x):
        return point_on(rel, x, 1.0)

    def dynamics(x, u):
        pt = full(x)
        return rel.independent(sys.K.dK_dp(pt.z, pt.p, u))

    def output(x, u):
        pt = full(x)
        return sys.outputs(pt.z, pt.p, u)[0]

    if dep == e:
        def energy(x):
            return float(rel.generator.value(x))
        grad = lambda x: rel.generator.gradient(x)
    else:
        pos = rel.independent_indices.index(e)
        energy = lambda x: float(x[pos])
        grad = lambda x: np.eye(len(x))[pos]
    F = StorageCandidate(energy, "E", grad)
    samples = [(sys.sample_state(rng), rng.normal(size=m) * sys.input_scale) for _ in range(n)]
    return verify_storage(F, dynamics, output, port_power_supply(), samples, equality=True, tol=tol)


# ---------------------------------------------------------------------------
# available storage by dynamic programming


def discretize(f, supply, dt, substeps=4):
    """One-step map of ``dx/dt = f(x, u)`` with its supply integral under constant input.

    Uses ``substeps`` classical Runge-Kutta steps on ``(x, w)`` with
    ``dw/dt = supply(x, u)``. ``f`` and ``supply`` must broadcast over leading
    axes; returns ``step(x, u) -> (x_next, w)``.
    """
    h = dt / substeps

    def rhs(x, u):
        return np.asarray(f(x, u), dtype=float), np.asarray(supply(x, u), dtype=float)

    def step(x, u):
        x = np.asarray(x, dtype=float)
        w = np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(u)[:-1]))
        x = np.broadcast_to(x, w.shape + x.shape[-1:]).copy()
        for _ in range(substeps):
            k1 = rhs(x, u)
            k2 = rhs(x + 0.5 * h * k1[0], u)
            k3 = rhs(x + 0.5 * h * k2[0], u)
            k4 = rhs(x + h * k3[0], u)
            x = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            w = w + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        return x, w

    return step


def linear_scalar_step(a, b, c, dt, sign=1.0):
    """Exact zero-order-hold step of ``dx/dt = a x + b u``, ``y = c x`` with supply ``sign * y u``.

    Returns ``step(x, u) -> (x_next, w)`` for :func:`available_storage_dp`;
    ``x`` has a trailing axis of length one and ``u`` one of length one.
    """
    if a == 0:
        phi, psi = 1.0, dt
        chi = 0.5 * dt ** 2
    else:
        e = np.exp(a * dt)
        phi, psi = e, (e - 1.0) / a
        chi = (psi - dt) / a

    def step(x, u):
        x0, uu = x[..., 0], u[..., 0]
        xn = phi * x0 + b * psi * uu
        w = sign * c * uu * (psi * x0 + b * chi * uu)
        return xn[..., None], w

    return step


@dataclass
class DPResult:
    """Tabulated available storage.

    ``value`` has the grid shape; ``policy`` holds the maximizing input per
    cell (NaN where stopping is optimal); ``history`` records
    ``max value`` after every sweep.
    """

    grids: tuple
    value: np.ndarray
    policy: np.ndarray
    history: np.ndarray
    diverged: bool
    iterations: int
    ground_value: Optional[float]
    interpolation: str
    message: str
    snapshots: dict = field(default_factory=dict)

    def at(self, x):
        """Value at a point by the interpolation rule used in the sweeps."""
        idx, wts = _interp_weights(self.grids, np.atleast_2d(np.asarray(x, dtype=float)), self.interpolation)
        return _apply(self.value.ravel(), idx, wts, self.interpolation)[0]

    def summary(self):
        lines = [
            f"interpolation: {self.interpolation}",
            f"iterations: {self.iterations}",
            f"max F_a: {float(np.nanmax(np.where(np.isfinite(self.value), self.value, np.nan))):.6g}",
            f"F_a(ground): {self.ground_value:.6g}" if self.ground_value is not None else "F_a(ground): n/a",
            f"diverged: {self.diverged}",
            f"note: {self.message}",
        ]
        return "\n".join(lines)


def _interp_weights(grids, pts, mode):
    """Corner indices (flat) and weights of each point; index -1 marks outside."""
    d = len(grids)
    shape = tuple(g.size for g in grids)
    npts = pts.shape[0]
    lo_idx = np.empty((npts, d), dtype=int)
    frac = np.empty((npts, d))
    inside = np.ones(npts, dtype=bool)
    for k, g in enumerate(grids):
        x = pts[:, k]
        tol = 1e-12 * (g[-1] - g[0])
        inside &= (x >= g[0] - tol) & (x <= g[-1] + tol)
        i = np.clip(np.searchsorted(g, x, side="right") - 1, 0, g.size - 2)
        lo_idx[:, k] = i
        frac[:, k] = np.clip((x - g[i]) / (g[i + 1] - g[i]), 0.0, 1.0)
    corners = np.array(np.meshgrid(*[[0, 1]] * d, indexing="ij")).reshape(d, -1).T
    idx = np.empty((npts, corners.shape[0]), dtype=int)
    wts = np.empty((npts, corners.shape[0]))
    for c, off in enumerate(corners):
        ii = lo_idx + off
        idx[:, c] = np.ravel_multi_index(tuple(ii.T), shape)
        wts[:, c] = np.prod(np.where(off == 1, frac, 1.0 - frac), axis=1)
    if mode == "lower":
        # only corners the point actually touches take part in the minimum
        wts = (wts > 1e-14).astype(float)
    idx[~inside] = -1
    return idx, wts


def _apply(V, idx, wts, mode):
    out = np.full(idx.shape[0], -np.inf)
    ok = idx[:, 0] >= 0
    vals = V[np.where(idx >= 0, idx, 0)]
    if mode == "lower":
        masked = np.where(wts > 0, vals, np.inf)
        out[ok] = masked[ok].min(axis=1)
    else:
        out[ok] = np.sum(vals[ok] * wts[ok], axis=1)
    return out


def available_storage_dp(step, grids, inputs, horizon, ground=None, interpolation="lower",
                         divergence_tol=1e-3, snapshot_at=()):
    """Value iteration for the available storage ``F_a(x) = sup (-sum w)``.

    ``V_0 = 0`` and ``V_{k+1}(x) = max(0, max_u [-w(x, u) + V_k(x_next)])``:
    the extractor may stop at any time, so ``V_k`` is the best extraction
    within ``k`` steps and is nondecreasing in ``k``. States leaving the
    grid are forbidden (value ``-inf``).

    Parameters
    ----------
    step : callable
        ``step(x, u) -> (x_next, w)`` with ``w`` the supply absorbed over one
        step; broadcasts over leading axes (see :func:`discretize`).
    grids : sequence of 1-D arrays
        One or two uniform coordinate grids.
    inputs : array
        Candidate inputs, shape ``(k,)`` or ``(k, m)``.
    horizon : int
        Number of sweeps (steps of the discrete system).
    ground : array, optional
        Ground state ``x*`` whose value is reported.
    interpolation : {"lower", "linear"}
        ``lower`` takes the minimum over the corners of the cell containing
        ``x_next``, which never over-estimates a nondecreasing-in-horizon
        value and keeps ``F_a`` below any storage that is monotone between
        grid nodes; ``linear`` is multilinear interpolation.
    divergence_tol : float
        The run is flagged divergent when the maximal value still grows by
        more than ``divergence_tol * max(1, max V)`` over the last tenth of
        the sweeps.
    snapshot_at : sequence of int
        Sweep counts at which to keep a copy of the value table.
    """
    grids = tuple(np.asarray(g, dtype=float) for g in grids)
    d = len(grids)
    if d not in (1, 2):
        raise ValueError("available_storage_dp supports 1- or 2-dimensional states")
    if interpolation not in ("lower", "linear"):
        raise ValueError(f"interpolation must be 'lower' or 'linear', got {interpolation!r}")
    if horizon < 1:
        raise ValueError("horizon must be at least one sweep")
    shape = tuple(g.size for g in grids)
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d)
    U = np.asarray(inputs, dtype=float)
    U = U[:, None] if U.ndim == 1 else U
    nu, nx = U.shape[0], mesh.shape[0]
    X = np.repeat(mesh[:, None, :], nu, axis=1)
    UU = np.broadcast_to(U[None, :, :], (nx, nu, U.shape[1]))
    x_next, w = step(X, UU)
    x_next = np.asarray(x_next).reshape(nx * nu, d)
    w = np.asarray(w, dtype=float).reshape(nx, nu)
    idx, wts = _interp_weights(grids, x_next, interpolation)

    V = np.zeros(nx)
    hist = np.empty(horizon)
    snaps = {}
    for k in range(horizon):
        cont = _apply(V, idx, wts, interpolation).reshape(nx, nu) - w
        best = cont.max(axis=1)
        V = np.maximum(0.0, best)
        hist[k] = V.max()
        if k + 1 in snapshot_at:
            snaps[k + 1] = V.reshape(shape).copy()
    cont = _apply(V, idx, wts, interpolation).reshape(nx, nu) - w
    arg = cont.argmax(axis=1)
    stop = cont.max(axis=1) <= 0.0
    pol = U[arg].copy()
    pol[stop] = np.nan
    tail = max(1, horizon // 10)
    start = hist[horizon - tail - 1] if horizon > tail else 0.0
    growth = hist[-1] - start
    diverged = bool(growth > divergence_tol * max(1.0, hist[-1]))
    Vg = V.reshape(shape)
    gv = None
    if ground is not None:
        gi, gw = _interp_weights(grids, np.atleast_2d(np.asarray(ground, dtype=float)), interpolation)
        gv = float(_apply(V, gi, gw, interpolation)[0])
    msg = ("not dissipative at this resolution: available storage still growing"
           if diverged else "converged on the gridded domain")
    msg += "; assumes reachability of the grid from the ground state"
    return DPResult(grids, Vg, pol.reshape(shape + (U.shape[1],)), hist, diverged, horizon, gv,
                    interpolation, msg, snaps)


# ---------------------------------------------------------------------------
# Clausius integrals and cycles


def _state_gap(traj, coords=None):
    z0, z1 = traj.z[0], traj.z[-1]
    sel = slice(None) if coords is None else list(coords)
    a, b = np.atleast_1d(z0[sel]), np.atleast_1d(z1[sel])
    return float(np.max(np.abs(b - a) / (1.0 + np.abs(a))))


@dataclass(frozen=True)
class ClausiusResult:
    """``value = integral of sum q/T dt``; ``verdict`` is meaningful for closed paths."""

    value: float
    closed: bool
    gap: float
    verdict: str


def clausius_integral(traj, q_series, T_series, closed_tol=1e-9, tol=1e-8, coords=None):
    """Trapezoidal ``integral sum_k q_k / T_k dt`` along a trajectory.

    Parameters
    ----------
    q_series, T_series : array
        Heat flows and the temperatures at which they enter, shape ``(N,)``
        or ``(N, k)``.
    closed_tol : float
        Relative endpoint tolerance for calling the path a cycle.
    tol : float
        A closed path with integral above ``tol`` is flagged as a
        Second-Law violation.

    Raises
    ------
    DomainError
        If a temperature is not positive.
    """
    q = np.asarray(q_series, dtype=float)
    T = np.asarray(T_series, dtype=float)
    if np.any(T <= 0):
        raise DomainError("T > 0", "non-positive temperature on the path")
    ratio = q / T
    if ratio.ndim == 2:
        ratio = ratio.sum(axis=1)
    val = trapezoid(ratio, traj.times)
    gap = _state_gap(traj, coords)
    closed = gap <= closed_tol
    if not closed:
        verdict = "open path"
    elif val > tol:
        verdict = "second-law violation"
    else:
        verdict = "consistent"
    return ClausiusResult(val, closed, gap, verdict)


@dataclass(frozen=True)
class CycleVerdict:
    integral: float
    gap: float
    consistent: bool
    supply: str


def cycle_check(traj, supply, coords=None, closed_tol=1e-9, tol=1e-8, outputs="y_p"):
    """Net supply ``integral s dt`` over a state-closed trajectory.

    Parameters
    ----------
    supply : SupplyRate or array
        Supply rate evaluated on ``(traj.u, traj.<outputs>)``, or precomputed samples.
    coords : sequence of int, optional
        Coordinates required to close (default: all).

    Raises
    ------
    CycleNotClosedError
        If the endpoint gap exceeds ``closed_tol``.
    """
    gap = _state_gap(traj, coords)
    if gap > closed_tol:
        raise CycleNotClosedError(gap, closed_tol)
    if isinstance(supply, SupplyRate):
        vals = supply(traj.u, getattr(traj, outputs))
        label = supply.label
    else:
        vals = np.asarray(supply, dtype=float)
        label = "samples"
    val = trapezoid(vals, traj.times)
    return CycleVerdict(val, gap, val >= -tol, label)


# ---------------------------------------------------------------------------
# Carnot cycle


@dataclass(frozen=True)
class Leg:
    """One leg; ``Q`` is heat supplied to the gas and ``W`` work done by it."""

    kind: str
    T_start: float
    T_end: float
    V_start: float
    V_end: float
    Q: float
    W: float


@dataclass(frozen=True)
class CycleRecord:
    legs: tuple
    W_net: float
    state_closed: bool
    closure_gap: float
    T_h: float
    T_c: float

    @property
    def Q_h(self):
        return sum(l.Q for l in self.legs if l.Q > 0)

    @property
    def Q_c(self):
        return sum(l.Q for l in self.legs if l.Q < 0)

    @property
    def efficiency(self):
        return self.W_net / self.Q_h if self.Q_h else 0.0

    @property
    def clausius_sum(self):
        """``Q_h/T_h + Q_c/T_c``."""
        return self.Q_h / self.T_h + self.Q_c / self.T_c

    def table(self):
        """Rows ``(kind, T_start, T_end, V_start, V_end, Q, W)``."""
        return [(l.kind, l.T_start, l.T_end, l.V_start, l.V_end, l.Q, l.W) for l in self.legs]


def _as_gas(gas):
    if isinstance(gas, IdealGas):
        return gas
    sub = getattr(gas, "substance", None)
    if isinstance(sub, IdealGas):
        return sub
    raise TypeError("expected an IdealGas or an ideal-gas ConstitutiveRelation")


def carnot_cycle(gas, T_h, T_c, V_1, V_2, closed_tol=1e-9):
    """Analytic Carnot cycle of an ideal gas.

    Legs: isotherm at ``T_h`` from ``V_1`` to ``V_2``, adiabat down to
    ``T_c``, isotherm at ``T_c``, adiabat back to ``(T_h, V_1)``. Along an
    adiabat ``T V^(N R / C_V)`` is constant.
    """
    g = _as_gas(gas)
    if not (T_h >= T_c > 0):
        raise ValueError("need T_h >= T_c > 0")
    if not (V_2 > V_1 > 0):
        raise ValueError("need V_2 > V_1 > 0")
    NR, C = g.NR, g.C_V
    ratio = (T_h / T_c) ** (C / NR)
    V_3, V_4 = V_2 * ratio, V_1 * ratio
    legs = (
        Leg("isothermal", T_h, T_h, V_1, V_2, NR * T_h * np.log(V_2 / V_1), NR * T_h * np.log(V_2 / V_1)),
        Leg("adiabatic", T_h, T_c, V_2, V_3, 0.0, C * (T_h - T_c)),
        Leg("isothermal", T_c, T_c, V_3, V_4, NR * T_c * np.log(V_4 / V_3), NR * T_c * np.log(V_4 / V_3)),
        Leg("adiabatic", T_c, T_h, V_4, V_4 * (T_c / T_h) ** (C / NR), 0.0, C * (T_c - T_h)),
    )
    gap = abs(legs[-1].V_end - V_1) / V_1
    if gap > closed_tol:
        raise RuntimeError(f"Carnot geometry does not close: gap {gap:.3e}")
    return CycleRecord(legs, float(sum(l.W for l in legs)), True, gap, float(T_h), float(T_c))


def simulate_carnot(gas, T_h, T_c, V_1, V_2, dt=1e-4, leg_time=0.1, closed_tol=1e-9):
    """Carnot cycle re-simulated on the ideal gas driven by entropy flow and volume rate.

    Each leg lasts ``leg_time``. Isotherms move ``V`` linearly and feed
    ``u_S = N R u_V / V(t)``; adiabats move ``V`` linearly with ``u_S = 0``.
    Heats and works come from the integrated port powers (``T u_S`` and
    ``-P u_V``).

    Returns
    -------
    CycleRecord, list of Trajectory
    """
    from .signals import FunctionSignal
    from .systems.mechanical import ideal_gas_system
    from .constitutive import ideal_gas

    g = _as_gas(gas)
    rel = ideal_gas(g.C_V, g.R, g.N, g.a, g.W)
    sys = ideal_gas_system(rel)
    ref = carnot_cycle(g, T_h, T_c, V_1, V_2)
    pt = point_on(rel, np.array([g.entropy(T_h, V_1), V_1]), 1.0)
    start_z = np.array(pt.z)
    legs, trajs = [], []
    for leg in ref.legs:
        rate = (leg.V_end - leg.V_start) / leg_time
        V0 = leg.V_start
        if leg.kind == "isothermal":
            fn = lambda t, r=rate, V0=V0: np.array([g.NR * r / (V0 + r * t), r])
        else:
            fn = lambda t, r=rate: np.array([0.0, r])
        tr = integrate(sys, FunctionSignal(fn, 2), tspan=(0.0, leg_time), dt=dt, start=pt)
        if not tr.complete:
            raise RuntimeError(f"Carnot leg failed: {tr.status}")
        z1 = tr.z[-1]
        T_end = float(g.temperature(z1[1], z1[2]))
        T_start = float(g.temperature(tr.z[0][1], tr.z[0][2]))
        Q = float(tr.work[-1, 0])
        W = -float(tr.work[-1, 1])
        legs.append(Leg(leg.kind, T_start, T_end, float(tr.z[0][2]), float(z1[2]), Q, W))
        trajs.append(tr)
        pt = tr.state(len(tr) - 1)
    gap = float(np.max(np.abs(np.array(pt.z) - start_z) / (1.0 + np.abs(start_z))))
    rec = CycleRecord(tuple(legs), float(sum(l.W for l in legs)), gap <= closed_tol, gap, float(T_h), float(T_c))
    return rec, trajs


# ---------------------------------------------------------------------------
# uniqueness of the entropy as storage


@dataclass(frozen=True)
class UniquenessReport:
    """Entropy estimates per test state and their spread across loops."""

    values: dict
    spreads: dict
    max_spread: float
    tol: float
    ground_value: float

    @property
    def passed(self):
        return self.max_spread <= self.tol


def _entropy_supply(traj):
    return float(np.sum(traj.entropy_supply[-1])) if traj.entropy_supply.size else 0.0


def uniqueness_probe(ground_state, loops, closed_tol=1e-9, lossless_tol=1e-7, tol=1e-7, supply=None):
    """Path independence of ``S(x) = integral q/T`` along lossless loops.

    Parameters
    ----------
    ground_state : array
        Full state ``z`` of the ground state.
    loops : dict
        ``label -> list of (outbound, inbound)`` trajectory pairs; the
        outbound leg runs from the ground state to the test state and the
        inbound leg back.
    supply : callable, optional
        ``supply(traj) -> integral of q/T``; defaults to the integrated
        rate-of-entropy supply ``sum_j integral y_re,j u_j``.

    Raises
    ------
    CycleNotClosedError
        A loop does not start and end at the ground state.
    ValueError
        A loop is not lossless (``|oint q/T| > lossless_tol``).
    """
    supply = supply or _entropy_supply
    g = np.asarray(ground_state, dtype=float)
    values, spreads = {}, {}
    for label, pairs in loops.items():
        est = []
        for out, back in pairs:
            for z in (out.z[0], back.z[-1]):
                gap = float(np.max(np.abs(z - g) / (1.0 + np.abs(g))))
                if gap > closed_tol:
                    raise CycleNotClosedError(gap, closed_tol)
            gap = float(np.max(np.abs(out.z[-1] - back.z[0]) / (1.0 + np.abs(back.z[0]))))
            if gap > closed_tol:
                raise CycleNotClosedError(gap, closed_tol)
            s_out, s_back = supply(out), supply(back)
            if abs(s_out + s_back) > lossless_tol:
                raise ValueError(f"loop for {label!r} is not lossless: oint q/T = {s_out + s_back:.3e}")
            est.append(s_out)
        values[label] = est
        spreads[label] = float(np.ptp(est)) if est else 0.0
    gv = 0.0
    if "ground" in values:
        gv = float(np.mean(values["ground"]))
    return UniquenessReport(values, spreads, max(spreads.values(), default=0.0), tol, gv)
