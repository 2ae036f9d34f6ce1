"""Homogeneous Hamiltonian dynamics, feasibility checks and time integration.

The contact dynamics are lifted to Hamiltonian dynamics in ``(z, p)`` with a
Hamiltonian ``K`` that is homogeneous of degree one in ``p``:

    dz/dt = dK/dp,    dp/dt = -dK/dz.

Most systems here are *field Hamiltonians* ``K = p . X(z, u)``; then the
extensive dynamics are simply ``dz/dt = X`` and ``p`` follows the adjoint
linearization ``dp/dt = -J_X(z, u)^T p``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numdiff
from .constitutive import point_on, residual_on
from .errors import DomainError, GaugeError, SingularHessianError
from .phase_space import CotangentPoint

__all__ = [
    "HomogeneousHamiltonian",
    "FieldHamiltonian",
    "FeasibilityReport",
    "Trajectory",
    "LawResiduals",
    "IntensiveSeries",
    "vector_field",
    "verify_feasible",
    "integrate",
    "law_residuals",
    "intensive_dynamics",
    "stack_columns",
]


def stack_columns(*cols):
    """``np.stack`` along a new last axis after broadcasting the columns."""
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


class HomogeneousHamiltonian:
    """``K(z, p, u) = K_a(z, p) + sum_j K_c[j](z, p) u_j``.

    Derivatives are taken by fourth-order central differences. Pass
    ``K_full`` instead of ``K_c`` for a Hamiltonian that is not affine in
    the inputs; ``K_a`` is then ``K_full(z, p, 0)``.

    Parameters
    ----------
    space : ExtensiveSpace
    K_a : callable
        ``K_a(z, p) -> float``.
    K_c : sequence of callable
        One ``K_c(z, p)`` per input.
    input_labels : sequence of str, optional
    K_full : callable, optional
        ``K_full(z, p, u) -> float``.
    n_inputs : int
        Needed only with ``K_full``.
    """

    def __init__(self, space, K_a=None, K_c=(), input_labels=None, K_full=None, n_inputs=None):
        self.space = space
        self.affine = K_full is None
        self._K_full = K_full
        self._K_a = K_a if K_a is not None else (lambda z, p: 0.0)
        self._K_c = tuple(K_c)
        if K_full is None:
            m = len(self._K_c)
        else:
            m = int(n_inputs or 0)
        self.n_inputs = m
        self.input_labels = tuple(input_labels) if input_labels is not None else tuple(
            f"u{j}" for j in range(m))
        if len(self.input_labels) != m:
            raise ValueError("one label per input required")

    def _u(self, u):
        u = np.zeros(self.n_inputs) if u is None else np.atleast_1d(np.asarray(u, dtype=float))
        if u.shape[-1:] != (self.n_inputs,) and self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} inputs, got {u.shape}")
        return u

    def value(self, z, p, u=None):
        u = self._u(u)
        if self._K_full is not None:
            return float(self._K_full(z, p, u))
        return float(self._K_a(z, p) + sum(Kc(z, p) * u[j] for j, Kc in enumerate(self._K_c)))

    def K_a(self, z, p):
        """Drift part (the value at zero input)."""
        if self._K_full is not None:
            return float(self._K_full(z, p, np.zeros(self.n_inputs)))
        return float(self._K_a(z, p))

    def K_c(self, j, z, p):
        """Coefficient of input ``j``; only defined for affine Hamiltonians."""
        if not self.affine:
            raise TypeError("K_c is undefined for a Hamiltonian that is not affine in its inputs")
        return float(self._K_c[j](z, p))

    def dK_dp(self, z, p, u=None):
        u = self._u(u)
        z = np.asarray(z, dtype=float)
        return numdiff.gradient4(lambda q: self.value(z, q, u), np.asarray(p, dtype=float))

    def dK_dz(self, z, p, u=None):
        u = self._u(u)
        p = np.asarray(p, dtype=float)
        return numdiff.gradient4(lambda x: self.value(x, p, u), np.asarray(z, dtype=float))

    def derivatives(self, z, p, u=None):
        """``(dz/dt, dp/dt)``."""
        return self.dK_dp(z, p, u), -self.dK_dz(z, p, u)

    def drift_dp(self, z, p):
        """Gradient of ``K_a`` in ``p``."""
        return self.dK_dp(z, p, np.zeros(self.n_inputs))

    def control_dp(self, z, p):
        """``(n, m)`` matrix of ``dK_c[j]/dp``; affine Hamiltonians only."""
        if not self.affine:
            raise TypeError("control part undefined for non-affine Hamiltonian")
        z = np.asarray(z, dtype=float)
        cols = [numdiff.gradient4(lambda q, Kc=Kc: float(Kc(z, q)), np.asarray(p, dtype=float))
                for Kc in self._K_c]
        return np.stack(cols, axis=-1) if cols else np.zeros((z.size, 0))


class FieldHamiltonian(HomogeneousHamiltonian):
    """``K(z, p, u) = p . X(z, u)`` for a vector field ``X``.

    Parameters
    ----------
    space : ExtensiveSpace
    field : callable
        ``field(z, u) -> X``, broadcasting over leading axes of ``z`` and ``u``.
    n_inputs : int
    input_labels : sequence of str, optional
    jacobian : callable, optional
        Closed-form ``dX/dz`` at a single point; otherwise a batched
        fourth-order difference is used.
    control : callable, optional
        ``control(z) -> (..., n, m)`` input matrix for affine fields.
    affine : bool
        Whether ``X`` is affine in ``u``.
    """

    def __init__(self, space, field, n_inputs=0, input_labels=None, jacobian=None, control=None, affine=True):
        super().__init__(space, None, (), input_labels, K_full=lambda z, p, u: p @ field(z, u),
                         n_inputs=n_inputs)
        self.affine = affine
        self.field = field
        self._jacobian = jacobian
        self._control = control

    @classmethod
    def from_affine(cls, space, drift, control, input_labels=None, jacobian=None):
        """Build ``X(z, u) = drift(z) + control(z) @ u``."""
        def field(z, u):
            G = control(z)
            return drift(z) + np.einsum("...ij,...j->...i", G, u)
        m = np.asarray(control(np.ones(space.n))).shape[-1]
        return cls(space, field, m, input_labels, jacobian, control, True)

    def value(self, z, p, u=None):
        return float(np.asarray(p) @ self.field(np.asarray(z, dtype=float), self._u(u)))

    def K_a(self, z, p):
        return float(np.asarray(p) @ self.field(np.asarray(z, dtype=float), np.zeros(self.n_inputs)))

    def K_c(self, j, z, p):
        if not self.affine:
            raise TypeError("K_c is undefined for a Hamiltonian that is not affine in its inputs")
        return float(np.asarray(p) @ self.control_matrix(z)[:, j])

    def control_matrix(self, z):
        """Input matrix ``G(z)`` with ``X = X(z, 0) + G u``."""
        z = np.asarray(z, dtype=float)
        if self._control is not None:
            return np.asarray(self._control(z), dtype=float)
        m = self.n_inputs
        X0 = np.asarray(self.field(z, np.zeros(m)), dtype=float)
        cols = [np.asarray(self.field(z, e), dtype=float) - X0 for e in np.eye(m)]
        if not cols:
            return np.zeros(z.shape + (0,))
        return np.stack(cols, axis=-1)

    def jacobian(self, z, u=None):
        u = self._u(u)
        z = np.asarray(z, dtype=float)
        if self._jacobian is not None:
            return np.asarray(self._jacobian(z, u), dtype=float)
        return numdiff.jacobian_batched(lambda Z: self.field(Z, u), z)

    def dK_dp(self, z, p, u=None):
        return np.asarray(self.field(np.asarray(z, dtype=float), self._u(u)), dtype=float)

    def dK_dz(self, z, p, u=None):
        return self.jacobian(z, u).T @ np.asarray(p, dtype=float)

    def derivatives(self, z, p, u=None):
        u = self._u(u)
        z = np.asarray(z, dtype=float)
        if self._jacobian is not None:
            return self.dK_dp(z, p, u), -(self.jacobian(z, u).T @ p)
        # one batched evaluation for the field and its Jacobian
        n = z.size
        h = 1e-3 * (1.0 + np.abs(z))
        pts = np.repeat(z[None, :], 4 * n + 1, axis=0)
        for i in range(n):
            pts[1 + 4 * i:5 + 4 * i, i] += numdiff._OFFSETS * h[i]
        vals = np.asarray(self.field(pts, u), dtype=float)
        X = vals[0]
        J = np.einsum("k,ikm->mi", numdiff._WEIGHTS, vals[1:].reshape(n, 4, -1)) / h[None, :]
        return X, -(J.T @ p)

    def drift_dp(self, z, p):
        return np.asarray(self.field(np.asarray(z, dtype=float), np.zeros(self.n_inputs)), dtype=float)

    def control_dp(self, z, p):
        return self.control_matrix(z)


def vector_field(K, pt, u=None):
    """Hamiltonian vector field ``(dz/dt, dp/dt)`` of ``K`` at ``pt``."""
    return K.derivatives(pt.z, pt.p, u)


@dataclass(frozen=True)
class FeasibilityReport:
    """Values of the feasibility conditions over a sample of points on L.

    ``min_entropy_rate`` is the smallest ``sum_S dK_a/dp_S`` (summed over
    all entropy coordinates, so composites are judged on total entropy).
    """

    max_K_a: float
    max_K_c: float
    max_energy_rate: float
    min_entropy_rate: float
    scale: float
    tol: float
    violations: tuple = ()

    @property
    def passed(self):
        return not self.violations

    def summary(self):
        lines = [
            f"max |K_a| on L: {self.max_K_a:.6g}",
            f"max |K_c| on L: {self.max_K_c:.6g}",
            f"max |dK_a/dp_E| on L: {self.max_energy_rate:.6g}",
            f"min dK_a/dp_S on L: {self.min_entropy_rate:.6g}",
        ]
        return "\n".join(lines)


def verify_feasible(K, rel, samples, inputs=None, tol=1e-9):
    """Check that ``K`` vanishes on L and respects the First and Second Law.

    Parameters
    ----------
    K : HomogeneousHamiltonian
    rel : ConstitutiveRelation
    samples : iterable of CotangentPoint
        Points on L.
    inputs : sequence of array, optional
        Input values used to test non-affine Hamiltonians (``K(z, p, u) = 0``).
    tol : float
        Relative tolerance; the absolute threshold is ``tol * scale`` with
        ``scale = 1 + max |p| * max |dK/dp|`` over the samples.
    """
    space = rel.space
    e, S = space.energy_index, list(space.entropy_indices)
    max_ka = max_kc = max_de = 0.0
    min_ds = np.inf
    scale = 1.0
    m = K.n_inputs
    if inputs is None:
        rng = np.random.default_rng(0)
        inputs = [rng.normal(size=m) for _ in range(3)]
    for pt in samples:
        z, p = pt.z, pt.p
        grad_a = K.drift_dp(z, p)
        scale = max(scale, 1.0 + np.max(np.abs(p)) * np.max(np.abs(grad_a)))
        max_ka = max(max_ka, abs(K.K_a(z, p)))
        if K.affine:
            G = K.control_dp(z, p)
            if m:
                scale = max(scale, 1.0 + np.max(np.abs(p)) * np.max(np.abs(G)))
            for j in range(m):
                max_kc = max(max_kc, abs(K.K_c(j, z, p)))
        else:
            for u in inputs:
                max_kc = max(max_kc, abs(K.value(z, p, u)))
        max_de = max(max_de, abs(grad_a[e]))
        rate = float(np.sum(grad_a[S])) if S else 0.0
        min_ds = min(min_ds, rate)
    if min_ds == np.inf:
        min_ds = 0.0
    thr = tol * scale
    v = []
    if max_ka > thr:
        v.append(f"max |K_a| on L = {max_ka:.3e} > {thr:.1e}")
    if max_kc > thr:
        v.append(f"max |K_c| on L = {max_kc:.3e} > {thr:.1e}")
    if max_de > thr:
        v.append(f"max |dK_a/dp_E| on L = {max_de:.3e} > {thr:.1e} (energy not conserved)")
    if min_ds < -thr:
        v.append(f"min dK_a/dp_S on L = {min_ds:.3e} < 0 (negative entropy production)")
    return FeasibilityReport(max_ka, max_kc, max_de, min_ds, scale, thr, tuple(v))


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Time samples of a simulation.

    ``work`` and ``entropy_supply`` hold the running integrals of
    ``y_p,j u_j`` and ``y_re,j u_j`` per port (integrated with the state).
    ``status`` is None for a complete run, otherwise the truncation cause.
    """

    times: np.ndarray
    z: np.ndarray
    p: np.ndarray
    u: np.ndarray
    y_p: np.ndarray
    y_re: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    sigma: np.ndarray
    residual: np.ndarray
    work: np.ndarray
    entropy_supply: np.ndarray
    coordinate_names: tuple
    input_labels: tuple
    breakpoints: np.ndarray = field(default_factory=lambda: np.empty(0))
    status: Optional[str] = None

    def __len__(self):
        return self.times.size

    @property
    def complete(self):
        return self.status is None

    def state(self, k):
        return CotangentPoint(self.z[k], self.p[k])

    def states(self):
        return [self.state(k) for k in range(len(self))]

    def columns(self):
        """Column names of the delimited-text form."""
        return (["t"] + [f"z:{n}" for n in self.coordinate_names] + [f"p:{n}" for n in self.coordinate_names]
                + [f"u:{l}" for l in self.input_labels] + [f"y_p:{l}" for l in self.input_labels]
                + [f"y_re:{l}" for l in self.input_labels] + ["E", "S_total", "sigma", "residual"])

    def table(self):
        return np.column_stack([self.times, self.z, self.p, self.u, self.y_p, self.y_re,
                                self.energy, self.entropy, self.sigma, self.residual])

    def to_tsv(self, path):
        """Write tab-separated samples with 17 significant digits."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\t".join(self.columns()) + "\n")
            for row in self.table():
                fh.write("\t".join(format(float(x), ".17g") for x in row) + "\n")
        return path

    @classmethod
    def from_tsv(cls, path):
        """Read a file written by :meth:`to_tsv` (running integrals are not stored)."""
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            data = np.array([[float(x) for x in line.split("\t")] for line in fh if line.strip()])
        data = data.reshape(-1, len(header))
        names = tuple(h[2:] for h in header if h.startswith("z:"))
        labels = tuple(h[2:] for h in header if h.startswith("u:"))
        n, m = len(names), len(labels)
        col = 1
        parts = []
        for width in (n, n, m, m, m):
            parts.append(data[:, col:col + width])
            col += width
        E, S, sig, res = (data[:, col + i] for i in range(4))
        zeros = np.zeros((data.shape[0], m))
        return cls(data[:, 0], *parts, E, S, sig, res, zeros, zeros.copy(), names, labels)


def _entropy_total(space, z):
    idx = list(space.entropy_indices)
    return float(np.sum(z[idx])) if idx else 0.0


def _grid(tspan, dt):
    t0, t1 = float(tspan[0]), float(tspan[1])
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("tspan must be increasing")
    n = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
    return np.linspace(t0, t1, n + 1)


def integrate(sys, u_signal, z0_indep=None, tspan=(0.0, 1.0), dt=1e-3, project=False, gauge=None,
              scale=1.0, start=None, tol_law=1e-8):
    """Classical fourth-order Runge-Kutta integration of ``(z, p)``.

    Parameters
    ----------
    sys : PortThermoSystem
    u_signal : Signal or None
        Inputs; None means all inputs zero.
    z0_indep : array
        Initial independent coordinates; the start point is
        ``point_on(sys.rel, z0_indep, scale)``.
    tspan : (float, float)
    dt : float
        Step size; the grid is uniform with ``ceil(span / dt)`` steps.
    project : bool
        Re-synchronize ``z_dep`` and ``p`` from the generator after every
        step, normalizing ``p[gauge] = -1``.
    gauge : int, optional
        Gauge index for projection (default: the dependent coordinate).
    scale : float
        Ray scale of the initial ``p``.
    start : CotangentPoint, optional
        Explicit initial point (overrides ``z0_indep`` and ``scale``).
    tol_law : float
        Steps producing ``sigma`` below ``-tol_law`` (relative) stop the run.

    Returns
    -------
    Trajectory
        Truncated with ``status`` set when the state leaves the domain or
        the Second Law is violated.
    """
    from .signals import Constant

    rel, K = sys.rel, sys.K
    space = rel.space
    m = K.n_inputs
    sig = u_signal if u_signal is not None else Constant(np.zeros(m))
    if m and sig.n_inputs != m:
        raise ValueError(f"signal provides {sig.n_inputs} inputs, system has {m}")
    if start is None:
        start = point_on(rel, z0_indep, scale)
    g_idx = rel.dependent_index if gauge is None else space.resolve(gauge)
    times = _grid(tspan, dt)
    bps = np.asarray(getattr(sig, "breakpoints", np.empty(0)), dtype=float)
    n = space.n
    S_idx = list(space.entropy_indices)

    def rhs(z, p, u):
        dz, dp = K.derivatives(z, p, u)
        yp, yre = sys.outputs(z, p, u)
        return dz, dp, yp * u, yre * u

    def rk4(z, p, w, s, ta, tb):
        h = tb - ta
        uc, um, ue = sig(ta), sig(0.5 * (ta + tb)), sig.left(tb)
        k1 = rhs(z, p, uc)
        k2 = rhs(z + 0.5 * h * k1[0], p + 0.5 * h * k1[1], um)
        k3 = rhs(z + 0.5 * h * k2[0], p + 0.5 * h * k2[1], um)
        k4 = rhs(z + h * k3[0], p + h * k3[1], ue)
        out = []
        for i, y in enumerate((z, p, w, s)):
            out.append(y + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        return out

    N = times.size
    rec = {k: [] for k in ("z", "p", "u", "yp", "yre", "E", "S", "sig", "res", "w", "s")}

    def record(z, p, t, w, s):
        u = sig(t) if m else np.zeros(0)
        sys.check_state(z)
        dz = K.dK_dp(z, p, u)
        yp, yre = sys.outputs(z, p, u)
        sigma = (float(np.sum(dz[S_idx])) if S_idx else 0.0) - float(yre @ u)
        pt = CotangentPoint(z, p)
        rec["z"].append(z)
        rec["p"].append(p)
        rec["u"].append(u)
        rec["yp"].append(yp)
        rec["yre"].append(yre)
        rec["E"].append(z[space.energy_index])
        rec["S"].append(_entropy_total(space, z))
        rec["sig"].append(sigma)
        rec["res"].append(residual_on(rel, pt))
        rec["w"].append(w)
        rec["s"].append(s)
        return sigma, abs(float(np.sum(np.abs(dz[S_idx])))) + abs(float(np.abs(yre) @ np.abs(u)))

    status = None
    z, p = np.array(start.z, dtype=float), np.array(start.p, dtype=float)
    w, s = np.zeros(m), np.zeros(m)
    try:
        record(z, p, times[0], w, s)
    except DomainError as exc:
        raise DomainError(exc.constraint, "initial state") from None
    kept = 1
    for k in range(N - 1):
        ta, tb = times[k], times[k + 1]
        inner = bps[(bps > ta) & (bps < tb)]
        nodes = [ta, *inner.tolist(), tb]
        try:
            for a, b in zip(nodes[:-1], nodes[1:]):
                z, p, w, s = rk4(z, p, w, s, a, b)
            if not (np.all(np.isfinite(z)) and np.all(np.isfinite(p))):
                raise DomainError("finite state", "non-finite value after step")
            if project:
                zi = rel.independent(z)
                pu = point_on(rel, zi, 1.0)
                if pu.p[g_idx] == 0:
                    raise GaugeError(f"gauge coordinate {g_idx} has zero co-variable")
                z = np.array(pu.z)
                p = np.array(pu.p) * (-1.0 / pu.p[g_idx])
            sigma, mag = record(z, p, tb, w, s)
        except DomainError as exc:
            status = f"domain exit at t={tb:.6g}: {exc.constraint}"
            for v in rec.values():
                del v[kept:]
            break
        if sigma < -tol_law * max(1.0, mag):
            status = f"second-law violation at t={tb:.6g}: sigma={sigma:.3e}"
            for v in rec.values():
                del v[kept:]
            break
        kept += 1
    t_out = times[:kept]
    arr = {k: np.array(v, dtype=float) for k, v in rec.items()}
    mm = (kept, m)
    return Trajectory(
        t_out, arr["z"].reshape(kept, n), arr["p"].reshape(kept, n), arr["u"].reshape(mm),
        arr["yp"].reshape(mm), arr["yre"].reshape(mm), arr["E"], arr["S"], arr["sig"], arr["res"],
        arr["w"].reshape(mm), arr["s"].reshape(mm), tuple(space.names), tuple(K.input_labels),
        bps.copy(), status,
    )


# ---------------------------------------------------------------------------
# diagnostics along trajectories

# sixth-order seven-point stencils: central inside, one-sided at the three edge samples
_C7 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_E7 = [np.array([-147.0, 360.0, -450.0, 400.0, -225.0, 72.0, -10.0]) / 60.0,
       np.array([-10.0, -77.0, 150.0, -100.0, 50.0, -15.0, 2.0]) / 60.0,
       np.array([2.0, -24.0, -35.0, 80.0, -30.0, 8.0, -1.0]) / 60.0]


def _derivative(f, h):
    """Sixth-order finite-difference derivative of uniformly spaced samples."""
    L = f.size
    d = np.full(L, np.nan)
    if L >= 7:
        acc = np.zeros(L - 6)
        for i, w in enumerate(_C7):
            acc += w * f[i:L - 6 + i]
        d[3:L - 3] = acc / h
        r = f[::-1]
        for j, w in enumerate(_E7):
            d[j] = w @ f[:7] / h
            d[L - 1 - j] = -(w @ r[:7]) / h
    elif L >= 3:
        d[:] = np.gradient(f, h, edge_order=2)
    elif L == 2:
        d[:] = (f[1] - f[0]) / h
    return d


def _segments(times, breakpoints):
    cuts = [0]
    for b in np.sort(np.asarray(breakpoints, dtype=float)):
        k = int(np.searchsorted(times, b, side="left"))
        if 0 < k < times.size and (not cuts or k > cuts[-1]):
            cuts.append(k)
    cuts.append(times.size)
    return [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def time_derivative(traj, values):
    """Derivative of a sampled series, split at input breakpoints."""
    values = np.asarray(values, dtype=float)
    out = np.full(values.shape, np.nan)
    for a, b in _segments(traj.times, traj.breakpoints):
        if b - a >= 2:
            h = (traj.times[b - 1] - traj.times[a]) / (b - a - 1)
            out[a:b] = _derivative(values[a:b], h)
    return out


@dataclass(frozen=True)
class LawResiduals:
    """First-Law and entropy-balance residual series.

    ``first_law = dE/dt - sum y_p u`` and ``sigma = dS_total/dt - sum y_re u``
    with time derivatives from finite differences of the samples.
    """

    times: np.ndarray
    first_law: np.ndarray
    sigma: np.ndarray
    scale: float

    @property
    def max_first_law(self):
        return float(np.nanmax(np.abs(self.first_law)))

    @property
    def min_sigma(self):
        return float(np.nanmin(self.sigma))


def law_residuals(traj, sys=None):
    """First and Second Law residuals along ``traj`` (see :class:`LawResiduals`)."""
    dE = time_derivative(traj, traj.energy)
    dS = time_derivative(traj, traj.entropy)
    power = np.sum(traj.y_p * traj.u, axis=1)
    supply = np.sum(traj.y_re * traj.u, axis=1)
    fl = dE - power
    scale = max(1.0, float(np.nanmax(np.abs(dE))), float(np.nanmax(np.abs(power))))
    return LawResiduals(traj.times, fl, dS - supply, scale)


@dataclass(frozen=True)
class IntensiveSeries:
    times: np.ndarray
    gamma: np.ndarray
    gamma_dot: np.ndarray
    labels: tuple
    failure_time: Optional[float] = None


def intensive_dynamics(sys, traj, subset=None, cond_limit=1e14):
    """Intensive variables ``gamma = grad f(z_tilde)`` and their rates.

    ``gamma_dot = Hess f(z_tilde) . dz_tilde/dt`` with ``dz/dt`` from the
    vector field at the recorded samples. ``subset`` selects independent
    coordinates (names or positions); default all. Stops at the first sample
    with a numerically singular Hessian and records its time.
    """
    rel = sys.rel
    indep = rel.independent_indices
    if subset is None:
        sel = list(range(len(indep)))
    else:
        sel = []
        for s in subset:
            idx = rel.space.index(s) if isinstance(s, str) else indep[int(s)]
            sel.append(indep.index(idx))
    gam, gdot, ts = [], [], []
    fail = None
    for k in range(len(traj)):
        z, p, u = traj.z[k], traj.p[k], traj.u[k]
        zi = rel.independent(z)
        H = rel.generator.hessian(zi)
        if not np.all(np.isfinite(H)) or np.linalg.cond(H) > cond_limit:
            fail = float(traj.times[k])
            break
        dz = sys.K.dK_dp(z, p, u)
        dzi = rel.independent(dz)
        gam.append(rel.generator.gradient(zi)[sel])
        gdot.append((H @ dzi)[sel])
        ts.append(traj.times[k])
    labels = tuple(rel.space.names[indep[j]] for j in sel)
    k = len(sel)
    return IntensiveSeries(np.array(ts), np.array(gam).reshape(-1, k), np.array(gdot).reshape(-1, k),
                           labels, fail)
