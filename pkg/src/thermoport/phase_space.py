"""Geometry of the homogeneous symplectic extension of thermodynamic phase space.

Points are pairs ``(z, p)`` of extensive coordinates and co-extensive
variables with ``p`` away from the zero section. Intensive variables are
read off in a gauge chart, ``gamma_i = p_i / (-p_gauge)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, GaugeError

__all__ = [
    "ExtensiveSpace",
    "CotangentPoint",
    "ContactPoint",
    "HomogeneityReport",
    "liouville_eval",
    "check_homogeneity",
    "gauge_fix",
    "lift_contact",
    "DEFAULT_LAMBDAS",
]

DEFAULT_LAMBDAS = (-2.0, -1.0, 0.5, 1.0, 3.0)


def _frozen(v):
    a = np.array(v, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ExtensiveSpace:
    """Ordered extensive coordinates with designated energy and entropy slots.

    Parameters
    ----------
    names : sequence of str
        Unique coordinate labels.
    energy_index : int
        Position of the energy coordinate.
    entropy_index : int or None
        Position of the (first) entropy coordinate. Purely mechanical
        subsystems such as a mass or a spring carry no entropy and use None.
    units : sequence of str, optional
        SI unit tag per coordinate.
    extra_entropy : sequence of int
        Further entropy coordinates (composites keep one per compartment).
    """

    names: tuple
    energy_index: int = 0
    entropy_index: int = 1
    units: tuple = None
    extra_entropy: tuple = ()

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "extra_entropy", tuple(int(i) for i in self.extra_entropy))
        n = len(names)
        if len(set(names)) != n:
            raise ValueError(f"coordinate names must be unique: {names}")
        if not 0 <= self.energy_index < n:
            raise ValueError(f"energy_index {self.energy_index} out of range for {n} coordinates")
        for i in self.entropy_indices:
            if not 0 <= i < n:
                raise ValueError(f"entropy index {i} out of range for {n} coordinates")
            if i == self.energy_index:
                raise ValueError("energy and entropy indices must differ")
        if self.units is not None:
            units = tuple(self.units)
            if len(units) != n:
                raise DimensionError(f"{len(units)} unit tags for {n} coordinates")
            object.__setattr__(self, "units", units)

    @property
    def n(self):
        return len(self.names)

    @property
    def entropy_indices(self):
        """All entropy coordinates (empty for purely mechanical spaces)."""
        if self.entropy_index is None:
            return self.extra_entropy
        return (self.entropy_index,) + self.extra_entropy

    def index(self, name):
        """Position of coordinate ``name``."""
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no coordinate named {name!r}; have {self.names}") from None

    def resolve(self, key):
        """Accept either a coordinate name or an integer index."""
        if isinstance(key, str):
            return self.index(key)
        i = int(key)
        if not 0 <= i < self.n:
            raise IndexError(f"coordinate index {i} out of range")
        return i


@dataclass(frozen=True)
class CotangentPoint:
    """A point ``(z, p)`` of the cotangent bundle minus the zero section."""

    z: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        z = _frozen(self.z)
        p = _frozen(self.p)
        if z.ndim != 1 or z.shape != p.shape:
            raise DimensionError(f"z and p must be vectors of equal length, got {z.shape} and {p.shape}")
        if not np.any(p):
            raise ValueError("p is the zero vector (zero section is excluded)")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "p", p)

    def scaled(self, lam):
        """The same point on the ray, with ``p`` multiplied by ``lam``."""
        return CotangentPoint(self.z, lam * self.p)


@dataclass(frozen=True)
class ContactPoint:
    """Gauge-chart representation: ``z`` plus intensive coordinates ``gamma``."""

    z: np.ndarray
    gauge_index: int
    gamma: np.ndarray

    def __post_init__(self):
        z = _frozen(self.z)
        g = _frozen(self.gamma)
        if g.shape != (z.size - 1,):
            raise DimensionError(f"gamma needs length {z.size - 1}, got {g.shape}")
        if not 0 <= self.gauge_index < z.size:
            raise IndexError(f"gauge index {self.gauge_index} out of range")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "gamma", g)


def liouville_eval(point, tangent):
    """Evaluate the Liouville form ``sum_i p_i dz_i`` on a tangent vector."""
    v = np.asarray(tangent, dtype=float)
    if v.shape != point.p.shape:
        raise DimensionError(f"tangent has shape {v.shape}, expected {point.p.shape}")
    return float(point.p @ v)


@dataclass(frozen=True)
class HomogeneityReport:
    """Outcome of :func:`check_homogeneity`.

    ``max_rel_error`` is the worst ``|f(z, lam p) - lam**d f(z, p)| / (1 + |f|)``
    over the evaluable lambdas; ``failures`` maps lambdas that could not be
    evaluated to the error message.
    """

    degree: int
    max_rel_error: float
    euler_residual: float
    per_lambda: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)

    def passed(self, tol=1e-12):
        return not self.failures and self.max_rel_error <= tol


def check_homogeneity(fn, point, degree=1, lambdas=DEFAULT_LAMBDAS):
    """Test ``fn(z, p)`` for homogeneity of the given degree in ``p``.

    Parameters
    ----------
    fn : callable
        ``fn(z, p) -> float``.
    point : CotangentPoint
    degree : int
    lambdas : sequence of float
        Nonzero scalings to try.

    Returns
    -------
    HomogeneityReport
        Includes the Euler residual ``|sum p_i df/dp_i - degree f|`` from
        central differences with step ``1e-6 (1 + |p_i|)``.
    """
    lambdas = tuple(float(l) for l in lambdas)
    if not lambdas:
        raise ValueError("lambdas must be nonempty")
    if any(l == 0.0 for l in lambdas):
        raise ValueError("lambdas must be nonzero")
    z, p = point.z, point.p
    f0 = float(fn(z, p))
    per, failures = {}, {}
    for lam in lambdas:
        try:
            f = float(fn(z, lam * p))
        except Exception as exc:  # reported, not raised
            failures[lam] = f"{type(exc).__name__}: {exc}"
            continue
        if not np.isfinite(f):
            failures[lam] = "non-finite value"
            continue
        per[lam] = abs(f - lam ** degree * f0) / (1.0 + abs(f0))
    h = 1e-6 * (1.0 + np.abs(p))
    euler = 0.0
    for i in range(p.size):
        pp = p.copy()
        pm = p.copy()
        pp[i] += h[i]
        pm[i] -= h[i]
        euler += p[i] * (float(fn(z, pp)) - float(fn(z, pm))) / (2.0 * h[i])
    euler_res = abs(euler - degree * f0)
    max_err = max(per.values()) if per else float("inf")
    return HomogeneityReport(degree, max_err, euler_res, per, failures)


def gauge_fix(point, gauge_index):
    """Chart ``(z, p) -> (z, gamma)`` with ``gamma_i = p_i / (-p_gauge)``."""
    z, p = point.z, point.p
    if not 0 <= gauge_index < p.size:
        raise IndexError(f"gauge index {gauge_index} out of range")
    pg = p[gauge_index]
    if pg == 0.0:
        raise GaugeError(f"p[{gauge_index}] = 0; choose another gauge (switch representation)")
    gamma = np.delete(p, gauge_index) / (-pg)
    return ContactPoint(z, gauge_index, gamma)


def lift_contact(cp, scale=1.0):
    """Inverse chart: ``p_gauge = -scale`` and ``p_i = scale * gamma_i``."""
    if scale == 0:
        raise ValueError("scale must be nonzero")
    p = np.insert(scale * cp.gamma, cp.gauge_index, -scale)
    return CotangentPoint(cp.z, p)
