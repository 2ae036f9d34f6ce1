"""State properties: generating functions, Lagrangian submanifolds and potentials.

A :class:`GeneratingFunction` expresses one extensive coordinate (energy or
entropy) as a function of the others. Together with the homogeneous
co-variables it defines the submanifold

    L = {(z, p) : z_dep = f(z_indep), p_indep = -p_dep * grad f(z_indep)}.

Generator callables receive the independent coordinates as an array whose
last axis runs over them and are expected to broadcast over leading axes.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numdiff
from .errors import ConvergenceError, DomainError, GaugeError, SingularHessianError
from .phase_space import CotangentPoint, ExtensiveSpace

__all__ = [
    "GeneratingFunction",
    "ConstitutiveRelation",
    "MixedGenerating",
    "Caloric",
    "IdealGas",
    "DualityReport",
    "point_on",
    "residual_on",
    "lie_tangents",
    "partial_legendre",
    "hessian_duality_check",
    "ideal_gas",
    "quadratic_energy",
]


class GeneratingFunction:
    """One extensive coordinate as a function of the remaining ones.

    Parameters
    ----------
    space : ExtensiveSpace
    dependent_index : int or str
        Coordinate expressed by ``value`` (energy index for the energy
        representation, entropy index for the entropy representation).
    value : callable
        ``value(zi) -> float`` on the independent coordinates (in space order).
    gradient, hessian : callable, optional
        Closed forms; finite differences are used when omitted.
    constraints : sequence of (str, callable)
        Named admissibility predicates ``pred(zi) -> bool``.
    """

    def __init__(self, space, dependent_index, value, gradient=None, hessian=None, constraints=()):
        self.space = space
        self.dependent_index = space.resolve(dependent_index)
        self.independent_indices = tuple(i for i in range(space.n) if i != self.dependent_index)
        self._indep_array = np.array(self.independent_indices, dtype=int)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.constraints = tuple(constraints)

    @property
    def n_indep(self):
        return len(self.independent_indices)

    @property
    def has_closed_gradient(self):
        return self._gradient is not None

    def check_domain(self, zi):
        zi = np.asarray(zi, dtype=float)
        for name, pred in self.constraints:
            ok = np.asarray(pred(zi))
            if not np.all(ok):
                raise DomainError(name)

    def value(self, zi):
        zi = np.asarray(zi, dtype=float)
        self.check_domain(zi)
        return self._value(zi)

    def gradient(self, zi):
        zi = np.asarray(zi, dtype=float)
        self.check_domain(zi)
        if self._gradient is not None:
            return np.asarray(self._gradient(zi), dtype=float)
        if zi.ndim == 1:
            return numdiff.gradient(self._value, zi)
        flat = zi.reshape(-1, zi.shape[-1])
        g = np.array([numdiff.gradient(self._value, row) for row in flat])
        return g.reshape(zi.shape)

    def fd_gradient(self, zi):
        """Finite-difference gradient, ignoring any closed form."""
        return numdiff.gradient(self._value, np.asarray(zi, dtype=float))

    def hessian(self, zi):
        zi = np.asarray(zi, dtype=float)
        self.check_domain(zi)
        if self._hessian is not None:
            return np.asarray(self._hessian(zi), dtype=float)
        return self.fd_hessian(zi)

    def fd_hessian(self, zi):
        """Finite-difference Hessian (from the gradient when it is closed-form)."""
        zi = np.asarray(zi, dtype=float)
        grad = self._gradient
        return numdiff.hessian(self._value, zi, grad=None if grad is None else grad)


@dataclass(frozen=True)
class ConstitutiveRelation:
    """A labeled generating function; defines the submanifold L.

    ``substance`` optionally carries the parameter object the relation was
    built from (for example :class:`IdealGas`).
    """

    generator: GeneratingFunction
    label: str = ""
    substance: object = None

    @property
    def space(self):
        return self.generator.space

    @property
    def dependent_index(self):
        return self.generator.dependent_index

    @property
    def independent_indices(self):
        return self.generator.independent_indices

    @property
    def energy_representation(self):
        return self.dependent_index == self.space.energy_index

    def full_z(self, zi):
        """Insert the dependent coordinate; broadcasts over leading axes."""
        zi = np.asarray(zi, dtype=float)
        dep = np.asarray(self.generator.value(zi), dtype=float)
        return _insert_last(zi, self.dependent_index, dep)

    def independent(self, z):
        """Drop the dependent coordinate from a full ``z`` (any leading shape)."""
        return np.asarray(z, dtype=float)[..., self.generator._indep_array]


def _insert_last(a, idx, col):
    return np.concatenate([a[..., :idx], col[..., None], a[..., idx:]], axis=-1)


def point_on(rel, z_indep, scale=1.0):
    """Point of L over ``z_indep`` with ``p_dep = -scale``.

    Raises
    ------
    DomainError
        With the name of the violated constraint.
    """
    if scale == 0:
        raise ValueError("scale must be nonzero")
    zi = np.asarray(z_indep, dtype=float)
    if zi.shape != (rel.generator.n_indep,):
        raise ValueError(f"expected {rel.generator.n_indep} independent coordinates, got {zi.shape}")
    gen = rel.generator
    z = np.insert(zi, gen.dependent_index, gen.value(zi))
    p = np.insert(scale * gen.gradient(zi), gen.dependent_index, -scale)
    return CotangentPoint(z, p)


def residual_on(rel, pt):
    """Scaled distance of ``pt`` from L (0 on L up to rounding)."""
    gen = rel.generator
    z, p = pt.z, pt.p
    if z.size != gen.space.n:
        raise ValueError(f"point has {z.size} coordinates, space has {gen.space.n}")
    d = gen.dependent_index
    if p[d] == 0.0:
        raise GaugeError(f"p[{d}] = 0 on the dependent coordinate")
    zi = np.delete(z, d)
    r_z = abs(z[d] - float(gen.value(zi))) / (1.0 + abs(z[d]))
    g = gen.gradient(zi)
    q = np.delete(p, d) / (-p[d])
    r_p = np.max(np.abs(q - g) / (1.0 + np.abs(g))) if g.size else 0.0
    return float(max(r_z, r_p))


def lie_tangents(rel, z_indep):
    """z-components of a basis of tangent vectors of L at ``z_indep``.

    Row k moves independent coordinate k by one unit and the dependent one
    by the matching gradient entry. The ray direction (pure p scaling) has
    zero z-component and is omitted.
    """
    gen = rel.generator
    zi = np.asarray(z_indep, dtype=float)
    g = gen.gradient(zi)
    k = gen.n_indep
    rows = np.zeros((k, gen.space.n))
    for j, i in enumerate(gen.independent_indices):
        rows[j, i] = 1.0
        rows[j, gen.dependent_index] = g[j]
    return rows


# ---------------------------------------------------------------------------
# constitutive building blocks


@dataclass(frozen=True)
class Caloric:
    """Internal energy ``U(S)`` of a single thermal compartment.

    Callables must broadcast. ``temperature`` is ``U'(S)`` and
    ``dtemperature`` is ``U''(S)``.
    """

    energy: Callable
    temperature: Callable
    dtemperature: Callable
    label: str = "custom"

    @classmethod
    def constant_heat_capacity(cls, C=1.0):
        """``U(S) = C exp(S/C)`` so that ``U = C T`` with ``T = exp(S/C)``."""
        if C <= 0:
            raise ValueError("heat capacity must be positive")
        return cls(
            lambda S: C * np.exp(S / C),
            lambda S: np.exp(S / C),
            lambda S: np.exp(S / C) / C,
            f"constant heat capacity C={C:g}",
        )

    @classmethod
    def isothermal(cls, T0):
        """``U(S) = T0 S`` (an infinite reservoir at temperature ``T0``)."""
        if T0 <= 0:
            raise ValueError("temperature must be positive")
        return cls(
            lambda S: T0 * S,
            lambda S: T0 + 0.0 * S,
            lambda S: 0.0 * S,
            f"isothermal T0={T0:g}",
        )

    @classmethod
    def from_function(cls, energy, temperature=None, dtemperature=None, h=1e-5):
        """Wrap a user ``U(S)``; missing derivatives use central differences."""
        if temperature is None:
            temperature = lambda S: (energy(S + h * (1 + np.abs(S))) - energy(S - h * (1 + np.abs(S)))) / (
                2 * h * (1 + np.abs(S)))
        if dtemperature is None:
            dtemperature = lambda S: (temperature(S + h * (1 + np.abs(S))) - temperature(
                S - h * (1 + np.abs(S)))) / (2 * h * (1 + np.abs(S)))
        return cls(energy, temperature, dtemperature, "user")

    def entropy_at(self, T, lo=-1e3, hi=1e3):
        """Invert ``U'(S) = T`` by bisection (``U'`` assumed increasing)."""
        f = lambda S: float(self.temperature(S)) - T
        a, b = lo, hi
        with np.errstate(over="ignore"):
            if f(a) > 0 or f(b) < 0:
                raise ValueError(f"temperature {T} not bracketed on [{lo}, {hi}]")
            for _ in range(200):
                m = 0.5 * (a + b)
                if f(m) < 0:
                    a = m
                else:
                    b = m
        return 0.5 * (a + b)


@dataclass(frozen=True)
class IdealGas:
    """Ideal gas with constant heat capacity.

    ``T(S, V) = exp((S - a - N R ln V) / C_V)`` and ``E = C_V T + W``.
    """

    C_V: float
    R: float = 8.314
    N: float = 1.0
    a: float = 0.0
    W: float = 0.0

    def __post_init__(self):
        if self.C_V <= 0:
            raise ValueError("C_V must be positive")
        if self.N <= 0:
            raise ValueError("N must be positive")

    @property
    def NR(self):
        return self.N * self.R

    def temperature(self, S, V):
        return np.exp((S - self.a - self.NR * np.log(V)) / self.C_V)

    def energy(self, S, V):
        return self.C_V * self.temperature(S, V) + self.W

    def pressure(self, S, V):
        return self.NR * self.temperature(S, V) / V

    def entropy(self, T, V):
        return self.C_V * np.log(T) + self.NR * np.log(V) + self.a

    def helmholtz(self, T, V):
        """``A(T, V) = C_V T + W - T (C_V ln T + N R ln V + a)``."""
        return self.C_V * T + self.W - T * self.entropy(T, V)


def ideal_gas(C_V, R=8.314, N=1.0, a=0.0, W=0.0):
    """Energy-representation relation ``E(S, V)`` of an ideal gas.

    Coordinates are ``(E, S, V)``. ``T = dE/dS`` and ``P = -dE/dV`` satisfy
    ``P V = N R T``.
    """
    gas = IdealGas(C_V, R, N, a, W)
    space = ExtensiveSpace(("E", "S", "V"), 0, 1, units=("J", "J/K", "m^3"))
    NR, C = gas.NR, gas.C_V

    def value(zi):
        return gas.energy(zi[..., 0], zi[..., 1])

    def gradient(zi):
        S, V = zi[..., 0], zi[..., 1]
        T = gas.temperature(S, V)
        return np.stack([T, -NR * T / V], axis=-1)

    def hessian(zi):
        S, V = zi[..., 0], zi[..., 1]
        T = gas.temperature(S, V)
        ess = T / C
        esv = -NR * T / (C * V)
        evv = NR * T / V ** 2 * (NR / C + 1.0)
        return np.stack([np.stack([ess, esv], -1), np.stack([esv, evv], -1)], -2)

    gen = GeneratingFunction(space, 0, value, gradient, hessian, constraints=[("V > 0", lambda zi: zi[..., 1] > 0)])
    return ConstitutiveRelation(gen, "ideal gas", gas)


def quadratic_energy(stiffness, names=None, offset=None):
    """``E(x) = 1/2 (x - offset)^T K (x - offset)`` in energy representation.

    The space has no entropy coordinate (a lossless storage element).
    """
    K = np.atleast_2d(np.asarray(stiffness, dtype=float))
    n = K.shape[0]
    if K.shape != (n, n) or not np.allclose(K, K.T, rtol=0, atol=1e-14 * (1 + np.abs(K).max())):
        raise ValueError("stiffness must be a symmetric square matrix")
    x0 = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    names = tuple(names) if names is not None else ("E",) + tuple(f"x{i}" for i in range(n))
    space = ExtensiveSpace(names, 0, None)

    def value(zi):
        d = zi - x0
        return 0.5 * np.einsum("...i,ij,...j->...", d, K, d)

    def gradient(zi):
        return (zi - x0) @ K

    def hessian(zi):
        return np.broadcast_to(K, np.shape(zi)[:-1] + K.shape).copy()

    return ConstitutiveRelation(GeneratingFunction(space, 0, value, gradient, hessian), "quadratic")


# ---------------------------------------------------------------------------
# partial Legendre transforms


class MixedGenerating:
    """Generating function in mixed extensive/intensive arguments.

    The argument vector has one slot per independent coordinate of the source
    relation; slot k holds ``z_k`` when ``intensive[k]`` is False and the
    conjugate intensive variable ``gamma_k`` otherwise. The plain energy (or
    entropy) function is the case with no intensive slots.

    Use :func:`partial_legendre` to construct instances.
    """

    def __init__(self, relation, intensive, value, gradient, hessian, reconstruct, label=""):
        self.relation = relation
        self.intensive = tuple(bool(b) for b in intensive)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self._reconstruct = reconstruct
        self.label = label

    @classmethod
    def from_relation(cls, rel):
        gen = rel.generator
        return cls(
            rel,
            (False,) * gen.n_indep,
            lambda x: float(gen.value(x)),
            gen.gradient,
            gen.hessian,
            lambda x: point_on(rel, x),
            rel.label,
        )

    @property
    def partition(self):
        """Index sets (extensive slots, intensive slots)."""
        I = tuple(k for k, b in enumerate(self.intensive) if not b)
        J = tuple(k for k, b in enumerate(self.intensive) if b)
        return I, J

    def value(self, args):
        return float(self._value(np.asarray(args, dtype=float)))

    def gradient(self, args):
        return np.asarray(self._gradient(np.asarray(args, dtype=float)), dtype=float)

    def hessian(self, args):
        return np.asarray(self._hessian(np.asarray(args, dtype=float)), dtype=float)

    def reconstruct(self, args):
        """The point of the source submanifold L described by ``args``."""
        return self._reconstruct(np.asarray(args, dtype=float))


def _newton(resid, jac, a0, b_scale, max_iter=50, tol=1e-12):
    a = np.array(a0, dtype=float)
    r = resid(a)
    target = tol * (1.0 + b_scale)
    for _ in range(max_iter):
        nr = np.linalg.norm(r)
        if nr <= target:
            return a
        J = jac(a)
        if not np.all(np.isfinite(J)):
            raise SingularHessianError("non-finite Hessian block during Legendre inversion")
        if np.linalg.cond(J) > 1e14:
            raise SingularHessianError(f"Hessian block over swapped coordinates is singular (cond {np.linalg.cond(J):.2e})")
        step = np.linalg.solve(J, -r)
        t = 1.0
        while True:
            trial = a + t * step
            try:
                r_trial = resid(trial)
                ok = np.all(np.isfinite(r_trial)) and np.linalg.norm(r_trial) < nr
            except (DomainError, SingularHessianError, ConvergenceError):
                ok = False  # trial outside where the (possibly nested) residual is defined
            if ok:
                break
            t *= 0.5
            if t < 1e-10:
                if nr <= 1e3 * target:  # rounding floor
                    return a
                raise ConvergenceError(f"damped Newton stalled with residual {nr:.3e}", last=a)
        a, r = trial, r_trial
        if np.linalg.norm(t * step) <= 4e-16 * (1.0 + np.linalg.norm(a)) and np.linalg.norm(r) <= 1e3 * target:
            return a
    if np.linalg.norm(r) <= target:
        return a
    raise ConvergenceError(f"damped Newton did not converge in {max_iter} iterations "
                           f"(residual {np.linalg.norm(r):.3e})", last=a)


def partial_legendre(obj, swap, guess=None, bracket=None, max_iter=50, tol=1e-12):
    """Partial Legendre transform over the slots ``swap``.

    Extensive slots become intensive via ``gamma = dF/dz`` with new function
    ``F - z gamma`` (for the energy this gives Helmholtz ``A = E - T S``).
    Intensive slots are turned back with ``z = -dF/dgamma`` and ``F + gamma z``.
    Applying the transform twice over the same slots returns the original.

    Parameters
    ----------
    obj : ConstitutiveRelation or MixedGenerating
    swap : sequence of int or str
        Slots to toggle; strings are coordinate names of the source space.
    guess : array or callable, optional
        Starting value(s) of the hidden variables, or ``guess(args)``.
    bracket : sequence of (lo, hi), optional
        Per swapped slot range; a coarse scan inside it picks the start.

    Returns
    -------
    MixedGenerating
    """
    base = obj if isinstance(obj, MixedGenerating) else MixedGenerating.from_relation(obj)
    rel = base.relation
    slots = []
    for s in np.atleast_1d(swap).tolist():
        if isinstance(s, str):
            idx = rel.space.index(s)
            if idx not in rel.independent_indices:
                raise ValueError(f"{s!r} is the dependent coordinate and cannot be swapped")
            slots.append(rel.independent_indices.index(idx))
        else:
            slots.append(int(s))
    K = np.array(sorted(set(slots)), dtype=int)
    if K.size == 0:
        raise ValueError("swap must name at least one slot")
    n = len(base.intensive)
    C = np.array([k for k in range(n) if k not in set(K.tolist())], dtype=int)
    # +1: extensive -> intensive, -1: intensive -> extensive
    sign = np.array([-1.0 if base.intensive[k] else 1.0 for k in K])

    def assemble(a, args):
        full = np.array(args, dtype=float)
        full[K] = a
        return full

    def start(args):
        if guess is not None:
            g = guess(args) if callable(guess) else guess
            return np.atleast_1d(np.asarray(g, dtype=float))
        if bracket is not None:
            grids = [np.linspace(lo, hi, 41) for lo, hi in bracket]
            best, best_r = None, np.inf
            for pt in np.array(np.meshgrid(*grids, indexing="ij")).reshape(K.size, -1).T:
                try:
                    r = np.linalg.norm(sign * base.gradient(assemble(pt, args))[K] - args[K])
                except DomainError:
                    continue
                if np.isfinite(r) and r < best_r:
                    best, best_r = pt, r
            if best is None:
                raise ConvergenceError("no admissible start inside the bracket")
            return best
        return np.asarray(args, dtype=float)[K]

    def solve(args):
        args = np.asarray(args, dtype=float)
        b = args[K]

        def resid(a):
            return sign * base.gradient(assemble(a, args))[K] - b

        def jac(a):
            H = base.hessian(assemble(a, args))
            return sign[:, None] * H[np.ix_(K, K)]

        return _newton(resid, jac, start(args), float(np.linalg.norm(b)), max_iter, tol)

    def value(args):
        a = solve(args)
        full = assemble(a, args)
        return base.value(full) - a @ (sign * args[K])

    def gradient(args):
        a = solve(args)
        full = assemble(a, args)
        g = np.empty(n)
        g[C] = base.gradient(full)[C]
        g[K] = -sign * a
        return g

    def hessian(args):
        a = solve(args)
        H = base.hessian(assemble(a, args))
        Haa = H[np.ix_(K, K)]
        try:
            inv = np.linalg.inv(Haa)
        except np.linalg.LinAlgError:
            raise SingularHessianError("Hessian block over swapped coordinates is singular") from None
        Hac = H[np.ix_(K, C)]
        out = np.empty((n, n))
        out[np.ix_(K, K)] = -(sign[:, None] * inv * sign[None, :])
        kc = sign[:, None] * (inv @ Hac)
        out[np.ix_(K, C)] = kc
        out[np.ix_(C, K)] = kc.T
        out[np.ix_(C, C)] = H[np.ix_(C, C)] - Hac.T @ inv @ Hac
        return out

    def reconstruct(args):
        return base.reconstruct(assemble(solve(args), args))

    intensive = list(base.intensive)
    for k in K:
        intensive[k] = not intensive[k]
    return MixedGenerating(rel, intensive, value, gradient, hessian, reconstruct, base.label)


@dataclass(frozen=True)
class DualityReport:
    """Per-sample ``max |H_E H_E* - I|`` over the swapped block."""

    errors: tuple
    max_error: float
    products: tuple = field(default=(), repr=False)

    def passed(self, tol=1e-6):
        return self.max_error <= tol


def hessian_duality_check(rel, swap, samples, guess=None, bracket=None, rel_step=1e-4):
    """Check that the swapped Hessian blocks of ``E`` and ``E* = -F`` are inverse.

    ``E*`` is the partial transform taken with the kept coordinates fixed;
    its Hessian comes from central differences of ``dE*/dgamma``, which is
    the recovered extensive value of the swapped coordinates.

    Parameters
    ----------
    rel : ConstitutiveRelation
    swap : sequence of int or str
    samples : iterable of array
        Independent coordinates of ``rel``.
    """
    mixed = partial_legendre(rel, swap, guess=guess, bracket=bracket)
    _, K = mixed.partition
    K = np.array(K)
    errors, prods = [], []
    for zi in samples:
        zi = np.asarray(zi, dtype=float)
        H_E = rel.generator.hessian(zi)[np.ix_(K, K)]
        args = zi.copy()
        args[K] = rel.generator.gradient(zi)[K]
        H_star = np.empty((K.size, K.size))
        for j, k in enumerate(K):
            h = rel_step * (1.0 + abs(args[k]))
            ap, am = args.copy(), args.copy()
            ap[k] += h
            am[k] -= h
            # dE*/dgamma = -dF/dgamma = swapped extensive coordinates
            H_star[:, j] = (-mixed.gradient(ap)[K] + mixed.gradient(am)[K]) / (2.0 * h)
        P = H_E @ H_star
        prods.append(P)
        errors.append(float(np.max(np.abs(P - np.eye(K.size)))))
    return DualityReport(tuple(errors), max(errors) if errors else 0.0, tuple(prods))
