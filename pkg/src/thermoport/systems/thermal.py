"""Heat compartments and the heat exchanger."""

import numpy as np

from ..constitutive import Caloric, ConstitutiveRelation, GeneratingFunction
from ..dynamics import FieldHamiltonian, stack_columns
from ..errors import DomainError
from ..phase_space import ExtensiveSpace
from ..ports import ENTROPY, POWER, Port, PortThermoSystem

__all__ = ["heat_compartment", "heat_exchanger", "compartment_relation"]


def compartment_relation(caloric, label="compartment"):
    """``E = U(S)`` on coordinates ``(E, S)``."""
    space = ExtensiveSpace(("E", "S"), 0, 1, units=("J", "J/K"))
    gen = GeneratingFunction(
        space, 0,
        lambda zi: caloric.energy(zi[..., 0]),
        lambda zi: caloric.temperature(zi[..., 0])[..., None] + 0.0 * zi,
        lambda zi: caloric.dtemperature(zi[..., 0])[..., None, None] + 0.0 * zi[..., None],
    )
    return ConstitutiveRelation(gen, label, caloric)


def _entropy_range(caloric, T_range):
    try:
        return caloric.entropy_at(T_range[0]), caloric.entropy_at(T_range[1])
    except ValueError:  # temperature does not vary with S (reservoir)
        return 0.0, 1.0


def _reference_entropy(caloric, T=300.0):
    try:
        return caloric.entropy_at(T)
    except ValueError:
        return 0.0


def _temperature_sampler(caloric, T_range):
    lo, hi = _entropy_range(caloric, T_range)
    return lambda rng: np.array([rng.uniform(lo, hi)])


def _require_positive_temperature(caloric, probes):
    T = np.asarray(caloric.temperature(np.asarray(probes, dtype=float)))
    if np.any(T <= 0):
        raise DomainError("dE/dS > 0", "energy function must be strictly increasing")


def heat_compartment(caloric=None, input_kind="entropy_flow", n_ports=1, label="compartment",
                     T_range=(250.0, 450.0), T0=300.0):
    """Thermal compartment with ``E = U(S)``.

    Parameters
    ----------
    caloric : Caloric, optional
        Defaults to a unit heat capacity, ``U = exp(S)``.
    input_kind : {"entropy_flow", "heat_flow"}
        ``entropy_flow``: ``dS/dt = u``, power port with ``y_p = T``.
        ``heat_flow``: ``dE/dt = v``, rate-of-entropy port with ``y_re = 1/T``.
    n_ports : int
        Number of identical ports (used for chains of compartments).
    T_range : (float, float)
        Temperature range for sampled states.
    T0 : float
        Temperature of the default state.
    """
    caloric = caloric or Caloric.constant_heat_capacity(1.0)
    rel = compartment_relation(caloric, label)
    sampler = _temperature_sampler(caloric, T_range)
    s0, s1 = _entropy_range(caloric, T_range)
    _require_positive_temperature(caloric, np.linspace(s0, s1, 11))
    if input_kind == "entropy_flow":
        def field(z, u):
            total = np.sum(u, axis=-1)
            return stack_columns(caloric.temperature(z[..., 1]) * total, total)

        def jac(z, u):
            return np.array([[0.0, float(caloric.dtemperature(z[1])) * np.sum(u)], [0.0, 0.0]])

        def column(z):
            return stack_columns(caloric.temperature(z[..., 1]), np.ones_like(z[..., 1]))

        base, kind, units = "entropy_in", POWER, ("W/K", "K")
    elif input_kind == "heat_flow":
        def field(z, u):
            total = np.sum(u, axis=-1)
            return stack_columns(total, total / caloric.temperature(z[..., 1]))

        def jac(z, u):
            T = float(caloric.temperature(z[1]))
            return np.array([[0.0, 0.0], [0.0, -np.sum(u) * float(caloric.dtemperature(z[1])) / T ** 2]])

        def column(z):
            return stack_columns(np.ones_like(z[..., 1]), 1.0 / caloric.temperature(z[..., 1]))

        base, kind, units = "heat_in", ENTROPY, ("W", "1/K")
    else:
        raise ValueError(f"input_kind must be 'entropy_flow' or 'heat_flow', got {input_kind!r}")
    labels = [base] if n_ports == 1 else [f"{base}{j}" for j in range(n_ports)]
    def control(z):
        return np.repeat(column(z)[..., None], n_ports, axis=-1)

    K = FieldHamiltonian(rel.space, field, n_ports, labels, jacobian=jac, control=control)
    ports = [Port(l, kind, j, input_unit=units[0], output_unit=units[1]) for j, l in enumerate(labels)]
    return PortThermoSystem(rel, K, ports, label, sampler=sampler,
                            default_state=np.array([_reference_entropy(caloric, T0)]),
                            input_scale=1.0 if input_kind == "entropy_flow" else 300.0,
                            params={"input_kind": input_kind})


def heat_exchanger(caloric1=None, caloric2=None, lam=1.0, label="heat_exchanger", T_range=(250.0, 450.0)):
    """Two compartments exchanging heat by Fourier's law, no ports.

    ``dS1/dt = lam (1/T1 - 1/T2) T2`` and ``dS2/dt = -lam (1/T1 - 1/T2) T1``,
    so the energy ``E1(S1) + E2(S2)`` is conserved and
    ``d(S1 + S2)/dt = lam (1/T1 - 1/T2)(T2 - T1) >= 0``.
    """
    c1 = caloric1 or Caloric.constant_heat_capacity(1.0)
    c2 = caloric2 or Caloric.constant_heat_capacity(1.0)
    space = ExtensiveSpace(("E", "S1", "S2"), 0, 1, units=("J", "J/K", "J/K"), extra_entropy=(2,))

    def value(zi):
        return c1.energy(zi[..., 0]) + c2.energy(zi[..., 1])

    def grad(zi):
        return stack_columns(c1.temperature(zi[..., 0]), c2.temperature(zi[..., 1]))

    def hess(zi):
        a = c1.dtemperature(zi[..., 0])
        b = c2.dtemperature(zi[..., 1])
        zero = 0.0 * a
        return np.stack([stack_columns(a, zero), stack_columns(zero, b)], axis=-2)

    rel = ConstitutiveRelation(GeneratingFunction(space, 0, value, grad, hess), label)

    def field(z, u):
        T1 = c1.temperature(z[..., 1])
        T2 = c2.temperature(z[..., 2])
        f = lam * (1.0 / T1 - 1.0 / T2)
        return stack_columns(0.0 * T1, f * T2, -f * T1)

    def jac(z, u):
        T1, T2 = c1.temperature(z[..., 1]), c2.temperature(z[..., 2])
        d1, d2 = c1.dtemperature(z[..., 1]), c2.dtemperature(z[..., 2])
        f = lam * (1.0 / T1 - 1.0 / T2)
        f1, f2 = -lam * d1 / T1 ** 2, lam * d2 / T2 ** 2
        J = np.zeros(np.shape(z) + (3,))
        J[..., 1, 1] = f1 * T2
        J[..., 1, 2] = f2 * T2 + f * d2
        J[..., 2, 1] = -f1 * T1 - f * d1
        J[..., 2, 2] = -f2 * T1
        return J

    K = FieldHamiltonian(space, field, 0, [], jacobian=jac)
    s1 = _temperature_sampler(c1, T_range)
    s2 = _temperature_sampler(c2, T_range)
    return PortThermoSystem(
        rel, K, [], label, sampler=lambda rng: np.concatenate([s1(rng), s2(rng)]),
        default_state=np.array([_reference_entropy(c1, 400.0), _reference_entropy(c2, 300.0)]),
        params={"lam": lam},
    )
