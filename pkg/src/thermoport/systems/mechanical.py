"""Mass, spring, damper, the mass-spring-damper and the gas-filled piston."""

import numpy as np

from ..constitutive import Caloric, ConstitutiveRelation, GeneratingFunction, IdealGas, ideal_gas
from ..dynamics import FieldHamiltonian, stack_columns
from ..phase_space import ExtensiveSpace
from ..ports import POWER, Port, PortThermoSystem
from .thermal import _reference_entropy, _temperature_sampler, compartment_relation

__all__ = [
    "mass",
    "spring",
    "damper",
    "mass_spring_damper",
    "gas_piston_damper",
    "ideal_gas_system",
    "flow_port_system",
]


def mass(m=1.0, label="mass"):
    """Kinetic storage ``E = pi^2 / (2 m)`` driven by a force; ``y_p = pi/m``."""
    space = ExtensiveSpace(("E", "pi"), 0, None, units=("J", "kg*m/s"))
    rel = ConstitutiveRelation(
        GeneratingFunction(space, 0, lambda zi: zi[..., 0] ** 2 / (2 * m), lambda zi: zi / m,
                           lambda zi: np.full(np.shape(zi) + (1,), 1.0 / m)), label)

    def field(z, u):
        return stack_columns(z[..., 1] / m * u[..., 0], u[..., 0])

    def jac(z, u):
        return np.array([[0.0, u[0] / m], [0.0, 0.0]])

    def control(z):
        return stack_columns(z[..., 1] / m, np.ones_like(z[..., 1]))[..., None]

    K = FieldHamiltonian(space, field, 1, ["force"], jacobian=jac, control=control)
    port = Port("force", POWER, 0, input_unit="N", output_unit="m/s")
    return PortThermoSystem(rel, K, [port], label, sampler=lambda rng: rng.uniform(-2, 2, 1),
                            default_state=np.array([1.0]), params={"m": m})


def spring(k=1.0, label="spring"):
    """Potential storage ``E = k w^2 / 2`` driven by a velocity; ``y_p = k w``."""
    space = ExtensiveSpace(("E", "w"), 0, None, units=("J", "m"))
    rel = ConstitutiveRelation(
        GeneratingFunction(space, 0, lambda zi: 0.5 * k * zi[..., 0] ** 2, lambda zi: k * zi,
                           lambda zi: np.full(np.shape(zi) + (1,), float(k))), label)

    def field(z, u):
        return stack_columns(k * z[..., 1] * u[..., 0], u[..., 0])

    def jac(z, u):
        return np.array([[0.0, k * u[0]], [0.0, 0.0]])

    def control(z):
        return stack_columns(k * z[..., 1], np.ones_like(z[..., 1]))[..., None]

    K = FieldHamiltonian(space, field, 1, ["velocity"], jacobian=jac, control=control)
    port = Port("velocity", POWER, 0, input_unit="m/s", output_unit="N")
    return PortThermoSystem(rel, K, [port], label, sampler=lambda rng: rng.uniform(-2, 2, 1),
                            default_state=np.array([0.0]), params={"k": k})


def damper(d=1.0, caloric=None, label="damper"):
    """Friction converting mechanical power ``d u^2`` into internal energy.

    The Hamiltonian ``(p_U + p_S / U'(S)) d u^2`` is quadratic in the input,
    so the port declares its outputs: ``y_p = d u`` (a force, with
    feedthrough) and ``y_re = 0``.
    """
    caloric = caloric or Caloric.constant_heat_capacity(1.0)
    rel = compartment_relation(caloric, label)

    def field(z, u):
        r = d * u[..., 0] ** 2
        return stack_columns(r, r / caloric.temperature(z[..., 1]))

    def jac(z, u):
        T = float(caloric.temperature(z[1]))
        return np.array([[0.0, 0.0], [0.0, -d * u[0] ** 2 * float(caloric.dtemperature(z[1])) / T ** 2]])

    K = FieldHamiltonian(rel.space, field, 1, ["velocity"], jacobian=jac, affine=False)
    port = Port("velocity", POWER, 0, power=lambda z, u: d * u, entropy=lambda z, u: 0.0 * u,
                feedthrough=True, input_unit="m/s", output_unit="N")
    return PortThermoSystem(rel, K, [port], label, sampler=_temperature_sampler(caloric, (250.0, 450.0)),
                            default_state=np.array([_reference_entropy(caloric)]), params={"d": d})


def mass_spring_damper(m=1.0, k=1.0, d=0.5, caloric=None, label="msd"):
    """Monolithic mass-spring-damper with the damper heat kept as internal energy.

    Coordinates ``(E, S, w, pi)`` with ``E = k w^2/2 + pi^2/(2m) + U(S)``;
    one force port with ``y_p = pi/m``.
    """
    caloric = caloric or Caloric.constant_heat_capacity(1.0)
    space = ExtensiveSpace(("E", "S", "w", "pi"), 0, 1, units=("J", "J/K", "m", "kg*m/s"))

    def value(zi):
        S, w, pi = zi[..., 0], zi[..., 1], zi[..., 2]
        return 0.5 * k * w ** 2 + pi ** 2 / (2 * m) + caloric.energy(S)

    def grad(zi):
        S, w, pi = zi[..., 0], zi[..., 1], zi[..., 2]
        return stack_columns(caloric.temperature(S), k * w, pi / m)

    def hess(zi):
        H = np.zeros(np.shape(zi) + (3,))
        H[..., 0, 0] = caloric.dtemperature(zi[..., 0])
        H[..., 1, 1] = k
        H[..., 2, 2] = 1.0 / m
        return H

    rel = ConstitutiveRelation(GeneratingFunction(space, 0, value, grad, hess), label)

    def field(z, u):
        S, w, pi = z[..., 1], z[..., 2], z[..., 3]
        v = pi / m
        f = u[..., 0]
        return stack_columns(v * f, d * v ** 2 / caloric.temperature(S), v, -k * w - d * v + f)

    K = FieldHamiltonian(space, field, 1, ["force"])
    port = Port("force", POWER, 0, input_unit="N", output_unit="m/s")
    s_sampler = _temperature_sampler(caloric, (250.0, 450.0))
    return PortThermoSystem(
        rel, K, [port], label,
        sampler=lambda rng: np.concatenate([s_sampler(rng), rng.uniform(-2, 2, 2)]),
        default_state=np.array([_reference_entropy(caloric), 1.0, 0.0]),
        params={"m": m, "k": k, "d": d},
    )


def gas_piston_damper(m=1000.0, d=50.0, gas=None, label="gas_piston"):
    """Gas in a cylinder closed by a damped piston of mass ``m``.

    Coordinates ``(E, S, V, pi)`` with ``E = U(S, V) + pi^2/(2m)``; the
    friction heat stays in the gas. One force port with ``y_p = pi/m``.

    Parameters
    ----------
    gas : ConstitutiveRelation, optional
        Energy-representation ``U(S, V)``; defaults to a monatomic ideal gas.
    """
    gas = gas or ideal_gas(1.5 * 8.314)
    g = gas.generator
    space = ExtensiveSpace(("E", "S", "V", "pi"), 0, 1, units=("J", "J/K", "m^3", "kg*m/s"))

    def value(zi):
        return g.value(zi[..., :2]) + zi[..., 2] ** 2 / (2 * m)

    def grad(zi):
        return np.concatenate([g.gradient(zi[..., :2]), zi[..., 2:3] / m], axis=-1)

    def hess(zi):
        H = np.zeros(np.shape(zi) + (3,))
        H[..., :2, :2] = g.hessian(zi[..., :2])
        H[..., 2, 2] = 1.0 / m
        return H

    cons = [(name, lambda zi, pred=pred: pred(zi[..., :2])) for name, pred in g.constraints]
    rel = ConstitutiveRelation(GeneratingFunction(space, 0, value, grad, hess, cons), label, gas.substance)

    def field(z, u):
        dU = g.gradient(z[..., 1:3])
        v = z[..., 3] / m
        f = u[..., 0]
        return stack_columns(v * f, d * v ** 2 / dU[..., 0], v, -dU[..., 1] - d * v + f)

    K = FieldHamiltonian(space, field, 1, ["force"])
    port = Port("force", POWER, 0, input_unit="N", output_unit="m/s")
    sub = gas.substance if isinstance(gas.substance, IdealGas) else None

    def sampler(rng):
        V = rng.uniform(0.6, 1.6)
        if sub is not None:
            S = sub.entropy(rng.uniform(250.0, 450.0), V)
        else:
            S = rng.uniform(-1.0, 1.0)
        return np.array([S, V, rng.uniform(-500.0, 500.0)])

    state = np.array([sub.entropy(300.0, 1.0) if sub else 0.0, 1.0, 0.0])
    return PortThermoSystem(rel, K, [port], label, sampler=sampler, default_state=state,
                            input_scale=200.0, params={"m": m, "d": d})


def flow_port_system(rel, coords, labels=None, label="flow_ports", sampler=None, default_state=None,
                     input_scale=1.0):
    """Energy-representation system driven by the rates of chosen coordinates.

    Port ``j`` sets ``dz_j/dt = u_j``; the energy follows from Gibbs'
    relation, ``dE/dt = sum_j (dE/dz_j) u_j``. The power output is
    ``dE/dz_j`` (``T`` for entropy, ``-P`` for volume) and the
    rate-of-entropy output is 1 for entropy coordinates, else 0.
    """
    if not rel.energy_representation:
        raise ValueError("flow ports need an energy-representation relation")
    space = rel.space
    g = rel.generator
    idx = [space.resolve(c) for c in coords]
    slots = [rel.independent_indices.index(i) for i in idx]
    labels = list(labels) if labels is not None else [f"{space.names[i]}_rate" for i in idx]
    e = space.energy_index
    n, m = space.n, len(idx)

    cols = np.arange(m)
    idx_arr, slot_arr = np.array(idx, dtype=int), np.array(slots, dtype=int)
    indep = np.array(rel.independent_indices, dtype=int)

    def control(z):
        grad = g.gradient(rel.independent(z))
        G = np.zeros(np.shape(z) + (m,))
        G[..., e, cols] = grad[..., slot_arr]
        G[..., idx_arr, cols] = 1.0
        return G

    def field(z, u):
        return np.einsum("...ij,...j->...i", control(z), np.broadcast_to(u, np.shape(z)[:-1] + (m,)))

    def jac(z, u):
        H = g.hessian(rel.independent(z))
        J = np.zeros((n, n))
        J[e, indep] = np.asarray(u, dtype=float) @ H[slot_arr]
        return J

    K = FieldHamiltonian(space, field, m, labels, jacobian=jac, control=control)
    ports = [Port(l, POWER, j) for j, l in enumerate(labels)]
    return PortThermoSystem(rel, K, ports, label, sampler=sampler, default_state=default_state,
                            input_scale=input_scale)


def ideal_gas_system(gas=None, label="ideal_gas"):
    """Ideal gas driven directly by entropy flow ``u_S`` and volume rate ``u_V``.

    ``dE/dt = T u_S - P u_V``; the heat supplied is ``T u_S`` and the work
    done on the gas is ``-P u_V``.
    """
    gas = gas or ideal_gas(1.5 * 8.314)
    sub = gas.substance

    def sampler(rng):
        V = rng.uniform(0.6, 2.5)
        return np.array([sub.entropy(rng.uniform(250.0, 450.0), V), V])

    return flow_port_system(gas, ["S", "V"], ["entropy_flow", "volume_rate"], label, sampler,
                            np.array([sub.entropy(400.0, 1.0), 1.0]), input_scale=0.5)
