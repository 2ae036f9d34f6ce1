"""Cyclo-passive systems extended by an entropy coordinate, and force/flow pairs.

A cyclo-passive input-state-output system ``dx/dt = f(x) + g(x) u``,
``y = h(x)`` with storage ``H`` satisfies ``grad H . g = h^T`` and
``rho(x) = -grad H . f >= 0``. Adding a heat compartment ``U(S)`` that
absorbs the dissipated power, ``dS/dt = rho / U'(S)``, turns it into a
cyclo-lossless system with total energy ``E = H(x) + U(S)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import numdiff
from ..constitutive import Caloric, ConstitutiveRelation, GeneratingFunction
from ..dynamics import FieldHamiltonian
from ..errors import NotCycloPassiveError
from ..phase_space import ExtensiveSpace
from ..ports import POWER, Port, PortThermoSystem
from .thermal import _entropy_range, _reference_entropy

__all__ = [
    "extend_cyclo_passive",
    "ForceFlowPair",
    "force_flow_pair",
    "ph_force_flow",
    "heat_exchanger_force_flow",
    "piston_force_flow",
    "linear_cyclo_example",
]

ONSAGER_PASS = "PASS"
ONSAGER_FAIL = "FAIL"
ONSAGER_NA = "NOT-APPLICABLE"


def _batched_gradient(H, grad_H):
    if grad_H is not None:
        return grad_H

    def grad(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return numdiff.gradient_batched(H, x)
        flat = x.reshape(-1, x.shape[-1])
        return np.array([numdiff.gradient_batched(H, xi) for xi in flat]).reshape(x.shape)
    return grad


def extend_cyclo_passive(f, g, h, H, caloric=None, grad_H=None, n_states=None, n_inputs=None,
                         state_names=None, input_labels=None, state_sampler=None, x0=None,
                         samples=50, rng=None, tol=1e-9, match_tol=1e-6, label="cyclo"):
    """Port-thermodynamic extension of a cyclo-passive system.

    Parameters
    ----------
    f, g, h : callable
        ``f(x) -> (..., nx)``, ``g(x) -> (..., nx, m)``, ``h(x) -> (..., m)``;
        all must broadcast over leading axes.
    H : callable
        Storage ``H(x)``, broadcasting.
    caloric : Caloric, optional
        Heat compartment absorbing the dissipation; unit heat capacity by default.
    grad_H : callable, optional
        Closed-form gradient of ``H``; fourth-order differences otherwise.
    state_sampler : callable, optional
        ``state_sampler(rng) -> x`` used for the passivity check and tests;
        standard normal draws by default.
    samples : int
        Number of sampled states for the passivity check.
    tol, match_tol : float
        Allowed negative ``rho`` and relative mismatch of ``grad H . g``
        against ``h^T`` (the latter absorbs difference-gradient error).

    Returns
    -------
    PortThermoSystem
        Coordinates ``(E, S, x...)``, one power port per input with
        ``y_p = h(x)``.

    Raises
    ------
    NotCycloPassiveError
        If ``grad H . g != h^T`` or ``rho < 0`` at a sampled state.
    """
    caloric = caloric or Caloric.constant_heat_capacity(1.0)
    gH = _batched_gradient(H, grad_H)
    rng = rng or np.random.default_rng(12345)
    if n_states is None:
        n_states = int(np.asarray(x0 if x0 is not None else f(np.zeros(1))).shape[-1])
    nx = int(n_states)
    if n_inputs is None:
        n_inputs = int(np.asarray(g(np.zeros(nx))).shape[-1])
    m = int(n_inputs)
    sampler_x = state_sampler or (lambda r: r.normal(size=nx))

    for _ in range(samples):
        x = np.asarray(sampler_x(rng), dtype=float)
        grad = np.asarray(gH(x), dtype=float)
        G = np.asarray(g(x), dtype=float).reshape(nx, m)
        y = np.atleast_1d(np.asarray(h(x), dtype=float))
        mismatch = np.max(np.abs(grad @ G - y), initial=0.0)
        if mismatch > match_tol * (1.0 + np.max(np.abs(y), initial=0.0)):
            raise NotCycloPassiveError(f"grad H . g differs from h^T by {mismatch:.3e} at x={x.tolist()}")
        rho = -float(grad @ np.asarray(f(x), dtype=float))
        if rho < -tol * (1.0 + np.max(np.abs(grad))):
            raise NotCycloPassiveError(f"dissipated power rho = {rho:.3e} < 0 at x={x.tolist()}")

    names = ("E", "S") + tuple(state_names or (f"x{i}" for i in range(nx)))
    labels = list(input_labels or [f"u{j}" for j in range(m)])
    space = ExtensiveSpace(names, 0, 1)

    def value(zi):
        return caloric.energy(zi[..., 0]) + H(zi[..., 1:])

    def gradient(zi):
        return np.concatenate([caloric.temperature(zi[..., 0])[..., None] + 0.0 * zi[..., :1],
                               gH(zi[..., 1:])], axis=-1)

    rel = ConstitutiveRelation(GeneratingFunction(space, 0, value, gradient), label)

    def field(z, u):
        x = z[..., 2:]
        grad = gH(x)
        rho = -np.sum(grad * f(x), axis=-1)
        dx = f(x) + np.einsum("...ij,...j->...i", g(x), u)
        dE = np.sum(h(x) * u, axis=-1)
        dS = rho / caloric.temperature(z[..., 1])
        return np.concatenate([dE[..., None], dS[..., None], dx], axis=-1)

    K = FieldHamiltonian(space, field, m, labels)
    ports = [Port(l, POWER, j) for j, l in enumerate(labels)]
    lo, hi = _entropy_range(caloric, (250.0, 450.0))

    def sampler(r):
        return np.concatenate([[r.uniform(lo, hi)], np.asarray(sampler_x(r), dtype=float)])

    default = np.concatenate([[_reference_entropy(caloric)],
                              np.asarray(x0, dtype=float) if x0 is not None else np.ones(nx)])
    return PortThermoSystem(rel, K, ports, label, sampler=sampler, default_state=default,
                            params={"H": H, "f": f, "g": g, "h": h})


def linear_cyclo_example(caloric=None, label="linear_cyclo"):
    """``dx/dt = -x + u``, ``y = x``, ``H = x^2/2`` extended by a heat compartment."""
    return extend_cyclo_passive(
        f=lambda x: -x, g=lambda x: np.ones(np.shape(x) + (1,)), h=lambda x: x,
        H=lambda x: 0.5 * np.sum(x ** 2, axis=-1), grad_H=lambda x: x, caloric=caloric,
        n_states=1, n_inputs=1, state_names=["x"], input_labels=["u"],
        state_sampler=lambda r: r.uniform(-2.0, 2.0, 1), x0=np.array([1.0]), label=label)


@dataclass(frozen=True)
class ForceFlowPair:
    """Thermodynamic forces and flows with ``sigma = F . J``.

    ``onsager`` is ``"PASS"`` when ``J = L F`` with a symmetric ``L``,
    ``"FAIL"`` when ``L`` is not symmetric and ``"NOT-APPLICABLE"`` when the
    flows are not a function of the forces alone.
    """

    F: np.ndarray
    J: np.ndarray
    sigma: float
    onsager: str
    matrix: Optional[np.ndarray] = None


def force_flow_pair(F, J, matrix=None, tol=1e-10):
    """Assemble a :class:`ForceFlowPair`, checking ``J = L F`` and ``L = L^T`` when ``L`` is given."""
    F = np.atleast_1d(np.asarray(F, dtype=float))
    J = np.atleast_1d(np.asarray(J, dtype=float))
    if F.shape != J.shape:
        raise ValueError(f"forces {F.shape} and flows {J.shape} differ in shape")
    sigma = float(F @ J)
    if matrix is None:
        return ForceFlowPair(F, J, sigma, ONSAGER_NA, None)
    L = np.atleast_2d(np.asarray(matrix, dtype=float))
    scale = 1.0 + np.max(np.abs(L))
    ok = np.max(np.abs(L - L.T)) <= tol * scale and np.max(np.abs(L @ F - J)) <= tol * (1.0 + np.max(np.abs(J)))
    return ForceFlowPair(F, J, sigma, ONSAGER_PASS if ok else ONSAGER_FAIL, L)


def ph_force_flow(g_R, R_map, grad_H, caloric, x, S, R_matrix=None, tol=1e-12):
    """Force/flow factorization of port-Hamiltonian dissipation.

    With resistive port ``z_R = g_R^T grad H(x)`` and resistive relation
    ``R_map`` (``z . R(z) >= 0``) the entropy production of the extended
    system factors as ``F = z_R / U'(S)`` and ``J = R(z_R)``. If the
    resistive relation is linear, ``R(z) = R_matrix z``, the flows obey
    ``J = L F`` with ``L = U'(S) R_matrix``.

    Raises
    ------
    NotCycloPassiveError
        If ``z_R . R(z_R) < 0``.
    """
    x = np.asarray(x, dtype=float)
    gR = np.atleast_2d(np.asarray(g_R(x) if callable(g_R) else g_R, dtype=float))
    grad = np.asarray(grad_H(x), dtype=float)
    zR = np.atleast_1d(gR.T @ grad)
    J = np.atleast_1d(np.asarray(R_map(zR), dtype=float))
    if float(zR @ J) < -tol * (1.0 + abs(float(zR @ zR))):
        raise NotCycloPassiveError(f"resistive relation not dissipative: z.R(z) = {float(zR @ J):.3e}")
    T = float(caloric.temperature(S))
    F = zR / T
    L = None if R_matrix is None else T * np.atleast_2d(np.asarray(R_matrix, dtype=float))
    return force_flow_pair(F, J, L)


def heat_exchanger_force_flow(T_h, T_c, lam):
    """``F = 1/T_c - 1/T_h`` and ``J = lam (T_h - T_c)``; ``J`` is not a function of ``F`` alone."""
    return force_flow_pair(1.0 / T_c - 1.0 / T_h, lam * (T_h - T_c))


def piston_force_flow(P_gas, P_piston, T, mu):
    """``F = (P_gas - P_piston)/T`` and ``J = mu F``, so ``sigma = mu F^2``."""
    F = (P_gas - P_piston) / T
    return force_flow_pair(F, mu * F, [[mu]])
