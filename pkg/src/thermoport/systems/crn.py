"""Detailed-balanced mass-action chemical reaction networks.

The network is given by a complex composition matrix ``Z`` (species x
complexes), an incidence matrix ``B`` (complexes x reactions) and positive
conductances ``kappa``. With the weighted Laplacian ``Lap = B diag(kappa) B^T``
the kinetics read

    dx/dt = -Z Lap Exp(Z^T mu / (R T)),

where ``mu`` are the chemical potentials. In entropy representation
``mu / T = -dS/dx``, so the exponent is ``-Z^T (dS/dx) / R``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..constitutive import ConstitutiveRelation, GeneratingFunction
from ..dynamics import FieldHamiltonian
from ..errors import DomainError
from ..phase_space import ExtensiveSpace
from ..ports import ENTROPY, Port, PortThermoSystem

__all__ = ["CRNSpec", "crn", "laplacian", "laplacian_form", "ideal_dilute_entropy", "one_reaction"]

CLIP = 1e-300
TRUNCATE = 1e-12


@dataclass(frozen=True)
class CRNSpec:
    """Reaction network data.

    Parameters
    ----------
    Z : (m, c) array
        Nonnegative integer complex composition matrix.
    B : (c, r) array
        Incidence matrix; each column has one -1 (reactant complex) and one +1.
    kappa : (r,) array
        Positive conductances.
    mu0 : (m,) array
        Reference chemical potentials, J/mol.
    R : float
        Gas constant.
    T : float
        Temperature of the bundled isothermal ideal-dilute model.
    species : sequence of str, optional
    energy_model : GeneratingFunction, optional
        Entropy-representation ``S(E, x)`` replacing the ideal-dilute one.
    """

    Z: np.ndarray
    B: np.ndarray
    kappa: np.ndarray
    mu0: np.ndarray = None
    R: float = 8.314
    T: float = 298.15
    species: tuple = None
    energy_model: Optional[GeneratingFunction] = None

    def __post_init__(self):
        Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        m, c = Z.shape
        if np.any(Z < 0) or np.any(Z != np.round(Z)):
            raise ValueError("Z must contain nonnegative integers")
        if B.shape[0] != c:
            raise ValueError(f"B has {B.shape[0]} rows but Z has {c} complexes")
        for j in range(B.shape[1]):
            col = B[:, j]
            nz = col[col != 0]
            if nz.size != 2 or sorted(nz.tolist()) != [-1.0, 1.0]:
                raise ValueError(f"incidence column {j} must contain exactly one -1 and one +1, got {col.tolist()}")
        if kappa.shape != (B.shape[1],):
            raise ValueError(f"need {B.shape[1]} conductances, got {kappa.shape}")
        if np.any(kappa <= 0):
            raise ValueError("conductances kappa must be positive")
        mu0 = np.zeros(m) if self.mu0 is None else np.atleast_1d(np.asarray(self.mu0, dtype=float))
        if mu0.shape != (m,):
            raise ValueError(f"need {m} reference potentials, got {mu0.shape}")
        if self.T <= 0 or self.R <= 0:
            raise ValueError("R and T must be positive")
        species = tuple(self.species) if self.species is not None else tuple(f"x{i}" for i in range(m))
        if len(species) != m:
            raise ValueError(f"need {m} species names")
        for name, val in (("Z", Z), ("B", B), ("kappa", kappa), ("mu0", mu0), ("species", species)):
            object.__setattr__(self, name, val)

    @property
    def n_species(self):
        return self.Z.shape[0]

    @property
    def stoichiometry(self):
        """``N = Z B``."""
        return self.Z @ self.B

    @property
    def laplacian(self):
        return laplacian(self.B, self.kappa)

    def conservation_laws(self, tol=1e-10):
        """Orthonormal basis of ``{w : w^T N = 0}`` as rows."""
        N = self.stoichiometry
        u, s, _ = np.linalg.svd(N)
        rank = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
        return u[:, rank:].T

    def chemical_potential(self, x):
        x = np.maximum(np.asarray(x, dtype=float), CLIP)
        return self.mu0 + self.R * self.T * np.log(x)


def laplacian(B, kappa):
    """Weighted graph Laplacian ``B diag(kappa) B^T``."""
    B = np.asarray(B, dtype=float)
    return B @ np.diag(np.asarray(kappa, dtype=float)) @ B.T


def laplacian_form(L, gamma):
    """``gamma^T L Exp(gamma)``; nonnegative for any weighted Laplacian."""
    gamma = np.asarray(gamma, dtype=float)
    return float(gamma @ (L @ np.exp(gamma)))


def ideal_dilute_entropy(spec):
    """Isothermal ideal-dilute entropy ``S(E, x) = (E - G(x)) / T``.

    ``G(x) = sum_k mu0_k x_k + R T (x_k ln x_k - x_k)``, hence
    ``dS/dE = 1/T`` and ``dS/dx_k = -mu_k / T`` with
    ``mu_k = mu0_k + R T ln x_k``.
    """
    names = ("E", "S") + tuple(spec.species)
    space = ExtensiveSpace(names, 0, 1, units=("J", "J/K") + ("mol",) * spec.n_species)
    T, R, mu0 = spec.T, spec.R, spec.mu0

    def value(zi):
        E, x = zi[..., 0], np.maximum(zi[..., 1:], CLIP)
        G = np.sum(mu0 * x + R * T * (x * np.log(x) - x), axis=-1)
        return (E - G) / T

    def grad(zi):
        x = np.maximum(zi[..., 1:], CLIP)
        mu = mu0 + R * T * np.log(x)
        return np.concatenate([np.full(np.shape(zi)[:-1] + (1,), 1.0 / T), -mu / T], axis=-1)

    def hess(zi):
        x = np.maximum(zi[..., 1:], CLIP)
        n = np.shape(zi)[-1]
        H = np.zeros(np.shape(zi) + (n,))
        idx = np.arange(1, n)
        H[..., idx, idx] = -R / x
        return H

    return GeneratingFunction(space, 1, value, grad, hess,
                              constraints=[("concentrations > 0", lambda zi: np.all(zi[..., 1:] > 0, axis=-1))])


def crn(spec, heat_port=False, species_ports=(), label="crn"):
    """Port-thermodynamic system of a reaction network in entropy representation.

    Coordinates ``(E, S, x_1, ..., x_m)`` with ``S`` given by the energy
    model. The drift is the mass-action kinetics above together with
    ``dS/dt = (dS/dx) . dx/dt``, which equals the entropy production
    ``(1/T) mu^T Z Lap Exp(Z^T mu / RT) >= 0``.

    Parameters
    ----------
    spec : CRNSpec
    heat_port : bool
        Add a heat-flow port (``dE/dt = v``) with ``y_re = dS/dE = 1/T``.
    species_ports : sequence of str
        Species with an inflow port: ``dx_i/dt = u_i`` and
        ``y_re = dS/dx_i = -mu_i / T``. The sign follows the Gibbs relation:
        the output is the entropy gained per mole added, which is minus the
        chemical potential over temperature.
    """
    gen = spec.energy_model or ideal_dilute_entropy(spec)
    rel = ConstitutiveRelation(gen, label, spec)
    space = gen.space
    m = spec.n_species
    ZL = spec.Z @ spec.laplacian
    Zt = spec.Z.T
    R = spec.R
    sp_idx = [spec.species.index(s) for s in species_ports]
    labels = (["heat"] if heat_port else []) + [f"inflow_{spec.species[i]}" for i in sp_idx]
    n_in = len(labels)

    def field(z, u):
        zi = np.delete(z, 1, axis=-1)
        g = gen.gradient(zi)
        dS_dE, dS_dx = g[..., 0], g[..., 1:]
        rates = np.exp(-np.einsum("cm,...m->...c", Zt, dS_dx) / R)
        dx = -np.einsum("mc,...c->...m", ZL, rates)
        dE = 0.0 * dS_dE
        k = 0
        if heat_port:
            dE = dE + u[..., 0]
            k = 1
        for j, i in enumerate(sp_idx):
            dx[..., i] = dx[..., i] + u[..., k + j]
        dS = dS_dE * dE + np.sum(dS_dx * dx, axis=-1)
        return np.concatenate([dE[..., None], dS[..., None], dx], axis=-1)

    def control(z):
        g = gen.gradient(np.delete(z, 1, axis=-1))
        G = np.zeros(np.shape(z) + (n_in,))
        k = 0
        if heat_port:
            G[..., 0, 0] = 1.0
            G[..., 1, 0] = g[..., 0]
            k = 1
        for j, i in enumerate(sp_idx):
            G[..., 2 + i, k + j] = 1.0
            G[..., 1, k + j] = g[..., 1 + i]
        return G

    K = FieldHamiltonian(space, field, n_in, labels, control=control)
    units = (["W"] if heat_port else []) + ["mol/s"] * len(sp_idx)
    ports = [Port(l, ENTROPY, j, input_unit=units[j]) for j, l in enumerate(labels)]

    def guard(z):
        x = np.asarray(z)[2:]
        if np.any(x < TRUNCATE):
            raise DomainError(f"x_i >= {TRUNCATE:g}", f"species {spec.species[int(np.argmin(x))]} depleted")

    def sampler(rng):
        return np.concatenate([[rng.uniform(-1.0, 1.0)], rng.uniform(0.2, 3.0, m)])

    return PortThermoSystem(rel, K, ports, label, sampler=sampler, guard=guard,
                            default_state=np.concatenate([[0.0], np.ones(m)]), input_scale=0.1,
                            params={"spec": spec})


def one_reaction(kappa=1.0, mu0=(0.0, 0.0), T=298.15, R=8.314):
    """The isomerization ``A <-> B`` with ``Z = I`` and ``B = (-1, 1)^T``."""
    return CRNSpec(np.eye(2), np.array([[-1.0], [1.0]]), [kappa], mu0, R, T, ("A", "B"))
