"""Catalog of worked port-thermodynamic systems.

``CATALOG`` maps a name to a constructor taking keyword parameters; every
entry builds with its defaults and is used by the property suites.
"""

import numpy as np

from ..constitutive import Caloric, ideal_gas
from ..ports import Coupling, interconnect
from .crn import CRNSpec, crn, ideal_dilute_entropy, laplacian, laplacian_form, one_reaction
from .cyclo import (
    ForceFlowPair,
    extend_cyclo_passive,
    force_flow_pair,
    heat_exchanger_force_flow,
    linear_cyclo_example,
    ph_force_flow,
    piston_force_flow,
)
from .mechanical import (
    damper,
    flow_port_system,
    gas_piston_damper,
    ideal_gas_system,
    mass,
    mass_spring_damper,
    spring,
)
from .thermal import compartment_relation, heat_compartment, heat_exchanger

__all__ = [
    "CATALOG",
    "build",
    "msd_composite",
    "fourier_pair",
    "heat_compartment",
    "heat_exchanger",
    "compartment_relation",
    "mass",
    "spring",
    "damper",
    "mass_spring_damper",
    "gas_piston_damper",
    "ideal_gas_system",
    "flow_port_system",
    "CRNSpec",
    "crn",
    "one_reaction",
    "ideal_dilute_entropy",
    "laplacian",
    "laplacian_form",
    "extend_cyclo_passive",
    "linear_cyclo_example",
    "ForceFlowPair",
    "force_flow_pair",
    "ph_force_flow",
    "heat_exchanger_force_flow",
    "piston_force_flow",
]


def msd_composite(m=1.0, k=1.0, d=0.5, caloric=None, label="msd_composite"):
    """Mass, spring and damper joined by ``u_m = -y_s - y_d + F``, ``u_s = u_d = y_m``.

    The external force ``F`` is exposed as port ``force`` with output ``y_m``.
    """
    parts = [mass(m), spring(k), damper(d, caloric)]
    M = np.array([[0.0, -1.0, -1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    c = Coupling.power_conserving([("mass", "force"), ("spring", "velocity"), ("damper", "velocity")], M,
                                  external="force", gain=[1.0, 0.0, 0.0])
    return interconnect(parts, [c], label)


def fourier_pair(C1=1.0, C2=1.0, lam=1.0, T1=400.0, T2=300.0, label="fourier_pair"):
    """Two heat-flow compartments with linear heat capacities coupled by Fourier's law."""
    a = heat_compartment(Caloric.constant_heat_capacity(C1), "heat_flow", label="c1", T0=T1)
    b = heat_compartment(Caloric.constant_heat_capacity(C2), "heat_flow", label="c2", T0=T2)
    return interconnect([a, b], [Coupling.fourier(("c1", "heat_in"), ("c2", "heat_in"), lam)], label)


def _gas(C_V=1.5 * 8.314, R=8.314, N=1.0, a=0.0, W=0.0):
    return ideal_gas(C_V, R, N, a, W)


def _caloric(C=None, T0=None):
    if T0 is not None:
        return Caloric.isothermal(T0)
    return Caloric.constant_heat_capacity(1.0 if C is None else C)


def _crn_default(kappa=1.0, mu0=(0.0, 0.0), T=298.15, R=8.314, heat_port=True, species_ports=("A",)):
    return crn(one_reaction(kappa, mu0, T, R), heat_port=heat_port, species_ports=species_ports, label="crn")


CATALOG = {
    "heat_compartment": lambda C=1.0, **kw: heat_compartment(_caloric(C), "entropy_flow", **kw),
    "heat_compartment_heat_flow": lambda C=1.0, **kw: heat_compartment(_caloric(C), "heat_flow", **kw),
    "heat_exchanger": lambda C1=1.0, C2=1.0, lam=1.0: heat_exchanger(_caloric(C1), _caloric(C2), lam),
    "mass": lambda m=1.0: mass(m),
    "spring": lambda k=1.0: spring(k),
    "damper": lambda d=1.0, C=1.0: damper(d, _caloric(C)),
    "mass_spring_damper": lambda m=1.0, k=1.0, d=0.5, C=1.0, T0=None: mass_spring_damper(m, k, d, _caloric(C, T0)),
    "msd_composite": lambda m=1.0, k=1.0, d=0.5, C=1.0, T0=None: msd_composite(m, k, d, _caloric(C, T0)),
    "gas_piston": lambda m=1000.0, d=50.0, C_V=1.5 * 8.314, R=8.314, N=1.0: gas_piston_damper(
        m, d, _gas(C_V, R, N)),
    "ideal_gas": lambda C_V=1.5 * 8.314, R=8.314, N=1.0: ideal_gas_system(_gas(C_V, R, N)),
    "fourier_pair": fourier_pair,
    "crn_isomerization": _crn_default,
    "linear_cyclo": lambda C=1.0: linear_cyclo_example(_caloric(C)),
}


def build(name, label=None, **params):
    """Construct a catalog system by name, optionally relabeled (for composition)."""
    try:
        ctor = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog system {name!r}; known: {sorted(CATALOG)}") from None
    sys = ctor(**params)
    if label is not None:
        if sys.is_composite:
            raise ValueError("composite catalog systems keep their constituent labels")
        sys.label = str(label)
    return sys
