"""Scenario configuration files (TOML).

A scenario names a system (a catalog entry, a composition of catalog
entries, or a reaction network), its initial state, input signal,
integrator options, the checks to run and where to write outputs. See the
README for the full grammar; every error names the offending key.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, CouplingError, ThermoportError
from .ports import Coupling, interconnect
from .signals import Constant, PiecewiseConstant, PiecewiseLinear, Sinusoids

__all__ = ["Scenario", "load", "loads", "build_system", "build_signal", "KNOWN_CHECKS"]

KNOWN_CHECKS = ("feasibility", "homogeneity", "storage", "laws", "conservation", "cyclo_lossless",
                "equilibrium", "clausius")
_TOP = {"system", "initial", "input", "integrator", "checks", "output", "seed", "crn", "carnot",
        "available_storage", "name"}


@dataclass
class Scenario:
    name: str
    system: dict
    crn: Optional[dict]
    initial: dict
    input: dict
    integrator: dict
    checks: dict
    output: dict
    seed: int
    carnot: dict = field(default_factory=dict)
    available_storage: Optional[dict] = None


def _table(doc, key, default=None):
    val = doc.get(key, default if default is not None else {})
    if not isinstance(val, dict):
        raise ConfigError(key, "must be a table")
    return val


def _number(tab, key, path, default=None, positive=False):
    if key not in tab:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required number")
        return default
    v = tab[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {v!r}")
    return float(v)


def _array(v, path, ndim=None):
    try:
        a = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a numeric array, got {v!r}") from None
    if ndim is not None and a.ndim != ndim:
        raise ConfigError(path, f"expected a {ndim}-dimensional array, got shape {a.shape}")
    return a


def loads(text, source="<string>"):
    """Parse scenario text; raises ConfigError with line/column for syntax errors."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(source, f"parse error: {exc}") from None
    unknown = sorted(set(doc) - _TOP)
    if unknown:
        raise ConfigError(unknown[0], f"unknown top-level key; allowed: {sorted(_TOP)}")
    system = _table(doc, "system")
    if not system:
        raise ConfigError("system", "missing required table")
    modes = [k for k in ("catalog", "components") if k in system]
    if len(modes) != 1:
        raise ConfigError("system", "give exactly one of 'catalog' or 'components'")
    if "catalog" in system and not isinstance(system["catalog"], str):
        raise ConfigError("system.catalog", "must be a string")
    if "params" in system and not isinstance(system["params"], dict):
        raise ConfigError("system.params", "must be a table")
    crn = doc.get("crn")
    if system.get("catalog") == "crn" and crn is None:
        raise ConfigError("crn", "catalog 'crn' needs a [crn] table")
    integ = _table(doc, "integrator")
    dt = _number(integ, "dt", "integrator", 1e-3, positive=True)
    tspan = integ.get("tspan", [0.0, 1.0])
    ts = _array(tspan, "integrator.tspan", 1)
    if ts.size != 2 or not ts[1] > ts[0]:
        raise ConfigError("integrator.tspan", "must be [t0, t1] with t1 > t0")
    project = integ.get("project", False)
    if not isinstance(project, bool):
        raise ConfigError("integrator.project", "must be true or false")
    checks = _table(doc, "checks")
    for k, v in checks.items():
        if k not in KNOWN_CHECKS:
            raise ConfigError(f"checks.{k}", f"unknown check; known: {list(KNOWN_CHECKS)}")
        if not isinstance(v, (bool, dict)):
            raise ConfigError(f"checks.{k}", "must be true/false or a table of options")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")
    initial = _table(doc, "initial")
    if "state" in initial:
        _array(initial["state"], "initial.state", 1)
    if "scale" in initial:
        _number(initial, "scale", "initial")
    inp = _table(doc, "input")
    av = doc.get("available_storage")
    if av is not None and not isinstance(av, dict):
        raise ConfigError("available_storage", "must be a table")
    return Scenario(
        name=str(doc.get("name", system.get("catalog", "composite"))),
        system=system, crn=crn, initial=initial, input=inp,
        integrator={"dt": dt, "tspan": (float(ts[0]), float(ts[1])), "project": project,
                    "gauge": integ.get("gauge")},
        checks=checks, output=_table(doc, "output"), seed=seed,
        carnot=_table(doc, "carnot"), available_storage=av,
    )


def load(path):
    """Read and parse a scenario file."""
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))


def crn_spec(tab, path="crn"):
    """Build a CRNSpec from a ``[crn]`` table."""
    from .systems.crn import CRNSpec

    for key in ("Z", "B", "kappa"):
        if key not in tab:
            raise ConfigError(f"{path}.{key}", "missing required array")
    try:
        return CRNSpec(
            _array(tab["Z"], f"{path}.Z", 2), _array(tab["B"], f"{path}.B", 2), _array(tab["kappa"], f"{path}.kappa", 1),
            None if "mu0" not in tab else _array(tab["mu0"], f"{path}.mu0", 1),
            _number(tab, "R", path, 8.314, positive=True), _number(tab, "T", path, 298.15, positive=True),
            tab.get("species"))
    except ValueError as exc:
        key = "B" if "incidence" in str(exc) else "kappa" if "conductance" in str(exc) else "Z"
        raise ConfigError(f"{path}.{key}", str(exc)) from None


def build_system(sc):
    """Construct the scenario's system."""
    from .systems import build, crn

    sysd = sc.system
    try:
        if "catalog" in sysd:
            name = sysd["catalog"]
            if name == "crn":
                spec = crn_spec(sc.crn)
                return crn(spec, heat_port=bool(sc.crn.get("heat_port", False)),
                           species_ports=tuple(sc.crn.get("species_ports", ())))
            return build(name, **sysd.get("params", {}))
        comps = sysd["components"]
        if not isinstance(comps, list) or not comps:
            raise ConfigError("system.components", "must be a nonempty array of tables")
        parts = []
        for i, c in enumerate(comps):
            if not isinstance(c, dict) or "catalog" not in c:
                raise ConfigError(f"system.components[{i}].catalog", "missing catalog name")
            parts.append(build(c["catalog"], label=c.get("label"), **c.get("params", {})))
        couplings = []
        for i, c in enumerate(sysd.get("couplings", [])):
            couplings.append(_coupling(c, f"system.couplings[{i}]"))
        return interconnect(parts, couplings, sc.name)
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError("system.catalog", str(exc.args[0])) from None
    except TypeError as exc:
        raise ConfigError("system.params", str(exc)) from None
    except (CouplingError, ThermoportError) as exc:
        raise ConfigError("system.couplings", str(exc)) from None


def _coupling(c, path):
    kind = c.get("kind")
    bindings = c.get("bindings")
    if not isinstance(bindings, list) or not all(isinstance(b, list) and len(b) == 2 for b in bindings):
        raise ConfigError(f"{path}.bindings", "must be a list of [system, port] pairs")
    if kind == "power_conserving":
        if "matrix" not in c:
            raise ConfigError(f"{path}.matrix", "missing coupling matrix")
        try:
            return Coupling.power_conserving(bindings, _array(c["matrix"], f"{path}.matrix", 2),
                                             external=c.get("external"), gain=c.get("gain"))
        except CouplingError as exc:
            raise ConfigError(f"{path}.matrix", str(exc)) from None
    if kind == "fourier":
        if len(bindings) != 2:
            raise ConfigError(f"{path}.bindings", "a fourier coupling binds exactly two ports")
        return Coupling.fourier(bindings[0], bindings[1], _number(c, "lam", path, positive=True))
    raise ConfigError(f"{path}.kind", f"must be 'power_conserving' or 'fourier', got {kind!r}")


def build_signal(tab, n_inputs, path="input"):
    """Input signal from an ``[input]`` table; an empty table means zero input."""
    kind = tab.get("kind", "zero")
    if kind == "zero":
        return Constant(np.zeros(n_inputs))
    if kind == "constant":
        v = _array(tab.get("values", tab.get("value")), f"{path}.values", 1)
        sig = Constant(v)
    elif kind in ("piecewise_constant", "piecewise_linear"):
        if "times" not in tab or "values" not in tab:
            raise ConfigError(f"{path}.times", "piecewise signals need 'times' and 'values'")
        t = _array(tab["times"], f"{path}.times", 1)
        v = _array(tab["values"], f"{path}.values")
        try:
            sig = (PiecewiseConstant if kind == "piecewise_constant" else PiecewiseLinear)(t, v)
        except ValueError as exc:
            raise ConfigError(f"{path}.values", str(exc)) from None
    elif kind == "sinusoid":
        amp = _array(tab.get("amplitudes", [[0.0]]), f"{path}.amplitudes", 2)
        freq = _array(tab.get("frequencies", np.ones_like(amp)), f"{path}.frequencies", 2)
        ph = _array(tab.get("phases", np.zeros_like(amp)), f"{path}.phases", 2)
        off = _array(tab.get("offsets", np.zeros(amp.shape[0])), f"{path}.offsets", 1)
        if not (amp.shape == freq.shape == ph.shape and off.size == amp.shape[0]):
            raise ConfigError(f"{path}.amplitudes", "offsets, amplitudes, frequencies and phases disagree in shape")
        sig = Sinusoids(off, amp, freq, ph)
    else:
        raise ConfigError(f"{path}.kind", f"unknown signal kind {kind!r}")
    if sig.n_inputs != n_inputs:
        raise ConfigError(f"{path}.values", f"signal has {sig.n_inputs} channels, system has {n_inputs} inputs")
    return sig
