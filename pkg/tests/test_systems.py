import numpy as np
import pytest

from thermoport.checks import feasibility_suite
from thermoport.constitutive import Caloric, point_on
from thermoport.dynamics import integrate, vector_field
from thermoport.errors import DomainError, NotCycloPassiveError
from thermoport.signals import Constant, FunctionSignal
from thermoport.systems import (
    CATALOG,
    CRNSpec,
    build,
    crn,
    extend_cyclo_passive,
    gas_piston_damper,
    heat_compartment,
    heat_exchanger,
    heat_exchanger_force_flow,
    laplacian,
    laplacian_form,
    linear_cyclo_example,
    mass_spring_damper,
    one_reaction,
    ph_force_flow,
    piston_force_flow,
)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_builds_and_is_feasible(name, rng):
    sys = build(name)
    assert sys.default_state is not None
    res = feasibility_suite(sys, rng, n=20)
    assert res.passed, res.report()


def test_unknown_catalog_name():
    with pytest.raises(KeyError, match="unknown catalog"):
        build("flux_capacitor")


def test_compartment_variants_agree(rng):
    c = Caloric.constant_heat_capacity(2.0)
    a = heat_compartment(c, "entropy_flow")
    b = heat_compartment(c, "heat_flow")
    for _ in range(20):
        S = rng.uniform(10.0, 12.0)
        u = rng.normal()
        T = float(c.temperature(S))
        dza, _ = vector_field(a.K, point_on(a.rel, [S]), [u])
        dzb, _ = vector_field(b.K, point_on(b.rel, [S]), [T * u])
        np.testing.assert_allclose(dza, dzb, rtol=1e-12)


def test_compartment_variants_same_trajectory():
    # constant entropy flow u versus the matching heat flow T(t) u computed
    # from the first run; both runs must visit the same states
    c = Caloric.constant_heat_capacity(1.0)
    a = heat_compartment(c, "entropy_flow")
    b = heat_compartment(c, "heat_flow")
    S0, u = 5.7, 0.3
    ta = integrate(a, Constant([u]), [S0], (0.0, 1.0), 1e-3)
    # under entropy flow S = S0 + u t and T = exp(S), so the heat flow is exp(S0 + u t) u
    tb = integrate(b, FunctionSignal(lambda t: np.array([np.exp(S0 + u * t) * u]), 1), [S0], (0.0, 1.0), 1e-3)
    np.testing.assert_allclose(ta.z, tb.z, rtol=1e-10)


def test_compartment_rejects_nonincreasing_energy():
    bad = Caloric.from_function(lambda S: -S)
    with pytest.raises(DomainError):
        heat_compartment(bad)


def test_compartment_rejects_unknown_kind():
    with pytest.raises(ValueError):
        heat_compartment(input_kind="work")


def test_exchanger_equal_temperatures_stationary():
    sys = heat_exchanger(lam=2.0)
    z0 = [np.log(330.0), np.log(330.0)]
    tr = integrate(sys, None, z0, (0.0, 1.0), 1e-2)
    assert np.max(np.abs(tr.z - tr.z[0])) == 0.0
    assert np.max(np.abs(tr.sigma)) == 0.0


def test_exchanger_entropy_production():
    sys = heat_exchanger(lam=1.5)
    T1, T2 = 400.0, 300.0
    dz, _ = vector_field(sys.K, point_on(sys.rel, [np.log(T1), np.log(T2)]))
    assert dz[0] == 0.0
    assert dz[1] + dz[2] == pytest.approx(1.5 * (1 / T1 - 1 / T2) * (T2 - T1), rel=1e-12)


def test_isothermal_msd_entropy_production():
    m, k, d, T0 = 2.0, 3.0, 0.7, 310.0
    sys = mass_spring_damper(m, k, d, Caloric.isothermal(T0))
    tr = integrate(sys, None, [1.0, 0.5, 1.2], (0.0, 0.5), 1e-3)
    v = tr.z[:, 3] / m
    np.testing.assert_allclose(tr.sigma, d * v ** 2 / T0, rtol=1e-10, atol=1e-15)


def test_gas_piston_lossless_conserves_energy():
    sys = gas_piston_damper(m=100.0, d=0.0)
    S0 = float(sys.default_state[0])
    tr = integrate(sys, None, [S0, 1.2, 30.0], (0.0, 1.0), 1e-3)
    assert tr.complete
    assert np.max(np.abs(tr.energy - tr.energy[0])) / abs(tr.energy[0]) < 1e-10
    assert np.max(np.abs(tr.sigma)) < 1e-12


def test_gas_piston_entropy_production(rng):
    m, d = 50.0, 20.0
    sys = gas_piston_damper(m=m, d=d)
    g = sys.rel.generator
    for _ in range(10):
        zi = sys.sample_state(rng)
        pt = point_on(sys.rel, zi)
        dz, _ = vector_field(sys.K, pt, [0.0])
        T = g.gradient(zi)[0]
        assert dz[1] == pytest.approx(d * (zi[2] / m) ** 2 / T, rel=1e-12)
        # volume rate is the piston velocity
        assert dz[2] == pytest.approx(zi[2] / m, rel=1e-12)


def test_crn_rejects_bad_incidence():
    with pytest.raises(ValueError, match="incidence column 0"):
        CRNSpec(np.eye(2), np.array([[1.0], [1.0]]), [1.0])
    with pytest.raises(ValueError, match="positive"):
        CRNSpec(np.eye(2), np.array([[-1.0], [1.0]]), [0.0])


def test_laplacian_form_example():
    L = laplacian(np.array([[-1.0], [1.0]]), [1.0])
    np.testing.assert_allclose(L, [[1.0, -1.0], [-1.0, 1.0]])
    val = laplacian_form(L, [2.0, 1.0])
    assert val == pytest.approx(np.e ** 2 - np.e, rel=1e-12)
    assert val == pytest.approx(4.670774, rel=1e-6)


def test_laplacian_form_nonnegative(rng):
    for _ in range(200):
        c = rng.integers(2, 6)
        r = rng.integers(1, 7)
        B = np.zeros((c, r))
        for j in range(r):
            a, b = rng.choice(c, 2, replace=False)
            B[a, j], B[b, j] = -1.0, 1.0
        L = laplacian(B, rng.uniform(0.1, 3.0, r))
        assert laplacian_form(L, rng.normal(size=c)) >= -1e-12


def test_crn_conservation_laws():
    spec = one_reaction()
    W = spec.conservation_laws()
    assert W.shape == (1, 2)
    np.testing.assert_allclose(np.abs(W[0]), [2 ** -0.5, 2 ** -0.5], rtol=1e-12)
    # A + B <-> C keeps A + C and B + C
    Z = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    spec3 = CRNSpec(Z, np.array([[-1.0], [1.0]]), [1.0])
    W3 = spec3.conservation_laws()
    assert W3.shape == (2, 3)
    assert np.max(np.abs(W3 @ spec3.stoichiometry)) < 1e-12


def test_crn_detailed_balance_stationary():
    spec = one_reaction(kappa=2.0, mu0=(0.0, 0.0))
    sys = crn(spec)
    dz, _ = vector_field(sys.K, point_on(sys.rel, [0.0, 1.0, 1.0]))
    assert np.max(np.abs(dz)) < 1e-15


def test_crn_relaxes_to_equilibrium():
    sys = crn(one_reaction())
    tr = integrate(sys, None, [0.0, 1.5, 0.5], (0.0, 10.0), 1e-2)
    assert tr.complete
    np.testing.assert_allclose(tr.z[-1, 2:], [1.0, 1.0], atol=1e-6)
    assert np.min(tr.sigma) >= 0.0
    assert np.all(np.diff(tr.entropy) >= -1e-15)
    np.testing.assert_allclose(tr.z[:, 2] + tr.z[:, 3], 2.0, rtol=1e-12)


def test_crn_depletion_truncates():
    spec = one_reaction()
    sys = crn(spec, species_ports=("A",))
    tr = integrate(sys, Constant([-1.0]), [0.0, 0.5, 0.5], (0.0, 5.0), 1e-2)
    assert not tr.complete
    assert tr.status.startswith("domain exit")
    assert np.all(tr.z[:, 2] > 0)


def _msd_parts(m, k, d):
    return dict(
        f=lambda x: np.stack([x[..., 1] / m, -k * x[..., 0] - d * x[..., 1] / m], axis=-1),
        g=lambda x: np.broadcast_to(np.array([[0.0], [1.0]]), np.shape(x)[:-1] + (2, 1)),
        h=lambda x: x[..., 1:2] / m,
        H=lambda x: 0.5 * k * x[..., 0] ** 2 + x[..., 1] ** 2 / (2 * m),
        grad_H=lambda x: np.stack([k * x[..., 0], x[..., 1] / m], axis=-1),
        n_states=2, n_inputs=1, state_names=["w", "pi"], input_labels=["force"],
    )


def test_cyclo_extension_reproduces_msd(rng):
    m, k, d = 2.0, 3.0, 0.4
    c = Caloric.constant_heat_capacity(1.0)
    ext = extend_cyclo_passive(caloric=c, rng=rng, **_msd_parts(m, k, d))
    ref = mass_spring_damper(m, k, d, c)
    assert ext.space.names == ref.space.names
    for _ in range(20):
        zi = ref.sample_state(rng)
        u = rng.normal(size=1)
        a, _ = vector_field(ext.K, point_on(ext.rel, zi), u)
        b, _ = vector_field(ref.K, point_on(ref.rel, zi), u)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_cyclo_extension_zero_drift(rng):
    sys = extend_cyclo_passive(
        f=lambda x: 0.0 * x, g=lambda x: np.ones(np.shape(x) + (1,)), h=lambda x: x,
        H=lambda x: 0.5 * np.sum(x ** 2, axis=-1), grad_H=lambda x: x, n_states=1, n_inputs=1, rng=rng)
    tr = integrate(sys, Constant([0.0]), [np.log(300.0), 0.8], (0.0, 1.0), 1e-2)
    assert np.max(np.abs(tr.z - tr.z[0])) == 0.0


def test_linear_cyclo_example_dissipation(rng):
    sys = linear_cyclo_example()
    for _ in range(10):
        S, x = rng.uniform(5.5, 6.1), rng.uniform(-2, 2)
        dz, _ = vector_field(sys.K, point_on(sys.rel, [S, x]), [0.0])
        assert dz[1] == pytest.approx(x ** 2 / np.exp(S), rel=1e-12)
        assert dz[2] == pytest.approx(-x, rel=1e-12)


def test_cyclo_extension_rejects_negative_dissipation(rng):
    with pytest.raises(NotCycloPassiveError, match="rho"):
        extend_cyclo_passive(f=lambda x: x, g=lambda x: np.ones(np.shape(x) + (1,)), h=lambda x: x,
                             H=lambda x: 0.5 * np.sum(x ** 2, axis=-1), grad_H=lambda x: x,
                             n_states=1, n_inputs=1, rng=rng)


def test_cyclo_extension_rejects_output_mismatch(rng):
    with pytest.raises(NotCycloPassiveError, match="differs"):
        extend_cyclo_passive(f=lambda x: -x, g=lambda x: np.ones(np.shape(x) + (1,)), h=lambda x: 2 * x,
                             H=lambda x: 0.5 * np.sum(x ** 2, axis=-1), grad_H=lambda x: x,
                             n_states=1, n_inputs=1, rng=rng)


def test_damper_force_flow_onsager():
    d = 0.7
    c = Caloric.constant_heat_capacity(1.0)
    S = np.log(320.0)
    ff = ph_force_flow(np.array([[0.0], [1.0]]), lambda zr: d * zr, lambda x: np.array([x[0], x[1] / 2.0]),
                       c, np.array([0.3, 0.8]), S, R_matrix=[[d]])
    assert ff.onsager == "PASS"
    np.testing.assert_allclose(ff.matrix, [[d * 320.0]], rtol=1e-12)
    v = 0.4
    assert ff.sigma == pytest.approx(d * v ** 2 / 320.0, rel=1e-12)


def test_piston_force_flow():
    ff = piston_force_flow(2.0e5, 1.5e5, 300.0, 1e-3)
    F = 0.5e5 / 300.0
    assert ff.onsager == "PASS"
    assert ff.sigma == pytest.approx(1e-3 * F ** 2, rel=1e-12)


def test_heat_exchanger_force_flow_not_applicable():
    ff = heat_exchanger_force_flow(400.0, 300.0, 2.0)
    assert ff.onsager == "NOT-APPLICABLE"
    assert ff.sigma == pytest.approx((1 / 300 - 1 / 400) * 200.0, rel=1e-12)
    assert ff.sigma > 0


def test_damper_force_flow_rejects_active_resistor():
    with pytest.raises(NotCycloPassiveError):
        ph_force_flow(np.array([[1.0]]), lambda zr: -zr, lambda x: x, Caloric.constant_heat_capacity(1.0),
                      np.array([1.0]), 5.0)
