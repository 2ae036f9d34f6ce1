import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermoport.constitutive import (
    Caloric,
    ConstitutiveRelation,
    GeneratingFunction,
    IdealGas,
    hessian_duality_check,
    ideal_gas,
    lie_tangents,
    partial_legendre,
    point_on,
    quadratic_energy,
    residual_on,
)
from thermoport.errors import DomainError, GaugeError
from thermoport.phase_space import CotangentPoint, ExtensiveSpace, liouville_eval

R = 8.314
CV = 1.5 * R


def exp_compartment():
    space = ExtensiveSpace(("E", "S"))
    return ConstitutiveRelation(GeneratingFunction(space, 0, lambda zi: np.exp(zi[..., 0]),
                                                   lambda zi: np.exp(zi), lambda zi: np.exp(zi)[..., None]))


def test_point_on_heat_compartment():
    pt = point_on(exp_compartment(), [0.0])
    np.testing.assert_allclose(pt.z, [1.0, 0.0])
    np.testing.assert_allclose(pt.p, [-1.0, 1.0])
    pt3 = point_on(exp_compartment(), [0.0], 3.0)
    np.testing.assert_array_equal(pt3.z, pt.z)
    np.testing.assert_allclose(pt3.p, 3.0 * pt.p)


def test_point_on_ideal_gas_energy():
    pt = point_on(ideal_gas(CV), [0.0, 1.0])
    assert pt.z[0] == pytest.approx(CV, rel=1e-15)


def test_domain_guard_names_constraint():
    with pytest.raises(DomainError, match="V"):
        point_on(ideal_gas(CV), [0.0, -1.0])


def test_residual_on():
    rel = ideal_gas(CV)
    pt = point_on(rel, [1.0, 2.0], -2.5)
    assert residual_on(rel, pt) <= 1e-14
    z = np.array(pt.z)
    z[0] += 1e-3
    r = residual_on(rel, CotangentPoint(z, pt.p))
    assert r == pytest.approx(1e-3 / (1 + abs(z[0])), rel=1e-6)
    with pytest.raises(GaugeError):
        residual_on(rel, CotangentPoint(pt.z, np.r_[0.0, pt.p[1:]]))


@given(st.floats(-3, 3), st.floats(0.2, 5), st.floats(0.1, 10) | st.floats(-10, -0.1))
@settings(max_examples=100, deadline=None)
def test_residual_ray_invariant(S, V, lam):
    rel = ideal_gas(CV)
    pt = point_on(rel, [S, V])
    assert abs(residual_on(rel, pt.scaled(lam)) - residual_on(rel, pt)) <= 1e-14


def test_gibbs_form_vanishes_on_tangents(rng):
    rels = [ideal_gas(CV), exp_compartment(), quadratic_energy([[2.0, 0.3], [0.3, 1.0]])]
    for rel in rels:
        for _ in range(20):
            zi = rng.uniform(0.5, 2.0, rel.generator.n_indep)
            pt = point_on(rel, zi, rng.uniform(0.5, 2))
            for v in lie_tangents(rel, zi):
                assert abs(liouville_eval(pt, v)) <= 1e-10 * (1 + np.abs(pt.p) @ np.abs(v))


def test_fallback_derivatives_agree(rng):
    rel = ideal_gas(CV)
    gen = rel.generator
    for _ in range(20):
        zi = np.array([rng.uniform(-2, 2), rng.uniform(0.5, 3)])
        g, gf = gen.gradient(zi), gen.fd_gradient(zi)
        assert np.max(np.abs(g - gf) / (1 + np.abs(g))) <= 1e-5
        H, Hf = gen.hessian(zi), gen.fd_hessian(zi)
        assert np.max(np.abs(H - Hf) / (1 + np.abs(H))) <= 1e-5
        assert np.max(np.abs(Hf - Hf.T)) <= 1e-10 * (1 + np.abs(Hf).max())


def test_equation_of_state(rng):
    gas = IdealGas(CV, R, 1.0)
    rel = ideal_gas(CV)
    for _ in range(100):
        S, V = rng.uniform(-5, 5), rng.uniform(0.1, 10)
        T, mP = rel.generator.gradient(np.array([S, V]))
        assert abs(-mP * V - R * T) / (R * T) <= 1e-10
        assert gas.entropy(gas.temperature(S, V), V) == pytest.approx(S, abs=1e-12)


def test_adiabat_invariant():
    gas = IdealGas(CV, R, 1.0)
    V = np.linspace(0.5, 4.0, 20)
    inv = gas.temperature(1.3, V) * V ** (R / CV)
    assert np.ptp(inv) <= 1e-12 * inv[0]


def test_helmholtz_matches_closed_form(rng):
    A = partial_legendre(ideal_gas(CV), ["S"], bracket=[(-20.0, 20.0)])
    for _ in range(30):
        T, V = rng.uniform(100, 600), rng.uniform(0.2, 5)
        expect = CV * T - T * (CV * np.log(T) + R * np.log(V))
        assert A.value([T, V]) == pytest.approx(expect, rel=1e-8, abs=1e-8)


def test_quadratic_legendre():
    k = 4.0
    F = partial_legendre(quadratic_energy([[k]]), [0])
    for g in (-2.0, 0.5, 3.0):
        assert F.value([g]) == pytest.approx(-g ** 2 / (2 * k), rel=1e-12)


def test_legendre_involution(rng):
    rel = ideal_gas(CV)
    A = partial_legendre(rel, ["S"], bracket=[(-20.0, 20.0)])
    back = partial_legendre(A, [0], guess=lambda args: [300.0])
    for _ in range(20):
        S, V = rng.uniform(-3, 3), rng.uniform(0.3, 4)
        assert back.value([S, V]) == pytest.approx(float(rel.generator.value(np.array([S, V]))), rel=1e-8)


def test_hessian_duality():
    assert hessian_duality_check(quadratic_energy([[4.0]]), [0], [[0.3], [1.0]]).max_error <= 1e-6
    rep = hessian_duality_check(ideal_gas(CV), ["S"], [[0.0, 1.0], [1.0, 2.0]], bracket=[(-20.0, 20.0)])
    assert rep.passed(1e-6)


def test_hessian_duality_random_quadratic(rng):
    for _ in range(10):
        M = rng.normal(size=(2, 2))
        Q = M @ M.T + 0.5 * np.eye(2)
        rep = hessian_duality_check(quadratic_energy(Q), [0, 1], [rng.normal(size=2)])
        assert rep.max_error <= 1e-10


def test_caloric_models():
    c = Caloric.constant_heat_capacity(2.0)
    S = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(c.energy(S), 2.0 * c.temperature(S))
    assert c.entropy_at(350.0) == pytest.approx(2.0 * np.log(350.0), rel=1e-10)
    iso = Caloric.isothermal(300.0)
    np.testing.assert_allclose(iso.temperature(S), 300.0)
