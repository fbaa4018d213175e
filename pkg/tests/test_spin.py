import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helichain.errors import DomainError
from helichain.spin import (
    IncrementField,
    ModelParams,
    SpinChain,
    boundary_ok,
    c_factor,
    chain_from_csv,
    chain_to_csv,
    energy_E,
    energy_Ehf,
    energy_H,
    energy_Hhf,
    ground_state,
    helix_angle,
    hf_offset,
    increments_from_csv,
    increments_to_csv,
    lattice_size,
    min_energy_analytic,
    reduced_Hhf,
    reflect,
    rotate,
)


def random_chain(rng, spacing, scale=math.pi):
    th = rng.uniform(-scale, scale, lattice_size(spacing))
    return SpinChain.from_increments(IncrementField.wrapped(th, spacing), rng.uniform(-math.pi, math.pi))


def bc_chain(rng, spacing):
    """Random chain satisfying cos theta^0 = cos theta^{M-1}."""
    th = rng.uniform(-math.pi, math.pi, lattice_size(spacing))
    th[-1] = -th[0]
    return SpinChain.from_increments(IncrementField.wrapped(th, spacing), rng.uniform(-math.pi, math.pi))


# --- lattice bookkeeping -----------------------------------------------------


@pytest.mark.parametrize("lam,c", [(0.5, 1.0), (1e-3, 1.0), (0.4, 1.5)])
def test_c_factor_examples(lam, c):
    assert c_factor(lam) == pytest.approx(c, abs=1e-12)


@pytest.mark.parametrize("lam", [0.0, -0.1, 1.5])
def test_c_factor_domain(lam):
    with pytest.raises(DomainError):
        c_factor(lam)


@given(st.floats(min_value=1e-4, max_value=1.0))
def test_c_factor_sum_identity(lam):
    m = lattice_size(lam)
    assert 1.0 <= c_factor(lam) < 2.0
    assert math.fsum([lam] * (m - 1)) == pytest.approx(1.0 - c_factor(lam) * lam, abs=1e-12)


def test_lattice_size_snaps_float_noise():
    assert lattice_size(0.1) == 10
    assert lattice_size(1.0 / 3.0) == 3


# --- types ---------------------------------------------------------------------


def test_spinchain_rejects_non_unit_and_wrong_length():
    with pytest.raises(DomainError):
        SpinChain(np.array([[1.0, 0.0], [0.0, 1.0], [1.1, 0.0]]), 0.5)
    with pytest.raises(DomainError):
        SpinChain(np.array([[1.0, 0.0], [0.0, 1.0]]), 0.5)


def test_spinchain_is_read_only():
    ch = ground_state(ModelParams(2.0, 0.1)).chain
    with pytest.raises(ValueError):
        ch.spins[0, 0] = 2.0


def test_increment_field_range():
    with pytest.raises(DomainError):
        IncrementField(np.array([0.1, math.pi]), 0.5)
    IncrementField(np.array([0.1, -math.pi]), 0.5)


def test_model_params_consistency():
    ModelParams.near_transition(0.02, 0.01)
    with pytest.raises(DomainError):
        ModelParams(3.0, 0.01, delta=0.02)
    with pytest.raises(DomainError):
        ModelParams(-1.0, 0.01)
    assert ModelParams(2.0, 0.1).j2 == 1.0


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_increment_roundtrip(seed):
    rng = np.random.default_rng(seed)
    incr = IncrementField.wrapped(rng.uniform(-math.pi, math.pi, 20), 0.05)
    back = SpinChain.from_increments(incr, rng.uniform(-3, 3)).increments()
    diff = np.angle(np.exp(1j * (back.thetas - incr.thetas)))
    assert np.max(np.abs(diff)) <= 1e-10


# --- energies: hand-evaluated examples -------------------------------------------

THREE = SpinChain(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]), 0.5)


def test_energy_E_hand_example():
    assert energy_E(THREE, ModelParams(2.0, 0.5)) == pytest.approx(-0.5, abs=1e-15)


def test_energy_H_hand_example():
    assert energy_H(THREE, ModelParams(2.0, 0.5)) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("j1", [0.5, 1.0, 2.0, 3.0, 3.9, 4.0])
def test_helix_energy_matches_closed_form(j1):
    p = ModelParams(j1, 1e-3)
    assert energy_E(ground_state(p).chain, p) == pytest.approx(-(1 + j1**2 / 8) * 0.999, abs=1e-10)


def test_ferromagnetic_example():
    p = ModelParams(5.0, 1e-3)
    gs = ground_state(p)
    assert gs.ferromagnetic and gs.angle == 0.0
    assert energy_E(gs.chain, p) == pytest.approx(-3.996, abs=1e-12)
    assert min_energy_analytic(p) == pytest.approx(-3.996, abs=1e-12)


def test_min_energy_examples():
    assert min_energy_analytic(ModelParams(2.0, 0.5)) == pytest.approx(-0.75)
    assert min_energy_analytic(ModelParams(4.0, 1e-6)) == pytest.approx(-3.0, abs=1e-5)


def test_H_vanishes_on_helix_and_on_constant_at_j1_4():
    p = ModelParams(3.0, 1e-3)
    assert energy_H(ground_state(p).chain, p) == pytest.approx(0.0, abs=1e-13)
    const = SpinChain.from_angles(np.zeros(11), 0.1)
    assert energy_H(const, ModelParams(4.0, 0.1)) == 0.0


def test_Hhf_examples():
    lam, delta = 1e-3, 0.01
    const = SpinChain.from_angles(np.zeros(lattice_size(lam) + 1), lam)
    assert energy_Hhf(const, delta) == pytest.approx(2 * delta**2 * 0.999, rel=1e-12)
    assert energy_Hhf(const, delta) == pytest.approx(1.998e-4, rel=1e-12)
    p = ModelParams.near_transition(0.02, 1e-2)
    assert energy_Hhf(ground_state(p).chain, 0.02) == pytest.approx(0.0, abs=1e-15)


def test_Hhf_domain():
    with pytest.raises(DomainError):
        energy_Hhf(THREE, 1.0)


def test_short_chains_rejected():
    two = SpinChain(np.array([[1.0, 0.0], [0.0, 1.0]]), 1.0)
    with pytest.raises(DomainError):
        energy_E(two, ModelParams(2.0, 1.0))


def test_reduced_examples():
    lam, delta = 1e-3, 0.01
    m = lattice_size(lam)
    phi = math.acos(1 - delta)
    assert reduced_Hhf(IncrementField(np.full(m, phi), lam), delta) == pytest.approx(0.0, abs=1e-18)
    assert reduced_Hhf(IncrementField(np.full(m, -phi), lam), delta) == pytest.approx(0.0, abs=1e-18)
    assert reduced_Hhf(IncrementField(np.zeros(m), lam), delta) == pytest.approx(2 * delta**2 * 0.999, rel=1e-12)
    with pytest.raises(DomainError):
        reduced_Hhf(IncrementField(np.zeros(1), 1.0), delta)


def test_reduced_matches_cosine_expansion():
    # independent oracle: the expanded cosine form of each bond term
    rng = np.random.default_rng(7)
    lam, delta = 0.02, 0.3
    th = rng.uniform(-math.pi, math.pi, lattice_size(lam))
    a, b = th[:-1], th[1:]
    k = 1 - delta
    terms = 2 + 4 * k * k - 4 * k * (np.cos(a) + np.cos(b)) + 2 * np.cos(a + b)
    assert reduced_Hhf(IncrementField.wrapped(th, lam), delta) == pytest.approx(np.sum(0.5 * lam * terms), abs=1e-12)


# --- properties ----------------------------------------------------------------------


def test_identities_on_100_boundary_chains():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        lam = rng.choice([0.5, 0.1, 0.05, 1e-2])
        ch = bc_chain(rng, lam)
        j1 = rng.uniform(0.1, 6.0)
        delta = rng.uniform(1e-3, 0.9)
        p = ModelParams(j1, lam)
        w = 1 - c_factor(lam) * lam
        assert energy_E(ch, p) == pytest.approx(energy_H(ch, p) - (1 + j1**2 / 8) * w, abs=1e-12)
        assert energy_Ehf(ch, delta) + hf_offset(delta, lam) == pytest.approx(energy_Hhf(ch, delta), abs=1e-12)
        assert energy_H(ch, p) >= 0.0


def test_reduced_agrees_with_direct_on_100_fields():
    rng = np.random.default_rng(11)
    for _ in range(100):
        lam = rng.choice([0.1, 0.02, 0.005])
        delta = rng.uniform(1e-3, 0.9)
        ch = random_chain(rng, lam)
        assert reduced_Hhf(ch.increments(), delta) == pytest.approx(energy_Hhf(ch, delta), abs=1e-10)


def test_symmetry_invariance_on_100_chains():
    rng = np.random.default_rng(5)
    for _ in range(100):
        ch = random_chain(rng, 0.05)
        p = ModelParams(rng.uniform(0.5, 4.0), 0.05)
        delta = rng.uniform(0.01, 0.5)
        a = rng.uniform(-10, 10)
        for other in (rotate(ch, a), reflect(ch)):
            assert energy_E(other, p) == pytest.approx(energy_E(ch, p), abs=1e-12)
            assert energy_H(other, p) == pytest.approx(energy_H(ch, p), abs=1e-12)
            assert energy_Hhf(other, delta) == pytest.approx(energy_Hhf(ch, delta), abs=1e-12)
            assert energy_Ehf(other, delta) == pytest.approx(energy_Ehf(ch, delta), abs=1e-12)


def test_rotate_zero_is_identity():
    ch = random_chain(np.random.default_rng(0), 0.1)
    assert np.array_equal(rotate(ch, 0.0).spins, ch.spins)


@given(st.floats(min_value=0.1, max_value=4.0), st.sampled_from([1, -1]))
def test_H_zero_iff_scalar_products(j1, chir):
    p = ModelParams(j1, 0.05)
    u = ground_state(p, chir).chain.spins
    assert np.allclose(np.sum(u[:-1] * u[1:], axis=1), j1 / 4, atol=1e-9)
    assert np.allclose(np.sum(u[:-2] * u[2:], axis=1), j1**2 / 8 - 1, atol=1e-9)
    assert energy_H(ground_state(p, chir).chain, p) <= 1e-12


def test_H_positive_off_ground_state():
    p = ModelParams(2.0, 0.1)
    th = np.full(10, math.pi / 3)
    th[4] = 0.5
    assert energy_H(SpinChain.from_increments(IncrementField(th, 0.1)), p) > 1e-3


def test_long_chain_uses_compensated_sums():
    lam = 1e-6
    p = ModelParams(2.0, lam)
    assert energy_E(ground_state(p).chain, p) == pytest.approx(min_energy_analytic(p), abs=1e-10)


# --- ground states --------------------------------------------------------------------


def test_ground_state_j1_2():
    gs = ground_state(ModelParams(2.0, 0.1))
    assert gs.angle == pytest.approx(math.pi / 3)
    u = gs.chain.spins
    assert np.allclose(np.sum(u[:-2] * u[2:], axis=1), -0.5, atol=1e-12)


def test_ground_state_j1_4_is_constant():
    gs = ground_state(ModelParams(4.0, 0.1))
    assert gs.angle == 0.0 and not gs.ferromagnetic
    assert np.allclose(gs.chain.spins, [1.0, 0.0])


def test_ground_state_domain():
    with pytest.raises(DomainError):
        helix_angle(0.0)
    with pytest.raises(DomainError):
        ground_state(ModelParams(2.0, 0.1), chirality=0)


# --- boundary condition ----------------------------------------------------------------------


def test_boundary_examples():
    assert boundary_ok(ground_state(ModelParams(2.0, 0.1)).chain)
    th = np.full(10, 0.3)
    th[0], th[-1] = -math.pi / 3, math.pi / 3
    assert boundary_ok(SpinChain.from_increments(IncrementField(th, 0.1)))
    th[0], th[-1] = math.pi / 3, math.pi / 4
    assert not boundary_ok(SpinChain.from_increments(IncrementField(th, 0.1)), tol=1e-9)


# --- serialization ----------------------------------------------------------------------


def test_csv_roundtrip_exact():
    rng = np.random.default_rng(3)
    ch = random_chain(rng, 0.1)
    text = chain_to_csv(ch)
    assert text.splitlines()[0] == "i,x,y"
    assert np.array_equal(chain_from_csv(text, 0.1).spins, ch.spins)
    incr = ch.increments()
    text = increments_to_csv(incr)
    assert text.splitlines()[0] == "i,theta"
    assert np.array_equal(increments_from_csv(text, 0.1).thetas, incr.thetas)
