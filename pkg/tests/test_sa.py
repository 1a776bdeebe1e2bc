"""Simulated-annealing baseline behavior."""

import numpy as np
import pytest

from qevt.annealing import SaConfig, default_sa_config, simulated_annealing
from qevt.qubo import QuboInstance, brute_force_minimum, generate_synthetic_q, qubo_energy
from qevt.seeding import rng_from


def test_penalty_only_reaches_zero():
    inst = QuboInstance(n=8, q=np.zeros((8, 8)), k=3)
    bits, energy = simulated_annealing(inst, default_sa_config(inst, seed=0))
    assert energy == pytest.approx(0.0, abs=1e-12)
    assert bits.sum() == 3


def test_generous_budget_matches_brute_force():
    inst = generate_synthetic_q(10, seed=42)
    _, optimum = brute_force_minimum(inst)
    cfg = default_sa_config(inst, seed=0, restarts=20, sweeps=2000)
    _, energy = simulated_annealing(inst, cfg)
    assert energy == pytest.approx(optimum, abs=1e-9)


def test_deterministic():
    inst = generate_synthetic_q(9, seed=5)
    cfg = default_sa_config(inst, seed=77)
    bits_a, e_a = simulated_annealing(inst, cfg)
    bits_b, e_b = simulated_annealing(inst, cfg)
    assert e_a == e_b
    assert np.array_equal(bits_a, bits_b)


def test_reported_energy_is_exact_objective_of_reported_bits():
    inst = generate_synthetic_q(8, seed=1)
    bits, energy = simulated_annealing(inst, default_sa_config(inst, seed=3))
    assert energy == qubo_energy(inst, bits)


def test_never_worse_than_any_initial_state():
    # restart r's initial state is reproducible from the seeding contract
    inst = generate_synthetic_q(9, seed=2)
    cfg = default_sa_config(inst, seed=123, restarts=5, sweeps=50)
    _, energy = simulated_annealing(inst, cfg)
    initial_energies = []
    for r in range(cfg.restarts):
        rng = rng_from(cfg.seed, "sa-restart", r)
        x = rng.integers(0, 2, size=inst.n)
        initial_energies.append(qubo_energy(inst, x))
    assert energy <= min(initial_energies) + 1e-12


def test_budget_monotonicity_in_expectation():
    inst = generate_synthetic_q(10, seed=7)
    short, long = [], []
    for seed in range(30):
        _, e_short = simulated_annealing(inst, default_sa_config(inst, seed=seed, sweeps=20))
        _, e_long = simulated_annealing(inst, default_sa_config(inst, seed=seed, sweeps=2000))
        short.append(e_short)
        long.append(e_long)
    assert np.mean(long) <= np.mean(short)


def test_config_validation():
    with pytest.raises(ValueError):
        SaConfig(initial_temperature=0.0)
    with pytest.raises(ValueError):
        SaConfig(initial_temperature=1.0, cooling_rate=1.0)
    with pytest.raises(ValueError):
        SaConfig(initial_temperature=1.0, sweeps=0)


def test_default_temperature_scales_with_q():
    inst = generate_synthetic_q(10, seed=0, magnitude=2.0)
    cfg = default_sa_config(inst)
    assert cfg.initial_temperature == pytest.approx(10 * np.max(np.abs(inst.q)))
    flat = QuboInstance(n=4, q=np.zeros((4, 4)), k=2)
    assert default_sa_config(flat).initial_temperature == 1.0
