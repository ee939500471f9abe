"""Environment tests: stress process, latency laws, observation, deployments."""
import math
import random

import numpy as np
import pytest

from fogdist.env import (
    AVAILABILITY_FLOOR,
    CAPACITY_UNITS,
    STATE_CAPS,
    STATE_FACTORS,
    FogEnvironment,
    SimClock,
    StressProcess,
    contended_time,
    normalize_state,
    request_latency_breakdown,
    transmission_time,
)
from fogdist.profiles import fd_profile, heavy_profile, ipokemon_profile


# -- stress process ----------------------------------------------------------

def test_stress_load_range_and_initial_draw():
    for seed in range(50):
        p = StressProcess(seed)
        assert 0 <= p.load <= 7


def test_stress_holds_between_boundaries():
    p = StressProcess(3)
    before = p.load
    p.advance(9.9)
    assert p.load == before
    p.advance(0.0)
    assert p.load == before


def test_stress_resamples_on_each_boundary():
    """Interval i's load is the i-th draw, however advancement is chunked."""
    a = StressProcess(17)
    b = StressProcess(17)
    loads_a = [a.load]
    for _ in range(60):
        a.advance(10.0)
        loads_a.append(a.load)
    loads_b = [b.load]
    rng = random.Random(5)
    t = 0.0
    while t < 600.0:
        dt = min(rng.uniform(0.1, 23.0), 600.0 - t)
        b.advance(dt)
        t += dt
    # align: after 600 s both sit in interval 60
    assert b.load == loads_a[60]
    # replay a third copy at exactly the recorded boundaries
    c = StressProcess(17)
    for i in range(1, 61):
        c.advance(10.0)
        assert c.load == loads_a[i]


def test_stress_same_seed_same_trajectory():
    a, b = StressProcess(11), StressProcess(11)
    for _ in range(200):
        a.advance(10.0)
        b.advance(10.0)
        assert a.load == b.load


def test_stress_mean_is_uniform_over_units():
    """Mean of uniform{0..7} is 3.5; 10k intervals keep it within [3.3, 3.7]."""
    p = StressProcess(2024)
    loads = [p.load]
    for _ in range(9999):
        p.advance(10.0)
        loads.append(p.load)
    assert 3.3 <= np.mean(loads) <= 3.7


def test_stress_rejects_backward_time():
    with pytest.raises(ValueError):
        StressProcess(0).advance(-1.0)


# -- latency laws ------------------------------------------------------------

def test_transmission_time_is_proportional_to_size():
    prof = fd_profile()
    assert transmission_time(1.0, prof) == pytest.approx(2.28, rel=1e-12)
    assert transmission_time(0.5, prof) == pytest.approx(1.14, rel=1e-12)
    assert transmission_time(0.0, prof) == 0.0
    with pytest.raises(ValueError):
        transmission_time(-1.0, prof)


def test_contended_time_never_speeds_up():
    # demand below availability: unchanged
    assert contended_time(1.0, 4.0, 8.0) == 1.0
    # demand 8 against 4 free units: twice as slow
    assert contended_time(1.0, 8.0, 4.0) == 2.0
    # nothing free: floor of 0.25 units -> 8/0.25 = 32x
    assert contended_time(1.0, 8.0, 0.0) == 32.0
    assert contended_time(0.0, 8.0, 0.5) == 0.0


def test_breakdown_video_transmission_chain():
    """The calibrated chain: 2.28, ~0.77, ~0.52, ~0.11 seconds per frame."""
    prof = fd_profile()
    observed = [request_latency_breakdown(prof, k).transmission_s for k in range(4)]
    for got, want in zip(observed, (2.28, 0.77, 0.52, 0.11)):
        assert abs(got - want) / want <= 0.02


def test_breakdown_cloud_only_anchor():
    """All-cloud per-frame total (minus propagation): exactly the 2.3 s anchor."""
    prof = fd_profile()
    b = request_latency_breakdown(prof, 0)
    assert b.total_s - b.propagation_s == pytest.approx(2.3, abs=1e-12)


def test_breakdown_filtering_weights_downstream_stages():
    """Only the motion-passing share of frames reaches the face stage."""
    prof = fd_profile()
    b = request_latency_breakdown(prof, 0)
    face = next(m for m in prof.modules if m.name == "face")
    motion = next(m for m in prof.modules if m.name == "motion")
    assert b.cloud_module_s["face"] == pytest.approx(
        motion.pass_fraction * face.compute_s, rel=1e-12)


def test_breakdown_fog_stage_pays_its_extra_latency():
    prof = fd_profile()
    full_fog = request_latency_breakdown(prof, 3)
    face = next(m for m in prof.modules if m.name == "face")
    motion = next(m for m in prof.modules if m.name == "motion")
    # unstressed: compute + the 0.2 s fog penalty, weighted by survival
    assert full_fog.fog_module_s["face"] == pytest.approx(
        motion.pass_fraction * (face.compute_s + 0.2), rel=1e-12)


def test_breakdown_slower_when_less_is_available():
    prof = fd_profile()
    free = request_latency_breakdown(prof, 3, available_units=8.0)
    busy = request_latency_breakdown(prof, 3, available_units=1.0)
    assert busy.total_s > free.total_s
    # transmission does not contend
    assert busy.transmission_s == free.transmission_s


def test_breakdown_rejects_bad_plan():
    with pytest.raises(ValueError):
        request_latency_breakdown(fd_profile(), 4)


# -- observation -------------------------------------------------------------

def test_observe_unstressed_node_is_idle():
    env = FogEnvironment(fd_profile(), seed=1, stressed=False)
    state = env.observe(SimClock())
    state.validate()
    assert state.cpu_util == 0.0
    assert state.cpu_count == 8.0
    assert state.mem_used == 0.0  # nothing deployed yet


def test_observe_cpu_util_is_load_over_capacity():
    env = FogEnvironment(fd_profile(), seed=6)
    clock = SimClock()
    for _ in range(30):
        state = env.observe(clock)
        assert state.cpu_util == env.stress.load / CAPACITY_UNITS
        clock.advance(10.0)


def test_observe_memory_tracks_stress_and_deployment():
    """mem_used = 0.25 GB per stressed unit plus the deployed modules' demand."""
    prof = fd_profile()
    env = FogEnvironment(prof, seed=2, stressed=False)
    clock = SimClock()
    env.execute(3, clock)
    state = env.observe(clock)
    deployed_mem = sum(m.demand.mem_gb for m in prof.modules)  # 0.1+0.1+0.5
    assert state.mem_used == pytest.approx(deployed_mem, rel=1e-12)


def test_observe_memory_never_exceeds_totals():
    env = FogEnvironment(fd_profile(), seed=3)
    clock = SimClock()
    env.execute(3, clock)
    for _ in range(100):
        state = env.observe(clock)
        state.validate()
        assert state.mem_used <= state.mem_total
        assert state.swap_used <= state.swap_total
        clock.advance(10.0)


def test_counters_are_monotone_within_an_experiment():
    env = FogEnvironment(fd_profile(), seed=8)
    clock = SimClock()
    counter_fields = [f for f in STATE_FACTORS if f.startswith(("io_", "net_"))]
    previous = env.observe(clock)
    for k in (0, 1, 2, 3, 3, 2, 1, 0):
        env.execute(k, clock)
        current = env.observe(clock)
        for field in counter_fields:
            assert getattr(current, field) >= getattr(previous, field)
        previous = current


def test_observe_delays_jitter_around_base():
    prof = fd_profile()
    env = FogEnvironment(prof, seed=4)
    clock = SimClock()
    for _ in range(50):
        state = env.observe(clock)
        assert 0.9 * prof.base_delay_fog_cloud_ms <= state.delay_fog_cloud <= 1.1 * prof.base_delay_fog_cloud_ms
        assert 0.9 * prof.base_delay_dev_cloud_ms <= state.delay_dev_cloud <= 1.1 * prof.base_delay_dev_cloud_ms
        clock.advance(1.0)


def test_normalize_state_is_unit_interval():
    env = FogEnvironment(fd_profile(), seed=5)
    clock = SimClock()
    env.execute(3, clock)
    vec = env.observe_normalized(clock)
    assert vec.shape == (19,)
    assert np.all(vec >= 0.0) and np.all(vec <= 1.0)
    assert set(STATE_CAPS) == set(STATE_FACTORS)


# -- deployments -------------------------------------------------------------

def test_execute_rejects_bad_plan():
    env = FogEnvironment(fd_profile(), seed=0)
    with pytest.raises(ValueError):
        env.execute(4, SimClock())


def test_execute_is_deterministic_for_a_seed():
    results = []
    for _ in range(2):
        env = FogEnvironment(fd_profile(), seed=31)
        clock = SimClock()
        outcome = env.execute(2, clock)
        results.append(outcome)
    a, b = results
    assert a.duration_s == b.duration_s
    assert a.usage == b.usage
    assert a.requests == b.requests


def test_execute_usage_piecewise():
    """Plan 0 touches no fog resources; the full plan engages every module."""
    env = FogEnvironment(fd_profile(), seed=1, stressed=False)
    clock = SimClock()
    cloud_only = env.execute(0, clock)
    assert cloud_only.usage.cpu_units == 0.0
    assert cloud_only.usage.mem_gb == 0.0
    assert cloud_only.usage.storage_gb == 0.0
    full = env.execute(3, clock)
    assert full.usage.cpu_units > 0.0
    assert full.usage.mem_gb > 0.0
    assert full.usage.storage_gb > 0.0


def test_execute_duration_matches_breakdown_when_unstressed():
    """20 frames, no stress, constant delays -> duration = 20 x per-frame total."""
    prof = fd_profile()
    env = FogEnvironment(prof, seed=9, stressed=False)
    clock = SimClock()
    state = env.observe(clock)  # fixes the delay samples used by the deployment
    b = request_latency_breakdown(
        prof, 2,
        fog_cloud_delay_s=state.delay_fog_cloud / 1000.0,
        dev_cloud_delay_s=state.delay_dev_cloud / 1000.0,
    )
    outcome = env.execute(2, clock)
    assert outcome.duration_s == pytest.approx(20 * b.total_s, rel=1e-9)


def test_execute_advances_the_clock_by_the_duration():
    env = FogEnvironment(fd_profile(), seed=10)
    clock = SimClock()
    outcome = env.execute(1, clock)
    assert clock.now == pytest.approx(outcome.duration_s, rel=1e-12)


def test_stress_trajectory_ignores_actions():
    """Same seed, different plans: identical load at identical simulated times."""
    env_a = FogEnvironment(fd_profile(), seed=55)
    env_b = FogEnvironment(fd_profile(), seed=55)
    clock_a, clock_b = SimClock(), SimClock()
    env_a.execute(0, clock_a)   # long deployment
    for _ in range(3):
        env_b.execute(3, clock_b)  # several short ones
    # bring B to A's simulated time and compare the observed load
    clock_b.advance(clock_a.now - clock_b.now)
    assert env_a.observe(clock_a).cpu_util == env_b.observe(clock_b).cpu_util


def test_stressed_deployments_take_longer_on_busy_nodes():
    """The heavy profile demands the whole node, so any load stretches it."""
    prof = heavy_profile()
    idle = FogEnvironment(prof, seed=3, stressed=False)
    outcome_idle = idle.execute(1, SimClock())
    seed = next(s for s in range(100) if FogEnvironment(prof, seed=s).stress.load > 0)
    busy = FogEnvironment(prof, seed=seed)
    outcome_busy = busy.execute(1, SimClock())
    assert outcome_busy.duration_s > outcome_idle.duration_s


def test_all_profiles_run_every_plan():
    for prof in (fd_profile(), ipokemon_profile(), heavy_profile()):
        env = FogEnvironment(prof, seed=13)
        clock = SimClock()
        for k in range(prof.n_modules + 1):
            outcome = env.execute(k, clock)
            assert outcome.duration_s > 0
            assert outcome.requests == prof.requests_per_deployment
