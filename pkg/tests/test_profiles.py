"""Profile definitions, calibration constants, and JSON round-trips."""
import json

import pytest

from fogdist.env import request_latency_breakdown
from fogdist.model import PricingModel, ResourceUsage, deployment_cost
from fogdist.profiles import (
    ApplicationProfile,
    ModuleProfile,
    builtin_profiles,
    fd_profile,
    get_profile,
    heavy_profile,
    ipokemon_profile,
    load_profile,
    profile_from_dict,
    profile_to_dict,
    resolve_profile,
)


def test_builtin_profiles_shapes():
    fd, ipm = builtin_profiles()
    assert fd.name == "fd" and fd.n_modules == 3
    assert ipm.name == "ipokemon" and ipm.n_modules == 2


def test_video_profile_calibration_constants():
    """Ratios derived from the measured uplink chain 2.28/0.77/0.52/0.11 s."""
    prof = fd_profile()
    grey, motion, face = prof.modules
    assert grey.data_out_ratio == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert motion.pass_fraction == pytest.approx(0.675, abs=1e-3)
    # whatever survives the whole pipeline is ~4.8% of the raw frame
    surviving = 1.0
    for m in prof.modules:
        surviving *= m.data_out_ratio * m.pass_fraction
    assert surviving == pytest.approx(0.11 / 2.28, rel=1e-9)
    # stage service times as reported: 3-4 ms for the light stages
    assert 0.003 <= grey.compute_s <= 0.004
    assert 0.003 <= motion.compute_s <= 0.004
    assert face.fog_extra_s == 0.2


def test_game_profile_is_latency_shaped():
    """The game's cloud path is delay-dominated, its fog path compute-dominated."""
    prof = ipokemon_profile()
    b0 = request_latency_breakdown(prof, 0)
    b2 = request_latency_breakdown(prof, 2)
    assert b0.propagation_s > 0.5 * b0.total_s   # device-to-cloud delay dominates
    assert b2.total_s < 0.25 * b0.total_s        # serving at the edge is much faster


def test_heavy_profile_cloud_plan_is_cheapest_everywhere():
    """Exhaustive over stress loads: at ratio 1 the cloud plan wins every state."""
    prof = heavy_profile()
    pricing = PricingModel(fog_price_ratio=1.0)
    requests = prof.requests_per_deployment
    for load in range(8):
        available = 8.0 - load
        costs = []
        for k in (0, 1):
            b = request_latency_breakdown(prof, k, available_units=available)
            duration_s = b.total_s * requests
            if k == 0:
                usage = ResourceUsage()
            else:
                busy_frac = sum(b.fog_module_s.values()) * requests / duration_s
                demand = prof.modules[0].demand
                usage = ResourceUsage(
                    cpu_units=demand.cpu_units * busy_frac,
                    mem_gb=demand.mem_gb * busy_frac,
                    storage_gb=demand.storage_gb * busy_frac,
                )
            costs.append(deployment_cost(k, 1, pricing, usage, duration_s / 3600.0))
        assert costs[0] < costs[1]


def test_get_profile_and_resolve():
    assert get_profile("fd").name == "fd"
    assert resolve_profile("heavy").name == "heavy"
    with pytest.raises(ValueError):
        get_profile("nope")
    with pytest.raises(ValueError):
        resolve_profile("not-a-builtin")


def test_profile_json_round_trip(tmp_path):
    original = fd_profile()
    path = tmp_path / "fd.json"
    path.write_text(json.dumps(profile_to_dict(original)))
    loaded = load_profile(path)
    assert loaded == original


def test_load_profile_missing_file_names_the_path(tmp_path):
    missing = tmp_path / "absent.json"
    with pytest.raises(ValueError, match="absent.json"):
        load_profile(missing)


def test_profile_from_dict_rejects_unknown_keys():
    data = profile_to_dict(fd_profile())
    data["surprise"] = 1
    with pytest.raises(ValueError, match="surprise"):
        profile_from_dict(data)


def test_profile_from_dict_rejects_unknown_module_keys():
    data = profile_to_dict(fd_profile())
    data["modules"][0]["gpu"] = True
    with pytest.raises(ValueError, match="gpu"):
        profile_from_dict(data)


def test_module_validation():
    with pytest.raises(ValueError):
        ModuleProfile(name="m", compute_s=-1.0)
    with pytest.raises(ValueError):
        ModuleProfile(name="m", compute_s=1.0, data_out_ratio=0.0)
    with pytest.raises(ValueError):
        ModuleProfile(name="m", compute_s=1.0, pass_fraction=1.5)


def test_profile_validation():
    module = ModuleProfile(name="m", compute_s=1.0)
    with pytest.raises(ValueError):
        ApplicationProfile(
            name="p", modules=(), raw_request_data=1.0, requests_per_deployment=20,
            uplink_seconds_per_raw_unit=1.0, base_delay_fog_cloud_ms=1.0,
            base_delay_dev_cloud_ms=1.0,
        )
    with pytest.raises(ValueError):
        ApplicationProfile(
            name="p", modules=(module,), raw_request_data=0.0, requests_per_deployment=20,
            uplink_seconds_per_raw_unit=1.0, base_delay_fog_cloud_ms=1.0,
            base_delay_dev_cloud_ms=1.0,
        )
    heavy = ModuleProfile(name="big", compute_s=1.0,
                          demand=ResourceUsage(cpu_units=5.0))
    with pytest.raises(ValueError, match="cpu demand"):
        ApplicationProfile(
            name="p", modules=(heavy, heavy), raw_request_data=1.0,
            requests_per_deployment=20, uplink_seconds_per_raw_unit=1.0,
            base_delay_fog_cloud_ms=1.0, base_delay_dev_cloud_ms=1.0,
        )
