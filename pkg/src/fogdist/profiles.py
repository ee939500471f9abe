"""Application profiles: module pipelines and their traffic shape.

An application is a linear pipeline of modules.  Each request enters at the
first module; every module shrinks the payload by ``data_out_ratio`` and
forwards only ``pass_fraction`` of the requests downstream (a filter stage
such as motion detection drops the rest).  The profile also fixes how long a
raw request takes on the fog-to-cloud uplink, which anchors the whole
transmission model.

Profiles can be loaded from JSON so new use-cases need no code changes; see
``load_profile`` and the README for the schema.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .model import MAX_CPU_UNITS, ResourceUsage

PROFILE_FORMAT_VERSION = 1

# Video-pipeline calibration, derived from the measured per-frame uplink
# times 2.28 s (raw), 0.77 s (after greyscale), 0.52 s (after motion
# filtering) and 0.11 s (final result):
FD_RAW_UPLINK_S = 2.28
FD_GREY_DATA_OUT = 1.0 / 3.0            # greyscale emits a third of the frame
FD_MOTION_PASS = 0.52 / 0.77            # ~0.675 of frames contain motion
FD_FACE_DATA_OUT = (0.11 * 0.77) / (2.28 * 0.52 * FD_GREY_DATA_OUT)
FD_GREY_COMPUTE_S = 0.003
FD_MOTION_COMPUTE_S = 0.004
FD_FACE_FOG_EXTRA_S = 0.2               # observed slowdown of detection on the board
FD_CLOUD_ONLY_FRAME_S = 2.3             # per-frame total with everything on the VM
# Face detection time on the VM backed out of the cloud-only per-frame total
# (the detector only sees frames that pass the motion filter):
FD_FACE_COMPUTE_S = (
    FD_CLOUD_ONLY_FRAME_S - FD_RAW_UPLINK_S - FD_GREY_COMPUTE_S - FD_MOTION_COMPUTE_S
) / FD_MOTION_PASS


@dataclass(frozen=True)
class ModuleProfile:
    """One pipeline stage: timing, traffic shaping, and resource demand."""

    name: str
    compute_s: float                     # service time per request, unstressed
    fog_extra_s: float = 0.0             # added latency when hosted on the Fog node
    data_out_ratio: float = 1.0          # output payload / input payload
    pass_fraction: float = 1.0           # share of requests forwarded downstream
    demand: ResourceUsage = field(default_factory=ResourceUsage)

    def __post_init__(self):
        if not self.name:
            raise ValueError("module name must be non-empty")
        if not math.isfinite(self.compute_s) or self.compute_s < 0:
            raise ValueError(f"module {self.name}: compute_s must be >= 0")
        if not math.isfinite(self.fog_extra_s) or self.fog_extra_s < 0:
            raise ValueError(f"module {self.name}: fog_extra_s must be >= 0")
        if not 0 < self.data_out_ratio <= 1:
            raise ValueError(f"module {self.name}: data_out_ratio must lie in (0, 1]")
        if not 0 < self.pass_fraction <= 1:
            raise ValueError(f"module {self.name}: pass_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ApplicationProfile:
    """A pipeline of modules plus the link and workload parameters."""

    name: str
    modules: tuple[ModuleProfile, ...]
    raw_request_data: float              # payload size of one raw request, in data units
    requests_per_deployment: int
    uplink_seconds_per_raw_unit: float   # fog-to-cloud uplink time per data unit
    base_delay_fog_cloud_ms: float
    base_delay_dev_cloud_ms: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("profile name must be non-empty")
        if len(self.modules) < 1:
            raise ValueError(f"profile {self.name}: needs at least one module")
        if not math.isfinite(self.raw_request_data) or self.raw_request_data <= 0:
            raise ValueError(f"profile {self.name}: raw_request_data must be > 0")
        if self.requests_per_deployment < 1:
            raise ValueError(f"profile {self.name}: requests_per_deployment must be >= 1")
        if not math.isfinite(self.uplink_seconds_per_raw_unit) or self.uplink_seconds_per_raw_unit < 0:
            raise ValueError(f"profile {self.name}: uplink_seconds_per_raw_unit must be >= 0")
        for fname in ("base_delay_fog_cloud_ms", "base_delay_dev_cloud_ms"):
            value = getattr(self, fname)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"profile {self.name}: {fname} must be >= 0")
        total_cpu = sum(m.demand.cpu_units for m in self.modules)
        if total_cpu > MAX_CPU_UNITS:
            raise ValueError(
                f"profile {self.name}: total module cpu demand {total_cpu} exceeds the node"
            )

    @property
    def n_modules(self) -> int:
        return len(self.modules)


def fd_profile() -> ApplicationProfile:
    """Video face-detection pipeline: greyscale, motion filter, face detector."""
    return ApplicationProfile(
        name="fd",
        modules=(
            ModuleProfile(
                name="greyscale",
                compute_s=FD_GREY_COMPUTE_S,
                data_out_ratio=FD_GREY_DATA_OUT,
                demand=ResourceUsage(cpu_units=1.0, mem_gb=0.1, storage_gb=0.05),
            ),
            ModuleProfile(
                name="motion",
                compute_s=FD_MOTION_COMPUTE_S,
                pass_fraction=FD_MOTION_PASS,
                demand=ResourceUsage(cpu_units=1.0, mem_gb=0.1, storage_gb=0.05),
            ),
            ModuleProfile(
                name="face",
                compute_s=FD_FACE_COMPUTE_S,
                fog_extra_s=FD_FACE_FOG_EXTRA_S,
                data_out_ratio=FD_FACE_DATA_OUT,
                demand=ResourceUsage(cpu_units=2.0, mem_gb=0.5, storage_gb=0.2),
            ),
        ),
        raw_request_data=1.0,
        requests_per_deployment=20,
        uplink_seconds_per_raw_unit=FD_RAW_UPLINK_S,
        base_delay_fog_cloud_ms=15.0,
        base_delay_dev_cloud_ms=25.0,
    )


def ipokemon_profile() -> ApplicationProfile:
    """Location-based game server: session cache in front of the account origin.

    Most requests hit existing sessions and can be answered at the edge; only
    the remaining fifth must travel on to the origin service.
    """
    return ApplicationProfile(
        name="ipokemon",
        modules=(
            ModuleProfile(
                name="session-cache",
                compute_s=0.008,
                fog_extra_s=0.002,
                data_out_ratio=0.5,
                pass_fraction=0.2,
                demand=ResourceUsage(cpu_units=2.0, mem_gb=0.5, storage_gb=0.3),
            ),
            ModuleProfile(
                name="account-origin",
                compute_s=0.012,
                fog_extra_s=0.003,
                data_out_ratio=0.6,
                demand=ResourceUsage(cpu_units=2.0, mem_gb=0.5, storage_gb=0.3),
            ),
        ),
        raw_request_data=1.0,
        requests_per_deployment=100,
        uplink_seconds_per_raw_unit=0.02,
        base_delay_fog_cloud_ms=12.0,
        base_delay_dev_cloud_ms=95.0,
    )


def heavy_profile() -> ApplicationProfile:
    """Single compute-bound batch stage that saturates the board.

    Offloading it to the Fog node saves almost no traffic (the stage barely
    shrinks its payload) while occupying the whole node for a long time, so
    under Cloud-equal resource pricing the Cloud plan is always the cheaper
    one.  Useful for exercising cost-only decision making.
    """
    return ApplicationProfile(
        name="heavy",
        modules=(
            ModuleProfile(
                name="batch-stage",
                compute_s=300.0,
                fog_extra_s=60.0,
                data_out_ratio=0.99,
                demand=ResourceUsage(cpu_units=8.0, mem_gb=2.0, storage_gb=10.0),
            ),
        ),
        raw_request_data=1.0,
        requests_per_deployment=20,
        uplink_seconds_per_raw_unit=60.0,
        base_delay_fog_cloud_ms=15.0,
        base_delay_dev_cloud_ms=25.0,
    )


def builtin_profiles() -> tuple[ApplicationProfile, ApplicationProfile]:
    """The two calibrated evaluation profiles."""
    return (fd_profile(), ipokemon_profile())


_BUILTIN_FACTORIES = {
    "fd": fd_profile,
    "ipokemon": ipokemon_profile,
    "heavy": heavy_profile,
}


def get_profile(name: str) -> ApplicationProfile:
    """Look up a builtin profile by name."""
    try:
        return _BUILTIN_FACTORIES[name]()
    except KeyError:
        known = ", ".join(sorted(_BUILTIN_FACTORIES))
        raise ValueError(f"unknown builtin profile {name!r} (known: {known})") from None


def profile_to_dict(profile: ApplicationProfile) -> dict:
    return {
        "format_version": PROFILE_FORMAT_VERSION,
        "name": profile.name,
        "raw_request_data": profile.raw_request_data,
        "requests_per_deployment": profile.requests_per_deployment,
        "uplink_seconds_per_raw_unit": profile.uplink_seconds_per_raw_unit,
        "base_delay_fog_cloud_ms": profile.base_delay_fog_cloud_ms,
        "base_delay_dev_cloud_ms": profile.base_delay_dev_cloud_ms,
        "modules": [
            {
                "name": m.name,
                "compute_s": m.compute_s,
                "fog_extra_s": m.fog_extra_s,
                "data_out_ratio": m.data_out_ratio,
                "pass_fraction": m.pass_fraction,
                "demand": {
                    "cpu_units": m.demand.cpu_units,
                    "mem_gb": m.demand.mem_gb,
                    "storage_gb": m.demand.storage_gb,
                },
            }
            for m in profile.modules
        ],
    }


def _reject_unknown(given: dict, allowed: set[str], where: str) -> None:
    unknown = set(given) - allowed
    if unknown:
        raise ValueError(f"{where}: unknown key(s) {sorted(unknown)}")


def profile_from_dict(data: dict, where: str = "profile") -> ApplicationProfile:
    if not isinstance(data, dict):
        raise ValueError(f"{where}: expected an object")
    allowed = {
        "format_version", "name", "raw_request_data", "requests_per_deployment",
        "uplink_seconds_per_raw_unit", "base_delay_fog_cloud_ms",
        "base_delay_dev_cloud_ms", "modules",
    }
    _reject_unknown(data, allowed, where)
    version = data.get("format_version", PROFILE_FORMAT_VERSION)
    if version != PROFILE_FORMAT_VERSION:
        raise ValueError(f"{where}.format_version: unsupported version {version!r}")
    raw_modules = data.get("modules")
    if not isinstance(raw_modules, list) or not raw_modules:
        raise ValueError(f"{where}.modules: expected a non-empty list")
    modules = []
    for i, m in enumerate(raw_modules):
        mwhere = f"{where}.modules[{i}]"
        if not isinstance(m, dict):
            raise ValueError(f"{mwhere}: expected an object")
        _reject_unknown(
            m,
            {"name", "compute_s", "fog_extra_s", "data_out_ratio", "pass_fraction", "demand"},
            mwhere,
        )
        demand = m.get("demand", {})
        if not isinstance(demand, dict):
            raise ValueError(f"{mwhere}.demand: expected an object")
        _reject_unknown(demand, {"cpu_units", "mem_gb", "storage_gb"}, f"{mwhere}.demand")
        modules.append(
            ModuleProfile(
                name=m.get("name", ""),
                compute_s=m.get("compute_s", 0.0),
                fog_extra_s=m.get("fog_extra_s", 0.0),
                data_out_ratio=m.get("data_out_ratio", 1.0),
                pass_fraction=m.get("pass_fraction", 1.0),
                demand=ResourceUsage(
                    cpu_units=demand.get("cpu_units", 0.0),
                    mem_gb=demand.get("mem_gb", 0.0),
                    storage_gb=demand.get("storage_gb", 0.0),
                ),
            )
        )
    try:
        return ApplicationProfile(
            name=data.get("name", ""),
            modules=tuple(modules),
            raw_request_data=data.get("raw_request_data", 1.0),
            requests_per_deployment=data.get("requests_per_deployment", 20),
            uplink_seconds_per_raw_unit=data.get("uplink_seconds_per_raw_unit", 0.0),
            base_delay_fog_cloud_ms=data.get("base_delay_fog_cloud_ms", 0.0),
            base_delay_dev_cloud_ms=data.get("base_delay_dev_cloud_ms", 0.0),
        )
    except ValueError as exc:
        raise ValueError(f"{where}: {exc}") from None


def load_profile(path: str | Path) -> ApplicationProfile:
    """Load an application profile from a JSON file."""
    path = Path(path)
    if not path.exists():
        raise ValueError(f"profile file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"profile file {path}: invalid JSON ({exc})") from None
    return profile_from_dict(data, where=str(path))


def resolve_profile(name_or_path: str) -> ApplicationProfile:
    """Builtin profile name, or a path to a profile JSON file."""
    if name_or_path in _BUILTIN_FACTORIES:
        return _BUILTIN_FACTORIES[name_or_path]()
    if name_or_path.endswith(".json") or "/" in name_or_path or "\\" in name_or_path:
        return load_profile(name_or_path)
    raise ValueError(
        f"unknown profile {name_or_path!r}: not a builtin "
        f"({', '.join(sorted(_BUILTIN_FACTORIES))}) and not a .json path"
    )
