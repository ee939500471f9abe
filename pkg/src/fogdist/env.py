"""Simulated three-tier testbed: device, Fog node, Cloud VM.

The Fog node is an 8-core, 2 GB single-board computer exposed as 8
allocation units of 1 core + 256 MB.  A background stress generator
occupies a uniformly random number of units (0..7) and re-rolls every 10
simulated seconds, independent of anything the agent does, so two
environments with the same seed always see the same load at the same
simulated time.

Requests of a deployment are processed sequentially.  Filtering stages are
applied in expectation: a stage that forwards 60% of requests contributes
60% of its downstream times and traffic per request, which keeps outcomes
deterministic for a given stress trajectory.  Fog-hosted stages slow down
when their CPU demand exceeds the units left free by the stress load; Cloud
stages never contend.  All time is simulated; only the decision latency of
the agent is measured on the wall clock.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .model import MAX_CPU_UNITS, DeploymentOutcome, ResourceUsage
from .profiles import ApplicationProfile
from .seeding import derive_seed

# Fog node hardware model.
CAPACITY_UNITS = 8              # stress/allocation units on the board
UNIT_MEM_GB = 0.25              # memory occupied per stressed unit
STRESS_RESAMPLE_S = 10.0        # stress level re-rolls on this period
MEM_TOTAL_GB = 2.0
SWAP_TOTAL_GB = 1.0
DISK_TOTAL_GB = 32.0
DISK_BASE_GB = 8.0              # OS image and runtime
CPU_FREQ_MHZ = 2000.0

# Payload accounting for the synthetic I/O and network counters.
BYTES_PER_DATA_UNIT = 500_000
PACKET_BYTES = 1500
IO_BLOCK_BYTES = 4096

# A fog stage never sees less than a quarter unit, so contention stays finite.
AVAILABILITY_FLOOR = 0.25

STATE_FACTORS = (
    "cpu_util", "cpu_count", "cpu_freq",
    "mem_total", "mem_used", "swap_total", "swap_used",
    "disk_total", "disk_used",
    "io_reads", "io_writes", "io_read_bytes", "io_write_bytes",
    "net_bytes_sent", "net_bytes_recv", "net_pkts_sent", "net_pkts_recv",
    "delay_fog_cloud", "delay_dev_cloud",
)

# Fixed min-max caps used to squash each factor into [0, 1] before it
# reaches the value network.  Counters saturate at the cap.
STATE_CAPS: dict[str, float] = {
    "cpu_util": 1.0,
    "cpu_count": 8.0,
    "cpu_freq": 2000.0,
    "mem_total": 4.0,
    "mem_used": 4.0,
    "swap_total": 2.0,
    "swap_used": 2.0,
    "disk_total": 64.0,
    "disk_used": 64.0,
    "io_reads": 5e6,
    "io_writes": 5e6,
    "io_read_bytes": 5e10,
    "io_write_bytes": 5e10,
    "net_bytes_sent": 5e10,
    "net_bytes_recv": 5e10,
    "net_pkts_sent": 5e7,
    "net_pkts_recv": 5e7,
    "delay_fog_cloud": 500.0,   # ms
    "delay_dev_cloud": 500.0,   # ms
}


@dataclass
class SimClock:
    """Simulated wall clock, in seconds."""

    now: float = 0.0

    def advance(self, dt: float) -> None:
        if not math.isfinite(dt) or dt < 0:
            raise ValueError(f"clock can only move forward, got dt={dt!r}")
        self.now += dt


class StressProcess:
    """Piecewise-constant background load on the Fog node.

    The load of interval i is the i-th draw from a seeded uniform{0..7}
    stream, so the trajectory is a pure function of (seed, simulated time)
    no matter how advancement is chunked.
    """

    def __init__(self, seed: int, capacity_units: int = CAPACITY_UNITS,
                 resample_interval_s: float = STRESS_RESAMPLE_S):
        if capacity_units < 1:
            raise ValueError("capacity_units must be >= 1")
        if resample_interval_s <= 0:
            raise ValueError("resample_interval_s must be > 0")
        self.seed = seed
        self.capacity_units = capacity_units
        self.resample_interval_s = resample_interval_s
        self.elapsed_s = 0.0
        self._rng = random.Random(seed)
        self.load = self._rng.randrange(capacity_units)  # interval 0

    def advance(self, dt: float) -> None:
        """Move simulated time forward, re-rolling the load at each boundary."""
        if not math.isfinite(dt) or dt < 0:
            raise ValueError(f"stress process can only move forward, got dt={dt!r}")
        before = int(self.elapsed_s / self.resample_interval_s)
        self.elapsed_s += dt
        after = int(self.elapsed_s / self.resample_interval_s)
        for _ in range(after - before):
            self.load = self._rng.randrange(self.capacity_units)


def transmission_time(data_units: float, profile: ApplicationProfile) -> float:
    """Uplink time of a payload: size times the calibrated per-unit link time."""
    if not math.isfinite(data_units) or data_units < 0:
        raise ValueError(f"data_units must be >= 0, got {data_units!r}")
    return data_units * profile.uplink_seconds_per_raw_unit


def contended_time(base_s: float, demand_units: float, available_units: float) -> float:
    """Service time stretched by the demand/availability ratio, never shortened."""
    if base_s < 0:
        raise ValueError("base_s must be >= 0")
    if demand_units < 0 or not math.isfinite(available_units):
        raise ValueError("invalid contention inputs")
    effective = max(available_units, AVAILABILITY_FLOOR)
    return base_s * max(1.0, demand_units / effective)


@dataclass(frozen=True)
class LatencyBreakdown:
    """Expected per-request latency of one plan, split by component.

    Module times are weighted by the fraction of requests that actually
    reach the module; ``transmission_s`` covers only the size-proportional
    uplink part, propagation delay is separate.
    """

    fog_modules: int
    transmission_s: float
    propagation_s: float
    fog_module_s: dict[str, float]
    cloud_module_s: dict[str, float]

    @property
    def total_s(self) -> float:
        return (
            self.transmission_s
            + self.propagation_s
            + math.fsum(self.fog_module_s.values())
            + math.fsum(self.cloud_module_s.values())
        )


def request_latency_breakdown(
    profile: ApplicationProfile,
    fog_modules: int,
    available_units: float = float(CAPACITY_UNITS),
    fog_cloud_delay_s: float | None = None,
    dev_cloud_delay_s: float | None = None,
) -> LatencyBreakdown:
    """Expected latency components of one request under a given plan.

    Plan 0 uploads the raw payload straight to the Cloud; any other plan
    runs the leading stages on the Fog node and forwards whatever survives
    them, down to the final result for the all-on-Fog plan.
    """
    k = fog_modules
    n = profile.n_modules
    if not 0 <= k <= n:
        raise ValueError(f"fog_modules must lie in [0, {n}], got {k!r}")
    if fog_cloud_delay_s is None:
        fog_cloud_delay_s = profile.base_delay_fog_cloud_ms / 1000.0
    if dev_cloud_delay_s is None:
        dev_cloud_delay_s = profile.base_delay_dev_cloud_ms / 1000.0

    survival = 1.0
    data = profile.raw_request_data
    fog_s: dict[str, float] = {}
    cloud_s: dict[str, float] = {}

    for module in profile.modules[:k]:
        stage = contended_time(module.compute_s, module.demand.cpu_units, available_units)
        fog_s[module.name] = survival * (stage + module.fog_extra_s)
        data *= module.data_out_ratio
        survival *= module.pass_fraction

    if k == 0:
        transmission = transmission_time(data, profile)
        propagation = dev_cloud_delay_s
    else:
        # Only surviving requests cross the fog-to-cloud link (the last plan
        # still uploads its result there).
        transmission = survival * transmission_time(data, profile)
        propagation = survival * fog_cloud_delay_s

    for module in profile.modules[k:]:
        cloud_s[module.name] = survival * module.compute_s
        data *= module.data_out_ratio
        survival *= module.pass_fraction

    return LatencyBreakdown(
        fog_modules=k,
        transmission_s=transmission,
        propagation_s=propagation,
        fog_module_s=fog_s,
        cloud_module_s=cloud_s,
    )


@dataclass(frozen=True)
class FogNodeState:
    """The 19 monitored factors of the Fog node."""

    cpu_util: float          # fraction of units occupied
    cpu_count: float
    cpu_freq: float          # MHz
    mem_total: float         # GB
    mem_used: float          # GB
    swap_total: float        # GB
    swap_used: float         # GB
    disk_total: float        # GB
    disk_used: float         # GB
    io_reads: float          # cumulative ops
    io_writes: float
    io_read_bytes: float     # cumulative bytes
    io_write_bytes: float
    net_bytes_sent: float
    net_bytes_recv: float
    net_pkts_sent: float
    net_pkts_recv: float
    delay_fog_cloud: float   # ms
    delay_dev_cloud: float   # ms

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in STATE_FACTORS], dtype=np.float64)

    def validate(self) -> None:
        vec = self.as_vector()
        if vec.shape != (len(STATE_FACTORS),) or not np.all(np.isfinite(vec)):
            raise ValueError("state must hold 19 finite factors")
        if not 0.0 <= self.cpu_util <= 1.0:
            raise ValueError(f"cpu_util out of [0, 1]: {self.cpu_util!r}")
        if self.mem_used > self.mem_total or self.swap_used > self.swap_total:
            raise ValueError("memory usage exceeds totals")
        if self.disk_used > self.disk_total:
            raise ValueError("disk usage exceeds total")
        if np.any(vec < 0):
            raise ValueError("state factors must be >= 0")


def normalize_state(state: FogNodeState, caps: dict[str, float] | None = None) -> np.ndarray:
    """Min-max squash each factor into [0, 1] using the fixed caps."""
    caps = caps or STATE_CAPS
    vec = state.as_vector()
    cap_vec = np.array([caps[f] for f in STATE_FACTORS], dtype=np.float64)
    return np.clip(vec / cap_vec, 0.0, 1.0)


class FogEnvironment:
    """One Fog node plus its Cloud VM, driven by a simulated clock.

    With the same seed, the stress trajectory, sensor jitter, and deployment
    outcomes are fully reproducible; the stress level evolves with simulated
    time only, never with the agent's choices.
    """

    def __init__(self, profile: ApplicationProfile, seed: int = 0, stressed: bool = True,
                 caps: dict[str, float] | None = None):
        self.profile = profile
        self.seed = seed
        self.stressed = stressed
        self.caps = caps or STATE_CAPS
        self.stress = StressProcess(derive_seed(seed, "stress"))
        self._sensor_rng = random.Random(derive_seed(seed, "sensor"))
        self._deployed_modules = 0            # leading modules currently on the node
        # Delay samples used both in the observed state and for the next
        # deployment's propagation terms.
        self._delay_fog_cloud_ms = profile.base_delay_fog_cloud_ms
        self._delay_dev_cloud_ms = profile.base_delay_dev_cloud_ms
        # Counter baselines: the board is not freshly booted.
        self._counters = {
            "io_reads": 25_000.0,
            "io_writes": 18_000.0,
            "io_read_bytes": 90e6,
            "io_write_bytes": 60e6,
            "net_bytes_sent": 40e6,
            "net_bytes_recv": 55e6,
            "net_pkts_sent": 30_000.0,
            "net_pkts_recv": 42_000.0,
        }

    # -- internals ---------------------------------------------------------

    def _sync(self, now: float) -> None:
        dt = now - self.stress.elapsed_s
        if dt < -1e-9:
            raise ValueError("clock moved behind the stress process")
        if dt > 0:
            self.stress.advance(dt)

    def _load(self) -> int:
        return self.stress.load if self.stressed else 0

    def _deployed_demand(self) -> ResourceUsage:
        k = self._deployed_modules
        mods = self.profile.modules[:k]
        return ResourceUsage(
            cpu_units=min(MAX_CPU_UNITS, sum(m.demand.cpu_units for m in mods)),
            mem_gb=sum(m.demand.mem_gb for m in mods),
            storage_gb=sum(m.demand.storage_gb for m in mods),
        )

    # -- public API --------------------------------------------------------

    def observe(self, clock: SimClock) -> FogNodeState:
        """Sample the node's 19 factors at the clock's current time."""
        self._sync(clock.now)
        load = self._load()
        demand = self._deployed_demand()
        mem_claim = UNIT_MEM_GB * load + demand.mem_gb
        mem_used = min(MEM_TOTAL_GB, mem_claim)
        swap_used = min(SWAP_TOTAL_GB, max(0.0, mem_claim - MEM_TOTAL_GB))
        disk_used = min(DISK_TOTAL_GB, DISK_BASE_GB + demand.storage_gb + 0.1 * load)
        # Link delays wobble around their base value between observations.
        self._delay_fog_cloud_ms = self.profile.base_delay_fog_cloud_ms * self._sensor_rng.uniform(0.9, 1.1)
        self._delay_dev_cloud_ms = self.profile.base_delay_dev_cloud_ms * self._sensor_rng.uniform(0.9, 1.1)
        return FogNodeState(
            cpu_util=load / self.stress.capacity_units,
            cpu_count=float(self.stress.capacity_units),
            cpu_freq=CPU_FREQ_MHZ,
            mem_total=MEM_TOTAL_GB,
            mem_used=mem_used,
            swap_total=SWAP_TOTAL_GB,
            swap_used=swap_used,
            disk_total=DISK_TOTAL_GB,
            disk_used=disk_used,
            io_reads=self._counters["io_reads"],
            io_writes=self._counters["io_writes"],
            io_read_bytes=self._counters["io_read_bytes"],
            io_write_bytes=self._counters["io_write_bytes"],
            net_bytes_sent=self._counters["net_bytes_sent"],
            net_bytes_recv=self._counters["net_bytes_recv"],
            net_pkts_sent=self._counters["net_pkts_sent"],
            net_pkts_recv=self._counters["net_pkts_recv"],
            delay_fog_cloud=self._delay_fog_cloud_ms,
            delay_dev_cloud=self._delay_dev_cloud_ms,
        )

    def observe_normalized(self, clock: SimClock) -> np.ndarray:
        return normalize_state(self.observe(clock), self.caps)

    def execute(self, fog_modules: int, clock: SimClock) -> DeploymentOutcome:
        """Deploy a plan, stream all requests through it, advance the clock.

        Returns the deployment's duration, request count, and the busy-time
        weighted average of the fog-hosted stages' resource demands.
        """
        profile = self.profile
        k = fog_modules
        if not 0 <= k <= profile.n_modules:
            raise ValueError(f"fog_modules must lie in [0, {profile.n_modules}], got {k!r}")
        requests = profile.requests_per_deployment
        fog_cloud_s = self._delay_fog_cloud_ms / 1000.0
        dev_cloud_s = self._delay_dev_cloud_ms / 1000.0

        started = clock.now
        busy: dict[str, float] = {m.name: 0.0 for m in profile.modules[:k]}
        uplink_units = 0.0
        for _ in range(requests):
            self._sync(clock.now)
            available = self.stress.capacity_units - self._load()
            parts = request_latency_breakdown(
                profile, k, available_units=available,
                fog_cloud_delay_s=fog_cloud_s, dev_cloud_delay_s=dev_cloud_s,
            )
            for name, seconds in parts.fog_module_s.items():
                busy[name] += seconds
            uplink_units += parts.transmission_s / profile.uplink_seconds_per_raw_unit \
                if profile.uplink_seconds_per_raw_unit > 0 else 0.0
            clock.advance(parts.total_s)
        duration_s = clock.now - started
        self._sync(clock.now)

        usage = ResourceUsage()
        if k > 0 and duration_s > 0:
            cpu = mem = storage = 0.0
            for module in profile.modules[:k]:
                frac = busy[module.name] / duration_s
                cpu += module.demand.cpu_units * frac
                mem += module.demand.mem_gb * frac
                storage += module.demand.storage_gb * frac
            usage = ResourceUsage(
                cpu_units=min(MAX_CPU_UNITS, cpu), mem_gb=mem, storage_gb=storage,
            )

        self._account_traffic(k, requests, uplink_units)
        self._deployed_modules = k
        return DeploymentOutcome(
            fog_modules=k,
            duration_s=duration_s,
            requests=requests,
            usage=usage,
        )

    def _account_traffic(self, k: int, requests: int, uplink_units: float) -> None:
        """Grow the node's I/O and network counters with the deployment's traffic.

        Plan 0 bypasses the node, so only the uplink it relays for other
        tenants' monitoring stays flat; noise factors keep the counters
        irregular without ever decreasing them.
        """
        noise = self._sensor_rng.uniform(1.0, 1.05)
        inbound = requests * self.profile.raw_request_data * BYTES_PER_DATA_UNIT if k > 0 else 0.0
        outbound = uplink_units * BYTES_PER_DATA_UNIT if k > 0 else 0.0
        self._counters["net_bytes_recv"] += inbound * noise
        self._counters["net_bytes_sent"] += outbound * noise
        self._counters["net_pkts_recv"] += (inbound / PACKET_BYTES + requests) * noise
        self._counters["net_pkts_sent"] += (outbound / PACKET_BYTES + requests) * noise
        self._counters["io_read_bytes"] += inbound * noise
        self._counters["io_write_bytes"] += outbound * noise
        self._counters["io_reads"] += (inbound / IO_BLOCK_BYTES) * noise
        self._counters["io_writes"] += (outbound / IO_BLOCK_BYTES) * noise
