"""Deployment-decision agent: replay-based Q-learning plus static baselines.

Each deployment is one decision step: observe the node, pick how many
leading modules to host on the Fog, deploy, and score the result with the
utility model.  The learner keeps a bounded replay memory and, once it
holds more than a minibatch, runs one replay pass per deployment: every
sampled transition contributes a single-action gradient step toward
reward + discount * max of the target network on the successor state, the
target network is re-synced at the end of the pass, and the exploration
rate decays one notch.
"""
from __future__ import annotations

import json
import math
import random
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .env import FogEnvironment, SimClock, normalize_state
from .model import (
    PricingModel,
    UtilityWeights,
    deployment_cost,
    deployment_utility,
    strategy_utility,
)
from .nn import NetworkArchitecture, QNetwork
from .profiles import ApplicationProfile
from .seeding import derive_seed

CHECKPOINT_FORMAT_VERSION = 1
DEPLOYMENTS_PER_EPISODE = 20
STATE_DIM = 19


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayMemory:
    """Bounded FIFO of transitions with uniform sampling."""

    def __init__(self, capacity: int = 2000):
        if capacity < 1:
            raise ValueError("replay capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def remember(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, rng: random.Random, n: int) -> list[Transition]:
        """n distinct transitions, uniformly without replacement."""
        if n > len(self._items):
            raise ValueError(f"cannot sample {n} from {len(self._items)} transitions")
        return rng.sample(list(self._items), n)

    def __len__(self) -> int:
        return len(self._items)


@dataclass
class EpsilonSchedule:
    """Multiplicative exploration decay with a floor.

    After t decays the rate is exactly max(floor, start * decay**t); the
    schedule tracks the decay count and evaluates that closed form, which
    keeps long runs free of accumulated rounding.
    """

    start: float = 1.0
    floor: float = 0.01
    decay: float = 0.99
    decays_done: int = 0

    def __post_init__(self):
        if not 0 <= self.floor <= self.start <= 1:
            raise ValueError("need 0 <= floor <= start <= 1")
        if not 0 < self.decay < 1:
            raise ValueError("decay must lie in (0, 1)")
        if self.decays_done < 0:
            raise ValueError("decays_done must be >= 0")

    @property
    def epsilon(self) -> float:
        return max(self.floor, self.start * self.decay ** self.decays_done)

    def step(self) -> float:
        """Apply one decay (no-op once the floor is reached) and return the rate."""
        if self.epsilon > self.floor:
            self.decays_done += 1
        return self.epsilon


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.95
    batch_size: int = 5
    learning_rate: float = 0.001
    replay_capacity: int = 2000
    hidden_layers: int = 2
    hidden_width: int = 24
    # The learner feeds the freshly observed state back as the next decision
    # state.  Disabling this reproduces a degenerate variant that freezes the
    # decision state for a whole episode and stores each transition with its
    # own state as successor.
    carry_next_state: bool = True
    weights: UtilityWeights = field(default_factory=UtilityWeights)

    def __post_init__(self):
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.replay_capacity < 1:
            raise ValueError("replay_capacity must be >= 1")


class StaticStrategy:
    """Always deploy the same number of leading modules on the Fog."""

    learns = False

    def __init__(self, fog_modules: int):
        if fog_modules < 0:
            raise ValueError("fog_modules must be >= 0")
        self.fog_modules = fog_modules
        self.name = f"s{fog_modules}"

    def select_k(self, state_vec: np.ndarray, rng: random.Random) -> int:
        return self.fog_modules


class GreedyNetworkStrategy:
    """Pure exploitation of a trained value network (evaluation mode)."""

    learns = False
    name = "context-aware"

    def __init__(self, network: QNetwork):
        self.network = network

    def select_k(self, state_vec: np.ndarray, rng: random.Random) -> int:
        q = self.network.forward(state_vec)
        return int(np.argmax(q))  # ties break toward the lower plan


class DQNAgent:
    """Learning strategy: epsilon-greedy over a replay-trained value network."""

    learns = True
    name = "context-aware"

    def __init__(self, n_actions: int, config: AgentConfig | None = None,
                 schedule: EpsilonSchedule | None = None, seed: int = 0):
        if n_actions < 1:
            raise ValueError("n_actions must be >= 1")
        self.config = config or AgentConfig()
        self.schedule = schedule or EpsilonSchedule()
        self.n_actions = n_actions
        arch = NetworkArchitecture(
            input_dim=STATE_DIM,
            hidden_layers=self.config.hidden_layers,
            hidden_width=self.config.hidden_width,
            output_dim=n_actions,
        )
        self.network = QNetwork.initialize(arch, seed=derive_seed(seed, "q-network"))
        self.target_network = self.network.clone()
        self.memory = ReplayMemory(self.config.replay_capacity)

    def select_k(self, state_vec: np.ndarray, rng: random.Random) -> int:
        if rng.random() <= self.schedule.epsilon:
            return rng.randrange(self.n_actions)
        return int(np.argmax(self.network.forward(state_vec)))

    def compute_target(self, transition: Transition) -> float:
        """Bootstrap target: the reward, plus the discounted best successor value."""
        if transition.terminal:
            return transition.reward
        successor = self.target_network.forward(transition.next_state)
        return transition.reward + self.config.discount * float(np.max(successor))

    def replay(self, rng: random.Random) -> float | None:
        """One replay pass; returns the mean pre-step loss, or None if skipped.

        Runs only once the memory holds strictly more than a minibatch.
        """
        if len(self.memory) <= self.config.batch_size:
            return None
        batch = self.memory.sample(rng, self.config.batch_size)
        losses = []
        for transition in batch:
            target = self.compute_target(transition)
            losses.append(
                self.network.sgd_step(
                    transition.state, transition.action, target, self.config.learning_rate
                )
            )
        self.target_network.copy_parameters_from(self.network)
        return float(np.mean(losses))

    def observe_transition(self, transition: Transition, rng: random.Random) -> float | None:
        """Store, replay, and decay; mirrors one decision step of the learner."""
        self.memory.remember(transition)
        loss = self.replay(rng)
        if loss is not None:
            # Exploration decays only on steps that actually learned.
            self.schedule.step()
        return loss

    def greedy_strategy(self) -> GreedyNetworkStrategy:
        return GreedyNetworkStrategy(self.network)


@dataclass(frozen=True)
class DeploymentRecord:
    outcome: object
    cost: float
    utility: float


@dataclass(frozen=True)
class EpisodeResult:
    utility: float
    records: tuple[DeploymentRecord, ...]


def run_episode(
    env: FogEnvironment,
    strategy,
    pricing: PricingModel,
    weights: UtilityWeights,
    rng: random.Random,
    deployments: int = DEPLOYMENTS_PER_EPISODE,
    clock: SimClock | None = None,
) -> EpisodeResult:
    """One episode: a fixed number of deployments on a single environment.

    Static strategies never touch any learning state; the learning strategy
    additionally stores each transition and replays after every deployment.
    """
    if deployments < 1:
        raise ValueError("deployments must be >= 1")
    clock = clock or SimClock()
    profile = env.profile
    n = profile.n_modules
    state = env.observe_normalized(clock)
    records = []
    for j in range(1, deployments + 1):
        t0 = time.perf_counter()
        k = strategy.select_k(state, rng)
        decision_ms = (time.perf_counter() - t0) * 1000.0
        outcome = env.execute(k, clock)
        outcome = replace(outcome, decision_latency_ms=decision_ms)
        cost = deployment_cost(k, n, pricing, outcome.usage, outcome.duration_s / 3600.0)
        utility = deployment_utility(weights, outcome, cost)
        records.append(DeploymentRecord(outcome=outcome, cost=cost, utility=utility))

        next_state = env.observe_normalized(clock)
        if strategy.learns:
            carried = next_state if strategy.config.carry_next_state else state
            strategy.observe_transition(
                Transition(
                    state=state,
                    action=k,
                    reward=utility,
                    next_state=carried,
                    terminal=(j == deployments),
                ),
                rng,
            )
            state = carried
        else:
            state = next_state
    return EpisodeResult(
        utility=strategy_utility(r.utility for r in records),
        records=tuple(records),
    )


def train(
    profile: ApplicationProfile,
    agent: DQNAgent,
    episodes: int,
    pricing: PricingModel,
    weights: UtilityWeights,
    master_seed: int,
    deployments: int = DEPLOYMENTS_PER_EPISODE,
    stressed: bool = True,
) -> list[float]:
    """Train in place over sequential episodes; returns per-episode utility.

    Networks, memory, and the exploration schedule persist across episodes;
    each episode runs on a fresh environment whose stress seed derives from
    the master seed and the episode index.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if agent.n_actions != profile.n_modules + 1:
        raise ValueError(
            f"agent has {agent.n_actions} actions but profile {profile.name!r} "
            f"needs {profile.n_modules + 1}"
        )
    rng = random.Random(derive_seed(master_seed, "agent-actions"))
    curve = []
    for episode in range(episodes):
        env = FogEnvironment(
            profile, seed=derive_seed(master_seed, "train-episode", episode), stressed=stressed
        )
        result = run_episode(env, agent, pricing, weights, rng, deployments=deployments)
        curve.append(result.utility)
    return curve


# -- checkpointing ----------------------------------------------------------

def save_checkpoint(agent: DQNAgent, path: str | Path, profile_name: str,
                    provenance: dict | None = None) -> None:
    """Write the agent (networks, schedule, config) to a versioned JSON file."""
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": "fogdist-agent",
        "profile_name": profile_name,
        "n_actions": agent.n_actions,
        "config": {
            "discount": agent.config.discount,
            "batch_size": agent.config.batch_size,
            "learning_rate": agent.config.learning_rate,
            "replay_capacity": agent.config.replay_capacity,
            "hidden_layers": agent.config.hidden_layers,
            "hidden_width": agent.config.hidden_width,
            "carry_next_state": agent.config.carry_next_state,
            "weights": {
                "qos_weight": agent.config.weights.qos_weight,
                "cost_weight": agent.config.weights.cost_weight,
            },
        },
        "schedule": {
            "start": agent.schedule.start,
            "floor": agent.schedule.floor,
            "decay": agent.schedule.decay,
            "decays_done": agent.schedule.decays_done,
        },
        "network": agent.network.to_dict(),
        "target_network": agent.target_network.to_dict(),
        "provenance": provenance or {},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[DQNAgent, dict]:
    """Restore an agent from a checkpoint; returns (agent, metadata)."""
    path = Path(path)
    if not path.exists():
        raise ValueError(f"checkpoint file not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("format_version") != CHECKPOINT_FORMAT_VERSION or data.get("kind") != "fogdist-agent":
        raise ValueError(f"{path}: not a supported agent checkpoint")
    raw_cfg = data["config"]
    config = AgentConfig(
        discount=raw_cfg["discount"],
        batch_size=raw_cfg["batch_size"],
        learning_rate=raw_cfg["learning_rate"],
        replay_capacity=raw_cfg["replay_capacity"],
        hidden_layers=raw_cfg["hidden_layers"],
        hidden_width=raw_cfg["hidden_width"],
        carry_next_state=raw_cfg["carry_next_state"],
        weights=UtilityWeights(
            qos_weight=raw_cfg["weights"]["qos_weight"],
            cost_weight=raw_cfg["weights"]["cost_weight"],
        ),
    )
    schedule = EpsilonSchedule(**data["schedule"])
    agent = DQNAgent(n_actions=data["n_actions"], config=config, schedule=schedule)
    agent.network = QNetwork.from_dict(data["network"])
    agent.target_network = QNetwork.from_dict(data["target_network"])
    meta = {
        "profile_name": data.get("profile_name"),
        "provenance": data.get("provenance", {}),
    }
    return agent, meta
