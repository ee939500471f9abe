"""Minimal fully-connected value network with hand-derived gradients.

Forward pass for layer l: z_l = W_l a_{l-1} + b_l, a_l = relu(z_l) on the
hidden layers and identity on the output.  Training only ever regresses the
output of a single action toward a scalar target, so the backward pass
propagates the gradient of (target - q[action])**2 through that one output.
Plain gradient descent, float64 throughout; parameters serialise to a
versioned JSON file whose floats round-trip exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NETWORK_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetworkArchitecture:
    input_dim: int
    hidden_layers: int = 2
    hidden_width: int = 24
    output_dim: int = 2

    def __post_init__(self):
        for name in ("input_dim", "hidden_layers", "hidden_width", "output_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"architecture.{name}: must be >= 1")

    def layer_sizes(self) -> list[int]:
        return [self.input_dim] + [self.hidden_width] * self.hidden_layers + [self.output_dim]


class QNetwork:
    """Feed-forward action-value network."""

    def __init__(self, architecture: NetworkArchitecture,
                 weights: list[np.ndarray], biases: list[np.ndarray]):
        sizes = architecture.layer_sizes()
        if len(weights) != len(sizes) - 1 or len(biases) != len(sizes) - 1:
            raise ValueError("parameter count does not match the architecture")
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ValueError(f"layer {i}: parameter shapes do not match the architecture")
        self.architecture = architecture
        self.weights = weights
        self.biases = biases

    @classmethod
    def initialize(cls, architecture: NetworkArchitecture, seed: int = 0) -> "QNetwork":
        """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
        rng = np.random.default_rng(seed)
        sizes = architecture.layer_sizes()
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out, dtype=np.float64))
        return cls(architecture, weights, biases)

    def _check_input(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.architecture.input_dim,):
            raise ValueError(
                f"input must have shape ({self.architecture.input_dim},), got {x.shape}"
            )
        return x

    def forward(self, x) -> np.ndarray:
        """Action values for one state."""
        a = self._check_input(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = w @ a + b
            a = z if i == last else np.maximum(z, 0.0)
        return a

    def _forward_trace(self, x: np.ndarray):
        """Forward pass keeping activations and pre-activations for backprop."""
        activations = [x]
        pre = []
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = w @ a + b
            pre.append(z)
            a = z if i == last else np.maximum(z, 0.0)
            activations.append(a)
        return activations, pre

    def loss_gradients(self, x, action: int, target: float):
        """Loss (target - q[action])**2 and its gradients w.r.t. all parameters."""
        x = self._check_input(x)
        if not 0 <= action < self.architecture.output_dim:
            raise ValueError(f"action must lie in [0, {self.architecture.output_dim}), got {action!r}")
        if not math.isfinite(target):
            raise ValueError(f"target must be finite, got {target!r}")
        activations, pre = self._forward_trace(x)
        q = activations[-1][action]
        loss = (target - q) ** 2

        grad_w = [np.zeros_like(w) for w in self.weights]
        grad_b = [np.zeros_like(b) for b in self.biases]
        # dL/dq_a = 2 (q_a - target); the other outputs do not enter the loss.
        delta = np.zeros(self.architecture.output_dim)
        delta[action] = 2.0 * (q - target)
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = np.outer(delta, activations[i])
            grad_b[i] = delta
            if i > 0:
                delta = (self.weights[i].T @ delta) * (pre[i - 1] > 0)
        return loss, grad_w, grad_b

    def sgd_step(self, x, action: int, target: float, learning_rate: float) -> float:
        """One descent step on the single-action squared error; returns the pre-step loss."""
        if learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        loss, grad_w, grad_b = self.loss_gradients(x, action, target)
        for w, gw in zip(self.weights, grad_w):
            w -= learning_rate * gw
        for b, gb in zip(self.biases, grad_b):
            b -= learning_rate * gb
        return float(loss)

    def clone(self) -> "QNetwork":
        return QNetwork(
            self.architecture,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def copy_parameters_from(self, other: "QNetwork") -> None:
        if other.architecture != self.architecture:
            raise ValueError("cannot copy parameters across architectures")
        for mine, theirs in zip(self.weights, other.weights):
            mine[...] = theirs
        for mine, theirs in zip(self.biases, other.biases):
            mine[...] = theirs

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format_version": NETWORK_FORMAT_VERSION,
            "architecture": {
                "input_dim": self.architecture.input_dim,
                "hidden_layers": self.architecture.hidden_layers,
                "hidden_width": self.architecture.hidden_width,
                "output_dim": self.architecture.output_dim,
            },
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QNetwork":
        if data.get("format_version") != NETWORK_FORMAT_VERSION:
            raise ValueError(
                f"unsupported network format version {data.get('format_version')!r}"
            )
        arch = NetworkArchitecture(**data["architecture"])
        weights = [np.array(w, dtype=np.float64) for w in data["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in data["biases"]]
        return cls(arch, weights, biases)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "QNetwork":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def numeric_gradients(net: QNetwork, x, action: int, target: float, step: float = 1e-5):
    """Central finite-difference gradients of the same single-action loss.

    Reference oracle for testing the analytic backward pass.
    """
    def loss_at() -> float:
        q = net.forward(x)[action]
        return (target - q) ** 2

    grad_w = [np.zeros_like(w) for w in net.weights]
    grad_b = [np.zeros_like(b) for b in net.biases]
    for params, grads in ((net.weights, grad_w), (net.biases, grad_b)):
        for p, g in zip(params, grads):
            flat_p = p.reshape(-1)
            flat_g = g.reshape(-1)
            for i in range(flat_p.size):
                original = flat_p[i]
                flat_p[i] = original + step
                up = loss_at()
                flat_p[i] = original - step
                down = loss_at()
                flat_p[i] = original
                flat_g[i] = (up - down) / (2.0 * step)
    return grad_w, grad_b
