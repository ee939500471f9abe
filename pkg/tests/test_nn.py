"""Value-network tests: initialisation, forward math, gradients, persistence."""
import json
import math

import numpy as np
import pytest

from fogdist.nn import NetworkArchitecture, QNetwork, numeric_gradients


def small_arch():
    return NetworkArchitecture(input_dim=5, hidden_layers=2, hidden_width=8, output_dim=4)


def test_architecture_validation():
    with pytest.raises(ValueError):
        NetworkArchitecture(input_dim=0)
    with pytest.raises(ValueError):
        NetworkArchitecture(input_dim=3, output_dim=0)
    assert NetworkArchitecture(19, 2, 24, 4).layer_sizes() == [19, 24, 24, 4]


def test_initialize_is_seeded_and_bounded():
    net_a = QNetwork.initialize(small_arch(), seed=7)
    net_b = QNetwork.initialize(small_arch(), seed=7)
    net_c = QNetwork.initialize(small_arch(), seed=8)
    for wa, wb in zip(net_a.weights, net_b.weights):
        assert np.array_equal(wa, wb)
    assert any(not np.array_equal(wa, wc) for wa, wc in zip(net_a.weights, net_c.weights))
    sizes = small_arch().layer_sizes()
    for w, fan_in, fan_out in zip(net_a.weights, sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        assert np.all(np.abs(w) <= limit)
    for b in net_a.biases:
        assert np.all(b == 0.0)


def test_forward_hand_computed():
    """1-1-1 net: x=1, w1=2, b1=0.5 -> relu(2.5)=2.5; w2=-3, b2=1 -> -6.5."""
    arch = NetworkArchitecture(input_dim=1, hidden_layers=1, hidden_width=1, output_dim=1)
    net = QNetwork(arch, [np.array([[2.0]]), np.array([[-3.0]])],
                   [np.array([0.5]), np.array([1.0])])
    assert net.forward(np.array([1.0]))[0] == pytest.approx(-6.5, rel=1e-12)
    # negative pre-activation is clamped: x=-1 -> relu(-1.5)=0 -> output b2=1
    assert net.forward(np.array([-1.0]))[0] == pytest.approx(1.0, rel=1e-12)


def test_forward_output_shape_and_input_check():
    net = QNetwork.initialize(small_arch(), seed=0)
    out = net.forward(np.zeros(5))
    assert out.shape == (4,)
    with pytest.raises(ValueError):
        net.forward(np.zeros(6))


def test_gradients_match_finite_differences():
    """Analytic backprop vs central differences on random cases."""
    rng = np.random.default_rng(42)
    worst = 0.0
    for trial in range(20):
        net = QNetwork.initialize(small_arch(), seed=trial)
        x = rng.uniform(0.0, 1.0, size=5)
        action = int(rng.integers(0, 4))
        target = float(rng.normal())
        _, grad_w, grad_b = net.loss_gradients(x, action, target)
        num_w, num_b = numeric_gradients(net, x, action, target)
        for analytic, numeric in zip(grad_w + grad_b, num_w + num_b):
            scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
            worst = max(worst, float(np.max(np.abs(analytic - numeric) / scale)))
    assert worst < 1e-4


def test_sgd_step_no_op_at_zero_error():
    net = QNetwork.initialize(small_arch(), seed=3)
    x = np.full(5, 0.5)
    target = float(net.forward(x)[2])
    before = [w.copy() for w in net.weights]
    loss = net.sgd_step(x, 2, target, learning_rate=0.01)
    assert loss == 0.0
    for w, b in zip(net.weights, before):
        assert np.array_equal(w, b)


def test_sgd_step_returns_pre_step_loss():
    net = QNetwork.initialize(small_arch(), seed=4)
    x = np.full(5, 0.25)
    q = float(net.forward(x)[0])
    target = q + 2.0
    # loss before the update: (target - q)^2 = 4
    assert net.sgd_step(x, 0, target, 0.001) == pytest.approx(4.0, rel=1e-12)


def test_sgd_converges_on_a_fixed_sample():
    net = QNetwork.initialize(small_arch(), seed=5)
    x = np.array([0.1, 0.9, 0.4, 0.7, 0.2])
    target = -3.0
    loss = None
    for _ in range(10_000):
        loss = net.sgd_step(x, 1, target, learning_rate=0.01)
        if loss < 1e-6:
            break
    assert loss < 1e-6


def test_sgd_only_moves_the_chosen_action():
    """One step changes the selected head; the shared layers move every head,
    but with a fresh net the other outputs stay put when the input is zero."""
    net = QNetwork.initialize(small_arch(), seed=6)
    x = np.zeros(5)
    before = net.forward(x).copy()
    net.sgd_step(x, 3, before[3] + 1.0, learning_rate=0.01)
    after = net.forward(x)
    # zero input and zero biases keep hidden activations at zero, so only
    # the output bias of action 3 can move
    assert after[3] != before[3]
    assert np.array_equal(after[:3], before[:3])


def test_clone_is_deep_and_equal():
    net = QNetwork.initialize(small_arch(), seed=9)
    twin = net.clone()
    x = np.full(5, 0.3)
    assert np.array_equal(net.forward(x), twin.forward(x))
    assert json.dumps(net.to_dict()) == json.dumps(twin.to_dict())
    net.sgd_step(x, 0, 5.0, 0.05)
    assert not np.array_equal(net.forward(x), twin.forward(x))


def test_copy_parameters_from():
    net = QNetwork.initialize(small_arch(), seed=10)
    other = QNetwork.initialize(small_arch(), seed=11)
    other.copy_parameters_from(net)
    x = np.full(5, 0.6)
    assert np.array_equal(net.forward(x), other.forward(x))
    with pytest.raises(ValueError):
        other.copy_parameters_from(QNetwork.initialize(NetworkArchitecture(3), seed=0))


def test_argmax_invariant_to_constant_output_shift():
    net = QNetwork.initialize(small_arch(), seed=12)
    rng = np.random.default_rng(0)
    for _ in range(30):
        x = rng.uniform(0, 1, 5)
        base = int(np.argmax(net.forward(x)))
        shifted = net.clone()
        shifted.biases[-1] += 10.0
        assert int(np.argmax(shifted.forward(x))) == base


def test_save_load_round_trip(tmp_path):
    net = QNetwork.initialize(small_arch(), seed=13)
    path = tmp_path / "net.json"
    net.save(path)
    loaded = QNetwork.load(path)
    x = np.full(5, 0.8)
    assert np.array_equal(net.forward(x), loaded.forward(x))
    assert loaded.architecture == net.architecture


def test_load_rejects_other_versions(tmp_path):
    net = QNetwork.initialize(small_arch(), seed=14)
    data = net.to_dict()
    data["format_version"] = 99
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError):
        QNetwork.load(path)


def test_invalid_training_inputs():
    net = QNetwork.initialize(small_arch(), seed=15)
    x = np.zeros(5)
    with pytest.raises(ValueError):
        net.sgd_step(x, 9, 0.0, 0.01)
    with pytest.raises(ValueError):
        net.sgd_step(x, 0, float("nan"), 0.01)
    with pytest.raises(ValueError):
        net.sgd_step(x, 0, 0.0, 0.0)
