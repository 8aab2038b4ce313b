"""Surrogate network checks: hand-computed forward pass, finite-difference
derivative oracles, descent-step semantics, checkpoint round-trips."""

import math

import numpy as np
import pytest

from cointelab import net


def zero_theta(width, n_layers, b_out=0.0):
    theta = {k: np.zeros(s) for k, s in net.param_shapes(width, n_layers).items()}
    theta["b_out"][0] = b_out
    return theta


def test_init_validation():
    with pytest.raises(ValueError):
        net.init_network(0, 1)
    with pytest.raises(ValueError):
        net.init_network(4, 0)


def test_init_deterministic():
    a = net.init_network(8, 2, seed=9)
    b = net.init_network(8, 2, seed=9)
    for k in a.theta:
        assert np.array_equal(a.theta[k], b.theta[k])
    c = net.init_network(8, 2, seed=10)
    assert any(not np.array_equal(a.theta[k], c.theta[k]) for k in a.theta)


def test_zero_network_is_output_bias():
    n = net.init_network(4, 2, seed=0)
    n.theta = zero_theta(4, 2, b_out=0.7)
    r = net.forward_with_input_derivs(n, 0.3, 1.2)
    assert r.f == pytest.approx(0.7, abs=1e-15)
    assert r.f_t == 0.0 and r.f_z == 0.0 and r.f_zz == 0.0


def test_hand_computed_single_layer_forward():
    """Independent scalar recomputation of the width-1, one-layer stack."""
    n = net.init_network(1, 1, seed=0)
    vals = {
        "w1": [[0.3], [-0.2]],
        "b1": [0.1],
        "u_z1": [[0.5], [0.4]],
        "w_z1": [[-0.3]],
        "b_z1": [0.2],
        "u_g1": [[-0.1], [0.6]],
        "w_g1": [[0.2]],
        "b_g1": [-0.4],
        "u_r1": [[0.7], [-0.5]],
        "w_r1": [[0.1]],
        "b_r1": [0.0],
        "u_h1": [[0.2], [0.3]],
        "w_h1": [[-0.6]],
        "b_h1": [0.05],
        "w_out": [[1.3]],
        "b_out": [-0.2],
    }
    n.theta = {k: np.array(v, dtype=float) for k, v in vals.items()}
    t, z = 0.4, 0.9

    def lin(u, w, s):
        return t * u[0][0] + z * u[1][0] + s * w[0][0]

    s1 = math.tanh(lin(vals["w1"], [[0.0]], 0.0) + 0.1)
    gz = math.tanh(lin(vals["u_z1"], vals["w_z1"], s1) + 0.2)
    gg = math.tanh(lin(vals["u_g1"], vals["w_g1"], s1) - 0.4)
    gr = math.tanh(lin(vals["u_r1"], vals["w_r1"], s1) + 0.0)
    gh = math.tanh(lin(vals["u_h1"], vals["w_h1"], s1 * gr) + 0.05)
    s2 = (1.0 - gg) * gh + gz * s1
    expected = 1.3 * s2 - 0.2

    assert net.forward(n, t, z) == pytest.approx(expected, rel=1e-14)


def test_forward_deterministic_and_consistent():
    n = net.init_network(6, 2, seed=3)
    t = np.linspace(0, 1, 17)
    z = np.linspace(0.5, 2.0, 17)
    f1 = net.forward(n, t, z)
    f2 = net.forward(n, t, z)
    assert np.array_equal(f1, f2)
    r = net.forward_with_input_derivs(n, t, z)
    assert np.array_equal(r.f, f1)


def test_smoke_outputs_finite():
    n = net.init_network(10, 3, seed=1)
    rng = np.random.default_rng(0)
    r = net.forward_with_input_derivs(n, rng.uniform(0, 1, 1000), rng.uniform(0.1, 3, 1000))
    for arr in (r.f, r.f_t, r.f_z, r.f_zz):
        assert np.all(np.isfinite(arr))


def test_structural_zero_time_derivative():
    n = net.init_network(4, 2, seed=5)
    n.theta["w1"][0, :] = 0.0
    for layer in (1, 2):
        for gate in "zgrh":
            n.theta[f"u_{gate}{layer}"][0, :] = 0.0
    r = net.forward_with_input_derivs(n, 0.37, 1.1)
    assert r.f_t == 0.0


def _fd_input_derivs(n, t, z, h=1e-4, h2=3e-4):
    # the second-derivative stencil needs a larger step: its roundoff error
    # scales like eps/h^2
    f = lambda tt, zz: net.forward(n, float(tt), float(zz))
    f_t = (f(t + h, z) - f(t - h, z)) / (2 * h)
    f_z = (f(t, z + h) - f(t, z - h)) / (2 * h)
    f_zz = (
        -f(t, z + 2 * h2)
        + 16 * f(t, z + h2)
        - 30 * f(t, z)
        + 16 * f(t, z - h2)
        - f(t, z - 2 * h2)
    ) / (12 * h2 * h2)
    return f_t, f_z, f_zz


def test_input_derivatives_match_finite_differences():
    rng = np.random.default_rng(12)
    for case in range(100):
        n = net.init_network(4, 2, seed=case % 7)
        t, z = rng.uniform(0.1, 0.9), rng.uniform(0.5, 1.5)
        r = net.forward_with_input_derivs(n, t, z)
        fd_t, fd_z, fd_zz = _fd_input_derivs(n, t, z)
        assert abs(r.f_t - fd_t) / (abs(fd_t) + 1e-8) < 1e-5
        assert abs(r.f_z - fd_z) / (abs(fd_z) + 1e-8) < 1e-5
        assert abs(r.f_zz - fd_zz) / (abs(fd_zz) + 1e-8) < 1e-5


def test_zero_adjoints_zero_gradient():
    n = net.init_network(5, 2, seed=2)
    g = net.backward(n, [0.1, 0.5], [1.0, 1.2])
    assert g.value == 0.0
    assert all(np.all(gv == 0.0) for gv in g.grads.values())


def test_parameter_gradients_match_finite_differences():
    rng = np.random.default_rng(77)
    for layers, width in ((1, 1), (2, 10)):
        n = net.init_network(width, layers, seed=layers)
        t = rng.uniform(0.1, 0.9, size=3)
        z = rng.uniform(0.5, 1.5, size=3)
        adj = dict(
            adj_f=rng.normal(size=3),
            adj_ft=rng.normal(size=3),
            adj_fz=rng.normal(size=3),
            adj_fzz=rng.normal(size=3),
        )
        g = net.backward(n, t, z, **adj)
        names = list(n.theta)
        for _ in range(25):
            name = names[rng.integers(len(names))]
            idx = tuple(rng.integers(s) for s in n.theta[name].shape)
            h = 1e-5
            orig = n.theta[name][idx]

            def value_at(v):
                n.theta[name][idx] = v
                r = net.forward_with_input_derivs(n, t, z)
                return float(
                    np.sum(
                        adj["adj_f"] * r.f
                        + adj["adj_ft"] * r.f_t
                        + adj["adj_fz"] * r.f_z
                        + adj["adj_fzz"] * r.f_zz
                    )
                )

            fd = (value_at(orig + h) - value_at(orig - h)) / (2 * h)
            n.theta[name][idx] = orig
            assert abs(g.grads[name][idx] - fd) / (abs(fd) + 1e-8) < 1e-5, (name, idx)


def test_sgd_step_semantics():
    n = net.init_network(3, 1, seed=0)
    zero = net.ParamGradient(
        grads={k: np.zeros_like(v) for k, v in n.theta.items()}, value=0.0
    )
    before = {k: v.copy() for k, v in n.theta.items()}
    assert net.sgd_step(n, zero, alpha=0.1)
    assert all(np.array_equal(n.theta[k], before[k]) for k in before)

    g = net.ParamGradient(
        grads={k: np.zeros_like(v) for k, v in n.theta.items()}, value=0.0
    )
    g.grads["b_out"][0] = 2.0
    assert net.sgd_step(n, g, alpha=1.0)
    assert n.theta["b_out"][0] == pytest.approx(before["b_out"][0] - 2.0)

    bad = net.ParamGradient(
        grads={k: np.full_like(v, np.nan) for k, v in n.theta.items()}, value=0.0
    )
    snap = {k: v.copy() for k, v in n.theta.items()}
    assert not net.sgd_step(n, bad, alpha=0.5)
    assert all(np.array_equal(n.theta[k], snap[k]) for k in snap)

    with pytest.raises(ValueError):
        net.sgd_step(n, zero, alpha=0.0)


def test_sgd_converges_on_quadratic():
    # loss = 0.5 * sum((theta - target)^2); gradient = theta - target
    n = net.init_network(2, 1, seed=4)
    target = {k: np.full_like(v, 0.25) for k, v in n.theta.items()}
    for _ in range(200):
        g = net.ParamGradient(
            grads={k: n.theta[k] - target[k] for k in n.theta}, value=0.0
        )
        net.sgd_step(n, g, alpha=0.2)
    err = max(np.abs(n.theta[k] - target[k]).max() for k in n.theta)
    assert err < 1e-6


def test_gradient_norm():
    grads = {"a": np.array([3.0]), "b": np.array([[4.0]])}
    assert net.gradient_norm(grads) == pytest.approx(5.0)


def test_checkpoint_roundtrip(tmp_path):
    n = net.init_network(7, 2, seed=13)
    n.norm = net.InputNorm(t_shift=0.5, t_scale=0.5, z_shift=1.1, z_scale=0.7)
    p = tmp_path / "model.ckpt"
    net.save_checkpoint(n, p)
    m = net.load_checkpoint(p)
    assert (m.hidden_width, m.n_layers, m.seed) == (7, 2, 13)
    assert m.norm == n.norm
    for k in n.theta:
        assert np.array_equal(m.theta[k], n.theta[k])
    # identical bytes on re-save
    p2 = tmp_path / "model2.ckpt"
    net.save_checkpoint(m, p2)
    assert p.read_bytes() == p2.read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_text("not a checkpoint 9\n")
    with pytest.raises(ValueError):
        net.load_checkpoint(p)


def test_checkpoint_rejects_truncated(tmp_path):
    n = net.init_network(3, 1, seed=0)
    p = tmp_path / "model.ckpt"
    net.save_checkpoint(n, p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:8]) + "\n")
    with pytest.raises((ValueError, IndexError)):
        net.load_checkpoint(p)
