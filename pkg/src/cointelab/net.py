"""Gated PDE surrogate f(t, z; theta): forward evaluation, exact input
derivatives (f_t, f_z, f_zz) via second-order forward propagation, and exact
parameter gradients via the reverse-mode tape in :mod:`cointelab.autodiff`.

Each intermediate quantity carries a jet (value, d/dt, d/dz, d2/dz2). The
jet rules are written in terms of tape primitives, so parameter gradients of
any adjoint-weighted combination of (f, f_t, f_z, f_zz) come out of the same
graph. The layer stack is LSTM-like: per layer, four gates mix the raw input
with the running state through Hadamard products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cointelab.autodiff import Tensor, tanh


@dataclass(frozen=True)
class InputNorm:
    """Affine input maps applied before the first layer."""

    t_shift: float = 0.0
    t_scale: float = 1.0
    z_shift: float = 0.0
    z_scale: float = 1.0


@dataclass
class DGMNetwork:
    hidden_width: int
    n_layers: int
    seed: int
    theta: dict
    norm: InputNorm = field(default_factory=InputNorm)


@dataclass(frozen=True)
class EvalResult:
    f: np.ndarray
    f_t: np.ndarray
    f_z: np.ndarray
    f_zz: np.ndarray


@dataclass(frozen=True)
class ParamGradient:
    grads: dict
    value: float


_GATES = ("z", "g", "r", "h")


def param_shapes(hidden_width: int, n_layers: int) -> dict:
    """Ordered name -> shape map; the checkpoint layout follows this order."""
    shapes = {"w1": (2, hidden_width), "b1": (hidden_width,)}
    for layer in range(1, n_layers + 1):
        for gate in _GATES:
            shapes[f"u_{gate}{layer}"] = (2, hidden_width)
            shapes[f"w_{gate}{layer}"] = (hidden_width, hidden_width)
            shapes[f"b_{gate}{layer}"] = (hidden_width,)
    shapes["w_out"] = (hidden_width, 1)
    shapes["b_out"] = (1,)
    return shapes


def init_network(hidden_width: int, n_layers: int, seed: int = 0) -> DGMNetwork:
    """Scaled-uniform init: U(+-sqrt(6 / (fan_in + fan_out))) per tensor."""
    if hidden_width < 1 or n_layers < 1:
        raise ValueError("hidden_width and n_layers must be >= 1")
    rng = np.random.default_rng(seed)
    theta = {}
    for name, shape in param_shapes(hidden_width, n_layers).items():
        if name.startswith("b"):
            theta[name] = np.zeros(shape)
        else:
            fan_in, fan_out = shape
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            theta[name] = rng.uniform(-bound, bound, size=shape)
    return DGMNetwork(hidden_width=hidden_width, n_layers=n_layers, seed=seed, theta=theta)


class _Jet:
    """Value and input-derivative channels of one intermediate quantity."""

    __slots__ = ("v", "dt", "dz", "dzz")

    def __init__(self, v, dt, dz, dzz):
        self.v = v
        self.dt = dt
        self.dz = dz
        self.dzz = dzz


def _jet_linear(x: _Jet, s: _Jet, u, w, b) -> _Jet:
    return _Jet(
        v=x.v @ u + s.v @ w + b,
        dt=x.dt @ u + s.dt @ w,
        dz=x.dz @ u + s.dz @ w,
        dzz=x.dzz @ u + s.dzz @ w,
    )


def _jet_tanh(u: _Jet) -> _Jet:
    s = tanh(u.v)
    e = 1.0 - s * s
    return _Jet(
        v=s,
        dt=e * u.dt,
        dz=e * u.dz,
        dzz=e * u.dzz - 2.0 * (s * e) * (u.dz * u.dz),
    )


def _jet_mul(a: _Jet, b: _Jet) -> _Jet:
    return _Jet(
        v=a.v * b.v,
        dt=a.dt * b.v + a.v * b.dt,
        dz=a.dz * b.v + a.v * b.dz,
        dzz=a.dzz * b.v + 2.0 * (a.dz * b.dz) + a.v * b.dzz,
    )


def _jet_one_minus(a: _Jet) -> _Jet:
    return _Jet(v=1.0 - a.v, dt=-a.dt, dz=-a.dz, dzz=-a.dzz)


def _jet_add(a: _Jet, b: _Jet) -> _Jet:
    return _Jet(v=a.v + b.v, dt=a.dt + b.dt, dz=a.dz + b.dz, dzz=a.dzz + b.dzz)


def evaluate_jets(theta: dict, n_layers: int, t, z, norm: InputNorm) -> _Jet:
    """Run the full layer stack on a batch of points.

    ``theta`` values may be numpy arrays (inference) or Tensors (training);
    the returned jet channels have shape (batch,).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    t, z = np.broadcast_arrays(t, z)
    n = t.shape[0]
    xv = np.column_stack(
        [(t - norm.t_shift) / norm.t_scale, (z - norm.z_shift) / norm.z_scale]
    )
    zero = np.zeros((n, 2))
    x = _Jet(
        v=xv,
        dt=np.tile([1.0 / norm.t_scale, 0.0], (n, 1)),
        dz=np.tile([0.0, 1.0 / norm.z_scale], (n, 1)),
        dzz=zero,
    )
    s = _jet_tanh(
        _Jet(
            v=x.v @ theta["w1"] + theta["b1"],
            dt=x.dt @ theta["w1"],
            dz=x.dz @ theta["w1"],
            dzz=x.dzz @ theta["w1"],
        )
    )
    for layer in range(1, n_layers + 1):
        gz = _jet_tanh(_jet_linear(x, s, theta[f"u_z{layer}"], theta[f"w_z{layer}"], theta[f"b_z{layer}"]))
        gg = _jet_tanh(_jet_linear(x, s, theta[f"u_g{layer}"], theta[f"w_g{layer}"], theta[f"b_g{layer}"]))
        gr = _jet_tanh(_jet_linear(x, s, theta[f"u_r{layer}"], theta[f"w_r{layer}"], theta[f"b_r{layer}"]))
        sr = _jet_mul(s, gr)
        gh = _jet_tanh(_jet_linear(x, sr, theta[f"u_h{layer}"], theta[f"w_h{layer}"], theta[f"b_h{layer}"]))
        s = _jet_add(_jet_mul(_jet_one_minus(gg), gh), _jet_mul(gz, s))
    out = _Jet(
        v=s.v @ theta["w_out"] + theta["b_out"],
        dt=s.dt @ theta["w_out"],
        dz=s.dz @ theta["w_out"],
        dzz=s.dzz @ theta["w_out"],
    )
    return out


def _squeeze(a):
    a = np.asarray(a)
    return a.reshape(a.shape[0])


def forward(net: DGMNetwork, t, z):
    """Value of f(t, z); scalar in, scalar out."""
    scalar = np.ndim(t) == 0 and np.ndim(z) == 0
    jet = evaluate_jets(net.theta, net.n_layers, t, z, net.norm)
    f = _squeeze(jet.v)
    return float(f[0]) if scalar else f


def forward_with_input_derivs(net: DGMNetwork, t, z) -> EvalResult:
    scalar = np.ndim(t) == 0 and np.ndim(z) == 0
    jet = evaluate_jets(net.theta, net.n_layers, t, z, net.norm)
    vals = [_squeeze(jet.v), _squeeze(jet.dt), _squeeze(jet.dz), _squeeze(jet.dzz)]
    if scalar:
        vals = [float(v[0]) for v in vals]
    return EvalResult(f=vals[0], f_t=vals[1], f_z=vals[2], f_zz=vals[3])


def backward(net: DGMNetwork, t, z, adj_f=0.0, adj_ft=0.0, adj_fz=0.0, adj_fzz=0.0) -> ParamGradient:
    """Exact parameter gradient of
    sum_i(adj_f f + adj_ft f_t + adj_fz f_z + adj_fzz f_zz) over the batch."""
    for name, a in (("adj_f", adj_f), ("adj_ft", adj_ft), ("adj_fz", adj_fz), ("adj_fzz", adj_fzz)):
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name} must be finite")
    params = {k: Tensor(v) for k, v in net.theta.items()}
    jet = evaluate_jets(params, net.n_layers, t, z, net.norm)
    total = (
        (jet.v * np.atleast_2d(np.asarray(adj_f, dtype=float)).reshape(-1, 1)).sum()
        + (jet.dt * np.atleast_2d(np.asarray(adj_ft, dtype=float)).reshape(-1, 1)).sum()
        + (jet.dz * np.atleast_2d(np.asarray(adj_fz, dtype=float)).reshape(-1, 1)).sum()
        + (jet.dzz * np.atleast_2d(np.asarray(adj_fzz, dtype=float)).reshape(-1, 1)).sum()
    )
    total.backward()
    grads = {
        k: (p.grad if p.grad is not None else np.zeros_like(p.value))
        for k, p in params.items()
    }
    return ParamGradient(grads=grads, value=float(total.value))


def sgd_step(net: DGMNetwork, grad: ParamGradient, alpha: float) -> bool:
    """In-place descent step; returns False (no update) on a non-finite gradient."""
    if alpha <= 0:
        raise ValueError("learning rate must be positive")
    for g in grad.grads.values():
        if not np.all(np.isfinite(g)):
            return False
    for name, g in grad.grads.items():
        net.theta[name] -= alpha * g
    return True


def gradient_norm(grads: dict) -> float:
    return math.sqrt(sum(float((g * g).sum()) for g in grads.values()))


# -- checkpoint i/o ----------------------------------------------------------
#
# Plain-text layout, one tensor per block, row-major, float hex for exact
# round-trips:
#
#   cointelab-dgm-checkpoint 1
#   hidden_width <int>
#   n_layers <int>
#   seed <int>
#   norm <t_shift> <t_scale> <z_shift> <z_scale>
#   tensor <name> <rows> <cols-or-0>
#   <one line of hex floats per row>
#   ...

_MAGIC = "cointelab-dgm-checkpoint"
_VERSION = 1


def save_checkpoint(net: DGMNetwork, path) -> None:
    lines = [
        f"{_MAGIC} {_VERSION}",
        f"hidden_width {net.hidden_width}",
        f"n_layers {net.n_layers}",
        f"seed {net.seed}",
        "norm "
        + " ".join(
            float(v).hex()
            for v in (net.norm.t_shift, net.norm.t_scale, net.norm.z_shift, net.norm.z_scale)
        ),
    ]
    for name in param_shapes(net.hidden_width, net.n_layers):
        arr = net.theta[name]
        if arr.ndim == 1:
            lines.append(f"tensor {name} {arr.shape[0]} 0")
            lines.append(" ".join(float(v).hex() for v in arr))
        else:
            lines.append(f"tensor {name} {arr.shape[0]} {arr.shape[1]}")
            for row in arr:
                lines.append(" ".join(float(v).hex() for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> DGMNetwork:
    with open(path) as fh:
        lines = fh.read().splitlines()
    magic, version = lines[0].rsplit(" ", 1)
    if magic != _MAGIC or int(version) != _VERSION:
        raise ValueError(f"not a recognized checkpoint: {lines[0]!r}")
    width = int(lines[1].split()[1])
    n_layers = int(lines[2].split()[1])
    seed = int(lines[3].split()[1])
    norm_vals = [float.fromhex(v) for v in lines[4].split()[1:]]
    norm = InputNorm(*norm_vals)
    theta = {}
    i = 5
    while i < len(lines) and lines[i]:
        _, name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        i += 1
        if cols == 0:
            theta[name] = np.array([float.fromhex(v) for v in lines[i].split()])
            i += 1
        else:
            data = []
            for _ in range(rows):
                data.append([float.fromhex(v) for v in lines[i].split()])
                i += 1
            theta[name] = np.array(data)
    expected = param_shapes(width, n_layers)
    for name, shape in expected.items():
        if name not in theta or theta[name].shape != shape:
            raise ValueError(f"checkpoint missing or misshaped tensor {name}")
    return DGMNetwork(hidden_width=width, n_layers=n_layers, seed=seed, theta=theta, norm=norm)
