"""Minimal reverse-mode automatic differentiation over numpy arrays.

Just the handful of primitives the PDE surrogate needs: add, multiply,
matmul, tanh, and reductions to a scalar. Gradients are exact; broadcasting
is handled by summing the upstream gradient back to the operand's shape.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A node in the computation graph; wraps a float64 numpy array."""

    __slots__ = ("value", "grad", "_parents", "_vjps")

    # Make ndarray <op> Tensor defer to our reflected operators instead of
    # numpy trying (and failing) to treat the Tensor as an array.
    __array_ufunc__ = None

    def __init__(self, value, parents=(), vjps=()):
        self.value = np.asarray(value, dtype=float)
        self.grad = None
        self._parents = parents
        self._vjps = vjps

    @property
    def shape(self):
        return self.value.shape

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            return Tensor(
                self.value + other.value,
                (self, other),
                (
                    lambda g: _unbroadcast(g, self.shape),
                    lambda g: _unbroadcast(g, other.shape),
                ),
            )
        other = np.asarray(other, dtype=float)
        return Tensor(
            self.value + other, (self,), (lambda g: _unbroadcast(g, self.shape),)
        )

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.value, (self,), (lambda g: -g,))

    def __sub__(self, other):
        return self + (-other if isinstance(other, Tensor) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return Tensor(
                self.value * other.value,
                (self, other),
                (
                    lambda g: _unbroadcast(g * other.value, self.shape),
                    lambda g: _unbroadcast(g * self.value, other.shape),
                ),
            )
        other = np.asarray(other, dtype=float)
        return Tensor(
            self.value * other, (self,), (lambda g: _unbroadcast(g * other, self.shape),)
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return Tensor(
                self.value / other.value,
                (self, other),
                (
                    lambda g: _unbroadcast(g / other.value, self.shape),
                    lambda g: _unbroadcast(
                        -g * self.value / other.value**2, other.shape
                    ),
                ),
            )
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        other = np.asarray(other, dtype=float)
        return Tensor(
            other / self.value,
            (self,),
            (lambda g: _unbroadcast(-g * other / self.value**2, self.shape),),
        )

    def __matmul__(self, other):
        if isinstance(other, Tensor):
            return Tensor(
                self.value @ other.value,
                (self, other),
                (
                    lambda g: g @ other.value.T,
                    lambda g: self.value.T @ g,
                ),
            )
        other = np.asarray(other, dtype=float)
        return Tensor(self.value @ other, (self,), (lambda g: g @ other.T,))

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=float)
        return Tensor(other @ self.value, (self,), (lambda g: other.T @ g,))

    # -- reductions ---------------------------------------------------------

    def sum(self):
        return Tensor(
            self.value.sum(), (self,), (lambda g: np.broadcast_to(g, self.shape),)
        )

    def mean(self):
        n = self.value.size
        return Tensor(
            self.value.mean(),
            (self,),
            (lambda g: np.broadcast_to(g / n, self.shape),),
        )

    # -- backward pass ------------------------------------------------------

    def backward(self):
        if self.value.ndim != 0 and self.value.size != 1:
            raise ValueError("backward() requires a scalar output")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node.grad is None:
                continue
            for parent, vjp in zip(node._parents, node._vjps):
                contribution = vjp(node.grad)
                if parent.grad is None:
                    parent.grad = contribution.copy()
                else:
                    parent.grad = parent.grad + contribution


def tanh(x):
    """tanh for Tensors and plain arrays alike."""
    if isinstance(x, Tensor):
        out = np.tanh(x.value)
        return Tensor(out, (x,), (lambda g: g * (1.0 - out * out),))
    return np.tanh(x)
