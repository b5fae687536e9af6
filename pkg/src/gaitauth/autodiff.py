"""Minimal reverse-mode automatic differentiation over numpy float64 arrays.

Every backward rule is itself expressed with the same differentiable
primitives, so gradients of gradients work out of the box.  That second-order
capability is what the Wasserstein critic's gradient penalty needs: the
penalty is a function of an input gradient, and training differentiates it
again with respect to the network parameters.

The engine is deliberately small: `Tensor` wraps an ndarray plus vjp-edges to
its parents, `grad` walks the graph once in reverse topological order, and a
handful of primitives (arithmetic, matmul, reductions, shape ops, pointwise
nonlinearities) cover everything the package trains.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A float64 array plus edges to the tensors it was computed from.

    `parents` is a tuple of (parent, vjp) pairs where vjp maps the gradient
    of some scalar objective w.r.t. this tensor to its contribution to the
    gradient w.r.t. the parent.  Leaf tensors have no parents.
    """

    __slots__ = ("data", "parents")

    def __init__(self, data, parents=()):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = parents

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def detach(self):
        """Same values, no history."""
        return Tensor(self.data)

    # ---- operator sugar --------------------------------------------------

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return add(self, neg(_wrap(other)))

    def __rsub__(self, other):
        return add(_wrap(other), neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, _wrap(other))

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            n = self.data.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            n = 1
            for a in axes:
                n *= self.data.shape[a]
        return tsum(self, axis=axis, keepdims=keepdims) / float(n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, leaf={not self.parents})"


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: Tensor, shape) -> Tensor:
    """Reduce a gradient back to the shape of the operand it belongs to."""
    shape = tuple(shape)
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = tsum(g, axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    if g.shape != shape:
        g = reshape(g, shape)
    return g


# ---- primitives ----------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data
    return Tensor(
        data,
        (
            (a, lambda g: _unbroadcast(g, a.shape)),
            (b, lambda g: _unbroadcast(g, b.shape)),
        ),
    )


def neg(a: Tensor) -> Tensor:
    return Tensor(-a.data, ((a, lambda g: neg(g)),))


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data
    return Tensor(
        data,
        (
            (a, lambda g: _unbroadcast(mul(g, b), a.shape)),
            (b, lambda g: _unbroadcast(mul(g, a), b.shape)),
        ),
    )


def div(a: Tensor, b: Tensor) -> Tensor:
    data = a.data / b.data
    return Tensor(
        data,
        (
            (a, lambda g: _unbroadcast(div(g, b), a.shape)),
            (b, lambda g: _unbroadcast(neg(div(mul(g, a), mul(b, b))), b.shape)),
        ),
    )


def power(a: Tensor, p) -> Tensor:
    p = float(p)
    data = a.data ** p
    return Tensor(data, ((a, lambda g: mul(g, mul(power(a, p - 1.0), Tensor(p)))),))


def sqrt(a: Tensor) -> Tensor:
    return power(a, 0.5)


def exp(a: Tensor) -> Tensor:
    out = Tensor(np.exp(a.data))
    out.parents = ((a, lambda g: mul(g, out)),)
    return out


def log(a: Tensor) -> Tensor:
    return Tensor(np.log(a.data), ((a, lambda g: div(g, a)),))


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data))
    out.parents = ((a, lambda g: mul(g, add(Tensor(1.0), neg(mul(out, out))))),)
    return out


def relu(a: Tensor) -> Tensor:
    mask = (a.data > 0).astype(np.float64)
    return Tensor(a.data * mask, ((a, lambda g: mul(g, Tensor(mask))),))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    scale = np.where(a.data > 0, 1.0, slope)
    return Tensor(a.data * scale, ((a, lambda g: mul(g, Tensor(scale))),))


def sigmoid(a: Tensor) -> Tensor:
    # 0.5 * (tanh(x/2) + 1): numerically stable on both tails.
    return mul(Tensor(0.5), add(tanh(mul(a, Tensor(0.5))), Tensor(1.0)))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data @ b.data
    return Tensor(
        data,
        (
            (a, lambda g: matmul(g, transpose(b))),
            (b, lambda g: matmul(transpose(a), g)),
        ),
    )


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.data.T, ((a, lambda g: transpose(g)),))


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    old = a.shape
    return Tensor(a.data.reshape(shape), ((a, lambda g: reshape(g, old)),))


def tsum(a: Tensor, axis=None, keepdims=False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)
    src_shape = a.shape

    def vjp(g):
        if axis is None:
            gk = reshape(g, (1,) * len(src_shape)) if src_shape else g
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            axes = tuple(ax % len(src_shape) for ax in axes)
            if keepdims:
                gk = g
            else:
                kshape = tuple(
                    1 if i in axes else n for i, n in enumerate(src_shape)
                )
                gk = reshape(g, kshape)
        return broadcast_to(gk, src_shape)

    return Tensor(data, ((a, vjp),))


def broadcast_to(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)
    data = np.broadcast_to(a.data, shape)
    return Tensor(data, ((a, lambda g: _unbroadcast(g, a.shape)),))


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    parents = []
    start = 0
    for t in tensors:
        width = t.shape[axis]
        parents.append((t, _narrow_vjp(axis, start, width)))
        start += width
    return Tensor(data, tuple(parents))


def _narrow_vjp(axis, start, width):
    return lambda g: narrow(g, axis, start, width)


def narrow(a: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice [start, start+length) along one axis."""
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, start + length)
    return _take_slice(a, tuple(index))


def _take_slice(a: Tensor, index) -> Tensor:
    src_shape = a.shape
    return Tensor(a.data[index], ((a, lambda g: _pad_slice(g, src_shape, index)),))


def _pad_slice(g: Tensor, shape, index) -> Tensor:
    """Scatter `g` into a zero tensor of `shape` at `index` (adjoint of slicing)."""
    data = np.zeros(shape, dtype=np.float64)
    data[index] = g.data
    return Tensor(data, ((g, lambda gg: _take_slice(gg, index)),))


# ---- composites ----------------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    # The max shift is a constant: softmax is shift-invariant, so detaching
    # it is exact (not an approximation) at every differentiation order.
    shift = Tensor(a.data.max(axis=axis, keepdims=True))
    e = exp(add(a, neg(shift)))
    return div(e, tsum(e, axis=axis, keepdims=True))


def logsumexp(a: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    shift = Tensor(a.data.max(axis=axis, keepdims=True))
    s = log(tsum(exp(add(a, neg(shift))), axis=axis, keepdims=True))
    out = add(s, shift)
    if not keepdims:
        squeezed = tuple(n for i, n in enumerate(out.shape) if i != axis % out.ndim)
        out = reshape(out, squeezed)
    return out


# ---- backward pass -------------------------------------------------------


def _topo_order(output: Tensor):
    order = []
    state = {}
    stack = [output]
    while stack:
        node = stack[-1]
        st = state.get(id(node))
        if st is None:
            state[id(node)] = 0
            for parent, _ in node.parents:
                if id(parent) not in state:
                    stack.append(parent)
        elif st == 0:
            state[id(node)] = 1
            order.append(node)
            stack.pop()
        else:
            stack.pop()
    return order


def grad(output: Tensor, inputs, seed=None, create_graph: bool = False):
    """Gradients of `output` w.r.t. each tensor in `inputs`.

    `seed` is the upstream gradient (defaults to ones, so a scalar output
    gives plain gradients).  With `create_graph=True` the returned tensors
    carry their own history and can be differentiated again.
    """
    single = isinstance(inputs, Tensor)
    if single:
        inputs = [inputs]
    if seed is None:
        seed = Tensor(np.ones_like(output.data))
    elif not isinstance(seed, Tensor):
        seed = Tensor(seed)

    order = _topo_order(output)
    grads = {id(output): seed}
    for node in reversed(order):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, vjp in node.parents:
            contribution = vjp(g)
            prev = grads.get(id(parent))
            grads[id(parent)] = contribution if prev is None else add(prev, contribution)

    results = []
    for t in inputs:
        g = grads.get(id(t))
        if g is None:
            g = Tensor(np.zeros_like(t.data))
        elif not create_graph:
            g = g.detach()
        results.append(g)
    return results[0] if single else results
