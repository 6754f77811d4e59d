"""Minimal dense-tensor reverse-mode differentiation engine.

Covers exactly what the two models need: affine maps, gather/segment ops
for message passing, the usual pointwise nonlinearities, softmax losses,
and an Adam optimizer.  float32 by default; passing float64 leaves ops in
float64 (grad_check relies on this).
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation, NonFiniteGradient


def _as_array(data, dtype=None):
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype)
    if arr.dtype in (np.float32, np.float64):
        return arr
    return arr.astype(np.float32)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = _as_array(data)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph construction helpers -------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(_wrap(other), -1.0))

    def __rsub__(self, other):
        return add(_wrap(other), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def backward(self):
        if self.data.size != 1:
            raise ContractViolation("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype)
        else:
            self.grad = self.grad + g


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce gradient g back to `shape` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def _make(data, parents, backward):
    out = Tensor(data, _parents=tuple(p for p in parents if isinstance(p, Tensor)))
    if out.requires_grad:
        out._backward = backward
    return out


# -- primitive operations -----------------------------------------------


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    out_data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g, b.data.shape))

    return _make(out_data, (a, b), backward)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    out_data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a._accum(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accum(_unbroadcast(g * a.data, b.data.shape))

    return _make(out_data, (a, b), backward)


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    out_data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a._accum(g @ b.data.T)
        if b.requires_grad:
            b._accum(a.data.T @ g)

    return _make(out_data, (a, b), backward)


def reshape(a, shape):
    a = _wrap(a)

    def backward(g):
        a._accum(g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def concat(tensors, axis=0):
    tensors = [_wrap(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]

    def backward(g):
        pieces = np.split(g, np.cumsum(sizes)[:-1], axis=axis)
        for t, piece in zip(tensors, pieces):
            if t.requires_grad:
                t._accum(piece)

    return _make(out_data, tensors, backward)


def gather(a, idx):
    """Row gather along axis 0; backward scatter-adds."""
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.int64)

    def backward(g):
        acc = np.zeros_like(a.data)
        np.add.at(acc, idx, g)
        a._accum(acc)

    return _make(a.data[idx], (a,), backward)


def segment_sum(a, seg_ids, num_segments):
    """Sum rows of `a` into `num_segments` buckets keyed by seg_ids."""
    a = _wrap(a)
    seg_ids = np.asarray(seg_ids, dtype=np.int64)
    out_data = np.zeros((num_segments,) + a.data.shape[1:], dtype=a.data.dtype)
    np.add.at(out_data, seg_ids, a.data)

    def backward(g):
        a._accum(g[seg_ids])

    return _make(out_data, (a,), backward)


def tsum(a, axis=None, keepdims=False):
    a = _wrap(a)
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accum(np.broadcast_to(g, a.data.shape).copy())

    return _make(out_data, (a,), backward)


def tmean(a, axis=None, keepdims=False):
    a = _wrap(a)
    count = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def exp(a):
    a = _wrap(a)
    out_data = np.exp(a.data)

    def backward(g):
        a._accum(g * out_data)

    return _make(out_data, (a,), backward)


def log(a):
    a = _wrap(a)

    def backward(g):
        a._accum(g / a.data)

    return _make(np.log(a.data), (a,), backward)


def sigmoid(a):
    a = _wrap(a)
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        a._accum(g * out_data * (1.0 - out_data))

    return _make(out_data, (a,), backward)


def softplus(a):
    """Numerically stable log(1 + e^x)."""
    a = _wrap(a)
    out_data = np.maximum(a.data, 0) + np.log1p(np.exp(-np.abs(a.data)))

    def backward(g):
        a._accum(g / (1.0 + np.exp(-a.data)))

    return _make(out_data, (a,), backward)


def absolute(a):
    a = _wrap(a)

    def backward(g):
        a._accum(g * np.sign(a.data))

    return _make(np.abs(a.data), (a,), backward)


def leaky_relu(a, slope=0.2):
    a = _wrap(a)
    mask = a.data > 0

    def backward(g):
        a._accum(g * np.where(mask, 1.0, slope))

    return _make(np.where(mask, a.data, slope * a.data), (a,), backward)


def relu(a):
    return leaky_relu(a, slope=0.0)


def square(a):
    return mul(a, a)


# -- composites ----------------------------------------------------------


def log_softmax(a, axis=-1):
    a = _wrap(a)
    shift = a - Tensor(a.data.max(axis=axis, keepdims=True))
    lse = log(tsum(exp(shift), axis=axis, keepdims=True))
    return shift - lse


def segment_softmax(logits, seg_ids, num_segments):
    """Softmax over rows of `logits` grouped by seg_ids (axis 0)."""
    logits = _wrap(logits)
    seg_ids = np.asarray(seg_ids, dtype=np.int64)
    seg_max = np.full((num_segments,) + logits.data.shape[1:], -np.inf,
                      dtype=logits.data.dtype)
    np.maximum.at(seg_max, seg_ids, logits.data)
    shifted = logits - Tensor(seg_max[seg_ids])
    num = exp(shifted)
    denom = segment_sum(num, seg_ids, num_segments)
    return mul(num, _reciprocal(gather(denom, seg_ids)))


def _reciprocal(a):
    a = _wrap(a)
    out_data = 1.0 / a.data

    def backward(g):
        a._accum(-g * out_data * out_data)

    return _make(out_data, (a,), backward)


def softmax_cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean over rows of -log softmax(logits)[target].

    logits: [..., L]; targets: integer class per row (matching leading shape).
    """
    logits = _wrap(logits)
    L = logits.data.shape[-1]
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != logits.data.shape[:-1]:
        raise ContractViolation("target shape does not match logits rows")
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= L:
        raise ContractViolation("target class out of range")
    onehot = np.zeros(logits.data.shape, dtype=logits.data.dtype)
    np.put_along_axis(onehot, targets[..., None], 1.0, axis=-1)
    ls = log_softmax(logits, axis=-1)
    rows = max(1, int(np.prod(targets.shape)))
    return mul(tsum(mul(ls, Tensor(onehot))), -1.0 / rows)


def gaussian_kl(mu: Tensor, log_var: Tensor) -> Tensor:
    """Mean over elements of 0.5 (mu^2 + e^{logvar} - logvar - 1)."""
    mu, log_var = _wrap(mu), _wrap(log_var)
    if mu.data.shape != log_var.data.shape:
        raise ContractViolation("mu/log_var shape mismatch")
    term = square(mu) + exp(log_var) - log_var - 1.0
    return mul(tmean(term), 0.5)


# -- parameters / optimizer ----------------------------------------------


def zero_grads(params: dict):
    for t in params.values():
        t.grad = None


class AdamState:
    def __init__(self):
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(params: dict, state: AdamState, lr=1e-3, beta1=0.9, beta2=0.999,
              eps=1e-8):
    """Standard bias-corrected Adam update over a named parameter dict."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient for parameter '{name}'")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        state.m[name] = beta1 * state.m[name] + (1 - beta1) * g
        state.v[name] = beta2 * state.v[name] + (1 - beta2) * g * g
        m_hat = state.m[name] / (1 - beta1 ** t)
        v_hat = state.v[name] / (1 - beta2 ** t)
        p.data = (p.data - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)


def grad_check(model_fn, params: dict, tolerance=1e-3, h=1e-3, max_coords=64,
               seed=0) -> dict:
    """Compare reverse-mode gradients against central differences.

    model_fn(params) must return a scalar Tensor.  Parameters are promoted
    to float64 for the check.  At most `max_coords` coordinates per tensor
    are probed (seeded subsample).
    """
    params64 = {k: Tensor(v.data.astype(np.float64), requires_grad=True)
                for k, v in params.items()}
    loss = model_fn(params64)
    loss.backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_name = None
    for name, p in params64.items():
        if p.grad is None:
            continue
        flat = p.data.reshape(-1)
        gflat = p.grad.reshape(-1)
        coords = np.arange(flat.size)
        if flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            fp = float(model_fn(params64).data)
            flat[c] = orig - h
            fm = float(model_fn(params64).data)
            flat[c] = orig
            numeric = (fp - fm) / (2 * h)
            # floor keeps near-zero gradients compared absolutely, not
            # against float noise
            denom = max(abs(numeric), abs(gflat[c]), 1e-6)
            err = abs(numeric - gflat[c]) / denom
            if err > worst:
                worst, worst_name = err, (name, int(c))
    return {"max_rel_error": worst, "worst": worst_name, "passed": worst <= tolerance}
