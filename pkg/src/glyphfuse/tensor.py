"""Dense tensors with reverse-mode automatic differentiation.

The library covers exactly the operations the glyph pipeline needs: 3x3
convolution, 2x2 max pooling, dense layers, LSTM gate arithmetic, dropout,
and a softmax cross-entropy loss. Shapes are static (no broadcasting), and
every operation is deterministic, so identical seeds reproduce identical
training runs bit for bit.

Gradients are recorded on a per-output tape: each operation attaches a
backward closure to its result, and ``Tensor.backward`` replays the closures
in reverse topological order, summing contributions when a tensor feeds
several consumers. Training math runs in float32; float64 inputs are
propagated unchanged so finite-difference checks get full precision.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DimensionError, GradientError, NumericalError

__all__ = [
    "Tensor",
    "ModelParams",
    "no_grad",
    "add",
    "mul",
    "scale",
    "tsum",
    "concat1d",
    "slice1d",
    "take_row",
    "reshape",
    "mean_vectors",
    "relu",
    "sigmoid",
    "tanh",
    "linear",
    "matvec",
    "conv2d",
    "maxpool2d",
    "dropout",
    "lstm_step",
    "softmax",
    "softmax_cross_entropy",
]


class _GradMode:
    enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable tape recording inside the block (used for evaluation)."""
    prev = _GradMode.enabled
    _GradMode.enabled = False
    try:
        yield
    finally:
        _GradMode.enabled = prev


class Tensor:
    """A dense real array that optionally participates in the gradient tape.

    ``data`` is always a float32 or float64 ndarray. ``grad``, when present,
    has the same shape and dtype as ``data``.
    """

    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data: np.ndarray = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._prev: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None

    @classmethod
    def zeros(cls, shape, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return cls(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() expects a scalar, got shape {self.data.shape}")
        return float(self.data.reshape(()))

    def assert_finite(self, context: str = "tensor") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise NumericalError(f"{context} contains NaN or Inf")
        return self

    def backward(self) -> None:
        """Populate ``grad`` on every reachable tensor that wants one.

        Must be called on a scalar. Gradients sum over repeated uses of a
        tensor. The tape is released afterwards, so a graph can only be
        walked once.
        """
        if self.data.size != 1:
            raise DimensionError(f"backward expects a scalar loss, got shape {self.data.shape}")
        order = _topo_order(self)
        if self.grad is None:
            self.grad = np.ones_like(self.data)
        for node in reversed(order):
            fn = node._backward
            if fn is not None and node.grad is not None:
                fn(node.grad)
            node._prev = ()
            node._backward = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def _topo_order(root: Tensor) -> list[Tensor]:
    # Iterative post-order: children appear before their consumers.
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for child in node._prev:
            if id(child) not in seen:
                stack.append((child, False))
    return order


def _wants_grad(t: Tensor) -> bool:
    return t.requires_grad or bool(t._prev)


def _acc(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype)
    else:
        t.grad += g


def _record(out: Tensor, parents: tuple[Tensor, ...], backward: Callable[[np.ndarray], None]) -> Tensor:
    if _GradMode.enabled and any(_wants_grad(p) for p in parents):
        out.requires_grad = True
        out._prev = parents
        out._backward = backward
    return out


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"{op}: operand shapes {a.data.shape} and {b.data.shape} differ")


# ---------------------------------------------------------------------------
# elementwise and structural operations


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("add", a, b)
    out = Tensor(a.data + b.data)

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g)
        if _wants_grad(b):
            _acc(b, g)

    return _record(out, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_shape("mul", a, b)
    out = Tensor(a.data * b.data)

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g * b.data)
        if _wants_grad(b):
            _acc(b, g * a.data)

    return _record(out, (a, b), backward)


def scale(a: Tensor, factor: float) -> Tensor:
    f = a.data.dtype.type(factor)
    out = Tensor(a.data * f)

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g * f)

    return _record(out, (a,), backward)


def tsum(a: Tensor) -> Tensor:
    out = Tensor(np.asarray(a.data.sum(dtype=a.data.dtype)))

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, np.full_like(a.data, g.reshape(())))

    return _record(out, (a,), backward)


def concat1d(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise DimensionError("concat1d: empty sequence")
    for p in parts:
        if p.data.ndim != 1:
            raise DimensionError(f"concat1d: expected rank-1 parts, got shape {p.data.shape}")
    out = Tensor(np.concatenate([p.data for p in parts]))
    offsets = np.cumsum([0] + [p.data.shape[0] for p in parts])

    def backward(g: np.ndarray) -> None:
        for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            if _wants_grad(p):
                _acc(p, g[start:stop])

    return _record(out, tuple(parts), backward)


def slice1d(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 1:
        raise DimensionError(f"slice1d: expected rank-1 input, got shape {a.data.shape}")
    if not (0 <= start <= stop <= a.data.shape[0]):
        raise DimensionError(f"slice1d: range [{start}:{stop}] outside length {a.data.shape[0]}")
    out = Tensor(a.data[start:stop].copy())

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            buf = np.zeros_like(a.data)
            buf[start:stop] = g
            _acc(a, buf)

    return _record(out, (a,), backward)


def take_row(a: Tensor, index: int) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"take_row: expected rank-2 input, got shape {a.data.shape}")
    if not (0 <= index < a.data.shape[0]):
        raise DimensionError(f"take_row: row {index} outside axis 0 extent {a.data.shape[0]}")
    out = Tensor(a.data[index].copy())

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            buf = np.zeros_like(a.data)
            buf[index] = g
            _acc(a, buf)

    return _record(out, (a,), backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    if int(np.prod(shape)) != a.data.size:
        raise DimensionError(f"reshape: cannot view {a.data.shape} as {shape}")
    out = Tensor(a.data.reshape(shape).copy())

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g.reshape(a.data.shape))

    return _record(out, (a,), backward)


def mean_vectors(vectors: Sequence[Tensor]) -> Tensor:
    """Elementwise arithmetic mean of equally sized rank-1 tensors."""
    if not vectors:
        raise DimensionError("mean_vectors: empty sequence")
    width = vectors[0].data.shape
    for v in vectors:
        if v.data.ndim != 1 or v.data.shape != width:
            raise DimensionError(
                f"mean_vectors: mixed shapes {width} and {v.data.shape}"
            )
    n = len(vectors)
    acc = vectors[0].data.copy()
    for v in vectors[1:]:
        acc += v.data
    inv = vectors[0].data.dtype.type(1.0 / n)
    out = Tensor(acc * inv)

    def backward(g: np.ndarray) -> None:
        share = g * inv
        for v in vectors:
            if _wants_grad(v):
                _acc(v, share)

    return _record(out, tuple(vectors), backward)


# ---------------------------------------------------------------------------
# activations


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0))

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g * (a.data > 0))

    return _record(out, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    # tanh form avoids exp overflow for large negative inputs
    y = 0.5 * (np.tanh(0.5 * a.data) + 1.0)
    out = Tensor(y.astype(a.data.dtype, copy=False))

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g * out.data * (1.0 - out.data))

    return _record(out, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data))

    def backward(g: np.ndarray) -> None:
        if _wants_grad(a):
            _acc(a, g * (1.0 - out.data * out.data))

    return _record(out, (a,), backward)


# ---------------------------------------------------------------------------
# dense layers


def matvec(w: Tensor, x: Tensor) -> Tensor:
    if w.data.ndim != 2 or x.data.ndim != 1:
        raise DimensionError(
            f"matvec: expected matrix and vector, got shapes {w.data.shape} and {x.data.shape}"
        )
    if w.data.shape[1] != x.data.shape[0]:
        raise DimensionError(
            f"matvec: matrix columns {w.data.shape[1]} != vector length {x.data.shape[0]}"
        )
    out = Tensor(w.data @ x.data)

    def backward(g: np.ndarray) -> None:
        if _wants_grad(w):
            _acc(w, np.outer(g, x.data))
        if _wants_grad(x):
            _acc(x, w.data.T @ g)

    return _record(out, (w, x), backward)


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``weight @ x + bias``.

    ``x`` may be a single vector of length N or a batch of shape [B, N];
    ``weight`` is [M, N] and ``bias`` is [M].
    """
    if weight.data.ndim != 2:
        raise DimensionError(f"linear: weight must be rank 2, got shape {weight.data.shape}")
    m, n = weight.data.shape
    if bias.data.shape != (m,):
        raise DimensionError(f"linear: bias shape {bias.data.shape} != ({m},)")
    if x.data.ndim == 1:
        if x.data.shape[0] != n:
            raise DimensionError(f"linear: input length {x.data.shape[0]} != weight columns {n}")
        out = Tensor(weight.data @ x.data + bias.data)

        def backward(g: np.ndarray) -> None:
            if _wants_grad(weight):
                _acc(weight, np.outer(g, x.data))
            if _wants_grad(bias):
                _acc(bias, g)
            if _wants_grad(x):
                _acc(x, weight.data.T @ g)

        return _record(out, (x, weight, bias), backward)
    if x.data.ndim == 2:
        if x.data.shape[1] != n:
            raise DimensionError(f"linear: input axis 1 extent {x.data.shape[1]} != weight columns {n}")
        out = Tensor(x.data @ weight.data.T + bias.data)

        def backward(g: np.ndarray) -> None:
            if _wants_grad(weight):
                _acc(weight, g.T @ x.data)
            if _wants_grad(bias):
                _acc(bias, g.sum(axis=0))
            if _wants_grad(x):
                _acc(x, g @ weight.data)

        return _record(out, (x, weight, bias), backward)
    raise DimensionError(f"linear: input must be rank 1 or 2, got shape {x.data.shape}")


# ---------------------------------------------------------------------------
# convolution and pooling


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor, padding: int = 0) -> Tensor:
    """Cross-correlation with a 3x3 kernel, stride 1, zero padding.

    ``x`` is [C_in, H, W] or batched [N, C_in, H, W]; ``kernel`` is
    [C_out, C_in, 3, 3]; ``bias`` is [C_out]. Output spatial extents are
    H + 2*padding - 2 by W + 2*padding - 2.
    """
    if not isinstance(padding, int) or padding < 0:
        raise ConfigError(f"conv2d: padding must be a non-negative integer, got {padding!r}")
    if kernel.data.ndim != 4 or kernel.data.shape[2:] != (3, 3):
        raise DimensionError(
            f"conv2d: kernel must have shape [C_out, C_in, 3, 3], got {kernel.data.shape}"
        )
    squeeze = x.data.ndim == 3
    xd = x.data[None] if squeeze else x.data
    if xd.ndim != 4:
        raise DimensionError(f"conv2d: input must be rank 3 or 4, got shape {x.data.shape}")
    n, c_in, h, w = xd.shape
    c_out = kernel.data.shape[0]
    if kernel.data.shape[1] != c_in:
        raise DimensionError(
            f"conv2d: input channel axis = {c_in} but kernel expects {kernel.data.shape[1]}"
        )
    if bias.data.shape != (c_out,):
        raise DimensionError(f"conv2d: bias shape {bias.data.shape} != ({c_out},)")
    if h + 2 * padding < 3 or w + 2 * padding < 3:
        raise DimensionError(
            f"conv2d: spatial extents {h}x{w} with padding {padding} are smaller than the 3x3 kernel"
        )

    p = padding
    if p:
        xp = np.zeros((n, c_in, h + 2 * p, w + 2 * p), dtype=xd.dtype)
        xp[:, :, p : p + h, p : p + w] = xd
    else:
        xp = xd
    h_out, w_out = h + 2 * p - 2, w + 2 * p - 2
    win = sliding_window_view(xp, (3, 3), axis=(2, 3))  # (n, c_in, h_out, w_out, 3, 3)
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        n * h_out * w_out, c_in * 9
    )
    kmat = kernel.data.reshape(c_out, c_in * 9)
    flat = cols @ kmat.T
    flat += bias.data
    out_data = np.ascontiguousarray(
        flat.reshape(n, h_out, w_out, c_out).transpose(0, 3, 1, 2)
    )
    out = Tensor(out_data[0] if squeeze else out_data)

    def backward(g: np.ndarray) -> None:
        gb = g[None] if squeeze else g
        gmat = np.ascontiguousarray(gb.transpose(0, 2, 3, 1)).reshape(n * h_out * w_out, c_out)
        if _wants_grad(bias):
            _acc(bias, gmat.sum(axis=0))
        if _wants_grad(kernel):
            _acc(kernel, (gmat.T @ cols).reshape(c_out, c_in, 3, 3))
        if _wants_grad(x):
            # full correlation of the output gradient with the flipped kernel
            gp = np.zeros((n, c_out, h_out + 4, w_out + 4), dtype=gb.dtype)
            gp[:, :, 2 : 2 + h_out, 2 : 2 + w_out] = gb
            gwin = sliding_window_view(gp, (3, 3), axis=(2, 3))
            gcols = np.ascontiguousarray(gwin.transpose(0, 2, 3, 1, 4, 5)).reshape(
                n * (h + 2 * p) * (w + 2 * p), c_out * 9
            )
            kflip = kernel.data[:, :, ::-1, ::-1]
            krows = np.ascontiguousarray(kflip.transpose(0, 2, 3, 1)).reshape(c_out * 9, c_in)
            dxp = (gcols @ krows).reshape(n, h + 2 * p, w + 2 * p, c_in).transpose(0, 3, 1, 2)
            dx = dxp[:, :, p : p + h, p : p + w] if p else dxp
            _acc(x, dx[0] if squeeze else dx)

    return _record(out, (x, kernel, bias), backward)


def maxpool2d(x: Tensor) -> Tensor:
    """2x2 max pooling with stride 2; trailing odd rows/columns are dropped.

    Backward routes the gradient to the first maximal cell of each window
    (row-major order within the window).
    """
    if x.data.ndim not in (3, 4):
        raise DimensionError(f"maxpool2d: input must be rank 3 or 4, got shape {x.data.shape}")
    h, w = x.data.shape[-2:]
    if h < 2 or w < 2:
        raise DimensionError(f"maxpool2d: spatial extents {h}x{w} are smaller than the 2x2 window")
    squeeze = x.data.ndim == 3
    xd = x.data[None] if squeeze else x.data
    n, c = xd.shape[:2]
    h2, w2 = h // 2, w // 2
    hc, wc = h2 * 2, w2 * 2
    windows = np.ascontiguousarray(
        xd[:, :, :hc, :wc].reshape(n, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5)
    ).reshape(n, c, h2, w2, 4)
    idx = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    out = Tensor(pooled[0] if squeeze else pooled)

    def backward(g: np.ndarray) -> None:
        if not _wants_grad(x):
            return
        gb = g[None] if squeeze else g
        gwin = np.zeros((n, c, h2, w2, 4), dtype=xd.dtype)
        np.put_along_axis(gwin, idx[..., None], gb[..., None], axis=-1)
        dxc = gwin.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, hc, wc)
        if hc == h and wc == w:
            dx = dxc
        else:
            dx = np.zeros_like(xd)
            dx[:, :, :hc, :wc] = dxc
        _acc(x, dx[0] if squeeze else dx)

    return _record(out, (x,), backward)


# ---------------------------------------------------------------------------
# dropout


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: zero with probability ``rate``, scale survivors.

    Evaluation (``training=False``) and ``rate == 0`` return the input
    tensor unchanged, so inference is a pure identity.
    """
    if not (0.0 <= rate < 1.0):
        raise ConfigError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout: a seeded rng is required when training")
    keep = rng.random(x.data.shape) >= rate
    inv = x.data.dtype.type(1.0 / (1.0 - rate))
    mask = keep.astype(x.data.dtype) * inv
    out = Tensor(x.data * mask)

    def backward(g: np.ndarray) -> None:
        if _wants_grad(x):
            _acc(x, g * mask)

    return _record(out, (x,), backward)


# ---------------------------------------------------------------------------
# LSTM cell

# Gate layout within the stacked weight matrices: input, forget, cell, output.
LSTM_GATES = ("input", "forget", "cell", "output")


def lstm_step(
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    w_x: Tensor,
    w_h: Tensor,
    bias: Tensor,
) -> tuple[Tensor, Tensor]:
    """One step of a standard LSTM cell.

    ``w_x`` is [4H, D], ``w_h`` is [4H, H], ``bias`` is [4H], with the four
    gate blocks stacked in :data:`LSTM_GATES` order.
    """
    if w_h.data.ndim != 2 or w_h.data.shape[0] != 4 * w_h.data.shape[1]:
        raise DimensionError(f"lstm_step: recurrent weight must be [4H, H], got {w_h.data.shape}")
    hidden = w_h.data.shape[1]
    if h_prev.data.shape != (hidden,) or c_prev.data.shape != (hidden,):
        raise DimensionError(
            f"lstm_step: state shapes {h_prev.data.shape}/{c_prev.data.shape} != ({hidden},)"
        )
    if w_x.data.shape[0] != 4 * hidden:
        raise DimensionError(
            f"lstm_step: input weight rows {w_x.data.shape[0]} != 4*hidden {4 * hidden}"
        )
    if bias.data.shape != (4 * hidden,):
        raise DimensionError(f"lstm_step: bias shape {bias.data.shape} != ({4 * hidden},)")

    z = add(add(matvec(w_x, x), matvec(w_h, h_prev)), bias)
    gate_i = sigmoid(slice1d(z, 0, hidden))
    gate_f = sigmoid(slice1d(z, hidden, 2 * hidden))
    gate_g = tanh(slice1d(z, 2 * hidden, 3 * hidden))
    gate_o = sigmoid(slice1d(z, 3 * hidden, 4 * hidden))
    c = add(mul(gate_f, c_prev), mul(gate_i, gate_g))
    h = mul(gate_o, tanh(c))
    return h, c


# ---------------------------------------------------------------------------
# classification loss


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stabilized softmax over a rank-1 array."""
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def softmax_cross_entropy(logits: Tensor, label: int) -> Tensor:
    """Negative log softmax probability of ``label``; raises on non-finite loss."""
    if logits.data.ndim != 1:
        raise DimensionError(f"softmax_cross_entropy: logits must be rank 1, got {logits.data.shape}")
    k = logits.data.shape[0]
    if not (0 <= label < k):
        raise DimensionError(f"softmax_cross_entropy: label {label} outside [0, {k})")
    m = logits.data.max()
    z = logits.data - m
    logsumexp = m + np.log(np.exp(z).sum())
    loss_val = np.asarray(logsumexp - logits.data[label], dtype=logits.data.dtype)
    out = Tensor(loss_val)
    out.assert_finite("softmax_cross_entropy loss")

    def backward(g: np.ndarray) -> None:
        if _wants_grad(logits):
            grad = softmax(logits.data)
            grad[label] -= 1.0
            _acc(logits, grad * g.reshape(()))

    return _record(out, (logits,), backward)


# ---------------------------------------------------------------------------
# named parameter collections


class ModelParams:
    """Named collection of trainable tensors; iteration follows insertion order."""

    def __init__(self) -> None:
        self._tensors: dict[str, Tensor] = {}

    def add(self, name: str, data) -> Tensor:
        if name in self._tensors:
            raise ConfigError(f"duplicate parameter name '{name}'")
        t = data if isinstance(data, Tensor) else Tensor(data)
        t.requires_grad = True
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self):
        return self._tensors.items()

    def tensors(self):
        return self._tensors.values()

    def subset(self, *prefixes: str) -> "ModelParams":
        """View over the parameters whose names start with any prefix.

        The returned collection shares tensor objects with this one, so
        optimizer updates through the subset are visible here.
        """
        sub = ModelParams()
        for name, t in self._tensors.items():
            if name.startswith(prefixes):
                sub._tensors[name] = t
        return sub

    def clone_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._tensors.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        if set(arrays) != set(self._tensors):
            missing = sorted(set(self._tensors) - set(arrays))
            extra = sorted(set(arrays) - set(self._tensors))
            raise GradientError(f"parameter name mismatch: missing={missing} extra={extra}")
        for name, arr in arrays.items():
            t = self._tensors[name]
            if arr.shape != t.data.shape:
                raise DimensionError(
                    f"parameter '{name}': stored shape {arr.shape} != expected {t.data.shape}"
                )
            t.data = arr.copy()
            t.grad = None

    def zero_grads(self) -> None:
        for t in self._tensors.values():
            t.grad = None
