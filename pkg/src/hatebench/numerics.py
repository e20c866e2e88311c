"""Dense numeric kernel for the neural branch.

Layers carry their own hand-written backward passes; everything runs in
float64 so the finite-difference gradient checks stay sharp. Sequence
masks use carry-through semantics in the recurrence (a padded step leaves
hidden and cell state unchanged), which together with the frozen all-zero
pad embedding and masked pooling makes predictions invariant to appending
extra padding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Param:
    """A named parameter array with a gradient slot of identical shape.

    ``frozen`` optionally marks structurally constant entries (the pad
    embedding row); their gradients are forced to zero and gradient checks
    skip them.
    """

    name: str
    value: np.ndarray
    frozen: np.ndarray | None = None
    grad: np.ndarray = field(init=False)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


def zero_grads(params) -> None:
    for p in params:
        p.grad[...] = 0.0


class Embedding:
    """Trainable lookup table; row 0 is the pad embedding and stays zero."""

    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator):
        limit = np.sqrt(6.0 / (vocab_size + dim))
        table = rng.uniform(-limit, limit, size=(vocab_size, dim))
        table[0] = 0.0
        frozen = np.zeros((vocab_size, dim), dtype=bool)
        frozen[0] = True
        self.table = Param("embedding", table, frozen=frozen)

    def forward(self, ids: np.ndarray) -> np.ndarray:
        table = self.table.value
        if ids.min() < 0 or ids.max() >= table.shape[0]:
            raise IndexError(
                f"token id out of range [0, {table.shape[0]}): "
                f"[{int(ids.min())}, {int(ids.max())}]"
            )
        self._ids = ids
        return table[ids]

    def backward(self, grad_out: np.ndarray) -> None:
        np.add.at(self.table.grad, self._ids, grad_out)
        self.table.grad[0] = 0.0  # pad row excluded


class Conv1d:
    """Same-length 1-D convolution with a rectifier activation.

    Zero padding of floor(kernel/2) on each side keeps the output length
    equal to the input length (odd kernels only).
    """

    def __init__(self, kernel: int, d_in: int, filters: int, rng: np.random.Generator):
        if kernel % 2 == 0:
            raise ValueError("kernel size must be odd to preserve sequence length")
        limit = np.sqrt(6.0 / (kernel * d_in + filters))
        self.w = Param("conv_w", rng.uniform(-limit, limit, size=(kernel, d_in, filters)))
        self.b = Param("conv_b", np.zeros(filters))
        self.kernel = kernel

    def forward(self, x: np.ndarray) -> np.ndarray:
        batch, seq_len, d_in = x.shape
        k = self.kernel
        pad = k // 2
        padded = np.zeros((batch, seq_len + 2 * pad, d_in))
        padded[:, pad:pad + seq_len] = x
        windows = np.empty((batch, seq_len, k * d_in))
        for off in range(k):
            windows[:, :, off * d_in:(off + 1) * d_in] = padded[:, off:off + seq_len]
        w2 = self.w.value.reshape(k * d_in, -1)
        pre = windows @ w2 + self.b.value
        self._windows = windows
        self._active = pre > 0  # rectifier subgradient is 0 at 0
        return np.maximum(pre, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        batch, seq_len, filters = grad_out.shape
        k = self.kernel
        pad = k // 2
        d_in = self.w.value.shape[1]
        gz = grad_out * self._active
        flat_w = self._windows.reshape(-1, k * d_in)
        flat_g = gz.reshape(-1, filters)
        self.w.grad += (flat_w.T @ flat_g).reshape(k, d_in, filters)
        self.b.grad += flat_g.sum(axis=0)
        gwin = gz @ self.w.value.reshape(k * d_in, filters).T
        gpad = np.zeros((batch, seq_len + 2 * pad, d_in))
        for off in range(k):
            gpad[:, off:off + seq_len] += gwin[:, :, off * d_in:(off + 1) * d_in]
        return gpad[:, pad:pad + seq_len]


class Lstm:
    """One LSTM direction over a masked sequence.

    Gates follow sigmoid(x W + h U + b) for input/forget/output plus a tanh
    candidate; cell = f * cell_prev + i * g and h = o * tanh(cell). Masked
    steps carry hidden and cell state through unchanged. ``reverse`` scans
    the sequence back to front.
    """

    GATES = ("i", "f", "o", "g")

    def __init__(self, name: str, d_in: int, units: int, rng: np.random.Generator,
                 reverse: bool = False):
        self.units = units
        self.reverse = reverse
        limit = np.sqrt(6.0 / (d_in + units))
        self.w: dict[str, Param] = {}
        self.u: dict[str, Param] = {}
        self.b: dict[str, Param] = {}
        for gate in self.GATES:
            self.w[gate] = Param(f"{name}_W_{gate}", rng.uniform(-limit, limit, size=(d_in, units)))
            self.u[gate] = Param(f"{name}_U_{gate}", _orthogonal(units, rng))
            bias = np.ones(units) if gate == "f" else np.zeros(units)  # forget bias starts at 1
            self.b[gate] = Param(f"{name}_b_{gate}", bias)

    def params(self) -> list[Param]:
        out = []
        for gate in self.GATES:
            out.extend((self.w[gate], self.u[gate], self.b[gate]))
        return out

    def cell(self, x, h_prev, c_prev):
        """One unmasked step; returns (h, c, cache)."""
        gi = sigmoid(x @ self.w["i"].value + h_prev @ self.u["i"].value + self.b["i"].value)
        gf = sigmoid(x @ self.w["f"].value + h_prev @ self.u["f"].value + self.b["f"].value)
        go = sigmoid(x @ self.w["o"].value + h_prev @ self.u["o"].value + self.b["o"].value)
        gg = np.tanh(x @ self.w["g"].value + h_prev @ self.u["g"].value + self.b["g"].value)
        c = gf * c_prev + gi * gg
        tanh_c = np.tanh(c)
        h = go * tanh_c
        cache = (x, h_prev, c_prev, gi, gf, go, gg, tanh_c)
        return h, c, cache

    def _cell_backward(self, cache, dh, dc):
        """Backward through one step; returns (dx, dh_prev, dc_prev)."""
        x, h_prev, c_prev, gi, gf, go, gg, tanh_c = cache
        dgo = dh * tanh_c
        dc_total = dh * go * (1.0 - tanh_c * tanh_c) + dc
        dgf = dc_total * c_prev
        dgi = dc_total * gg
        dgg = dc_total * gi
        dc_prev = dc_total * gf
        dz = {
            "i": dgi * gi * (1.0 - gi),
            "f": dgf * gf * (1.0 - gf),
            "o": dgo * go * (1.0 - go),
            "g": dgg * (1.0 - gg * gg),
        }
        dx = np.zeros_like(x)
        dh_prev = np.zeros_like(h_prev)
        for gate in self.GATES:
            g = dz[gate]
            self.w[gate].grad += x.T @ g
            self.u[gate].grad += h_prev.T @ g
            self.b[gate].grad += g.sum(axis=0)
            dx += g @ self.w[gate].value.T
            dh_prev += g @ self.u[gate].value.T
        return dx, dh_prev, dc_prev

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        batch, seq_len, _ = x.shape
        h = np.zeros((batch, self.units))
        c = np.zeros((batch, self.units))
        out = np.empty((batch, seq_len, self.units))
        steps = range(seq_len - 1, -1, -1) if self.reverse else range(seq_len)
        self._caches = {}
        for t in steps:
            m = mask[:, t][:, None]
            h_new, c_new, cache = self.cell(x[:, t], h, c)
            h_next = m * h_new + (1.0 - m) * h
            c_next = m * c_new + (1.0 - m) * c
            self._caches[t] = (cache, m)
            out[:, t] = h_next
            h, c = h_next, c_next
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        batch, seq_len, _ = grad_out.shape
        dx = np.zeros((batch, seq_len, self.w["i"].value.shape[0]))
        dh = np.zeros((batch, self.units))
        dc = np.zeros((batch, self.units))
        steps = range(seq_len) if self.reverse else range(seq_len - 1, -1, -1)
        for t in steps:
            cache, m = self._caches[t]
            dh_total = dh + grad_out[:, t]
            dx_t, dh_prev, dc_prev = self._cell_backward(cache, m * dh_total, m * dc)
            dx[:, t] = dx_t
            dh = dh_prev + (1.0 - m) * dh_total
            dc = dc_prev + (1.0 - m) * dc
        return dx


def _orthogonal(units: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix via QR of a seeded Gaussian, sign-fixed for uniqueness."""
    q, r = np.linalg.qr(rng.standard_normal((units, units)))
    return q * np.sign(np.diag(r))


class BiLstm:
    """Two independent LSTM directions; output rows are [h_fwd ; h_bwd]."""

    def __init__(self, d_in: int, units: int, rng: np.random.Generator):
        self.units = units
        self.fwd = Lstm("lstm_fwd", d_in, units, rng, reverse=False)
        self.bwd = Lstm("lstm_bwd", d_in, units, rng, reverse=True)

    def params(self) -> list[Param]:
        return self.fwd.params() + self.bwd.params()

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        return np.concatenate([self.fwd.forward(x, mask), self.bwd.forward(x, mask)], axis=2)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        h = self.units
        return self.fwd.backward(grad_out[:, :, :h]) + self.bwd.backward(grad_out[:, :, h:])


class MaskedPool:
    """Sequence pooling over non-pad positions.

    "max" takes the elementwise maximum over unmasked rows (gradient routed
    to the first argmax); "last" concatenates the forward half at the last
    real position with the backward half at position 0.
    """

    def __init__(self, mode: str = "max"):
        if mode not in ("max", "last"):
            raise ValueError(f"unknown pooling mode {mode!r}")
        self.mode = mode

    def forward(self, hseq: np.ndarray, mask: np.ndarray) -> np.ndarray:
        batch, seq_len, width = hseq.shape
        lengths = mask.sum(axis=1)
        if np.any(lengths == 0):
            raise ValueError("pooling over an all-pad sequence")
        self._shape = hseq.shape
        if self.mode == "max":
            masked = np.where(mask[:, :, None] > 0, hseq, -np.inf)
            self._argmax = masked.argmax(axis=1)  # first maximum per column
            return np.take_along_axis(hseq, self._argmax[:, None, :], axis=1)[:, 0, :]
        last = (lengths - 1).astype(np.int64)
        self._last = last
        half = width // 2
        self._half = half
        return np.concatenate(
            [hseq[np.arange(batch), last, :half], hseq[:, 0, half:]], axis=1
        )

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        batch, seq_len, width = self._shape
        grad = np.zeros(self._shape)
        if self.mode == "max":
            rows = np.arange(batch)[:, None]
            cols = np.arange(width)[None, :]
            grad[rows, self._argmax, cols] = grad_out
            return grad
        half = self._half
        grad[np.arange(batch), self._last, :half] = grad_out[:, :half]
        grad[:, 0, half:] = grad_out[:, half:]
        return grad


class SigmoidDense:
    """Final unit: probability = sigmoid(w . h + b)."""

    def __init__(self, d_in: int, rng: np.random.Generator):
        limit = np.sqrt(6.0 / (d_in + 1))
        self.w = Param("out_w", rng.uniform(-limit, limit, size=d_in))
        self.b = Param("out_b", np.zeros(1))

    def params(self) -> list[Param]:
        return [self.w, self.b]

    def forward(self, h: np.ndarray) -> np.ndarray:
        self._h = h
        self._y = sigmoid(h @ self.w.value + self.b.value[0])
        return self._y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        dz = grad_out * self._y * (1.0 - self._y)
        self.w.grad += self._h.T @ dz
        self.b.grad += dz.sum(keepdims=True)
        return dz[:, None] * self.w.value[None, :]


def pooled_output(hseq: np.ndarray, mask: np.ndarray, w: np.ndarray, b: float,
                  mode: str = "max") -> np.ndarray:
    """Pooling plus the sigmoid unit in one inference-only call."""
    pool = MaskedPool(mode)
    hstar = pool.forward(hseq, mask)
    return sigmoid(hstar @ np.asarray(w, dtype=np.float64) + b)


_BCE_EPS = 1e-7


def bce_loss(y_hat: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient w.r.t. the predictions.

    Predictions are clamped to [1e-7, 1 - 1e-7] before the logs.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.size == 0:
        raise ValueError("empty batch")
    p = np.clip(y_hat, _BCE_EPS, 1.0 - _BCE_EPS)
    loss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
    grad = (p - y) / (p * (1.0 - p)) / y.size
    return loss, grad


class Adam:
    """Bias-corrected adaptive-moment updates over a list of Params."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {p.name: np.zeros_like(p.value) for p in self.params}
        self.v = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for p in self.params:
            g = p.grad
            if g.shape != p.value.shape:
                raise ValueError(f"{p.name}: gradient shape {g.shape} != value shape {p.value.shape}")
            m = self.m[p.name]
            v = self.v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class GradCheckReport:
    per_param: dict[str, float]  # max relative error per parameter group
    overall: float


def grad_check(loss_fn, params, *, eps: float = 1e-5, max_coords: int = 200,
               seed: int = 0) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``loss_fn()`` must run a deterministic forward/backward pass, leave
    gradients in each Param's grad slot and return the scalar loss. Up to
    ``max_coords`` coordinates are sampled per parameter group (all of them
    when the group is smaller); frozen coordinates are skipped.
    """
    params = list(params)
    zero_grads(params)
    base = loss_fn()
    if not np.isfinite(base):
        raise FloatingPointError("non-finite loss in gradient check")
    analytic = {p.name: p.grad.copy() for p in params}
    rng = np.random.default_rng(seed)
    per_param: dict[str, float] = {}
    for p in params:
        flat = p.value.reshape(-1)
        if p.frozen is not None:
            eligible = np.flatnonzero(~p.frozen.reshape(-1))
        else:
            eligible = np.arange(flat.size)
        if eligible.size > max_coords:
            coords = rng.choice(eligible, size=max_coords, replace=False)
        else:
            coords = eligible
        a_flat = analytic[p.name].reshape(-1)
        worst = 0.0
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + eps
            f_plus = loss_fn()
            flat[idx] = orig - eps
            f_minus = loss_fn()
            flat[idx] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise FloatingPointError(f"non-finite loss while perturbing {p.name}")
            numeric = (f_plus - f_minus) / (2.0 * eps)
            rel = abs(a_flat[idx] - numeric) / max(abs(a_flat[idx]), abs(numeric), 1e-12)
            worst = max(worst, rel)
        per_param[p.name] = worst
    return GradCheckReport(per_param=per_param, overall=max(per_param.values()))
