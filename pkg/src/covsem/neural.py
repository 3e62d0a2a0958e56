"""Dense feed-forward networks with hand-written backprop, Adam and soft updates.

Parameters are plain float64 numpy arrays held in a flat list
``[W0, b0, W1, b1, ...]`` with ``W_i`` of shape ``(fan_in, fan_out)``.
Inputs are row-major batches ``(B, in)``; a 1-D input is treated as B=1.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ContractViolation, TrainingError

ACTIVATIONS = ("identity", "tanh")


class DenseNet:
    def __init__(self, layer_dims, out_activation="identity", rng=None, params=None):
        self.layer_dims = [int(d) for d in layer_dims]
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise ContractViolation(f"bad layer dims {layer_dims}")
        if out_activation not in ACTIVATIONS:
            raise ContractViolation(f"unknown output activation {out_activation!r}")
        self.out_activation = out_activation
        if params is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            params = []
            for fan_in, fan_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
                bound = 1.0 / np.sqrt(fan_in)
                params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
                params.append(rng.uniform(-bound, bound, size=fan_out))
        self.params = [np.array(p, dtype=np.float64) for p in params]
        self._check_shapes()

    def _check_shapes(self):
        if len(self.params) != 2 * (len(self.layer_dims) - 1):
            raise ContractViolation("parameter list does not match layer dims")
        for i, (fan_in, fan_out) in enumerate(zip(self.layer_dims[:-1], self.layer_dims[1:])):
            if self.params[2 * i].shape != (fan_in, fan_out) or self.params[2 * i + 1].shape != (fan_out,):
                raise ContractViolation(f"layer {i} parameter shapes do not match dims")

    @property
    def in_dim(self):
        return self.layer_dims[0]

    @property
    def out_dim(self):
        return self.layer_dims[-1]

    def clone(self) -> "DenseNet":
        return DenseNet(self.layer_dims, self.out_activation, params=[p.copy() for p in self.params])

    def _as_batch(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ContractViolation(f"expected input width {self.in_dim}, got shape {x.shape}")
        return x, single

    def forward(self, x) -> np.ndarray:
        x, single = self._as_batch(x)
        y, _ = self._forward(x)
        return y[0] if single else y

    __call__ = forward

    def _forward(self, x):
        acts = [x]
        h = x
        n_layers = len(self.layer_dims) - 1
        for i in range(n_layers):
            z = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < n_layers - 1:
                h = np.maximum(z, 0.0)
            elif self.out_activation == "tanh":
                h = np.tanh(z)
            else:
                h = z
            acts.append(h)
        return h, acts

    def forward_train(self, x):
        """Forward pass that also returns the cache consumed by ``backward_cached``."""
        x, _ = self._as_batch(x)
        return self._forward(x)

    def output_preactivation(self, acts) -> np.ndarray:
        return acts[-2] @ self.params[-2] + self.params[-1]

    def backward_cached(self, acts, upstream, preact_grad=None):
        """Reverse-mode pass from a ``forward_train`` cache.

        ``upstream`` is dLoss/dOutput with shape ``(B, out)``; the optional
        ``preact_grad`` is added to dLoss/dz of the output layer. Returns
        ``(grads, dx)`` where ``grads`` mirrors ``params``.
        """
        g = np.asarray(upstream, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ContractViolation(f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}")
        n_layers = len(self.layer_dims) - 1
        grads = [None] * len(self.params)
        if self.out_activation == "tanh":
            g = g * (1.0 - acts[-1] ** 2)
        if preact_grad is not None:
            g = g + preact_grad
        for i in range(n_layers - 1, -1, -1):
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.params[2 * i].T
            if i > 0:
                g = g * (acts[i] > 0.0)
        return grads, g

    def backward(self, x, upstream_grad):
        x, single = self._as_batch(x)
        _, acts = self._forward(x)
        grads, dx = self.backward_cached(acts, upstream_grad)
        return grads, (dx[0] if single else dx)

    def state_dict(self, prefix=""):
        out = {}
        for i in range(len(self.layer_dims) - 1):
            out[f"{prefix}W{i}"] = self.params[2 * i]
            out[f"{prefix}b{i}"] = self.params[2 * i + 1]
        return out

    def load_state_dict(self, tensors, prefix=""):
        for i in range(len(self.layer_dims) - 1):
            self.params[2 * i] = np.array(tensors[f"{prefix}W{i}"], dtype=np.float64)
            self.params[2 * i + 1] = np.array(tensors[f"{prefix}b{i}"], dtype=np.float64)
        self._check_shapes()


class Adam:
    def __init__(self, params, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        """In-place update of ``params``; raises on a non-finite gradient."""
        if len(grads) != len(params):
            raise ContractViolation("gradient list does not match parameters")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise TrainingError("non-finite gradient")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ContractViolation("gradient shape mismatch")
            kernels.adam_update(p.reshape(-1), np.ascontiguousarray(g, dtype=np.float64).reshape(-1),
                                m.reshape(-1), v.reshape(-1), self.lr, b1, b2, c1, c2, self.eps)
        return params

    def state_dict(self, prefix=""):
        out = {f"{prefix}t": np.array([self.t], dtype=np.float64)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"{prefix}m{i}"] = m
            out[f"{prefix}v{i}"] = v
        return out


def soft_update(target_params, online_params, tau):
    if not 0 < tau <= 1:
        raise ContractViolation("tau must lie in (0, 1]")
    for t, o in zip(target_params, online_params):
        if t.shape != o.shape:
            raise ContractViolation("soft update shape mismatch")
        if tau == 1.0:
            t[...] = o
        else:
            kernels.soft_update(t.reshape(-1), np.ascontiguousarray(o).reshape(-1), tau)
    return target_params


def save_tensors(path, tensors) -> None:
    """JSON list of named tensors; float repr round-trips exactly."""
    doc = {"tensors": [{"name": name, "shape": list(np.shape(arr)),
                        "data": np.asarray(arr, dtype=np.float64).ravel().tolist()}
                       for name, arr in tensors.items()]}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc))


def load_tensors(path) -> dict[str, np.ndarray]:
    doc = json.loads(Path(path).read_text())
    return {t["name"]: np.array(t["data"], dtype=np.float64).reshape(t["shape"]) for t in doc["tensors"]}
