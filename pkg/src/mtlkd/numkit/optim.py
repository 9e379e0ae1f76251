from __future__ import annotations

import numpy as np

from .tensor import Tensor


def adam_update(params, grads, m, v, lr: float, beta1: float, beta2: float, eps: float, step: int):
    """One bias-corrected Adam step. Returns updated (params, m, v) lists; inputs are not modified."""
    if step < 1:
        raise ValueError("Adam step counter starts at 1")
    out_p, out_m, out_v = [], [], []
    c1 = 1.0 - beta1**step
    c2 = 1.0 - beta2**step
    for p, g, mi, vi in zip(params, grads, m, v, strict=True):
        if p.shape != g.shape or p.shape != mi.shape or p.shape != vi.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}")
        mi = beta1 * mi + (1.0 - beta1) * g
        vi = beta2 * vi + (1.0 - beta2) * (g * g)
        out_p.append(p - lr * (mi / c1) / (np.sqrt(vi / c2) + eps))
        out_m.append(mi)
        out_v.append(vi)
    return out_p, out_m, out_v


class Adam:
    def __init__(self, params: list[Tensor], lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8) -> None:
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float | None = None) -> None:
        self.t += 1
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        new_p, self.m, self.v = adam_update(
            [p.data for p in self.params],
            grads,
            self.m,
            self.v,
            self.lr if lr is None else lr,
            self.beta1,
            self.beta2,
            self.eps,
            self.t,
        )
        for p, d in zip(self.params, new_p):
            p.data = d

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = np.zeros_like(p.data)

    def state(self) -> dict:
        return {"t": self.t, "m": [a.copy() for a in self.m], "v": [a.copy() for a in self.v]}

    def load_state(self, state: dict) -> None:
        if len(state["m"]) != len(self.params):
            raise ValueError("optimizer state does not match parameter count")
        self.t = int(state["t"])
        self.m = [np.array(a, dtype=np.float64) for a in state["m"]]
        self.v = [np.array(a, dtype=np.float64) for a in state["v"]]
