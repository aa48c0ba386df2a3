"""Central finite-difference checks against the reverse-mode tape."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


def numerical_grad(fn: Callable[[], Tensor], param: Tensor, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = fn().item()
        flat[i] = orig - h
        down = fn().item()
        flat[i] = orig
        out[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-10) -> float:
    """||a - n|| / max(||a||, ||n||); returns the absolute gap when both are below ``floor``."""
    diff = float(np.linalg.norm(analytic - numeric))
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale < floor:
        return diff
    return diff / scale


def check_gradients(fn: Callable[[], Tensor], params: dict[str, Tensor], h: float = 1e-5) -> dict[str, float]:
    """Relative error between tape and finite-difference gradients for each parameter."""
    for p in params.values():
        p.grad = None
    fn().backward()
    analytic = {n: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for n, p in params.items()}
    return {n: relative_error(analytic[n], numerical_grad(fn, p, h)) for n, p in params.items()}
