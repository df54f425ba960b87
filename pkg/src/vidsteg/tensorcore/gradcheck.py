"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Tuple

import numpy as np

from ..errors import ContractError
from .tensor import Parameter, Tensor, no_grad


@dataclass
class GradCheckReport:
    """Per-parameter comparison of tape gradients vs central differences."""

    eps: float
    tol: float
    max_rel_err: Dict[str, float] = field(default_factory=dict)
    flagged: List[Tuple[str, int, float, float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.flagged

    @property
    def worst(self) -> float:
        return max(self.max_rel_err.values(), default=0.0)

    def summary(self) -> str:
        status = "ok" if self.passed else f"{len(self.flagged)} flagged"
        return f"grad_check: {len(self.max_rel_err)} params, worst rel err {self.worst:.3e} ({status})"


def grad_check(
    f: Callable[[], Tensor],
    params: "Iterable[Tuple[str, Parameter]] | Dict[str, Parameter]",
    eps: float = 1e-3,
    tol: float = 1e-2,
    max_coords_per_param: int = 8,
    seed: int = 0,
    abs_floor: float = 1e-2,
) -> GradCheckReport:
    """Compare reverse-mode gradients of ``f`` against central differences.

    ``f`` must be deterministic (verified by evaluating it twice) and return
    a scalar tensor rebuilt from the given parameters on every call.  For
    each parameter a deterministic subset of at most ``max_coords_per_param``
    coordinates is perturbed; the relative error uses an absolute floor so
    coordinates whose true gradient is tiny are judged on the absolute
    difference instead (float32 finite differences cannot resolve them).
    """
    if eps <= 0:
        raise ContractError("grad_check requires eps > 0")
    items = list(params.items()) if isinstance(params, dict) else list(params)

    with no_grad():
        a = f().item()
        b = f().item()
    if a != b:
        raise ContractError("grad_check requires a deterministic function (two evaluations differ)")

    for _, p in items:
        p.zero_grad()
    loss = f()
    loss.backward()
    grads = {name: p.grad.copy() for name, p in items}

    rng = np.random.default_rng(seed)
    report = GradCheckReport(eps=eps, tol=tol)
    for name, p in items:
        flat = p.data.reshape(-1)
        n = flat.size
        k = min(max_coords_per_param, n)
        coords = np.sort(rng.choice(n, size=k, replace=False))
        gflat = grads[name].reshape(-1)
        worst = 0.0
        for idx in coords:
            orig = flat[idx]
            with no_grad():
                flat[idx] = orig + eps
                f_plus = f().item()
                flat[idx] = orig - eps
                f_minus = f().item()
            flat[idx] = orig
            fd = (f_plus - f_minus) / (2.0 * eps)
            ad = float(gflat[idx])
            rel = abs(fd - ad) / max(abs(fd), abs(ad), abs_floor)
            worst = max(worst, rel)
            if rel > tol:
                report.flagged.append((name, int(idx), ad, fd, rel))
        report.max_rel_err[name] = worst
    return report
