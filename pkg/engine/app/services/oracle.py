"""Feynman-Kac estimates u(x0) = E int_0^inf e^{-lambda t} f(X_t) dt for the
Ornstein-Uhlenbeck diffusion dX = -X dt + sqrt(2) dW reflected at the boundary.

Paths are simulated in fixed-size blocks; block b draws from a Philox stream
keyed by (seed, b), so estimates do not depend on the worker count.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel

from ..errors import PreconditionError
from ..events import broadcast_event
from .domain import BOUNDARY_TOL, ConvexDomain

DEFAULT_DT = 1e-3
DEFAULT_PATHS = 100_000
BLOCK_SIZE = 4096
HORIZON = 20.0
BIAS_FACTOR = 5.0


class McEstimate(BaseModel):
    value: float
    std_error: float
    n_paths: int
    dt: float
    t_max: float
    seed: int
    antithetic: bool = False

    def bias_budget(self, x0) -> float:
        """5 dt (1 + |x0|^2): engineering margin for time-step and reflection bias."""
        x0 = np.asarray(x0, dtype=float)
        return BIAS_FACTOR * self.dt * (1.0 + float(x0 @ x0))

    def agrees_with(self, reference: float, x0) -> bool:
        return abs(self.value - reference) <= 3.0 * self.std_error + self.bias_budget(x0)


def reflected_ou_step(x, dt: float, noise, domain: ConvexDomain) -> np.ndarray:
    """Euler-Maruyama step x - x dt + sqrt(2 dt) noise, projected back onto the closure."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    return domain.project(x - x * dt + math.sqrt(2.0 * dt) * np.asarray(noise, dtype=float))


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(domain: ConvexDomain, f: Callable, lam: float, x0: np.ndarray, size: int,
                    dt: float, steps: int, seed: int, block: int, antithetic: bool) -> np.ndarray:
    """Discounted path integrals; with antithetic pairs, the pair means."""
    rng = block_generator(seed, block)
    draws = size // 2 if antithetic else size
    x = np.tile(x0, (size, 1))
    acc = np.zeros(size)
    for k in range(steps):
        acc += math.exp(-lam * k * dt) * dt * f(x)
        noise = rng.standard_normal((draws, x0.shape[0]))
        if antithetic:
            noise = np.concatenate([noise, -noise])
        x = reflected_ou_step(x, dt, noise, domain)

    broadcast_event("oracle_block", {"block": block, "paths": size, "mean": float(acc.mean())})
    if antithetic:
        return 0.5 * (acc[:draws] + acc[draws:])
    return acc


def feynman_kac(domain: ConvexDomain, f: Callable, lam: float, x0, n_paths: int = DEFAULT_PATHS,
                dt: float = DEFAULT_DT, t_max: Optional[float] = None, seed: int = 0,
                antithetic: bool = False, workers: int = 1) -> McEstimate:
    """Left-endpoint Riemann sum of the discounted functional over reflected paths."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_paths < 2:
        raise ValueError(f"need at least two paths, got {n_paths}")
    if antithetic and n_paths % 2:
        raise ValueError("antithetic sampling needs an even number of paths")

    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != domain.dim:
        raise PreconditionError(f"x0 has {x0.shape[0]} coordinates, domain lives in R^{domain.dim}")
    if float(domain.g(x0)) > BOUNDARY_TOL:
        raise PreconditionError(f"x0 = {x0.tolist()} lies outside the closure")

    t_max = HORIZON / lam if t_max is None else t_max
    if lam * t_max < HORIZON:
        raise PreconditionError(f"lambda * t_max = {lam * t_max:g} leaves a discount tail above e^-{HORIZON:g}")
    steps = int(math.ceil(t_max / dt))

    sizes = [min(BLOCK_SIZE, n_paths - start) for start in range(0, n_paths, BLOCK_SIZE)]

    def run(block: int) -> np.ndarray:
        return _simulate_block(domain, f, lam, x0, sizes[block], dt, steps, seed, block, antithetic)

    if workers <= 1:
        parts = [run(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))

    samples = np.concatenate(parts)
    return McEstimate(
        value=float(np.mean(samples)),
        std_error=float(np.std(samples, ddof=1) / math.sqrt(samples.shape[0])),
        n_paths=n_paths, dt=dt, t_max=t_max, seed=seed, antithetic=antithetic,
    )


def dt_halving(domain: ConvexDomain, f: Callable, lam: float, x0, dt: float, levels: int = 3,
               **kwargs) -> list[McEstimate]:
    """Estimates at dt, dt/2, ..., dt/2^(levels-1) with the same seed."""
    return [feynman_kac(domain, f, lam, x0, dt=dt / 2 ** k, **kwargs) for k in range(levels)]
