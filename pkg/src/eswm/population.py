"""Random agent populations drawn from uniform type distributions."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .model import RequesterProfile, WorkerProfile

# lower end used for the open intervals (0, x]
EPS = 1e-9


@dataclass(frozen=True)
class Distributions:
    """Upper/lower bounds of the uniform draws.

    ``expiry_factor`` bounds ``t_ex / t_d``.  Fields with a lower bound of
    ``EPS`` stand for half-open intervals ``(0, x]``.
    """

    v_max: tuple = (EPS, 100.0)
    task_size: tuple = (1.0, 10.0)
    deadline: tuple = (EPS, 100.0)
    expiry_factor: tuple = (1.0, 1.5)
    alpha: tuple = (EPS, 100.0)
    cost: tuple = (EPS, 10.0)
    mu: tuple = (EPS, 1.5)

    @classmethod
    def from_dict(cls, d: dict) -> "Distributions":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown distribution field(s): {sorted(unknown)}")
        return cls(**{k: tuple(float(x) for x in v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}


def draw_requesters(n: int, rng: np.random.Generator, dist: Distributions = Distributions(),
                    prefix: str = "r") -> list[RequesterProfile]:
    v = rng.uniform(*dist.v_max, n)
    size = rng.uniform(*dist.task_size, n)
    t_d = rng.uniform(*dist.deadline, n)
    t_ex = t_d * rng.uniform(*dist.expiry_factor, n)
    alpha = rng.uniform(*dist.alpha, n)
    width = len(str(max(n - 1, 0)))
    return [RequesterProfile(f"{prefix}{k:0{width}d}", float(size[k]), float(t_d[k]), float(t_ex[k]),
                             float(v[k]), float(alpha[k])) for k in range(n)]


def draw_workers(n: int, rng: np.random.Generator, dist: Distributions = Distributions(),
                 prefix: str = "w") -> list[WorkerProfile]:
    c = rng.uniform(*dist.cost, n)
    mu = rng.uniform(*dist.mu, n)
    width = len(str(max(n - 1, 0)))
    return [WorkerProfile(f"{prefix}{k:0{width}d}", float(c[k]), float(mu[k])) for k in range(n)]
