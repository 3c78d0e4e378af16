"""Closed-form sine-Gordon kink and the quantities derived from it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def lorentz_factor(c: float) -> float:
    c = float(c)
    if not abs(c) < 1.0:
        raise ValueError(f"kink celerity must be sub-luminal, got c={c}")
    return 1.0 / np.sqrt(1.0 - c * c)


@dataclass(frozen=True)
class KinkSpec:
    """Travelling kink ``polarity * 4 arctan exp(gamma (x + x0 - c t))``.

    ``x0`` is a phase offset: the kink centre at time t sits at ``c t - x0``.
    Polarity +1 joins 0 to 2*pi, polarity -1 joins 0 to -2*pi.
    """

    c: float = 0.0
    x0: float = 0.0
    polarity: int = 1

    def __post_init__(self):
        lorentz_factor(self.c)
        if self.polarity not in (1, -1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity!r}")

    @property
    def gamma(self) -> float:
        return lorentz_factor(self.c)

    def phase(self, x, t):
        return self.gamma * (np.asarray(x, dtype=float) + self.x0 - self.c * t)


def kink_u(x, t: float, k: KinkSpec):
    # 4 arctan(e^th) = 2 pi - 4 arctan(e^-th); the branch keeps exp from overflowing.
    th = k.phase(x, t)
    u = np.where(th <= 0, 4.0 * np.arctan(np.exp(np.minimum(th, 0.0))),
                 2.0 * np.pi - 4.0 * np.arctan(np.exp(-np.maximum(th, 0.0))))
    u = k.polarity * u
    return float(u) if u.ndim == 0 else u


def kink_v(x, t: float, k: KinkSpec):
    """Time derivative of :func:`kink_u`."""
    a = np.abs(k.phase(x, t))
    sech = 2.0 * np.exp(-a) / (1.0 + np.exp(-2.0 * a))
    v = -k.polarity * k.c * 2.0 * k.gamma * sech
    return float(v) if np.ndim(v) == 0 else v


def kink_energy(c: float) -> float:
    return 8.0 * lorentz_factor(c)
