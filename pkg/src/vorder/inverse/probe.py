"""Sampling the moment function along complex half-lines and real direction grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..directions import SphereDirection, angular_coefficients, basis_from
from ..errors import ConfigurationError, DomainError

OVERFLOW_BUDGET = 650.0


@dataclass(frozen=True, eq=False)
class HalfLineProbe:
    """Angles ``theta~ - iR`` for ``R`` on a grid, at fixed azimuths.

    ``extent`` bounds ``|x|`` over the configuration and ``r_max`` the ball
    radii; together they cap ``R`` so that moments stay inside double range.
    """

    theta_tilde: float
    basis: np.ndarray
    R_grid: np.ndarray
    phis: tuple = ()
    extent: float = 1.0
    r_max: float = 1.0
    ball_strip: bool = True

    def __post_init__(self):
        B = np.array(self.basis, float)
        R = np.array(self.R_grid, float)
        if R.ndim != 1 or len(R) < 3 or np.any(R <= 0) or np.any(np.diff(R) <= 0):
            raise ConfigurationError("R grid must be increasing, positive, with >= 3 points")
        if self.ball_strip and not abs(self.theta_tilde) < math.pi / 2:
            raise DomainError("ball probes need |theta~| < pi/2")
        if len(self.phis) != B.shape[0] - 2:
            raise DomainError(f"expected {B.shape[0] - 2} azimuthal angles")
        growth = 0.5 * math.exp(R[-1]) * (self.extent + 2) + self.r_max * math.exp(R[-1] / 2)
        if growth > OVERFLOW_BUDGET:
            raise ConfigurationError(f"R_max = {R[-1]} exceeds the overflow budget")
        B.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "R_grid", R)
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))

    @classmethod
    def toward(cls, omega_t, omega0, R_grid, **kw) -> "HalfLineProbe":
        """Probe whose real direction is ``omega_t`` in the basis anchored at ``omega0``."""
        from ..directions import angles_of
        B = basis_from(omega0)
        theta, phis = angles_of(omega_t, B)
        return cls(theta, B, R_grid, phis, **kw)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def omega_tilde(self) -> np.ndarray:
        return np.real(angular_coefficients(self.theta_tilde, self.phis) @ self.basis)

    @property
    def omega_theta(self) -> np.ndarray:
        """Derivative of the real direction in ``theta``; ``Im omega = -sinh R * omega_theta``."""
        return np.real(angular_coefficients(self.theta_tilde + math.pi / 2, self.phis) @ self.basis)

    @property
    def azimuth(self) -> np.ndarray:
        """Unit vector ``u`` with ``omega(theta) = cos(theta) e_1 + sin(theta) u``."""
        return np.real(angular_coefficients(math.pi / 2, self.phis) @ self.basis)

    @property
    def thetas(self) -> np.ndarray:
        return self.theta_tilde - 1j * self.R_grid

    def directions(self) -> list[SphereDirection]:
        return [SphereDirection(self.basis, t, self.phis) for t in self.thetas]

    def sample(self, W) -> np.ndarray:
        return np.array([W(d) for d in self.directions()], complex)


def probe_fan(omega0, n: int, R_grid, seed: int = 0, spread: float = 1.2, **kw) -> list:
    """``n`` probes with polar angles spread over ``(-spread, spread)``, jittered by ``seed``."""
    B = basis_from(omega0)
    rng = np.random.default_rng(seed)
    d = B.shape[0]
    base = np.linspace(-spread, spread, n) if n > 1 else np.zeros(1)
    probes = []
    for j, t in enumerate(base):
        jitter = rng.uniform(-0.3, 0.3) * (2 * spread / max(n, 2))
        th = float(np.clip(t + jitter, -1.45, 1.45))
        phis = tuple(rng.uniform(0.2, 2 * np.pi - 0.2, d - 2)) if d > 2 else ()
        probes.append(HalfLineProbe(th, B, R_grid, phis, **kw))
    return probes


@dataclass
class MomentTrace:
    """``W`` sampled at real unit directions ``omega`` (frequency ``omega + omega0``)."""

    directions: np.ndarray
    omega0: np.ndarray
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        self.directions = np.atleast_2d(np.asarray(self.directions, float))
        self.omega0 = np.asarray(self.omega0, float)
        if self.values is not None:
            self.values = np.asarray(self.values, complex)

    @classmethod
    def sample(cls, sampler, directions) -> "MomentTrace":
        dirs = np.atleast_2d(np.asarray(directions, float))
        vals = np.array([sampler.at_frequency(w + sampler.omega0) for w in dirs])
        return cls(dirs, sampler.omega0, vals)

    @property
    def frequencies(self) -> np.ndarray:
        return self.directions + self.omega0


def circle_directions(n: int, offset: float = 0.0) -> np.ndarray:
    t = offset + 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def sphere_directions(n: int, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic direction grid: circle for d = 2, Fibonacci sphere for d = 3."""
    if dim == 2:
        return circle_directions(n, 0.1)
    if dim == 3:
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        phi = np.pi * (1 + 5 ** 0.5) * k
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, dim))
    return g / np.linalg.norm(g, axis=1)[:, None]
