"""Containers for a system + environment model and its initial state."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import kron, require_hermitian

DENSE_CAP = 4096


@dataclass(frozen=True, eq=False)
class CompositeSystem:
    """Open system of dimension ``d_s`` coupled to ``len(env_dims)`` particles.

    ``h_s`` and ``h_e`` default to zero (``None``); ``h_int`` acts on the full
    space ``d_s * prod(env_dims)``.
    """

    d_s: int
    env_dims: tuple[int, ...]
    h_int: np.ndarray
    h_s: np.ndarray | None = None
    h_e: np.ndarray | None = None
    label: str = "explicit"

    def __post_init__(self):
        object.__setattr__(self, "env_dims", tuple(int(d) for d in self.env_dims))
        h_int = require_hermitian(self.h_int, "H_int")
        if h_int.shape[0] != self.dim:
            raise DimensionError(
                f"H_int has dim {h_int.shape[0]}, expected d_S * d_E = {self.d_s}*{self.d_e}"
            )
        object.__setattr__(self, "h_int", h_int)
        for name, d in (("h_s", self.d_s), ("h_e", self.d_e)):
            h = getattr(self, name)
            if h is None:
                continue
            h = require_hermitian(h, name.upper())
            if h.shape[0] != d:
                raise DimensionError(f"{name.upper()} has dim {h.shape[0]}, expected {d}")
            if not np.any(h):
                h = None
            object.__setattr__(self, name, h)

    @property
    def n_env(self) -> int:
        return len(self.env_dims)

    @property
    def d_e(self) -> int:
        return math.prod(self.env_dims)

    @property
    def dim(self) -> int:
        return self.d_s * self.d_e

    @property
    def has_free_part(self) -> bool:
        return self.h_s is not None or self.h_e is not None

    def free_hamiltonian(self) -> np.ndarray:
        h0 = np.zeros((self.dim, self.dim), dtype=complex)
        if self.h_s is not None:
            h0 += np.kron(self.h_s, np.eye(self.d_e))
        if self.h_e is not None:
            h0 += np.kron(np.eye(self.d_s), self.h_e)
        return h0

    def hamiltonian(self) -> np.ndarray:
        if not self.has_free_part:
            return self.h_int
        return self.free_hamiltonian() + self.h_int

    def scaled(self, c: float) -> "CompositeSystem":
        """Copy with every Hamiltonian term multiplied by ``c``."""
        return CompositeSystem(
            self.d_s,
            self.env_dims,
            c * self.h_int,
            None if self.h_s is None else c * self.h_s,
            None if self.h_e is None else c * self.h_e,
            label=self.label,
        )


def _normalized(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if abs(n - 1) > 1e-12:
        raise ValueError(f"{name} is not normalized (norm {n:.15g})")
    return v


@dataclass(frozen=True, eq=False)
class ProductInitialState:
    """``|psi_S> (x) |chi_E>`` with ``|chi_E>`` either a product or explicit."""

    system: np.ndarray
    env_factors: tuple[np.ndarray, ...] = ()
    env_vector: np.ndarray | None = None
    _env: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "system", _normalized(self.system, "system amplitudes"))
        factors = tuple(_normalized(f, f"env factor {k}") for k, f in enumerate(self.env_factors))
        object.__setattr__(self, "env_factors", factors)
        if self.env_vector is not None:
            env = _normalized(self.env_vector, "env state")
        elif factors:
            env = kron(*factors).ravel() if len(factors) > 1 else factors[0]
        else:
            raise ValueError("need env_factors or env_vector")
        object.__setattr__(self, "_env", env)

    @property
    def env(self) -> np.ndarray:
        return self._env

    @property
    def psi(self) -> np.ndarray:
        return np.kron(self.system, self._env)
