"""Model builders covering both branches of the existence rule.

``spin_bath`` and its rotated copy are separable and nondemolition by
construction; ``nonseparable_xz`` and ``heisenberg`` are not.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import seeding
from .errors import ConfigError
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, hermitian_basis, kron, load_operator
from .system import CompositeSystem, ProductInitialState

KINDS = ("spin_bath", "rotated_spin_bath", "nonseparable_xz", "heisenberg", "random_interaction", "explicit")
BALANCED = np.array([1, 1], dtype=complex) / np.sqrt(2)


def r_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def haar_qubit(rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the Bloch sphere: ``cos(theta)`` and ``phi`` uniform."""
    cos_t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2 * np.pi)
    theta = np.arccos(cos_t)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def _site_op(op: np.ndarray, k: int, n: int) -> np.ndarray:
    return kron(np.eye(2 ** k), op, np.eye(2 ** (n - k - 1)))


def _z_sum_diag(g) -> np.ndarray:
    n = len(g)
    out = np.zeros(2**n)
    for k, gk in enumerate(g):
        out += gk * np.kron(np.kron(np.ones(2**k), [1.0, -1.0]), np.ones(2 ** (n - k - 1)))
    return out


def _pauli_sum(op: np.ndarray, coeffs) -> np.ndarray:
    n = len(coeffs)
    out = np.zeros((2**n, 2**n), dtype=complex)
    for k, c in enumerate(coeffs):
        if c:
            out += c * _site_op(op, k, n)
    return out


def env_factors(env_state, n: int, replica: int = 0) -> list[np.ndarray]:
    """Per-particle qubit states from an env-state rule.

    ``"balanced"`` gives ``(|0>+|1>)/sqrt(2)``, ``"eigen"`` gives ``|0>``,
    ``"haar:<seed>"`` draws from ``stream(seed, ENV_STATE, n, replica)``; a
    list of ``(alpha, beta)`` pairs is used as is.
    """
    if isinstance(env_state, str):
        if env_state == "balanced":
            return [BALANCED.copy() for _ in range(n)]
        if env_state == "eigen":
            return [np.array([1, 0], dtype=complex) for _ in range(n)]
        if env_state.startswith("haar:"):
            rng = seeding.stream(int(env_state[5:]), seeding.ENV_STATE, n, replica)
            return [haar_qubit(rng) for _ in range(n)]
        raise ConfigError(f"env_state: unknown rule {env_state!r}")
    factors = [np.asarray(f, dtype=complex).ravel() for f in env_state]
    if len(factors) != n:
        raise ConfigError(f"env_state: {len(factors)} factors given for N = {n}")
    for k, f in enumerate(factors):
        if f.shape != (2,) or abs(np.linalg.norm(f) - 1) > 1e-12:
            raise ConfigError(f"env_state: factor {k} must be a normalized (alpha, beta) pair")
    return factors


def _check_couplings(n: int, g, name="g") -> np.ndarray:
    if n < 1:
        raise ValueError("N must be >= 1")
    g = np.asarray(g, dtype=float).ravel()
    if g.size != n:
        raise ValueError(f"{name} has {g.size} entries, expected N = {n}")
    if not np.all(np.isfinite(g)):
        raise ValueError(f"{name} must be finite")
    return g


def build_spin_bath(n: int, g, env_state="balanced", system=BALANCED, h_s=None, replica: int = 0):
    """Qubit dephased by ``N`` qubits: ``H_int = Z (x) sum_k g_k Z_k``.

    Returns ``(CompositeSystem, ProductInitialState)``.
    """
    g = _check_couplings(n, g)
    diag = np.kron([1.0, -1.0], _z_sum_diag(g))
    model = CompositeSystem(2, (2,) * n, np.diag(diag).astype(complex), h_s=h_s, label="spin_bath")
    return model, ProductInitialState(system, tuple(env_factors(env_state, n, replica)))


def build_rotated_spin_bath(n: int, g, theta: float, env_state="balanced", replica: int = 0):
    """Spin bath conjugated by ``R_y(theta) (x) I``; pointer states rotate with it."""
    g = _check_couplings(n, g)
    r = r_y(theta)
    h = np.kron(r @ SIGMA_Z @ r.conj().T, np.diag(_z_sum_diag(g)))
    h = 0.5 * (h + h.conj().T)
    model = CompositeSystem(2, (2,) * n, h, label="rotated_spin_bath")
    return model, ProductInitialState(r @ BALANCED, tuple(env_factors(env_state, n, replica)))


def build_nonseparable_xz(n: int, g, h, env_state="balanced", replica: int = 0):
    """``H_int = X (x) sum_k g_k Z_k + Z (x) sum_k h_k X_k`` (never separable)."""
    g = _check_couplings(n, g)
    h = _check_couplings(n, h, "h")
    if not np.any(g) or not np.any(h):
        raise ValueError("nonseparable_xz needs some nonzero g and some nonzero h; otherwise it is separable")
    h_int = np.kron(SIGMA_X, _pauli_sum(SIGMA_Z, g)) + np.kron(SIGMA_Z, _pauli_sum(SIGMA_X, h))
    model = CompositeSystem(2, (2,) * n, h_int, label="nonseparable_xz")
    return model, ProductInitialState(BALANCED, tuple(env_factors(env_state, n, replica)))


def build_heisenberg(n: int, j, env_state="balanced", replica: int = 0):
    """Isotropic exchange ``sum_k J_k (XX_k + YY_k + ZZ_k)``."""
    j = _check_couplings(n, j, "J")
    h_int = sum(np.kron(p, _pauli_sum(p, j)) for p in (SIGMA_X, SIGMA_Y, SIGMA_Z))
    model = CompositeSystem(2, (2,) * n, h_int, label="heisenberg")
    return model, ProductInitialState(BALANCED, tuple(env_factors(env_state, n, replica)))


def random_interaction(d_s: int, env_dims, seed: int) -> CompositeSystem:
    """Gaussian coefficients over the product Hermitian basis; exactly Hermitian."""
    env_dims = tuple(int(d) for d in env_dims)
    d_e = math.prod(env_dims)
    if d_s < 2 or any(d < 2 for d in env_dims):
        raise ValueError("random_interaction needs all dims >= 2")
    rng = seeding.stream(seed, seeding.INTERACTION, len(env_dims))
    coeffs = rng.standard_normal((d_s * d_s, d_e * d_e))
    sys_b = np.array(hermitian_basis(d_s))
    env_b = np.array(hermitian_basis(d_e))
    env_ops = np.einsum("ab,bkl->akl", coeffs, env_b)
    h = np.einsum("aij,akl->ikjl", sys_b, env_ops).reshape(d_s * d_e, d_s * d_e)
    h = (h + h.conj().T) / 2
    return CompositeSystem(d_s, env_dims, h, label="random_interaction")


@dataclass
class ModelSpec:
    """JSON-level description of a model.

    ``g``/``h`` may be omitted, in which case couplings are drawn uniformly
    from ``g_range`` using ``stream(seed, COUPLINGS, N, replica)``.
    """

    kind: str
    N: int = 1
    g: list[float] | None = None
    h: list[float] | None = None
    g_range: tuple[float, float] = (0.5, 1.5)
    theta: float = 0.0
    seed: int = 0
    env_state: object = "balanced"
    h_s_pauli: list[float] | None = None
    h_int_file: str | None = None
    d_s: int = 2
    env_dims: list[int] | None = None
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "ModelSpec":
        if not isinstance(raw, dict):
            raise ConfigError("model: expected a JSON object")
        if "kind" not in raw:
            raise ConfigError("model.kind: missing required field")
        if raw["kind"] not in KINDS:
            raise ConfigError(f"model.kind: unknown kind {raw['kind']!r}, expected one of {KINDS}")
        known = {f.name for f in fields(cls)} - {"base_dir"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"model.{sorted(extra)[0]}: unknown field")
        spec = cls(**raw, base_dir=Path(base_dir))
        spec.validate()
        return spec

    def validate(self) -> None:
        if not isinstance(self.N, int) or self.N < 1:
            raise ConfigError("model.N: must be a positive integer")
        for name in ("g", "h"):
            val = getattr(self, name)
            if val is not None and len(val) != self.N:
                raise ConfigError(f"model.{name}: has {len(val)} entries, expected N = {self.N}")
        if len(self.g_range) != 2 or not self.g_range[0] <= self.g_range[1]:
            raise ConfigError("model.g_range: expected [low, high]")
        if self.kind == "explicit" and not self.h_int_file:
            raise ConfigError("model.h_int_file: required for kind 'explicit'")
        if self.h_s_pauli is not None and len(self.h_s_pauli) != 3:
            raise ConfigError("model.h_s_pauli: expected [x, y, z]")

    @property
    def product_family(self) -> bool:
        """True when the factorized correlation backend applies."""
        return self.kind == "spin_bath" and self.h_s_pauli is None

    def couplings(self, n: int | None = None, replica: int = 0) -> tuple[np.ndarray, np.ndarray]:
        n = self.N if n is None else n
        rng = seeding.stream(self.seed, seeding.COUPLINGS, n, replica)
        lo, hi = self.g_range
        g = rng.uniform(lo, hi, n)
        h = rng.uniform(lo, hi, n)
        if self.g is not None and n == self.N and replica == 0:
            g = np.asarray(self.g, dtype=float)
        if self.h is not None and n == self.N and replica == 0:
            h = np.asarray(self.h, dtype=float)
        return g, h

    def h_s(self) -> np.ndarray | None:
        if self.h_s_pauli is None:
            return None
        x, y, z = self.h_s_pauli
        return x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z

    def build(self, n: int | None = None, replica: int = 0):
        """Return ``(CompositeSystem, ProductInitialState)`` for size ``n``."""
        n = self.N if n is None else n
        g, h = self.couplings(n, replica)
        if self.kind == "spin_bath":
            return build_spin_bath(n, g, self.env_state, h_s=self.h_s(), replica=replica)
        if self.kind == "rotated_spin_bath":
            return build_rotated_spin_bath(n, g, self.theta, self.env_state, replica=replica)
        if self.kind == "nonseparable_xz":
            return build_nonseparable_xz(n, g, h, self.env_state, replica=replica)
        if self.kind == "heisenberg":
            return build_heisenberg(n, g, self.env_state, replica=replica)
        if self.kind == "random_interaction":
            model = random_interaction(self.d_s, self.env_dims or (2,) * n, self.seed)
            return model, _default_state(model, replica, self.seed)
        path = Path(self.h_int_file)
        if not path.is_absolute():
            path = self.base_dir / path
        h_int = load_operator(path)
        env_dims = tuple(self.env_dims or (2,) * n)
        model = CompositeSystem(self.d_s, env_dims, h_int, h_s=self.h_s(), label="explicit")
        return model, _default_state(model, replica, self.seed)


def _default_state(model: CompositeSystem, replica: int, seed: int) -> ProductInitialState:
    sys = np.ones(model.d_s, dtype=complex) / np.sqrt(model.d_s)
    rng = seeding.stream(seed, seeding.ENV_STATE, model.n_env, replica)
    factors = []
    for d in model.env_dims:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        factors.append(v / np.linalg.norm(v))
    return ProductInitialState(sys, tuple(factors))
