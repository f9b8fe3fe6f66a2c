"""Exact evolution of system + environment and correlation amplitudes.

Two routes compute ``z_mm'(t)``:

* dense: evolve the full pure state, trace out the environment and divide
  the pointer-basis coherence by ``C_m C_m'^*``;
* conditional / factorized: overlap ``<chi_m'(t)|chi_m(t)>`` of the
  environment states conditioned on each pointer state. For the spin bath
  this factorizes into one 2x2 overlap per environment qubit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import PointerBasis, check_separability, extract_pointer_basis
from .errors import DimensionError, PointerBasisError
from .linalg import herm_eig, partial_trace_pure
from .system import DENSE_CAP, CompositeSystem, ProductInitialState

__all__ = [
    "CompositeSystem",
    "ProductInitialState",
    "Trajectory",
    "conditional_env_states",
    "correlation_amplitude",
    "evolve_dense",
    "factorized_z",
    "reduced_density",
    "simulate_dense",
    "simulate_spin_bath",
    "time_grid",
    "write_trajectory",
]


def time_grid(t_max: float, n_samples: int = 2000) -> np.ndarray:
    """Uniform grid on ``[0, t_max]`` including both ends."""
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    return np.linspace(0.0, float(t_max), int(n_samples))


def _check_cap(model: CompositeSystem, cap: int) -> None:
    if model.dim > cap:
        raise DimensionError(
            f"total dimension {model.dim} exceeds the dense cap {cap}; "
            "use the factorized backend (factorized_z) for large environments"
        )


def evolve_dense(model: CompositeSystem, psi0, times, cap: int = DENSE_CAP) -> np.ndarray:
    """States ``exp(-i H t) psi0`` for each ``t``; shape ``(len(times), dim)``."""
    _check_cap(model, cap)
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if psi0.size != model.dim:
        raise DimensionError(f"initial state has dim {psi0.size}, model has {model.dim}")
    w, v = herm_eig(model.hamiltonian())
    c = v.conj().T @ psi0
    times = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(times, w))
    return (phases * c) @ v.T


def reduced_density(model: CompositeSystem, init: ProductInitialState, times, cap: int = DENSE_CAP) -> np.ndarray:
    """``rho_S(t) = tr_E |psi(t)><psi(t)|``; shape ``(len(times), d_S, d_S)``."""
    states = evolve_dense(model, init.psi, times, cap)
    return partial_trace_pure(states, model.d_s, model.d_e)


def resolve_pointer(model: CompositeSystem, pointer=None) -> PointerBasis:
    if isinstance(pointer, PointerBasis):
        return pointer
    if pointer is not None:
        raise TypeError("pointer must be a PointerBasis or None")
    return extract_pointer_basis(check_separability(model.h_int, model.d_s, model.d_e))


def conditional_env_states(
    model: CompositeSystem, m: int, chi, times, pointer: PointerBasis | None = None
) -> np.ndarray:
    """Environment states ``|chi_m(t)>`` with ``U(t)|m>|chi> = |m>|chi_m(t)>``.

    Generated by ``H_E + eps_m + sum_n gamma[m, n] Pi_n`` where ``eps_m`` is
    the energy of ``|m>`` under ``H_S`` (zero by default). Raises
    :class:`PointerBasisError` for non-separable models.
    """
    pointer = resolve_pointer(model, pointer)
    state = pointer.pointer_state(m)
    chi = np.asarray(chi, dtype=complex).ravel()
    if chi.size != model.d_e:
        raise DimensionError(f"env state has dim {chi.size}, expected {model.d_e}")
    k = pointer.env_operator(m)
    if model.h_s is not None:
        hm = model.h_s @ state
        eps = float(np.vdot(state, hm).real)
        if np.linalg.norm(hm - eps * state) > 1e-10 * max(1.0, np.linalg.norm(model.h_s)):
            raise PointerBasisError(f"H_S does not leave pointer state {m} invariant")
        k = k + eps * np.eye(model.d_e)
    if model.h_e is not None:
        k = k + model.h_e
    w, v = herm_eig(0.5 * (k + k.conj().T))
    c = v.conj().T @ chi
    phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), w))
    return (phases * c) @ v.T


def correlation_amplitude(
    model: CompositeSystem,
    init: ProductInitialState,
    times,
    m: int,
    mprime: int,
    backend: str = "dense",
    pointer: PointerBasis | None = None,
    cap: int = DENSE_CAP,
) -> np.ndarray:
    """Correlation amplitude ``z_mm'(t)`` in the pointer basis.

    ``backend="dense"`` extracts it from ``rho_S``; ``"conditional"`` uses the
    overlap of conditional environment states. Both need rank-1 sectors.
    """
    times = np.asarray(times, dtype=float)
    if m == mprime:
        return np.ones(times.size, dtype=complex)
    pointer = resolve_pointer(model, pointer)
    if backend == "conditional":
        chi = init.env
        chi_m = conditional_env_states(model, m, chi, times, pointer)
        chi_mp = conditional_env_states(model, mprime, chi, times, pointer)
        return np.einsum("ti,ti->t", chi_mp.conj(), chi_m)
    if backend != "dense":
        raise ValueError(f"unknown backend {backend!r}")
    w_m, w_mp = pointer.pointer_state(m), pointer.pointer_state(mprime)
    c_m, c_mp = np.vdot(w_m, init.system), np.vdot(w_mp, init.system)
    if abs(c_m) < 1e-12 or abs(c_mp) < 1e-12:
        raise ValueError(
            f"pointer amplitude C_{m if abs(c_m) < 1e-12 else mprime} is zero; "
            "use backend='conditional'"
        )
    rho = reduced_density(model, init, times, cap)
    coh = np.einsum("i,tij,j->t", w_m.conj(), rho, w_mp)
    return coh / (c_m * np.conj(c_mp))


def factorized_z(g, alpha, beta, times, m: int = 0, mprime: int = 1) -> np.ndarray:
    """Spin-bath correlation amplitude as a product of single-qubit overlaps.

    For ``H_int = Z (x) sum_k g_k Z_k`` pointer state ``m`` (``Z = +1`` for
    ``m = 0``) drives qubit ``k`` with ``s_m g_k Z_k``, so
    ``z_k(t) = |alpha_k|^2 exp(-i(s_m - s_m') g_k t) + |beta_k|^2 exp(+i(...))``.
    Cost is ``O(N * len(times))``.
    """
    g = np.asarray(g, dtype=float).ravel()
    alpha = np.asarray(alpha, dtype=complex).ravel()
    beta = np.asarray(beta, dtype=complex).ravel()
    if not (g.size == alpha.size == beta.size):
        raise DimensionError("g, alpha and beta must have one entry per environment qubit")
    p0, p1 = np.abs(alpha) ** 2, np.abs(beta) ** 2
    if np.any(np.abs(p0 + p1 - 1) > 1e-12):
        raise ValueError("environment factors must be normalized product states")
    if {m, mprime} - {0, 1}:
        raise ValueError("spin-bath pointer labels are 0 and 1")
    times = np.asarray(times, dtype=float)
    ds = (1 - 2 * m) - (1 - 2 * mprime)
    z = np.ones(times.size, dtype=complex)
    if ds == 0:
        return z
    for gk, a2, b2 in zip(g, p0, p1):
        ph = np.exp(-1j * ds * gk * times)
        z *= a2 * ph + b2 * ph.conj()
    return z


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    z: dict[tuple[int, int], np.ndarray]
    backend: str
    amplitudes: np.ndarray
    rho_s: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def purity(self) -> np.ndarray:
        if self.rho_s is not None:
            return np.einsum("tij,tji->t", self.rho_s, self.rho_s).real
        p = np.abs(self.amplitudes) ** 2
        out = np.full(self.times.size, float(np.sum(p**2)))
        for (m, mp), z in self.z.items():
            out += 2 * p[m] * p[mp] * np.abs(z) ** 2
        return out


def simulate_spin_bath(g, init: ProductInitialState, times) -> Trajectory:
    """Factorized trajectory for the spin bath with ``H_S = H_E = 0``."""
    times = np.asarray(times, dtype=float)
    alpha = np.array([f[0] for f in init.env_factors])
    beta = np.array([f[1] for f in init.env_factors])
    z = factorized_z(g, alpha, beta, times)
    c = init.system
    rho = np.empty((times.size, 2, 2), dtype=complex)
    rho[:, 0, 0] = abs(c[0]) ** 2
    rho[:, 1, 1] = abs(c[1]) ** 2
    rho[:, 0, 1] = c[0] * np.conj(c[1]) * z
    rho[:, 1, 0] = np.conj(rho[:, 0, 1])
    return Trajectory(times, {(0, 1): z}, "factorized", c.copy(), rho)


def simulate_dense(model: CompositeSystem, init: ProductInitialState, times, pointer: PointerBasis | None = None,
                   cap: int = DENSE_CAP) -> Trajectory:
    """Dense trajectory with ``z`` for every pair of rank-1 pointer sectors.

    Pairs involving a higher-rank sector or a zero amplitude are skipped and
    recorded in ``flags``.
    """
    times = np.asarray(times, dtype=float)
    pointer = resolve_pointer(model, pointer)
    rho = reduced_density(model, init, times, cap)
    flags = []
    ranks = pointer.system_ranks
    rank1 = [m for m in pointer.labels if ranks[m] == 1]
    if len(rank1) < len(ranks):
        flags.append("rank>1 pointer sectors present; z restricted to rank-1 sectors")
    states = {m: pointer.pointer_state(m) for m in rank1}
    amps = np.array([np.vdot(states[m], init.system) if m in states else np.nan for m in pointer.labels])
    z = {}
    for i, m in enumerate(rank1):
        for mp in rank1[i + 1 :]:
            if abs(amps[m]) < 1e-12 or abs(amps[mp]) < 1e-12:
                flags.append(f"zero amplitude in pair ({m}, {mp}); z not extracted")
                continue
            coh = np.einsum("i,tij,j->t", states[m].conj(), rho, states[mp])
            z[(m, mp)] = coh / (amps[m] * np.conj(amps[mp]))
    return Trajectory(times, z, "dense", amps, rho, flags)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory(traj: Trajectory, out_dir) -> list[Path]:
    """One ``z_<m>_<mprime>.csv`` per pair: ``t, re_z, im_z, abs_z, purity``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    purity = traj.purity
    paths = []
    for (m, mp), z in sorted(traj.z.items()):
        path = out_dir / f"z_{m}_{mp}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "re_z", "im_z", "abs_z", "purity"])
            for t, zz, p in zip(traj.times, z, purity):
                writer.writerow([_fmt(t), _fmt(zz.real), _fmt(zz.imag), _fmt(abs(zz)), _fmt(p)])
        paths.append(path)
    return paths
