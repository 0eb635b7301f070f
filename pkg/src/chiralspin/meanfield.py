"""Fermionized mean-field theory of the type-A ladder.

Spins become hard-core fermions (a down spin is a particle) and the
quartic terms are decoupled around a uniform filling ``alpha``.  Pairing the
two legs into a spinor leaves a 2x2 Bloch matrix per momentum
``p = 2 pi n / L`` with eigenvalues

    E_pm(p) = 8(1 - a) - 4(1 - 2a) cos p  +-  2 sqrt((4 lam^2 + 1) sin^2 p + (1 + cos p)^2)

and the filling must reproduce itself: ``alpha N`` equals the number of
negative single-particle levels.  A level at exactly zero (``E_-(0)``
vanishes for every coupling) is left empty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

LAMBDA_C = math.sqrt(5.0) / 2
ZERO_TOL = 1e-12


class MeanFieldError(RuntimeError):
    pass


def dispersion(lam: float, alpha: float, p):
    """Branch energies ``(e_plus, e_minus)``; ``p`` may be an array."""
    p = np.asarray(p, dtype=float)
    c, s = np.cos(p), np.sin(p)
    base = 8.0 * (1.0 - alpha) - 4.0 * (1.0 - 2.0 * alpha) * c
    rad = 2.0 * np.sqrt((4.0 * lam * lam + 1.0) * s * s + (1.0 + c) ** 2)
    if p.ndim == 0:
        return float(base + rad), float(base - rad)
    return base + rad, base - rad


def momenta(L: int) -> np.ndarray:
    return 2 * np.pi * np.arange(L) / L


def _occupied(lam: float, alpha: float, L: int) -> list[tuple[float, int, float]]:
    """Negative levels as ``(p, branch, energy)``, branch +1 or -1."""
    p = momenta(L)
    ep, em = dispersion(lam, alpha, p)
    out = [(float(q), +1, float(e)) for q, e in zip(p, ep) if e < -ZERO_TOL]
    out += [(float(q), -1, float(e)) for q, e in zip(p, em) if e < -ZERO_TOL]
    return sorted(out, key=lambda t: t[2])


@dataclass
class MeanFieldSolution:
    lam: float
    L: int
    alpha: float
    occupied: list[tuple[float, int]] = field(repr=False)
    energy_per_site: float
    residual: float = 0.0

    @property
    def n_sites(self) -> int:
        return 2 * self.L


def solve_self_consistent(lam: float, L: int, max_iter: int = 1000) -> MeanFieldSolution:
    """Smallest self-consistent filling and its energy per site.

    The number of negative levels can only grow with ``alpha``, so plain
    iteration from the empty band climbs monotonically to the smallest
    fixed point in at most ``N`` steps.  If that ever fails the integer
    fillings are scanned directly.
    """
    if L < 2:
        raise ValueError(f"ladder length must be at least 2, got {L}")
    if not math.isfinite(lam):
        raise ValueError("coupling must be finite")
    N = 2 * L

    def count(m: int) -> int:
        return len(_occupied(lam, m / N, L))

    m = 0
    for _ in range(max_iter):
        nxt = count(m)
        if nxt == m:
            break
        m = nxt
    else:
        fixed = [k for k in range(N + 1) if count(k) == k]
        if not fixed:
            raise MeanFieldError(f"no self-consistent filling at lambda={lam}")
        m = fixed[0]

    alpha = m / N
    occ = _occupied(lam, alpha, L)
    energy = -2.0 * N + sum(e for _, _, e in occ)
    return MeanFieldSolution(lam, L, alpha, [(p, b) for p, b, _ in occ], energy / N,
                             abs(len(occ) / N - alpha))


def _reduced_minus(lam: float, p: np.ndarray) -> np.ndarray:
    """``E_-(p) / (1 - cos p)`` at zero filling, free of the cancellation near p = 0.

    Uses ``E_+ E_- = (1 - c)[12(5 - c) - (16 lam^2 + 4)(1 + c)]``.
    """
    c = np.cos(p)
    ep, _ = dispersion(lam, 0.0, p)
    return (12.0 * (5.0 - c) - (16.0 * lam * lam + 4.0) * (1.0 + c)) / ep


def transition_point(grid_step: float = 1e-4, lam_max: float = 10.0, xtol: float = 1e-12) -> float:
    """Smallest coupling at which the lower branch dips below zero away from ``p = 0``."""
    p = np.arange(grid_step, 2 * np.pi, grid_step)

    def f(lam):
        return float(_reduced_minus(lam, p).min())

    if f(0.0) <= 0:
        return 0.0
    if f(lam_max) >= 0:
        raise MeanFieldError(f"no transition below lambda={lam_max}")
    return float(brentq(f, 0.0, lam_max, xtol=xtol))


def energy_sweep(lambda_grid, L: int) -> list[tuple[float, float, float]]:
    lams = [float(x) for x in lambda_grid]
    if any(b < a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be sorted")
    out = []
    for lam in lams:
        sol = solve_self_consistent(lam, L)
        out.append((lam, sol.energy_per_site, sol.alpha))
    return out
