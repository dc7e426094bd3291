"""Weighted Sobolev norms, moment weights, observables and identity checks.

Physical-side weights and derivatives act in the Wigner coordinates
u = (x + x') / 2, y = x - x' used by the collision operators, with u and y
taking their centered values on the fundamental domain [-L, L)^d.  Thus
<x + x'> is <2u>, <x - x'> is <y>, grad_x + grad_x' is grad_u (symbol i eta)
and grad_x - grad_x' is 2 grad_y (symbol 2 i v).  Claims involving weights
hold for data supported well inside the box.
"""

from dataclasses import dataclass
from itertools import product
from math import factorial

import numpy as np

from . import collision as col
from .propagator import flow_symbol, free_flow_dm
from .wigner import (
    dm_to_mixed,
    from_rotated,
    mixed_to_dm,
    rotated,
)

ENTROPY_FLOOR = 1e-14


@dataclass(frozen=True)
class SobolevIndex:
    alpha: float = 1.0
    beta: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.delta < 0:
            raise ValueError("Sobolev indices must be nonnegative")

    def above_threshold(self, d):
        return min(self.alpha, self.beta) > (d - 1) / 2


def bracket(u2):
    """<u> = (1 + |u|^2)^(1/2) from the squared modulus."""
    return np.sqrt(1.0 + u2)


def _pair_coords(grid, values1):
    """Broadcast per-axis (first, second) coordinate arrays over the pair lattice."""
    d = grid.d
    first, second = [], []
    for a in range(d):
        s1 = [1] * (2 * d)
        s1[a] = grid.N
        s2 = [1] * (2 * d)
        s2[d + a] = grid.N
        first.append(values1.reshape(s1))
        second.append(values1.reshape(s2))
    return first, second


def sobolev_weight(grid, alpha, beta):
    xi, xip = _pair_coords(grid, grid.xi1)
    plus2 = sum((a + b) ** 2 for a, b in zip(xi, xip))
    minus2 = sum((a - b) ** 2 for a, b in zip(xi, xip))
    return bracket(plus2) ** alpha * bracket(minus2) ** beta


def sobolev_norm(gamma, idx):
    if not isinstance(idx, SobolevIndex):
        idx = SobolevIndex(*idx)
    w = sobolev_weight(gamma.grid, idx.alpha, idx.beta)
    return float(np.linalg.norm((w * gamma.values).ravel()))


def _frame_coords(grid, second):
    """Per-axis centered coordinates on the first (u) or second (y) d axes."""
    d = grid.d
    out = []
    for a in range(d):
        shape = [1] * (2 * d)
        shape[a + (d if second else 0)] = grid.N
        out.append(grid.x1.reshape(shape))
    return out


def separation(grid):
    """Components of x - x' (the Wigner separation y)."""
    return _frame_coords(grid, second=True)


def midpoint_sum(grid):
    """Components of x + x' (twice the Wigner midpoint u)."""
    return [2.0 * c for c in _frame_coords(grid, second=False)]


def plus_weight(grid, power=1.0):
    """<x + x'>^power in Wigner coordinates."""
    return bracket(sum(c ** 2 for c in midpoint_sum(grid))) ** power


def minus_weight(grid, power=1.0):
    """<x - x'>^power in Wigner coordinates."""
    return bracket(sum(c ** 2 for c in separation(grid))) ** power


def apply_physical(gamma, weight):
    """Multiply gamma by a function of (u, y); returns a density matrix."""
    return from_rotated(weight * rotated(gamma), gamma.grid, gamma.time)


def weighted_moment_norm(gamma, k, sign, idx):
    d = gamma.grid.d
    if sign == "plus":
        beta = idx.beta - k
        if beta < 0 or k > idx.beta - (d - 1) / 2:
            raise ValueError(
                f"index underflow: weight <x+x'>^{k} needs beta - k >= 0 and k < beta - (d-1)/2"
            )
        weighted = apply_physical(gamma, plus_weight(gamma.grid, k))
        return sobolev_norm(weighted, SobolevIndex(idx.alpha, beta))
    if sign == "minus":
        alpha = idx.alpha - 2 * k
        if alpha < 0 or 2 * k > idx.alpha - (d - 1) / 2:
            raise ValueError(
                f"index underflow: weight <x-x'>^{2 * k} needs alpha - 2k >= 0 "
                "and 2k < alpha - (d-1)/2"
            )
        weighted = apply_physical(gamma, minus_weight(gamma.grid, 2 * k))
        return sobolev_norm(weighted, SobolevIndex(alpha, idx.beta))
    raise ValueError("sign must be 'plus' or 'minus'")


def moment_norm_unchecked(gamma, k, sign, idx):
    """Same weighted norm without the index-range guard (for monitoring)."""
    if sign == "plus":
        weighted = apply_physical(gamma, plus_weight(gamma.grid, k))
        return sobolev_norm(weighted, SobolevIndex(idx.alpha, max(idx.beta - k, 0.0)))
    weighted = apply_physical(gamma, minus_weight(gamma.grid, 2 * k))
    return sobolev_norm(weighted, SobolevIndex(max(idx.alpha - 2 * k, 0.0), idx.beta))


@dataclass(frozen=True)
class Observables:
    mass: float
    momentum: tuple
    kineticEnergy: float
    entropyH: float
    minValue: float
    negativityMass: float


def observables(f):
    grid = f.grid
    vals = np.asarray(f.values, dtype=float)
    cell = grid.cell_x * grid.cell_v
    v = grid.v()
    vb = v[(slice(None),) + (None,) * grid.d]
    mass = vals.sum() * cell
    momentum = tuple(float((vals * vb[a]).sum() * cell) for a in range(grid.d))
    energy = 0.5 * (vals * (vb ** 2).sum(axis=0)).sum() * cell
    pos = vals[vals > ENTROPY_FLOOR]
    entropy = float((pos * np.log(pos)).sum() * cell)
    neg = np.minimum(vals, 0.0)
    return Observables(
        mass=float(mass),
        momentum=momentum,
        kineticEnergy=float(energy),
        entropyH=entropy,
        minValue=float(vals.min()) if vals.size else 0.0,
        negativityMass=float(-neg.sum() * cell),
    )


# ---------------------------------------------------------------------------
# operator identities


def _rel(lhs, rhs):
    a = lhs.values if hasattr(lhs, "values") else lhs
    b = rhs.values if hasattr(rhs, "values") else rhs
    scale = max(np.linalg.norm(a.ravel()), np.linalg.norm(b.ravel()))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm((a - b).ravel()) / scale)


def _mixed_multiply(gamma, factor):
    F = dm_to_mixed(gamma.values, gamma.grid)
    return gamma.with_values(mixed_to_dm(factor * F, gamma.grid))


def _mixed_coord(grid, axis, second):
    shape = [1] * (2 * grid.d)
    shape[axis + (grid.d if second else 0)] = grid.N
    return grid.xi1.reshape(shape)


def _gradient_sum(gamma, axis):
    """(d_{x_a} + d_{x'_a}) gamma = d_{u_a} gamma, spectrally (symbol i eta)."""
    return _mixed_multiply(gamma, 1j * _mixed_coord(gamma.grid, axis, False))


def _gradient_difference(gamma, axis):
    """(d_{x_a} - d_{x'_a}) gamma = 2 d_{y_a} gamma (symbol 2 i v)."""
    return _mixed_multiply(gamma, 2j * _mixed_coord(gamma.grid, axis, True))


def commutator_source(gamma, k=1, form="lattice"):
    """Source generated by moving the weight <x+x'>^k through the free flow.

    ``form="analytic"`` evaluates k (x+x')/<x+x'> . (grad_x - grad_x') (<x+x'>^(k-1) gamma)
    with the closed-form gradient of the weight.  ``form="lattice"`` evaluates the
    exact discrete commutator w^k (S gamma) - S (w^k gamma) of the weight with the
    free-flow symbol S; both agree in the continuum limit, but only the lattice form
    keeps the weighted system consistent with weighting the solution afterwards,
    because <x+x'> is not band-limited on the lattice.
    """
    grid = gamma.grid
    if form == "lattice":
        symbol = flow_symbol(grid)
        wk = plus_weight(grid, k)
        flowed = gamma.with_values(symbol * gamma.values)
        weighted = apply_physical(gamma, wk)
        out = apply_physical(flowed, wk).values - symbol * weighted.values
        return gamma.with_values(out)
    if form != "analytic":
        raise ValueError(f"unknown source form {form!r}")
    base = gamma if k == 1 else apply_physical(gamma, plus_weight(grid, k - 1))
    s = midpoint_sum(grid)
    w = plus_weight(grid, 1.0)
    acc = 0.0
    for a in range(grid.d):
        acc = acc + (s[a] / w) * rotated(_gradient_difference(base, a))
    return from_rotated(k * acc, grid, gamma.time)


def verify_weight_identities(gamma1, gamma2, a, b, k, kernel, quad):
    """Residuals of the weight and derivative identities for B-+.

    Returns a dict name -> relative residual.  Both sides of every identity use
    the same angular quadrature.
    """
    grid = gamma1.grid
    bm = lambda g1, g2: col.b_minus(g1, g2, kernel)
    bp = lambda g1, g2: col.b_plus(g1, g2, kernel, quad)
    out = {}

    wp = lambda p: plus_weight(grid, p)
    for name, op in (("plus_weight_loss", bm), ("plus_weight_gain", bp)):
        lhs = apply_physical(op(gamma1, gamma2), wp(a + b))
        rhs = op(apply_physical(gamma1, wp(a)), apply_physical(gamma2, wp(b)))
        out[name] = _rel(lhs, rhs)

    wm = lambda p: minus_weight(grid, p)
    lhs = apply_physical(bm(gamma1, gamma2), wm(a))
    rhs = bm(apply_physical(gamma1, wm(a)), apply_physical(gamma2, wm(b)))
    out["minus_weight_loss"] = _rel(lhs, rhs)

    lhs = apply_physical(bp(gamma1, gamma2), wm(2 * k))
    rhs = 0.0
    for j1, j2, j3 in product(range(k + 1), repeat=3):
        if j1 + j2 + j3 != k:
            continue
        coef = factorial(k) // (factorial(j1) * factorial(j2) * factorial(j3))
        term = bp(apply_physical(gamma1, wm(2 * j1)), apply_physical(gamma2, wm(2 * j2)))
        rhs = rhs + coef * (-1) ** j3 * term.values
    out["minus_weight_gain_multinomial"] = _rel(lhs, rhs)

    sep = separation(grid)
    res_l, res_g = 0.0, 0.0
    for comp in sep:
        lhs = apply_physical(bm(gamma1, gamma2), comp)
        rhs = bm(apply_physical(gamma1, comp), gamma2)
        res_l = max(res_l, _rel(lhs, rhs))
        lhs = apply_physical(bp(gamma1, gamma2), comp)
        rhs = bp(apply_physical(gamma1, comp), gamma2) + bp(gamma1, apply_physical(gamma2, comp))
        res_g = max(res_g, _rel(lhs, rhs))
    out["separation_loss"] = res_l
    out["separation_gain"] = res_g

    res_l, res_g, res_d = 0.0, 0.0, 0.0
    for ax in range(grid.d):
        for name, op in (("l", bm), ("g", bp)):
            lhs = _gradient_sum(op(gamma1, gamma2), ax)
            rhs = op(_gradient_sum(gamma1, ax), gamma2) + op(gamma1, _gradient_sum(gamma2, ax))
            r = _rel(lhs, rhs)
            if name == "l":
                res_l = max(res_l, r)
            else:
                res_g = max(res_g, r)
        lhs = _gradient_difference(bm(gamma1, gamma2), ax)
        rhs = bm(_gradient_difference(gamma1, ax), gamma2)
        res_d = max(res_d, _rel(lhs, rhs))
    out["leibniz_loss"] = res_l
    out["leibniz_gain"] = res_g
    out["difference_gradient_loss"] = res_d

    return out


# ---------------------------------------------------------------------------
# estimate probes


def bilinear_estimate_probe(gamma1, gamma2, idx, delta, kernel, quad, t_window=1.0, nodes=33):
    """Empirical constants of the loss and gain space-time bilinear bounds.

    Returns a dict with the ratios ``C_minus``, ``C_plus`` and the two
    space-time norms.
    """
    if nodes < 2:
        raise ValueError("need at least two time nodes")
    target = SobolevIndex(idx.alpha, idx.beta + delta)
    ts = np.linspace(0.0, t_window, nodes)
    loss_sq, gain_sq = [], []
    for t in ts:
        g1 = free_flow_dm(gamma1, t)
        g2 = free_flow_dm(gamma2, t)
        loss_sq.append(sobolev_norm(col.b_minus(g1, g2, kernel), target) ** 2)
        gain_sq.append(sobolev_norm(col.b_plus(g1, g2, kernel, quad), target) ** 2)
    loss = float(np.sqrt(np.trapezoid(loss_sq, ts)))
    gain = float(np.sqrt(np.trapezoid(gain_sq, ts)))
    b = kernel.sup_norm
    n1 = sobolev_norm(gamma1, idx)
    n1d = sobolev_norm(gamma1, target)
    n2 = sobolev_norm(gamma2, idx)
    den_minus = b * n1d * n2
    den_plus = b * n1 * n2
    return {
        "C_minus": 0.0 if den_minus == 0 else loss / den_minus,
        "C_plus": 0.0 if den_plus == 0 else gain / den_plus,
        "loss_norm": loss,
        "gain_norm": gain,
        "time_nodes": nodes,
        "t_window": t_window,
    }


def continuity_probe(gamma0, eps_list, kernel, quad, cfg, chi=None, seed=0):
    """Lipschitz ratios sup_t ||gamma^1 - gamma^2|| / ||eps chi|| in H^{alpha,beta}."""
    from .solver import solve_duhamel

    idx = SobolevIndex(cfg.alpha, cfg.beta)
    if chi is None:
        chi = random_perturbation(gamma0, seed)
    base = solve_duhamel(gamma0, kernel, quad, cfg)
    rows = []
    for eps in eps_list:
        if eps == 0:
            rows.append({"eps": 0.0, "ratio": 0.0})
            continue
        pert = gamma0.with_values(gamma0.values + eps * chi.values)
        other = solve_duhamel(pert, kernel, quad, cfg)
        diff = max(
            sobolev_norm(a - b, idx) for a, b in zip(base.states, other.states)
        )
        rows.append({"eps": float(eps), "ratio": diff / sobolev_norm(chi * eps, idx)})
    return rows


def random_perturbation(gamma0, seed=0):
    """Smooth Hermitian perturbation with the same spatial envelope as gamma0."""
    from .initial_data import random_smooth

    chi = random_smooth(gamma0.grid, seed=seed)
    return chi.with_values(chi.values / np.linalg.norm(chi.values.ravel()))
