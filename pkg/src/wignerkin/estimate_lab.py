"""Numerical probes of the weighted integrals behind the bilinear estimates.

Every quantity here is a truncated integral over R^2 (d = 2).  Finiteness is
judged by self-convergence under doubling of the truncation radius and of the
quadrature resolution; divergence by the log-log growth of the value in the
truncation radius or in the sweep parameter |W|.
"""

from dataclasses import dataclass, field
from math import gamma as gamma_fn

import numpy as np
from scipy import integrate, special

DEFAULT_RADIUS = 1.0e6
DEFAULT_RESOLUTION = 8
FINITE_TOL = 0.05


def bracket(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def _require_2d(d):
    if d != 2:
        raise ValueError("only d = 2 is implemented")


@dataclass
class BoundProbe:
    """One evaluated integral together with its numerical-quality record."""

    target: str
    params: dict
    radius: float
    resolution: int
    value: float
    convergence: float
    classification: str = "measured"
    extra: dict = field(default_factory=dict)

    def row(self):
        out = {"target": self.target}
        out.update({k: self.params[k] for k in sorted(self.params)})
        out.update(radius=self.radius, resolution=self.resolution, value=self.value,
                   convergence=self.convergence, classification=self.classification)
        return out


def _classify(convergence, tol=FINITE_TOL):
    return "finite" if np.isfinite(convergence) and convergence <= tol else "unresolved"


def _rel_change(a, b):
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


# ---------------------------------------------------------------- quadrature


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def graded_nodes(centers, radius, n, h0=0.25, ratio=2.0):
    """Composite Gauss nodes on [-radius, radius], geometrically refined at centers.

    Panel edges sit at c +- h0 * ratio^j for each centre c, so peaks of unit
    width and algebraic tails out to the truncation radius are both resolved.
    """
    edges = {-radius, radius}
    for c in centers:
        if -radius < c < radius:
            edges.add(float(c))
        h = h0
        while h < 2 * radius:
            for e in (c - h, c + h):
                if -radius < e < radius:
                    edges.add(float(e))
            h *= ratio
    edges = np.array(sorted(edges))
    x, w = _gauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def _half_line_nodes(breaks, radius, n, h0=0.25, ratio=2.0):
    """Composite Gauss nodes on [0, radius], graded near 0 and each break point."""
    x, w = graded_nodes([0.0] + list(breaks), radius, n, h0, ratio)
    keep = x >= 0
    return x[keep], w[keep]


# ---------------------------------------------------------------- line integrals


def line_integral(distance, beta, radius=np.inf, scale=2.0):
    """Integral of <scale z>^(-2 beta) over a line at the given distance from 0.

    The line is truncated to |z| <= radius.  Closed form via the Gauss
    hypergeometric function; infinite for beta <= 1/2 without truncation.
    """
    rho = np.asarray(distance, dtype=float)
    a2 = 1.0 + (scale * rho) ** 2
    if np.isinf(radius):
        if beta <= 0.5:
            return np.full_like(a2, np.inf)
        c = np.sqrt(np.pi) * gamma_fn(beta - 0.5) / gamma_fn(beta)
        return c * a2 ** (0.5 - beta) / scale
    half = np.sqrt(np.clip(radius ** 2 - rho ** 2, 0.0, None))
    arg = -(scale * half) ** 2 / a2
    return 2.0 * half * a2 ** (-beta) * special.hyp2f1(beta, 0.5, 1.5, arg)


def line_integral_quadrature(distance, beta, radius, scale=2.0):
    """Direct quadrature of :func:`line_integral` (used as its cross-check)."""
    half = np.sqrt(max(radius ** 2 - distance ** 2, 0.0))
    a2 = 1.0 + (scale * distance) ** 2
    f = lambda t: (a2 + (scale * t) ** 2) ** (-beta)
    total, edge = 0.0, 0.0
    step = 1.0
    while edge < half:
        nxt = min(half, edge + step)
        total += integrate.quad(f, edge, nxt, epsabs=0.0, epsrel=1e-12)[0]
        edge, step = nxt, step * 2.0
    return 2.0 * total


def plane_growth_slope(beta, radii=(1e3, 2e3, 4e3, 8e3, 1.6e4), distance=0.0):
    """Log-log slope of the truncated plane integral against the truncation radius."""
    vals = np.array([line_integral_quadrature(distance, beta, r) for r in radii])
    return float(np.polyfit(np.log(radii), np.log(vals), 1)[0]), vals


# ---------------------------------------------------------------- loss integral


def eval_loss_K(tau, xi, xi_p, alpha=1.0, beta=1.0, radius=None, resolution=DEFAULT_RESOLUTION,
                d=2, plane_radius=np.inf, angles=None):
    """Weighted loss integral K at (tau, xi, xi').

    K = <xi+xi'>^(2 alpha) int dw (2|w|)^-1 <xi+xi'-2w>^(-2 alpha) <2w>^(-2 alpha) int_P <2z>^(-2 beta) dS(z)
    with P = {z : tau + (|xi|^2-|xi'|^2)/2 - (xi-xi').w + 2 w.z = 0}.  The w
    integral runs in polar coordinates, where the area element cancels 1/|w|.
    Returns a :class:`BoundProbe`.
    """
    _require_2d(d)
    xi = np.asarray(xi, dtype=float) * np.ones(2)
    xi_p = np.asarray(xi_p, dtype=float) * np.ones(2)

    def value(rad, res):
        ssum = xi + xi_p
        sdif = xi - xi_p
        const = tau + 0.5 * (xi @ xi - xi_p @ xi_p)
        peak = 0.5 * np.linalg.norm(ssum)
        n_theta = angles or max(64, int(16 * res * (1 + peak)))
        theta = 2 * np.pi * np.arange(n_theta) / n_theta
        dirs = np.stack([np.cos(theta), np.sin(theta)])
        r, wr = _half_line_nodes([peak], rad, res)
        w = r[None, :, None] * dirs[:, None, :]  # (2, nr, ntheta)
        offset = const - np.tensordot(sdif, w, axes=(0, 0))
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.abs(offset) / (2 * r[:, None])
        plane = line_integral(dist, beta, plane_radius)
        diff = ssum[:, None, None] - 2 * w
        integrand = 0.5 * bracket(np.linalg.norm(diff, axis=0)) ** (-2 * alpha) \
            * bracket(2 * r)[:, None] ** (-2 * alpha) * plane
        inner = integrand.sum(axis=1) * (2 * np.pi / n_theta)
        return float(bracket(np.linalg.norm(ssum)) ** (2 * alpha) * (inner @ wr))

    rad = radius if radius is not None else 1e4
    v1 = value(rad, resolution)
    v2 = value(2 * rad, 2 * resolution)
    conv = _rel_change(v1, v2)
    params = dict(tau=float(tau), xi=tuple(xi), xi_p=tuple(xi_p), alpha=alpha, beta=beta)
    return BoundProbe("K_loss", params, rad, resolution, v2, conv, _classify(conv))


def loss_K_origin_factors(alpha=1.0, beta=1.0):
    """One-dimensional factors of K at tau = 0, xi = xi' = 0: (plane, radial, angular)."""
    plane = float(line_integral(0.0, beta))
    radial = integrate.quad(lambda r: 0.5 * (1 + 4 * r * r) ** (-2 * alpha), 0, np.inf)[0]
    return plane, radial, 2 * np.pi


def loss_K_sweep(alpha=1.0, beta=1.0, size=5, max_freq=8.0, resolution=DEFAULT_RESOLUTION):
    """K over a size^3 sample of (tau, xi, xi') with |xi|, |xi'|, |tau| <= max_freq."""
    mags = np.linspace(0.0, max_freq, size)
    taus = np.linspace(-max_freq, max_freq, size)
    tilt = np.array([np.cos(np.pi / 3), np.sin(np.pi / 3)])
    probes = []
    for tau in taus:
        for a in mags:
            for b in mags:
                probes.append(eval_loss_K(tau, (a, 0.0), b * tilt, alpha, beta,
                                          resolution=resolution))
    return probes


# ---------------------------------------------------------------- gain integrals


def _line_weight_integral(f, point, direction, res, radius):
    """Integral of f over the line point + t * direction, t in [-radius, radius]."""
    t, wt = graded_nodes([0.0], radius, res)
    pts = point[:, None] + direction[:, None] * t[None, :]
    return float(f(pts) @ wt), pts


def _unit(theta):
    return np.array([np.cos(theta), np.sin(theta)])


def eval_gain_I1(W, alpha=1.0, planes=64, offsets=9, resolution=DEFAULT_RESOLUTION,
                 radius=DEFAULT_RADIUS, d=2):
    """Sup over sampled lines P of int_P <W>^(2 alpha) <s>^(-2 alpha) <s+W>^(-2 alpha) dS.

    Orientations: a golden-angle sequence plus the axis-aligned and W-aligned
    directions.  Offsets: the lines through 0 and through -W plus a uniform set
    in between.
    """
    _require_2d(d)
    W = np.asarray(W, dtype=float) * np.ones(2)
    golden = np.pi * (3 - np.sqrt(5))
    thetas = list((golden * np.arange(planes)) % np.pi) + [0.0, np.pi / 2]
    if np.linalg.norm(W) > 0:
        phi = np.arctan2(W[1], W[0])
        thetas += [phi % np.pi, (phi + np.pi / 2) % np.pi]
    wn = bracket(np.linalg.norm(W)) ** (2 * alpha)

    def f(s):
        return wn * bracket(np.linalg.norm(s, axis=0)) ** (-2 * alpha) \
            * bracket(np.linalg.norm(s + W[:, None], axis=0)) ** (-2 * alpha)

    def sweep(res, rad):
        best, where = -np.inf, None
        for th in thetas:
            normal = _unit(th)
            tangent = _unit(th + np.pi / 2)
            p_w = -W @ normal
            for p in np.unique(np.concatenate([[0.0, p_w], np.linspace(min(0, p_w), max(0, p_w), offsets)])):
                base = p * normal
                # grade the line at the feet of 0 and -W
                feet = [-(base @ tangent), (-W - base) @ tangent]
                t, wt = graded_nodes(feet, rad, res)
                pts = base[:, None] + tangent[:, None] * t[None, :]
                val = float(f(pts) @ wt)
                if val > best:
                    best, where = val, (float(th), float(p))
        return best, where

    v1, _ = sweep(resolution, radius)
    v2, where = sweep(2 * resolution, 2 * radius)
    conv = _rel_change(v1, v2)
    params = dict(W=tuple(W), alpha=alpha)
    return BoundProbe("I1_gain", params, radius, resolution, v2, conv, _classify(conv),
                      extra={"argmax": where})


def gain_I1_origin(alpha):
    """Closed form of I1 at W = 0: int_R <t>^(-4 alpha) dt."""
    return float(np.sqrt(np.pi) * gamma_fn(2 * alpha - 0.5) / gamma_fn(2 * alpha))


def _smooth_cutoff(r, inner=0.25, outer=1.0):
    """C-infinity function equal to 1 for r <= inner and 0 for r >= outer."""
    t = np.clip((np.asarray(r) - inner) / (outer - inner), 0.0, 1.0)
    a = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1)), 0.0)
    b = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1)), 0.0)
    return np.where(t <= 0, 1.0, np.where(t >= 1, 0.0, a / (a + b + 1e-300)))


def _i2_omega(Wpar, Wperp, wnorm, expo, res, radius):
    """Inner s-integral of I2 for one direction, s = a omega + b omega_perp."""

    def g(a, b):
        f1 = (1.0 + Wperp ** 2 + (a + Wpar) ** 2) ** (-expo)
        f2 = (1.0 + Wpar ** 2 + (b + Wperp) ** 2) ** (-expo)
        return wnorm * f1 * f2

    # polar patch around the origin carries the 1/|s| singularity
    r, wr = _half_line_nodes([], 1.0, 2 * res, h0=0.125)
    keep = r <= 1.0
    r, wr = r[keep], wr[keep]
    n_phi = 8 * res
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    a = r[:, None] * np.cos(phi)[None, :]
    b = r[:, None] * np.sin(phi)[None, :]
    chi = _smooth_cutoff(r)[:, None]
    patch = ((chi * g(a, b)).sum(axis=1) * (2 * np.pi / n_phi)) @ wr

    xa, wa = graded_nodes([0.0, -Wpar], radius, res)
    xb, wb = graded_nodes([0.0, -Wperp], radius, res)
    A, B = xa[:, None], xb[None, :]
    s = np.hypot(A, B)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(s > 0, (1.0 - _smooth_cutoff(s)) / s, 0.0)
    bulk = wa @ (weight * g(A, B)) @ wb
    return patch + bulk


def eval_gain_I2(W, beta=1.0, delta=0.0, n_omega=32, resolution=DEFAULT_RESOLUTION,
                 radius=DEFAULT_RADIUS, d=2):
    """I2 = int dw int ds <W>^(2 beta) / (|s| <s_par+W>^(2(beta+delta)) <s_perp+W>^(2(beta+delta))).

    s_par is the projection of s on omega; the omega integral uses the uniform
    trapezoid rule with n_omega nodes.
    """
    _require_2d(d)
    W = np.asarray(W, dtype=float) * np.ones(2)
    wnorm = bracket(np.linalg.norm(W)) ** (2 * beta)
    expo = beta + delta

    def value(res, rad, nom):
        # omega and -omega give the same projections, so half the circle suffices
        theta = np.pi * (np.arange(nom // 2) + 0.5) / (nom // 2)
        total = 0.0
        for th in theta:
            om, op = _unit(th), _unit(th + np.pi / 2)
            total += _i2_omega(W @ om, W @ op, wnorm, expo, res, rad)
        return total * 2 * np.pi / (nom // 2)

    v1 = value(resolution, radius, n_omega)
    v2 = value(2 * resolution, 2 * radius, 2 * n_omega)
    conv = _rel_change(v1, v2)
    params = dict(W=tuple(W), beta=beta, delta=delta, n_omega=n_omega)
    return BoundProbe("I2_gain", params, radius, resolution, v2, conv, _classify(conv))


def gain_I2_sweep(beta, delta, W_values=(1.0, 4.0, 16.0, 64.0), n_omega=256, resolution=6,
                  radius=1.0e4):
    """I2 along W = (|W|, 0); angular resolution sized for |W| up to 64."""
    return [eval_gain_I2((w, 0.0), beta, delta, n_omega, resolution, radius) for w in W_values]


# ---------------------------------------------------------------- lossy (instantaneous) bounds


def radial_power_integral(beta, d=2, radius=np.inf):
    """int_{R^2} <z>^(-2 beta) dz by one-dimensional radial quadrature."""
    _require_2d(d)
    f = lambda r: 2 * np.pi * r * (1 + r * r) ** (-beta)
    return integrate.quad(f, 0, radius, epsabs=0.0, epsrel=1e-12, limit=200)[0]


def radial_power_closed(beta, d=2):
    """Closed form pi / (beta - 1) of :func:`radial_power_integral` (beta > 1)."""
    _require_2d(d)
    return np.pi / (beta - 1.0) if beta > 1 else np.inf


def _i20(W, alpha, res, rad):
    Wn = float(np.linalg.norm(W))
    xa, wa = graded_nodes([0.0, Wn], rad, res)
    xb, wb = graded_nodes([0.0], rad, res)
    A, B = xa[:, None], xb[None, :]
    f = (1 + A * A + B * B) ** (-alpha) * (1 + (Wn - A) ** 2 + B * B) ** (-alpha)
    return bracket(Wn) ** (2 * alpha) * (wa @ f @ wb)


def eval_I20(W, alpha, resolution=DEFAULT_RESOLUTION, radius=DEFAULT_RADIUS, d=2):
    """int ds <W>^(2 alpha) <s>^(-2 alpha) <W-s>^(-2 alpha); depends on |W| only."""
    _require_2d(d)
    v1 = _i20(W, alpha, resolution, radius)
    v2 = _i20(W, alpha, 2 * resolution, 2 * radius)
    conv = _rel_change(v1, v2)
    return BoundProbe("I20", dict(W=float(np.linalg.norm(W)), alpha=alpha), radius, resolution,
                      v2, conv, _classify(conv))


def _i21(W, beta, delta, n_omega, res):
    W = np.asarray(W, dtype=float) * np.ones(2)
    expo = beta + delta
    x, w = graded_nodes([0.0], DEFAULT_RADIUS, res)
    theta = 2 * np.pi * (np.arange(n_omega) + 0.5) / n_omega
    total = 0.0
    for th in theta:
        wpar, wperp = W @ _unit(th), W @ _unit(th + np.pi / 2)
        # <s_par + W_perp>^2 = 1 + a^2 + W_perp^2 and <s_perp + W_par>^2 = 1 + b^2 + W_par^2
        fa = ((1 + wperp ** 2 + x * x) ** (-expo)) @ w
        fb = ((1 + wpar ** 2 + x * x) ** (-expo)) @ w
        total += fa * fb
    return bracket(np.linalg.norm(W)) ** (2 * beta) * total * 2 * np.pi / n_omega


def eval_I21(W, beta, delta, n_omega=256, resolution=DEFAULT_RESOLUTION, d=2):
    """int dw int ds <W>^(2 beta) / (<s_par+W_perp>^(2(beta+delta)) <s_perp+W_par>^(2(beta+delta)))."""
    _require_2d(d)
    v1 = _i21(W, beta, delta, n_omega, resolution)
    v2 = _i21(W, beta, delta, 2 * n_omega, 2 * resolution)
    conv = _rel_change(v1, v2)
    params = dict(W=tuple(np.asarray(W, dtype=float) * np.ones(2)), beta=beta, delta=delta)
    return BoundProbe("I21", params, DEFAULT_RADIUS, resolution, v2, conv, _classify(conv))


def eval_lossy_bounds(W_list, alpha, beta, delta, resolution=DEFAULT_RESOLUTION, d=2):
    """Sup over the sampled W of the loss bound, I20 and I21.

    The loss bound factorizes as I20(W) times int <z>^(-2 beta) dz.
    Returns dict name -> (sup value, list of per-W probes).
    """
    _require_2d(d)
    z_factor = radial_power_integral(beta)
    out = {"I_lossA": [], "I20": [], "I21": []}
    for W in W_list:
        Wv = np.asarray(W, dtype=float) * np.ones(2)
        p20 = eval_I20(Wv, alpha, resolution)
        ploss = BoundProbe("I_lossA", dict(W=tuple(Wv), alpha=alpha, beta=beta), p20.radius,
                           resolution, p20.value * z_factor, p20.convergence, p20.classification)
        out["I20"].append(p20)
        out["I_lossA"].append(ploss)
        out["I21"].append(eval_I21(Wv, beta, delta, resolution=resolution))
    return {k: (max(p.value for p in v), v) for k, v in out.items()}


# ---------------------------------------------------------------- dyadic shells


@dataclass
class DyadicResult:
    direct: float
    bound: float
    constant: float
    exponent: float
    partial_sums: np.ndarray
    divergent: bool


def angular_integral(W, par_exp, perp_exp, n_omega=4096):
    """int_{S^1} <W_par>^par_exp <W_perp>^perp_exp d omega (W_par = W . omega)."""
    W = np.asarray(W, dtype=float) * np.ones(2)
    theta = 2 * np.pi * (np.arange(n_omega) + 0.5) / n_omega
    om = np.stack([np.cos(theta), np.sin(theta)])
    wpar = W @ om
    wperp = np.sqrt(np.maximum(W @ W - wpar ** 2, 0.0))
    return float((bracket(wpar) ** par_exp * bracket(wperp) ** perp_exp).sum() * 2 * np.pi / n_omega)


def shell_series(exponent_large, d, kmax, measure_power):
    """Partial sums of sum_k 2^(-k-1) (2^-k)^measure_power (2^(k+1))^exponent_large."""
    k = np.arange(1, kmax + 1, dtype=float)
    terms = 2.0 ** (-k - 1) * (2.0 ** -k) ** measure_power * (2.0 ** (k + 1)) ** exponent_large
    return np.cumsum(terms)


def dyadic_check(W, beta, eps, kmax=40, which="I", d=2):
    """Direct angular integral versus its dyadic shell bound.

    ``which="I"``:      int <W_par>^(d-1-2 eps) <W_perp>^(1-2(beta+eps)),
                        shells 2^(-k-1)|W_par| <= |W_perp| < 2^-k |W_par|.
    ``which="Iprime"``: int <W_par>^(d-1-2(beta+eps)) <W_perp>^(1-2 eps),
                        shells with the roles of the components swapped.

    On shell k the ratio of the large to the small component is at most
    2^(k+1); writing the integrand as that ratio to the power of the large
    exponent times <small>^q with q = d - 2 beta - 4 eps, the factor <small>^q
    is at most 1 when q <= 0.  For q > 0 it is bounded by the ratio power
    2^((k+1) q) at the scale where the small component is of unit size, which
    raises the per-shell growth exponent by q.  The series diverges exactly
    when its growth exponent is >= 0.
    """
    _require_2d(d)
    q = d - 2 * beta - 4 * eps
    if which == "I":
        par_exp, perp_exp = d - 1 - 2 * eps, 1 - 2 * (beta + eps)
        large, power = d - 1 - 2 * eps, d - 2
    elif which == "Iprime":
        par_exp, perp_exp = d - 1 - 2 * (beta + eps), 1 - 2 * eps
        large, power = 1 - 2 * eps, 0
    else:
        raise ValueError(f"unknown dyadic integral {which!r}")
    large = large + max(q, 0.0)
    # exponents are sums of decimal parameters; round so exact ties stay ties
    growth = round(-1.0 - power + large, 12) + 0.0
    sums = shell_series(large, d, kmax, power)
    direct = angular_integral(W, par_exp, perp_exp)
    # shells repeat in each of the four quadrants; on the remaining region both
    # components are comparable and the integrand is at most <W>^max(q, 0)
    rest = 2 * np.pi * bracket(float(np.linalg.norm(W))) ** max(q, 0.0)
    bound = 4 * sums[-1] + rest
    return DyadicResult(direct, bound, direct / bound, growth, sums, growth >= 0)


def series_diverges(partial_sums):
    """True when the trailing terms of a shell series stop decaying (ratio >= 1)."""
    terms = np.diff(np.asarray(partial_sums, dtype=float))
    return bool(terms[-1] >= terms[-2] * (1 - 1e-12))


def growth_slope(xs, ys):
    """Least-squares log-log slope."""
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
