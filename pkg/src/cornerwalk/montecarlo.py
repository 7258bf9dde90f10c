"""Monte Carlo estimators for killed walks, with deterministic batching.

All estimators share one discipline: paths are simulated in fixed-size
batches of 65536, each batch drawing from its own counter-based Philox
substream keyed by (seed, batch index), and batch partials are reduced
in batch order.  Path i therefore sees draws that depend only on the
seed, i // 65536, and its slot within the batch — never on thread
scheduling or on how many paths other workers got — so every estimate is
bit-for-bit reproducible.

Steps are sampled through a Walker alias table (O(1) per draw) and
advanced in blocks of 64 via cumulative sums, with absorption detected
inside the block; the survival engine additionally compacts away
absorbed rows between blocks.  Cramer twisting replaces the step law by
p_s * exp(<phi, s>) (a probability law because phi lies on the zero
curve) and reweights Green-function visits by the constant
exp(-<phi, y - x>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curve import CramerData, CurveGeometry, SolverError, cramer_transform, find_extrema
from .model import StepDistribution, validate_model, InvalidModelError

__all__ = [
    "BATCH_SIZE",
    "SimConfig",
    "SimEstimate",
    "ScanPoint",
    "estimate_escape",
    "estimate_halfplane_survival",
    "estimate_green",
    "martin_kernel_estimate",
    "martin_kernel_profile",
    "green_direction_scan",
    "skipfree_exit_root",
    "brownian_halfplane_kernel",
]

BATCH_SIZE = 65536  # fixed: part of the reproducibility contract, not a knob
_BLOCK = 64
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    """Simulation request.

    ``horizon`` may be None where an operation defines a default (the
    Green-function estimators use 10 * |y - x|_1); escape estimation has
    no sensible default and requires it.  ``twist`` switches sampling to
    the exponentially tilted law of the given curve point.
    """

    seed: int
    n_paths: int
    horizon: int | None = None
    twist: CramerData | None = None


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n_paths: int
    horizon: int
    censored_fraction: float


@dataclass(frozen=True)
class ScanPoint:
    radius: float  # requested radius
    y: tuple[int, int]  # rounded lattice target
    norm: float  # |y|, the abscissa of the scan
    value: float  # sqrt(|y|)-scaled, twist-corrected Green value
    std_error: float


def _require_valid(dist: StepDistribution) -> None:
    report = validate_model(dist)
    if not report.passed:
        ids = ", ".join(rule for rule, _ in report.violations)
        raise InvalidModelError(f"model fails validation rules: {ids}")


def _twisted_probs(dist: StepDistribution, twist: CramerData | None):
    steps = np.array(dist.steps, dtype=np.int32)
    probs = np.array(dist.probs, dtype=np.float64)
    if twist is not None:
        px, py = twist.phi
        probs = probs * np.exp(steps[:, 0] * px + steps[:, 1] * py)
        total = probs.sum()
        if abs(total - 1.0) > 1e-9:
            raise SolverError(
                f"twisted step law sums to {total!r}; twist point off the curve?"
            )
        probs = probs / total
    return steps, probs


def _alias_table(probs: np.ndarray):
    """Walker alias table: (accept, alias) for O(1) categorical draws."""
    k = len(probs)
    accept = np.ones(k, dtype=np.float64)
    alias = np.arange(k, dtype=np.int64)
    scaled = probs * k
    small = [i for i in range(k) if scaled[i] < 1.0]
    large = [i for i in range(k) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        accept[s] = scaled[s]
        alias[s] = l
        scaled[l] -= 1.0 - scaled[s]
        (small if scaled[l] < 1.0 else large).append(l)
    return accept, alias


def _batch_rng(seed: int, batch_index: int) -> np.random.Generator:
    key = (batch_index << 64) | (seed & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_steps(rng, steps, accept, alias, rows: int, cols: int):
    u = rng.random((rows, cols))
    v = u * len(accept)
    k = np.minimum(v.astype(np.int64), len(accept) - 1)
    idx = np.where(v - k < accept[k], k, alias[k])
    return steps[idx]  # (rows, cols, 2) int32


def _batch_sizes(n_paths: int):
    full, rem = divmod(n_paths, BATCH_SIZE)
    sizes = [BATCH_SIZE] * full
    if rem:
        sizes.append(rem)
    return sizes


def _survival_count(dist, start, horizon, seed, n_paths, twist, halfplane):
    steps, probs = _twisted_probs(dist, twist)
    accept, alias = _alias_table(probs)
    survived = 0
    for b_idx, rows in enumerate(_batch_sizes(n_paths)):
        rng = _batch_rng(seed, b_idx)
        pos = np.tile(np.array(start, dtype=np.int32), (rows, 1))
        t = 0
        while t < horizon and len(pos):
            blk = min(_BLOCK, horizon - t)
            inc = _draw_steps(rng, steps, accept, alias, len(pos), blk)
            cum = np.cumsum(inc, axis=1, dtype=np.int32)
            cum += pos[:, None, :]
            if halfplane:
                dead = cum[:, :, 1] <= 0
            else:
                dead = (cum[:, :, 0] <= 0) | (cum[:, :, 1] <= 0)
            keep = ~dead.any(axis=1)
            pos = cum[keep, -1, :]
            t += blk
        survived += len(pos)
    return survived


def estimate_escape(dist: StepDistribution, x, cfg: SimConfig) -> SimEstimate:
    """Fraction of paths from x still strictly inside the quadrant at the
    horizon.

    This estimates P(exit time > horizon), an upper proxy for the escape
    probability; the gap P(horizon < exit < infinity) decays geometrically
    in the horizon and is far below the binomial noise for the horizons
    used here.  Every path resolves (absorbed or survived), so the
    censored fraction is zero by construction.
    """
    _require_valid(dist)
    i, j = int(x[0]), int(x[1])
    if i < 1 or j < 1:
        raise ValueError("escape start must be strictly inside the quadrant")
    if cfg.horizon is None:
        raise ValueError("escape estimation requires an explicit horizon")
    if cfg.n_paths < 1 or cfg.horizon < 1:
        raise ValueError("n_paths and horizon must be >= 1")
    survived = _survival_count(
        dist, (i, j), cfg.horizon, cfg.seed, cfg.n_paths, cfg.twist, halfplane=False
    )
    p = survived / cfg.n_paths
    se = math.sqrt(p * (1.0 - p) / cfg.n_paths)
    return SimEstimate(p, se, cfg.n_paths, cfg.horizon, 0.0)


def estimate_halfplane_survival(
    dist: StepDistribution, height: int, cfg: SimConfig
) -> SimEstimate:
    """Survival in the upper half plane from vertical distance ``height``."""
    _require_valid(dist)
    height = int(height)
    if height < 1:
        raise ValueError("height must be >= 1")
    if cfg.horizon is None:
        raise ValueError("half-plane survival requires an explicit horizon")
    survived = _survival_count(
        dist, (0, height), cfg.horizon, cfg.seed, cfg.n_paths, cfg.twist,
        halfplane=True,
    )
    p = survived / cfg.n_paths
    se = math.sqrt(p * (1.0 - p) / cfg.n_paths)
    return SimEstimate(p, se, cfg.n_paths, cfg.horizon, 0.0)


def _visit_stats(dist, starts, targets, horizon, seed, n_paths, twist):
    """Counts of pre-absorption visits, shared increments across starts.

    Returns (sums, sumsqs, crosses, alive_counts):
      sums[si][ti], sumsqs[si][ti]: per-path visit count moments;
      crosses[ti]: sum over paths of visits-from-start0 * visits-from-start1
      (only when two starts are given); alive_counts[si]: paths unabsorbed
      at the horizon.  All reductions run in batch order.
    """
    steps, probs = _twisted_probs(dist, twist)
    accept, alias = _alias_table(probs)
    n_starts = len(starts)
    n_targets = len(targets)
    tgt = np.array(targets, dtype=np.int32)
    sums = [[[] for _ in range(n_targets)] for _ in range(n_starts)]
    sumsqs = [[[] for _ in range(n_targets)] for _ in range(n_starts)]
    crosses = [[] for _ in range(n_targets)]
    alive_parts = [[] for _ in range(n_starts)]
    arange_blk = np.arange(_BLOCK)

    for b_idx, rows in enumerate(_batch_sizes(n_paths)):
        rng = _batch_rng(seed, b_idx)
        pos = [np.tile(np.array(s, dtype=np.int32), (rows, 1)) for s in starts]
        alive = [np.ones(rows, dtype=bool) for _ in starts]
        visits = [
            [np.zeros(rows, dtype=np.int64) for _ in range(n_targets)]
            for _ in range(n_starts)
        ]
        t = 0
        while t < horizon:
            blk = min(_BLOCK, horizon - t)
            inc = _draw_steps(rng, steps, accept, alias, rows, blk)
            cum = np.cumsum(inc, axis=1, dtype=np.int32)
            for si in range(n_starts):
                pcs = pos[si][:, None, :] + cum
                bnd = (pcs[:, :, 0] <= 0) | (pcs[:, :, 1] <= 0)
                any_hit = bnd.any(axis=1)
                first = np.where(any_hit, bnd.argmax(axis=1), blk)
                step_ok = (arange_blk[None, :blk] < first[:, None]) & alive[si][:, None]
                for ti in range(n_targets):
                    hits = (
                        (pcs[:, :, 0] == tgt[ti, 0])
                        & (pcs[:, :, 1] == tgt[ti, 1])
                        & step_ok
                    )
                    visits[si][ti] += hits.sum(axis=1)
                pos[si] = pcs[:, -1, :]
                alive[si] &= ~any_hit
            t += blk
        for si in range(n_starts):
            alive_parts[si].append(int(alive[si].sum()))
            for ti in range(n_targets):
                v = visits[si][ti].astype(np.float64)
                sums[si][ti].append(float(v.sum()))
                sumsqs[si][ti].append(float((v * v).sum()))
        if n_starts == 2:
            for ti in range(n_targets):
                crosses[ti].append(
                    float(
                        (visits[0][ti].astype(np.float64) * visits[1][ti]).sum()
                    )
                )

    red = lambda parts: math.fsum(parts)
    sums_r = [[red(sums[si][ti]) for ti in range(n_targets)] for si in range(n_starts)]
    sq_r = [[red(sumsqs[si][ti]) for ti in range(n_targets)] for si in range(n_starts)]
    cross_r = [red(crosses[ti]) for ti in range(n_targets)] if n_starts == 2 else None
    alive_r = [sum(alive_parts[si]) for si in range(n_starts)]
    return sums_r, sq_r, cross_r, alive_r


def _default_horizon(x, y) -> int:
    return max(1, 10 * (abs(y[0] - x[0]) + abs(y[1] - x[1])))


def _twist_weight(twist: CramerData | None, x, y) -> float:
    if twist is None:
        return 1.0
    e = twist.phi[0] * (y[0] - x[0]) + twist.phi[1] * (y[1] - x[1])
    if abs(e) > 700.0:
        raise SolverError(f"twist reweighting exponent {e!r} would overflow")
    return math.exp(-e)


def estimate_green(dist: StepDistribution, x, y, cfg: SimConfig) -> SimEstimate:
    """Expected pre-absorption visits to y from x (the killed Green value).

    Under a twist the sampling law is tilted and every visit carries the
    constant weight exp(-<phi, y - x>), which undoes the tilt exactly
    because all paths from x to y share the displacement y - x.
    """
    _require_valid(dist)
    x = (int(x[0]), int(x[1]))
    y = (int(y[0]), int(y[1]))
    if min(x) < 1 or min(y) < 1:
        raise ValueError("green endpoints must be strictly inside the quadrant")
    horizon = cfg.horizon if cfg.horizon is not None else _default_horizon(x, y)
    if horizon < 1 or cfg.n_paths < 1:
        raise ValueError("n_paths and horizon must be >= 1")
    w = _twist_weight(cfg.twist, x, y)
    sums, sqs, _, alive = _visit_stats(
        dist, [x], [y], horizon, cfg.seed, cfg.n_paths, cfg.twist
    )
    n = cfg.n_paths
    mean_v = sums[0][0] / n
    var_v = max(0.0, (sqs[0][0] - n * mean_v * mean_v) / max(1, n - 1))
    return SimEstimate(
        mean=w * mean_v,
        std_error=w * math.sqrt(var_v / n),
        n_paths=n,
        horizon=horizon,
        censored_fraction=alive[0] / n,
    )


_MARTIN_BASE = (1, 1)


def martin_kernel_profile(
    dist: StepDistribution, x, ys: Sequence, cfg: SimConfig
) -> list[SimEstimate]:
    """Martin kernel G(x, y) / G((1,1), y) for several y in one simulation.

    Both starts consume the same increment stream (common random
    numbers), which cancels most of the noise in the ratio; the standard
    error comes from the delta method with the across-path covariance.
    """
    _require_valid(dist)
    x = (int(x[0]), int(x[1]))
    ys = [(int(y[0]), int(y[1])) for y in ys]
    if min(x) < 1 or any(min(y) < 1 for y in ys):
        raise ValueError("martin endpoints must be strictly inside the quadrant")
    horizon = (
        cfg.horizon
        if cfg.horizon is not None
        else max(_default_horizon(x, y) for y in ys)
    )
    if horizon < 1 or cfg.n_paths < 1:
        raise ValueError("n_paths and horizon must be >= 1")
    sums, sqs, crosses, alive = _visit_stats(
        dist, [x, _MARTIN_BASE], ys, horizon, cfg.seed, cfg.n_paths, cfg.twist
    )
    n = cfg.n_paths
    out = []
    for ti, y in enumerate(ys):
        w_a = _twist_weight(cfg.twist, x, y)
        w_b = _twist_weight(cfg.twist, _MARTIN_BASE, y)
        sum_a, sum_b = w_a * sums[0][ti], w_b * sums[1][ti]
        if sum_b == 0.0:
            raise SolverError(
                f"no visits to {y} from {_MARTIN_BASE}; increase n_paths/horizon"
            )
        mean_a, mean_b = sum_a / n, sum_b / n
        var_a = max(0.0, (w_a * w_a * sqs[0][ti] - n * mean_a**2) / max(1, n - 1))
        var_b = max(0.0, (w_b * w_b * sqs[1][ti] - n * mean_b**2) / max(1, n - 1))
        cov = (w_a * w_b * crosses[ti] - n * mean_a * mean_b) / max(1, n - 1)
        ratio = mean_a / mean_b
        var_r = max(
            0.0, (var_a + ratio * ratio * var_b - 2.0 * ratio * cov)
        ) / (n * mean_b * mean_b)
        out.append(
            SimEstimate(
                mean=ratio,
                std_error=math.sqrt(var_r),
                n_paths=n,
                horizon=horizon,
                censored_fraction=max(alive[0], alive[1]) / n,
            )
        )
    return out


def martin_kernel_estimate(dist: StepDistribution, x, y, cfg: SimConfig) -> SimEstimate:
    return martin_kernel_profile(dist, x, [y], cfg)[0]


def green_direction_scan(
    dist: StepDistribution, x, u, radii: Sequence, cfg: SimConfig
) -> list[ScanPoint]:
    """sqrt(|y|)-scaled, twist-corrected Green values along a direction.

    Each radius r maps to the lattice point y closest to r*u; the twist
    is recomputed from the rounded direction y/|y| so the correction
    matches the point actually simulated.  The scaled value equals
    sqrt(|y|) * exp(-<phi, x - y>) * G(x, y), which converges to a
    positive limit along the ray.
    """
    _require_valid(dist)
    geom = find_extrema(dist)
    u1, u2 = float(u[0]), float(u[1])
    norm = math.hypot(u1, u2)
    if norm <= 0 or u1 <= 0 or u2 <= 0:
        raise ValueError("scan direction must point strictly into the quadrant")
    u1, u2 = u1 / norm, u2 / norm
    out = []
    for r in radii:
        r = float(r)
        if r <= 0:
            raise ValueError("radii must be positive")
        y = (max(1, round(r * u1)), max(1, round(r * u2)))
        ny = math.hypot(y[0], y[1])
        twist = cramer_transform(geom, (y[0] / ny, y[1] / ny))
        cfg_y = SimConfig(
            seed=cfg.seed, n_paths=cfg.n_paths, horizon=cfg.horizon, twist=twist
        )
        est = estimate_green(dist, x, y, cfg_y)
        corr = math.sqrt(ny) * _twist_weight(twist, y, x)  # exp(-<phi, x-y>)
        out.append(
            ScanPoint(
                radius=r,
                y=y,
                norm=ny,
                value=corr * est.mean,
                std_error=corr * est.std_error,
            )
        )
    return out


def skipfree_exit_root(
    dist: StepDistribution, twist: CramerData | None = None, tol: float = 1e-13
) -> float:
    """Root in (0, 1) of the vertical-marginal descent equation.

    The height coordinate moves down by at most one per step, so the
    chance of ever reaching the horizontal axis from height z is c^z,
    where c solves sum_j P(dj = j) c^j = 1 on (0, 1).  Returns 1.0 when
    the vertical drift is <= 0 (descent is then certain) and 0.0 in the
    degenerate case of no downward step at all.
    """
    _require_valid(dist)
    steps, probs = _twisted_probs(dist, twist)
    marg: dict[int, float] = {}
    for (_, dj), p in zip(steps.tolist(), probs.tolist()):
        marg[dj] = marg.get(dj, 0.0) + p
    mu2 = math.fsum(j * p for j, p in marg.items())
    if mu2 <= 1e-12:
        return 1.0
    if marg.get(-1, 0.0) <= 0.0:
        return 0.0

    items = sorted(marg.items())

    def psi(cv: float) -> float:
        return math.fsum(p * cv**j for j, p in items) - 1.0

    def dpsi(cv: float) -> float:
        return math.fsum(p * j * cv ** (j - 1) for j, p in items)

    lo = 0.5
    while psi(lo) <= 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise SolverError("no sign change for the exit root")
    hi = 1.0 - 2.0**-20
    while psi(hi) >= 0.0:
        hi = 1.0 - (1.0 - hi) * 0.25
        if 1.0 - hi < 1e-14:
            return 1.0
    for _ in range(200):
        if hi - lo <= 1e-14:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if psi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    c = 0.5 * (lo + hi)
    for _ in range(5):
        d = dpsi(c)
        if d == 0.0:
            break
        step = psi(c) / d
        cn = c - step
        if not (lo - 1e-12 <= cn <= hi + 1e-12) or cn == c:
            break
        c = cn
        if abs(step) < 1e-16:
            break
    return c


def brownian_halfplane_kernel(t: float, x, y, mu, sigma) -> float:
    """Transition density of the killed Brownian limit in the half plane.

    The absorbing factor (1 - exp(-2 x2 y2 / (t s11))) vanishes exactly
    on the boundary and the remainder is the free Gaussian density with
    covariance t*sigma around x + t*mu.  For x2*y2/(t*s11) small the
    value is equivalent to the product of the factor and the Gaussian
    upper bound.
    """
    t = float(t)
    if t <= 0:
        raise ValueError("time must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x[1] < 0 or y[1] < 0:
        raise ValueError("boundary distances x2, y2 must be nonnegative")
    s = np.asarray(sigma, dtype=float)
    if s.shape != (2, 2) or abs(s[0, 1] - s[1, 0]) > 1e-12 * (1 + abs(s).max()):
        raise ValueError("sigma must be a symmetric 2x2 matrix")
    w, v = np.linalg.eigh(s)
    if w.min() <= 1e-14 * max(1.0, w.max()):
        raise SolverError("covariance matrix is not positive definite")
    root_inv = (v * (w**-0.5)) @ v.T  # symmetric inverse square root
    d = y - x - t * mu
    quad = float(np.dot(root_inv @ d, root_inv @ d)) / (2.0 * t)
    gauss = math.exp(-quad) / (2.0 * math.pi * t * math.sqrt(float(w.prod())))
    absorb = -math.expm1(-2.0 * x[1] * y[1] / (t * s[0, 0]))
    return absorb * gauss
