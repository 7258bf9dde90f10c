"""Bilateral exponential series that vanish on the quadrant boundary.

Starting from a point (a0, b0) on the open arc G0, alternately switching
the two curve roots produces a two-sided chain

    ... b_{-1} -> a_0, b_0 -> a_1 = f_hat(b_0), b_1 = g_hat(a_1) -> ...

whose consecutive switches each descend by at least c1 (horizontal) or c2
(vertical).  The signed sum

    h(i, j) = sum_n  exp(i*a_n + j*b_n) - exp(i*a_{n+1} + j*b_n)

is harmonic for the killed walk, vanishes on both axes (each row pairs
off exactly), and converges geometrically with ratio
exp(-(c1+c2)*(i+j)); the minimal descent also yields a computable
envelope that dominates every discarded term, so truncation error is
reported as a hard bound rather than an estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .curve import (
    CurveGeometry,
    SolverError,
    f_branch,
    f_hat,
    g_branch,
    g_hat,
    f_tilde,
    g_tilde,
    in_G0,
    _slope,
)
from .model import log_kernel_eval

__all__ = [
    "CompensationSequence",
    "HarmonicValue",
    "PrecisionWarning",
    "canonicalize_start",
    "build_sequence",
    "harmonic_eval",
    "escape_probability",
    "boundary_harmonic",
]


class PrecisionWarning(UserWarning):
    """The requested evaluation exceeds what the built truncation supports."""


@dataclass(frozen=True)
class HarmonicValue:
    value: float
    tail_bound: float  # rigorous bound on the discarded mass
    terms_used: int


@dataclass(frozen=True)
class CompensationSequence:
    """Truncated two-sided switching chain with envelope constants.

    ``a_vals`` holds a_n for n in [n_min, n_max + 1] and ``b_vals`` holds
    b_n for n in [n_min, n_max]; term n of the series uses (a_n, b_n,
    a_{n+1}).  The envelope anchored at (a0, b0) with gaps (c1, c2)
    dominates the stored chain termwise and extends it to infinity.
    """

    start: tuple[float, float]
    n_min: int
    n_max: int
    a_vals: tuple[float, ...]
    b_vals: tuple[float, ...]
    c1: float
    c2: float
    a0: float
    b0: float
    truncation_tol: float
    imin: int

    def a(self, n: int) -> float:
        if not (self.n_min <= n <= self.n_max + 1):
            raise IndexError(f"a({n}) outside stored range")
        return self.a_vals[n - self.n_min]

    def b(self, n: int) -> float:
        if not (self.n_min <= n <= self.n_max):
            raise IndexError(f"b({n}) outside stored range")
        return self.b_vals[n - self.n_min]


def _on_curve(geom: CurveGeometry, point, tol: float = 1e-6) -> bool:
    return abs(log_kernel_eval(geom.dist, point[0], point[1])) <= tol


def canonicalize_start(geom: CurveGeometry, point, max_hops: int = 1000):
    """Walk a curve point along the switching orbit until it lands in G0.

    Points already in G0 are returned (snapped onto the graph).  Points
    beyond the branch maxima climb back: each hop replaces one coordinate
    by the other root of its section, gaining at least c1 or c2, so the
    hop count is bounded and capped at ``max_hops``.  The two branch
    maxima themselves sit on a degenerate orbit (switching returns the
    same point) and are rejected.
    """
    a, b = float(point[0]), float(point[1])
    if not _on_curve(geom, (a, b)):
        raise ValueError(
            f"start {point!r} is not on the zero curve "
            f"(residual {log_kernel_eval(geom.dist, a, b)!r})"
        )
    snap = 1e-7
    for _ in range(max_hops):
        # Done when the point sits on one of the two G0 graph pieces.
        if geom.x0 < a <= snap:
            fa = f_branch(geom, min(a, 0.0))
            if abs(b - fa) <= snap:
                return (min(a, 0.0), fa)
        if geom.y0 < b <= snap:
            gb = g_branch(geom, min(b, 0.0))
            if abs(a - gb) <= snap:
                return (gb, min(b, 0.0))
        if b > snap:
            # Positive height: (a, b) = (f_hat(b), b) with b in (0, f(x0)];
            # cross to the inverse branch of f.
            a_new = f_tilde(geom, b)
            if abs(a_new - a) <= 1e-12:
                raise ValueError(
                    "start lies on the degenerate orbit through a branch maximum"
                )
            a = a_new
            continue
        if a > snap:
            b_new = g_tilde(geom, a)
            if abs(b_new - b) <= 1e-12:
                raise ValueError(
                    "start lies on the degenerate orbit through a branch maximum"
                )
            b = b_new
            continue
        # Lower-left region: climb by switching the smaller coordinate up.
        fa = f_branch(geom, a)
        if b < fa - snap:
            b = fa
            continue
        gb = g_branch(geom, b)
        if a < gb - snap:
            a = gb
            continue
        raise SolverError(f"canonicalization stalled at {(a, b)!r}")
    raise SolverError(f"canonicalization exceeded {max_hops} hops")


def _tail_pieces(i, j, a0, b0, c1, c2, n_max, n_neg):
    """Envelope tails beyond the stored range [-n_neg, n_max].

    Every discarded positive-side term is dominated by the chain anchored
    at b0 descending exactly (c1, c2) per switch:
        exp(i*a_n + j*b_n)     <= exp((i+j)*b0 + i*c2) * q^n
        exp(i*a_{n+1} + j*b_n) <= exp((i+j)*b0 - i*c1) * q^n
    with q = exp(-(c1+c2)*(i+j)); symmetrically below with anchor a0 and
    the roles of i and j (and of c1 and c2) exchanged.
    """
    m = i + j
    q = math.exp(-(c1 + c2) * m)
    up = (
        math.exp(m * b0)
        * (math.exp(i * c2) + math.exp(-i * c1))
        * q ** (n_max + 1)
        / (1.0 - q)
    )
    down = (
        math.exp(m * a0)
        * (math.exp(j * c1) * q ** (n_neg + 1) + math.exp(-j * c2) * q**n_neg)
        / (1.0 - q)
    )
    return up, down


def build_sequence(
    geom: CurveGeometry,
    start,
    truncation_tol: float = 1e-14,
    imin: int = 1,
) -> CompensationSequence:
    """Iterate the switching chain far enough for the requested accuracy.

    The truncation range is chosen so the envelope tail at total degree
    ``imin`` (the worst case; tails only shrink as i+j grows) is below
    ``truncation_tol``.  ``start`` must lie in G0 — canonicalize first if
    it does not.
    """
    if imin < 1:
        raise ValueError("imin must be >= 1")
    if not (truncation_tol > 0):
        raise ValueError("truncation_tol must be positive")
    a0, b0 = float(start[0]), float(start[1])
    if not in_G0(geom, (a0, b0), tol_perp=1e-7):
        raise ValueError(f"start {start!r} is not in G0; canonicalize it first")
    # Snap exactly onto whichever graph piece the start sits on, so the
    # switching recursion does not inherit the caller's rounding.
    snapped = False
    if geom.x0 < a0 <= 1e-7:
        fa = f_branch(geom, min(a0, 0.0))
        if abs(b0 - fa) <= 1e-7:
            a0, b0 = min(a0, 0.0), fa
            snapped = True
    if not snapped and geom.y0 < b0 <= 1e-7:
        ga = g_branch(geom, min(b0, 0.0))
        if abs(a0 - ga) <= 1e-7:
            a0, b0 = ga, min(b0, 0.0)
            snapped = True
    if not snapped:  # unreachable after the in_G0 gate, kept as a tripwire
        raise ValueError(f"start {start!r} matches neither graph piece of G0")

    # Worst-case envelope at total degree imin decides the range.
    m = imin if imin >= 2 else 1
    q = math.exp(-(geom.c1 + geom.c2) * m)
    half = 0.5 * truncation_tol

    def _need(anchor: float, bulge: float) -> int:
        # smallest n with exp(m*anchor)*bulge*q^n/(1-q) <= half
        lead = math.exp(m * anchor) * bulge / (1.0 - q)
        if lead <= half:
            return 1
        n = math.log(half / lead) / math.log(q)
        return max(1, math.ceil(n - 1e-9))

    n_pos = _need(b0, math.exp(m * geom.c2) + 1.0)
    n_neg = _need(a0, math.exp(m * geom.c1) * q + 1.0) + 1
    if max(n_pos, n_neg) > 100000:
        raise SolverError("truncation range exploded; tolerance unreachable")

    a_up = [a0]
    b_up = [b0]
    for n in range(1, n_pos + 2):  # one extra a for the last term
        a_next = f_hat(geom, b_up[-1])
        a_up.append(a_next)
        if n <= n_pos:
            b_up.append(g_hat(geom, a_next))
    a_dn = []
    b_dn = []
    a_ref = a0
    for n in range(1, n_neg + 1):
        b_prev = g_hat(geom, a_ref)
        a_prev = f_hat(geom, b_prev)
        b_dn.append(b_prev)
        a_dn.append(a_prev)
        a_ref = a_prev

    a_vals = tuple(reversed(a_dn)) + tuple(a_up)
    b_vals = tuple(reversed(b_dn)) + tuple(b_up)
    seq = CompensationSequence(
        start=(a0, b0),
        n_min=-n_neg,
        n_max=n_pos,
        a_vals=a_vals,
        b_vals=b_vals,
        c1=geom.c1,
        c2=geom.c2,
        a0=a0,
        b0=b0,
        truncation_tol=truncation_tol,
        imin=imin,
    )
    _check_descent(seq)
    return seq


def _check_descent(seq: CompensationSequence) -> None:
    # Interlacing (b_n > a_{n+1} > b_{n+1} above the start, and its mirror
    # a_{n+1} > b_n > a_n below) always holds for exact chains; a gross
    # violation means a solver landed on the wrong root, which must never
    # pass silently.
    slack = 1e-6
    for n in range(0, seq.n_max):
        if not (seq.b(n) > seq.a(n + 1) - slack > seq.b(n + 1) - 2 * slack):
            raise SolverError(f"switching chain lost interlacing near n={n}")
    for n in range(seq.n_min, 0):
        if not (seq.a(n + 1) > seq.b(n) - slack > seq.a(n) - 2 * slack):
            raise SolverError(f"switching chain lost interlacing near n={n}")


def harmonic_eval(seq: CompensationSequence, i: int, j: int) -> HarmonicValue:
    """Evaluate the truncated series at integer (i, j), with a tail bound.

    On either axis the series telescopes to an exact zero, so 0.0 is
    returned directly with a zero bound.  Interior evaluations require
    i + j >= imin, the degree the truncation was built for.
    """
    i, j = int(i), int(j)
    if i < 0 or j < 0:
        raise ValueError("lattice point must be in the closed quadrant")
    if i == 0 or j == 0:
        return HarmonicValue(0.0, 0.0, 0)
    if i + j < seq.imin:
        raise ValueError(
            f"evaluation at degree {i + j} below the built imin={seq.imin}"
        )
    terms: list[float] = []
    # accumulate from the outermost indices inward; fsum is exact anyway,
    # but the stated order costs nothing and documents intent
    order = sorted(range(seq.n_min, seq.n_max + 1), key=lambda n: (-abs(n), n))
    for n in order:
        an, bn, an1 = seq.a(n), seq.b(n), seq.a(n + 1)
        terms.append(math.exp(i * an + j * bn))
        terms.append(-math.exp(i * an1 + j * bn))
    value = math.fsum(terms)
    up, down = _tail_pieces(
        i, j, seq.a0, seq.b0, seq.c1, seq.c2, seq.n_max, -seq.n_min
    )
    tail = up + down
    if tail > seq.truncation_tol:
        warnings.warn(
            f"tail bound {tail:.3e} exceeds the built tolerance "
            f"{seq.truncation_tol:.3e} at (i,j)=({i},{j})",
            PrecisionWarning,
            stacklevel=2,
        )
    return HarmonicValue(value, tail, seq.n_max - seq.n_min + 1)


def escape_probability(
    geom: CurveGeometry, i: int, j: int, tol: float = 1e-14
) -> HarmonicValue:
    """P(the walk from (i, j) never leaves the open quadrant).

    This is the normalized harmonic function built from the start (0, 0)
    (the curve point with alpha = beta = 1).  Defined for interior points
    i, j >= 1; the drift-interior requirement is inherited from the
    geometry construction.
    """
    i, j = int(i), int(j)
    if i < 1 or j < 1:
        raise ValueError("escape probability is defined for interior points")
    seq = build_sequence(geom, (0.0, 0.0), truncation_tol=tol, imin=i + j)
    return harmonic_eval(seq, i, j)


def boundary_harmonic(
    geom: CurveGeometry, i: int, j: int, tol: float = 1e-12
) -> float:
    """Positive harmonic limit along the horizontal boundary direction.

    Obtained as twice the derivative of the one-sided chain anchored at
    the lower branch maximum (g(y0), y0) with respect to the anchor
    height.  The chain derivative recursion rides along the chain itself:
    each switch multiplies by the local inverse-branch slope, and the
    leading coefficients are a0' = g'(y0) = 0, b0' = 1.
    """
    i, j = int(i), int(j)
    if i < 1 or j < 1:
        raise ValueError("boundary harmonic is defined for interior points")
    if not (tol > 0):
        raise ValueError("tol must be positive")

    dist = geom.dist
    m = i + j
    q = math.exp(-(geom.c1 + geom.c2) * m)

    a_n = geom.g_at_y0
    b_n = geom.y0
    da_n = 0.0  # horizontal branch is flat at its maximum
    db_n = 1.0
    prod_max = 1.0
    terms: list[float] = []
    for _ in range(10000):
        a_next = f_hat(geom, b_n)
        # slope of the lower x-root in y at (a_{n+1}, b_n)
        da_next = _slope(dist, a_next, b_n, "y") * db_n
        terms.append(
            (i * da_n + j * db_n) * math.exp(i * a_n + j * b_n)
            - (i * da_next + j * db_n) * math.exp(i * a_next + j * b_n)
        )
        b_next = g_hat(geom, a_next)
        db_next = _slope(dist, a_next, b_next, "x") * da_next
        prod_max = max(prod_max, abs(da_next), abs(db_next))
        # Remaining terms are dominated by the envelope times the largest
        # derivative product seen (the products converge monotonically).
        rem = 2.0 * m * 2.0 * prod_max * math.exp(i * a_next + j * b_next) / (1.0 - q)
        a_n, b_n, da_n, db_n = a_next, b_next, da_next, db_next
        if rem < tol and len(terms) >= 3:
            break
    else:
        raise SolverError("boundary-harmonic series failed to converge")
    return 2.0 * math.fsum(terms)
