"""Interference footprint geometry.

Every transmitter on the unlicensed band denies an interference disk to VANET
users. The scheduler charges each unlicensed assignment the *additional* area
its disk contributes on top of disks already accounted for in the same
subframe, approximated pairwise by the strongest overlap.
"""

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "InterferenceDisk",
    "interference_radius",
    "circle_overlap",
    "additional_area_pair",
    "additional_area",
    "penalty_term",
    "subframe_interference",
    "union_area",
]

# below this center distance two disks are treated as concentric
_CONCENTRIC_EPS = 1e-12


@dataclass(frozen=True)
class InterferenceDisk:
    x: float
    y: float
    radius: float


def interference_radius(tx_power: float, gain_factor: float, fading: float,
                        rx_threshold: float, alpha: float) -> float:
    """Distance at which received power drops to rx_threshold.

    tx_power and rx_threshold in watts, gain_factor and fading linear,
    alpha the path-loss exponent. Solves P_tx * G * h / d^alpha = P_thr.
    """
    for name, v in (("tx_power", tx_power), ("gain_factor", gain_factor),
                    ("fading", fading), ("rx_threshold", rx_threshold),
                    ("alpha", alpha)):
        if not v > 0.0:
            raise ValueError(f"{name} must be positive, got {v!r}")
    return (tx_power * gain_factor * fading / rx_threshold) ** (1.0 / alpha)


def circle_overlap(r_a: float, r_b: float, d: float) -> float:
    """Area shared by two disks whose centers sit d apart.

    The aperture half-angles come from atan2 against the triangle area of
    the center-center-crossing triangle, computed from sorted sides so the
    subtractions stay exact; arccos of a near-unit ratio would lose several
    digits right next to the tangency and containment boundaries. Symmetric
    in the radii.
    """
    ri, rj = (r_a, r_b) if r_a <= r_b else (r_b, r_a)
    if d >= ri + rj:
        return 0.0
    if d < _CONCENTRIC_EPS or d <= rj - ri:
        return math.pi * ri * ri

    ri2, rj2, d2 = ri * ri, rj * rj, d * d
    sx, sy, sz = sorted((d, ri, rj), reverse=True)
    prod = ((sx + (sy + sz)) * (sz - (sx - sy))
            * (sz + (sx - sy)) * (sx + (sy - sz)))
    quad_area = math.sqrt(max(prod, 0.0))  # 4x the triangle area
    half_i = math.atan2(quad_area, d2 + ri2 - rj2)
    half_j = math.atan2(quad_area, d2 + rj2 - ri2)
    return max(ri2 * half_i + rj2 * half_j - 0.5 * quad_area, 0.0)


def additional_area_pair(r_new: float, r_prior: float, d: float) -> float:
    """Extra area the new disk adds beyond one already-counted disk."""
    if d >= r_new + r_prior:
        return math.pi * r_new * r_new
    return math.pi * r_new * r_new - circle_overlap(r_new, r_prior, d)


def additional_area(candidate: InterferenceDisk,
                    occupied: Iterable[InterferenceDisk]) -> float:
    """Additional area of the candidate against an occupied set.

    Minimum of the pairwise additional areas (only the strongest overlap is
    credited); the full circle when the set is empty.
    """
    best = math.pi * candidate.radius ** 2
    for prior in occupied:
        d = math.hypot(candidate.x - prior.x, candidate.y - prior.y)
        f = additional_area_pair(candidate.radius, prior.radius, d)
        if f < best:
            best = f
    return best


def penalty_term(uid: int, holders: Mapping[int, InterferenceDisk]) -> float:
    """Interference charge of one user within a subframe.

    holders maps user id -> disk for every user transmitting on unlicensed
    subchannels in the subframe. Users outside the map are charged nothing.
    Accounting is ordered: a holder is evaluated against the holders with
    smaller ids, so the first accessor pays its whole circle.
    """
    if uid not in holders:
        return 0.0
    prefix = [disk for j, disk in holders.items() if j < uid]
    return additional_area(holders[uid], prefix)


def subframe_interference(holders: Mapping[int, InterferenceDisk]) -> float:
    """Total charged area of a subframe (sum of per-holder penalty terms)."""
    total = 0.0
    prefix: list[InterferenceDisk] = []
    for uid in sorted(holders):
        total += additional_area(holders[uid], prefix)
        prefix.append(holders[uid])
    return total


def union_area(disks: Sequence[InterferenceDisk],
               bounds: tuple[float, float, float, float],
               cell: float = 0.5) -> float:
    """Grid estimate of the union area of disks clipped to a bounding box.

    Diagnostic only; the objective always uses the pairwise accounting above.
    bounds is (xmin, ymin, xmax, ymax).
    """
    xmin, ymin, xmax, ymax = bounds
    nx = max(1, int(math.ceil((xmax - xmin) / cell)))
    ny = max(1, int(math.ceil((ymax - ymin) / cell)))
    xs = xmin + (np.arange(nx) + 0.5) * cell
    ys = ymin + (np.arange(ny) + 0.5) * cell
    covered = np.zeros((nx, ny), dtype=bool)
    for disk in disks:
        i0 = np.searchsorted(xs, disk.x - disk.radius)
        i1 = np.searchsorted(xs, disk.x + disk.radius, side="right")
        j0 = np.searchsorted(ys, disk.y - disk.radius)
        j1 = np.searchsorted(ys, disk.y + disk.radius, side="right")
        if i0 >= i1 or j0 >= j1:
            continue
        dx = xs[i0:i1, None] - disk.x
        dy = ys[None, j0:j1] - disk.y
        covered[i0:i1, j0:j1] |= dx * dx + dy * dy <= disk.radius ** 2
    return float(covered.sum()) * cell * cell
