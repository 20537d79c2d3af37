"""Built-in test paths.

All have period length 1 and zero total turning per period.  The sine path
is shifted in phase so its period is not point-symmetric about the
midpoint (a point-symmetric period has S^D = 0 at every K, which makes the
area root coincide with K_x).
"""

from __future__ import annotations

import math

import numpy as np

from .path_model import PlanarPath, path_from_curvature, path_from_polyline

DEFAULT_SAMPLES = 2001


def sine_path(amplitude=4.0, phase=math.pi / 3, samples=DEFAULT_SAMPLES, L=1.0) -> PlanarPath:
    """kappa(s) = amplitude * sin(2 pi s / L + phase)."""
    s = np.linspace(0.0, L, samples)
    kappa = amplitude * np.sin(2.0 * math.pi * s / L + phase)
    name = "sine" if phase else "sine-symmetric"
    return path_from_curvature(np.column_stack([s, kappa]), L, name=name)


def zigzag_path(slope=math.radians(35.0), fillet=0.12, start=0.25,
                spacing=5e-4) -> PlanarPath:
    """Zigzag with circular fillets at the corners, given as a dense polyline.

    One period: up-slanted segment, right-turning fillet, down-slanted
    segment, left-turning fillet.  ``start`` is the fraction of the
    up-slanted segment at which the period begins.  Rescaled to length 1.
    """
    turn = 2.0 * slope
    pieces = [("line", 1.0 - start), ("arc", -turn), ("line", 1.0),
              ("arc", turn), ("line", start)]
    pts = [np.zeros(2)]
    heading = slope
    for kind, val in pieces:
        pos = pts[-1]
        if kind == "line":
            if val <= 0.0:
                continue
            n = max(2, math.ceil(val / spacing))
            d = np.array([math.cos(heading), math.sin(heading)])
            pts.extend(pos + d * val * k / n for k in range(1, n + 1))
        else:
            n = max(2, math.ceil(abs(val) * fillet / spacing))
            sgn = math.copysign(1.0, val)
            normal = np.array([-math.sin(heading), math.cos(heading)])
            centre = pos + sgn * fillet * normal
            for k in range(1, n + 1):
                h = heading + val * k / n
                pts.append(centre - sgn * fillet * np.array([-math.sin(h), math.cos(h)]))
            heading += val
    v = np.array(pts)
    v /= np.sum(np.hypot(*np.diff(v, axis=0).T))
    # the fillets join the straight pieces with a curvature step by design
    return path_from_polyline(v, closed_period=True, jump_threshold=math.inf, name="zigzag")


def _ramp(t):
    """Smooth step from 0 to 1 on [0, 1] with zero slope and curvature at the ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def meander_path(radius=0.5, straight=0.1, blend=0.1, start=0.3,
                 samples=DEFAULT_SAMPLES) -> PlanarPath:
    """Line, left half-circle, line, right half-circle; rescaled to length 1.

    The period begins at fraction ``start`` of a straight piece.  Curvature
    steps between the pieces are blended over ``blend`` times the arc
    length, centred on each join, so every turn stays exactly pi.
    ``samples`` must be odd so the grid maps onto itself under a half-period
    shift, where the curvature changes sign.
    """
    if samples % 2 == 0:
        raise ValueError("samples must be odd")
    arc = math.pi * radius
    total = 2.0 * straight + 2.0 * arc
    w = blend * arc
    s = np.linspace(0.0, total, samples)

    def bump(s0, s1):
        # periodic indicator of [s0, s1], ramped over width w at both ends
        out = np.zeros_like(s)
        for shift in (-total, 0.0, total):
            q = s - shift
            out += _ramp((q - s0) / w + 0.5) - _ramp((q - s1) / w + 0.5)
        return out

    b1 = (1.0 - start) * straight
    b2 = b1 + arc
    kappa = (bump(b1, b2) - bump(b1 + total / 2, b2 + total / 2)) / radius
    return path_from_curvature(np.column_stack([s / total, kappa * total]), 1.0,
                               name="meander")


def random_fourier_path(seed=7, modes=4, amplitude=5.0, samples=DEFAULT_SAMPLES) -> PlanarPath:
    """Zero-mean random Fourier series curvature with decaying mode weights."""
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, 1.0, samples)
    kappa = np.zeros_like(s)
    for k in range(1, modes + 1):
        a, b = rng.normal(size=2) / k
        kappa += a * np.cos(2.0 * math.pi * k * s) + b * np.sin(2.0 * math.pi * k * s)
    kappa *= amplitude / np.max(np.abs(kappa))
    return path_from_curvature(np.column_stack([s, kappa]), 1.0, name=f"random-{seed}")


def straight_path(L=1.0, samples=17) -> PlanarPath:
    s = np.linspace(0.0, L, samples)
    return path_from_curvature(np.column_stack([s, np.zeros_like(s)]), L, name="straight")


def corpus() -> list[PlanarPath]:
    """The four acceptance paths."""
    return [sine_path(), zigzag_path(), meander_path(), random_fourier_path()]
