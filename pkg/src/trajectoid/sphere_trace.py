"""Rolling a sphere along a planar path.

The contact point traces a curve T_K on the sphere of radius 1/K whose
geodesic curvature equals the planar curvature.  We integrate the Darboux
frame ``(p, t, u)`` of that curve on the unit sphere, with ``u = p x t``:

    dp/ds = K t,    dt/ds = -K p + kappa u,    du/ds = -kappa t

The initial frame is fixed at ``p = (0, 0, 1)``, ``t = (1, 0, 0)``.

:func:`net_rotation` integrates the body rotation of the rolling sphere
instead, using a different scheme (fourth order Magnus on the planar tangent
angle).  Apart from node placement and the matrix-product scan it shares no
code with :func:`trace`, and serves as an independent closure check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import StepTooCoarse
from .path_model import PlanarPath, path_from_curvature

MIN_STEPS = 4096
STEP_TOL = 1e-9
# chunk size (steps x K values) for batched propagation
_BATCH_CELLS = 400_000

FRAME0 = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
# the rolling body sees the trace mirrored through the tangent plane at the start
MIRROR = np.diag([1.0, 1.0, -1.0])


@dataclass(frozen=True)
class DarbouxFrame:
    p: np.ndarray
    t: np.ndarray
    u: np.ndarray


@dataclass(frozen=True, eq=False)
class SphericalTrace:
    """The curve T_K* on the unit sphere (scale by 1/K for the physical sphere).

    ``frames[i]`` holds the rows ``p, t, u`` at arclength ``s[i]``.
    """

    K: float
    s: np.ndarray
    frames: np.ndarray
    kappa: np.ndarray

    @property
    def p(self):
        return self.frames[:, 0, :]

    @property
    def t(self):
        return self.frames[:, 1, :]

    @property
    def u(self):
        return self.frames[:, 2, :]

    @property
    def A(self):
        return self.frames[0, 0]

    @property
    def B(self):
        return self.frames[-1, 0]

    @property
    def L(self):
        return float(self.s[-1])

    def frame(self, i) -> DarbouxFrame:
        f = self.frames[i]
        return DarbouxFrame(f[0].copy(), f[1].copy(), f[2].copy())

    def __len__(self):
        return len(self.s)


@dataclass(frozen=True)
class NetRotation:
    matrix: np.ndarray
    angle: float
    axis: np.ndarray


def default_steps(path: PlanarPath, tol=STEP_TOL) -> int:
    """Step count meeting ``tol`` for every K up to pi/L.

    Depends on the path only, so traces at different K share their nodes.
    """
    L = path.period_length
    rate = max(float(np.max(np.abs(path.kappa))), math.pi / L)
    h = (tol / (rate * L)) ** 0.25 / rate
    return max(4 * len(path.s), MIN_STEPS, math.ceil(1.01 * L / h))


def step_nodes(path: PlanarPath, steps=None):
    """Integration nodes: the path's own nodes, each interval split evenly."""
    target = steps if steps is not None else default_steps(path)
    n_int = len(path.s) - 1
    sub = max(1, math.ceil(target / n_int))
    frac = np.arange(sub) / sub
    s = (path.s[:-1, None] + np.diff(path.s)[:, None] * frac[None, :]).ravel()
    s = np.append(s, path.s[-1])
    return s, path.kappa_at(s)


def _rk4_propagators(Ks, s, kappa):
    """Classical RK4 step matrices for the linear Darboux system.

    For ``Y' = Omega(s) Y`` one RK4 step is ``Y -> P Y`` with
    ``P = I + h/6 (k1 + 2 k2 + 2 k3 + k4)`` and the stages written as matrix
    products; the entries below are that product expanded.  Returns P with
    shape (len(Ks), len(s) - 1, 3, 3).
    """
    K = np.asarray(Ks, float)[:, None]
    h = np.diff(s)[None, :]
    k0 = kappa[None, :-1]
    k1 = kappa[None, 1:]
    km = 0.5 * (k0 + k1)
    K2, km2, h2 = K * K, km * km, h * h
    P = np.empty(np.broadcast_shapes(K.shape, h.shape) + (3, 3))
    P[..., 0, 0] = 1.0 - K2 * h2 / 2.0 + K2 * h2 * h2 * (K2 + km2) / 24.0
    P[..., 0, 1] = K * h * (1.0 - h2 * (2.0 * K2 + k0 * km + km2) / 12.0)
    P[..., 0, 2] = K * h2 * (4.0 * k0 + 8.0 * km - h2 * k0 * (K2 + km2)) / 24.0
    P[..., 1, 0] = -K * h * (1.0 - h2 * (2.0 * K2 + k1 * km + km2) / 12.0)
    P[..., 1, 1] = (1.0 - h2 * (3.0 * K2 + k0 * km + k1 * km + km2) / 6.0
                    + h2 * h2 * (K2 * K2 + K2 * km * (k0 + k1) + k0 * k1 * km2) / 24.0)
    c = K2 * (k0 + km) + km2 * (k0 + k1)
    P[..., 1, 2] = h * (2.0 * k0 + 2.0 * k1 + 8.0 * km - h2 * c) / 12.0
    P[..., 2, 0] = K * h2 * (4.0 * k1 + 8.0 * km - h2 * k1 * (K2 + km2)) / 24.0
    c = K2 * (k1 + km) + km2 * (k0 + k1)
    P[..., 2, 1] = -h * (2.0 * k0 + 2.0 * k1 + 8.0 * km - h2 * c) / 12.0
    P[..., 2, 2] = 1.0 - h2 * km * (k0 + k1 + km) / 6.0 + h2 * h2 * k0 * k1 * (K2 + km2) / 24.0
    return P


def _prefix_products(P):
    """Q[k] = P[k] @ P[k-1] @ ... @ P[0] along axis -3.

    Blocked scan: sequential products inside blocks of about sqrt(m) steps
    (vectorised over blocks), then across block totals.
    """
    lead = P.shape[:-3]
    m = P.shape[-3]
    b = max(1, math.isqrt(m))
    nb = -(-m // b)
    pad = nb * b - m
    if pad:
        eye = np.broadcast_to(np.eye(3), lead + (pad, 3, 3))
        P = np.concatenate([P, eye], axis=-3)
    Pb = P.reshape(lead + (nb, b, 3, 3))
    Q = np.empty_like(Pb)
    Q[..., 0, :, :] = Pb[..., 0, :, :]
    for j in range(1, b):
        Q[..., j, :, :] = Pb[..., j, :, :] @ Q[..., j - 1, :, :]
    T = Q[..., b - 1, :, :]
    C = np.empty_like(T)
    C[..., 0, :, :] = np.eye(3)
    for i in range(1, nb):
        C[..., i, :, :] = T[..., i - 1, :, :] @ C[..., i - 1, :, :]
    Q = Q @ C[..., :, None, :, :]
    return Q.reshape(lead + (nb * b, 3, 3))[..., :m, :, :]


def _total_product(P):
    """P[m-1] @ ... @ P[0] along axis -3 by pairwise reduction."""
    while P.shape[-3] > 1:
        if P.shape[-3] % 2:
            P = np.concatenate([P, np.broadcast_to(np.eye(3), P.shape[:-3] + (1, 3, 3))], axis=-3)
        P = P[..., 1::2, :, :] @ P[..., 0::2, :, :]
    return P[..., 0, :, :]


def _orthonormalize(Y):
    """Gram-Schmidt on the frame rows; u is rebuilt as p x t."""
    p = Y[..., 0, :]
    p = p / np.linalg.norm(p, axis=-1, keepdims=True)
    t = Y[..., 1, :]
    t = t - np.sum(t * p, axis=-1, keepdims=True) * p
    t = t / np.linalg.norm(t, axis=-1, keepdims=True)
    return np.stack([p, t, np.cross(p, t)], axis=-2)


def _check_resolution(K, s, kappa, tol):
    h = float(np.max(np.diff(s)))
    rate = max(float(K), float(np.max(np.abs(kappa))))
    # global RK4 error ~ (h rate)^4 * rate * L
    est = (h * rate) ** 4 * rate * float(s[-1])
    if est > tol:
        raise StepTooCoarse(
            f"estimated integration error {est:.2e} exceeds {tol:.1e}; increase steps")


def trace_frames(path: PlanarPath, Ks, steps=None, tol=STEP_TOL):
    """Frames of T_K* for many K values at once.

    Returns ``(s, kappa, frames)`` with frames shaped (len(Ks), len(s), 3, 3).
    Renormalising the propagated frames is equivalent to renormalising after
    every step because each step acts linearly on an orthonormal frame.
    """
    Ks = np.atleast_1d(np.asarray(Ks, dtype=float))
    if np.any(Ks <= 0.0):
        raise ValueError("K must be positive")
    s, kappa = step_nodes(path, steps)
    _check_resolution(Ks.max(), s, kappa, tol)
    out = np.empty((len(Ks), len(s), 3, 3))
    out[:, 0] = FRAME0
    chunk = max(1, _BATCH_CELLS // len(s))
    for i in range(0, len(Ks), chunk):
        kb = Ks[i:i + chunk]
        Q = _prefix_products(_rk4_propagators(kb, s, kappa))
        out[i:i + chunk, 1:] = _orthonormalize(Q @ FRAME0)
    return s, kappa, out


def end_frames(path: PlanarPath, Ks, steps=None, tol=STEP_TOL):
    """Final frames (at B) for many K values, without storing the trace."""
    Ks = np.atleast_1d(np.asarray(Ks, dtype=float))
    if np.any(Ks <= 0.0):
        raise ValueError("K must be positive")
    s, kappa = step_nodes(path, steps)
    _check_resolution(Ks.max(), s, kappa, tol)
    out = np.empty((len(Ks), 3, 3))
    chunk = max(1, _BATCH_CELLS // len(s))
    for i in range(0, len(Ks), chunk):
        kb = Ks[i:i + chunk]
        out[i:i + chunk] = _orthonormalize(_total_product(_rk4_propagators(kb, s, kappa)) @ FRAME0)
    return out


def trace(path: PlanarPath, K: float, steps=None, tol=STEP_TOL) -> SphericalTrace:
    """Trace one period of ``path`` on the sphere of inverse radius ``K``.

    Parameters
    ----------
    path : PlanarPath
    K : float
        Inverse sphere radius, positive.
    steps : int, optional
        Target number of RK4 steps; default ``max(4 * samples, 4096)``.

    Raises
    ------
    StepTooCoarse
        If the estimated global integration error exceeds ``tol``.
    """
    if not K > 0.0:
        raise ValueError(f"K must be positive, got {K}")
    s, kappa, frames = trace_frames(path, [K], steps, tol)
    return SphericalTrace(K=float(K), s=s, frames=frames[0], kappa=kappa)


def central_angle(a, b):
    """Great-circle angle between unit vectors, accurate for small angles."""
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


def endpoint_distance(tr: SphericalTrace) -> float:
    """Spherical distance d_T(K) between A and B on the radius-1/K sphere."""
    return float(central_angle(tr.A, tr.B)) / tr.K


def arc_length(tr: SphericalTrace) -> float:
    """Angular length of the trace on the unit sphere.

    Chord angles are summed and each is lengthened by ``k**2 l**3 / 24``,
    the excess of an arc of geodesic curvature k over its great-arc chord l.
    """
    ell = central_angle(tr.p[:-1], tr.p[1:])
    kg = 0.5 * (tr.kappa[:-1] + tr.kappa[1:]) / tr.K
    return float(np.sum(ell + kg * kg * ell ** 3 / 24.0))


def geodesic_curvature(tr: SphericalTrace) -> np.ndarray:
    """Geodesic curvature at the nodes (radius-1/K sphere) measured from the frames.

    Each step's relative rotation ``Y[k+1] Y[k]^T`` has generator
    ``h * Omega``; its (t, u) entry gives the mean curvature over the step.
    """
    rel = tr.frames[1:] @ np.swapaxes(tr.frames[:-1], -1, -2)
    rotvec = Rotation.from_matrix(rel).as_rotvec()
    h = np.diff(tr.s)
    mean = -rotvec[:, 0] / h
    node = np.empty(len(tr.s))
    node[1:-1] = (mean[:-1] * h[1:] + mean[1:] * h[:-1]) / (h[:-1] + h[1:])
    if len(mean) > 1:
        node[0] = 1.5 * mean[0] - 0.5 * mean[1]
        node[-1] = 1.5 * mean[-1] - 0.5 * mean[-2]
    else:
        node[0] = node[-1] = mean[0]
    return node


def develop(tr: SphericalTrace) -> PlanarPath:
    """Unroll T_K* onto the plane using its measured geodesic curvature."""
    kappa = geodesic_curvature(tr)
    return path_from_curvature(np.column_stack([tr.s, kappa]), tr.L,
                               allow_open=True, jump_threshold=np.inf)


def _hat(v):
    m = np.zeros(v.shape[:-1] + (3, 3))
    m[..., 0, 1] = -v[..., 2]
    m[..., 0, 2] = v[..., 1]
    m[..., 1, 0] = v[..., 2]
    m[..., 1, 2] = -v[..., 0]
    m[..., 2, 0] = -v[..., 1]
    m[..., 2, 1] = v[..., 0]
    return m


def rolling_rotations(path: PlanarPath, K: float, steps=None):
    """Body orientations R(s) of a sphere of inverse radius K rolling along ``path``.

    The sphere rolls without slip or spin on the plane z = 0; its angular
    velocity per unit arclength is ``K * (z x tangent)``.  The planar tangent
    is measured relative to the start tangent.  Returns ``(s, R)`` with R[0]
    the identity.
    """
    s, _ = step_nodes(path, steps)
    h = np.diff(s)
    c = math.sqrt(3.0) / 6.0
    s1 = s[:-1] + (0.5 - c) * h
    s2 = s[:-1] + (0.5 + c) * h
    th1 = path.tangent_angle(s1) - path.start_angle
    th2 = path.tangent_angle(s2) - path.start_angle
    w1 = K * np.column_stack([-np.sin(th1), np.cos(th1), np.zeros_like(th1)])
    w2 = K * np.column_stack([-np.sin(th2), np.cos(th2), np.zeros_like(th2)])
    phi = 0.5 * h[:, None] * (w1 + w2) - (math.sqrt(3.0) / 12.0) * (h * h)[:, None] * np.cross(w1, w2)
    steps_R = Rotation.from_rotvec(phi).as_matrix()
    R = np.empty((len(s), 3, 3))
    R[0] = np.eye(3)
    R[1:] = _prefix_products(steps_R)
    return s, R


def net_rotation(path: PlanarPath, K: float, steps=None) -> NetRotation:
    """Composed body rotation M(K) after rolling one period."""
    _, R = rolling_rotations(path, K, steps)
    M = R[-1]
    rv = Rotation.from_matrix(M).as_rotvec()
    angle = float(np.linalg.norm(rv))
    axis = rv / angle if angle > 0.0 else np.array([0.0, 0.0, 1.0])
    return NetRotation(matrix=M, angle=angle, axis=axis)


def contact_curve(path: PlanarPath, K: float, steps=None):
    """Contact points predicted by the rolling picture, in the trace's gauge."""
    s, R = rolling_rotations(path, K, steps)
    c = np.swapaxes(R, -1, -2) @ np.array([0.0, 0.0, -1.0])
    return s, c @ MIRROR


def closure_residual(M, n: int) -> float:
    """Frobenius norm of M^n - I."""
    return float(np.linalg.norm(np.linalg.matrix_power(M, n) - np.eye(3)))


def write_trace_csv(tr: SphericalTrace, target) -> None:
    """Write s, p and t (unit sphere) per node; ``target`` is a filename or text file."""
    if hasattr(target, "write"):
        _write_trace_rows(tr, target)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write_trace_rows(tr, fh)


def _write_trace_rows(tr, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["s", "px", "py", "pz", "tx", "ty", "tz"])
    for s, f in zip(tr.s, tr.frames):
        w.writerow([repr(float(s))] + [repr(float(v)) for v in (*f[0], *f[1])])