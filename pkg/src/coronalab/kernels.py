"""Closed-form harmonic-measure and Green-function references.

Everything here is deterministic and exact up to quadrature on a stated rule:
Mobius arc measure on disks, Poisson kernels for half-spaces and balls,
image-charge Green functions, and the bottom-edge solution on a square summed
as a geometrically convergent image series.  These back the Monte Carlo
estimators in pde and the assertion-grade corona checks.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


def fundamental_solution(dim, x):
    """Free-space Green kernel with the sign making domain Green functions
    nonnegative: -log|x|/2pi in the plane, 1/(4pi|x|) in space."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    if dim == 2:
        return -np.log(r) / TWO_PI
    if dim == 3:
        return 1.0 / (4.0 * math.pi * r)
    raise ConfigError(f"no fundamental solution for dim {dim}")


# ---------------------------------------------------------------------------
# disk (d = 2)


def disk_arc_measure(center, radius, X, a1, a2):
    """Harmonic measure of the boundary arc from angle a1 to a2 (ccw), seen
    from X inside the disk.  Mobius transport to the pole: exact."""
    c = np.asarray(center, dtype=float)
    z = complex(*(np.asarray(X, dtype=float) - c)) / radius
    if abs(z) >= 1.0:
        raise ConfigError("pole must lie inside the disk")

    def image_angle(a):
        w = np.exp(1j * a)
        m = (w - z) / (1.0 - np.conj(z) * w)
        return np.angle(m)

    span = (image_angle(a2) - image_angle(a1)) % TWO_PI
    if (a2 - a1) % TWO_PI == 0.0 and a2 != a1:
        return 1.0
    return span / TWO_PI


def disk_poisson_density(center, radius, X, y):
    """Poisson kernel dω^X/dσ at the boundary point y (per arclength)."""
    c = np.asarray(center, dtype=float)
    p = (np.asarray(X, dtype=float) - c) / radius
    q = (np.asarray(y, dtype=float) - c) / radius
    return (1.0 - p @ p) / (TWO_PI * radius * ((q - p) @ (q - p)))


def disk_green(center, radius, X, Y):
    """Green function of the disk via the reflected charge."""
    c = np.asarray(center, dtype=float)
    x = np.asarray(X, dtype=float) - c
    y = np.asarray(Y, dtype=float) - c
    ry2 = float(y @ y)
    if ry2 == 0.0:
        return math.log(radius / np.linalg.norm(x)) / TWO_PI
    ystar = y * (radius ** 2 / ry2)
    num = np.linalg.norm(x - ystar) * math.sqrt(ry2)
    den = radius * np.linalg.norm(x - y)
    return math.log(num / den) / TWO_PI


# ---------------------------------------------------------------------------
# ball (d = 3)


def ball_poisson_density(center, radius, X, y):
    c = np.asarray(center, dtype=float)
    p = (np.asarray(X, dtype=float) - c) / radius
    q = (np.asarray(y, dtype=float) - c) / radius
    d2 = float((q - p) @ (q - p))
    return (1.0 - float(p @ p)) / (4.0 * math.pi * radius ** 2 * d2 ** 1.5)


def ball_cap_measure(center, radius, X, axis, alpha, n_polar=96, n_azimuth=192):
    """Harmonic measure of the spherical cap {y : (y-c)·axis >= R cos(alpha)}
    from X in the ball.  On-axis poles get the closed form; otherwise
    Gauss-Legendre in the polar angle times a periodic trapezoid rule."""
    c = np.asarray(center, dtype=float)
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    p = (np.asarray(X, dtype=float) - c) / radius
    rho2 = float(p @ p)
    if rho2 >= 1.0:
        raise ConfigError("pole must lie inside the ball")
    if not (0.0 < alpha <= math.pi):
        raise ConfigError("cap angle must lie in (0, pi]")
    ca = math.cos(alpha)
    axial = float(p @ a)
    if rho2 < 1e-30:
        return 0.5 * (1.0 - ca)
    if abs(rho2 - axial * axial) < 1e-24:  # pole on the cap axis
        rho = math.copysign(math.sqrt(rho2), axial)
        end = 1.0 / math.sqrt(1.0 + rho * rho - 2.0 * rho * ca)
        start = 1.0 / (1.0 - rho) if rho > 0 else 1.0 / (1.0 + abs(rho))
        return (1.0 - rho2) / (2.0 * rho) * (start - end) if rho > 0 else \
            (1.0 - rho2) / (2.0 * abs(rho)) * (end - start)
    # orthonormal frame with e3 = cap axis
    h = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, h)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    t, wt = np.polynomial.legendre.leggauss(n_polar)
    t = 0.5 * (t + 1.0) * (1.0 - ca) + ca  # map to [cos alpha, 1]
    wt = wt * 0.5 * (1.0 - ca)
    phi = np.arange(n_azimuth) * (TWO_PI / n_azimuth)
    st = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    y = (
        st[:, None, None] * (np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2)
        + t[:, None, None] * a
    )
    d2 = ((y - p[None, None, :]) ** 2).sum(axis=2)
    integrand = d2 ** -1.5
    inner = integrand.mean(axis=1) * TWO_PI
    return float((1.0 - rho2) / (4.0 * math.pi) * (inner * wt).sum())


def ball_green(center, radius, X, Y):
    """Green function of the ball via the image charge."""
    c = np.asarray(center, dtype=float)
    x = np.asarray(X, dtype=float) - c
    y = np.asarray(Y, dtype=float) - c
    ry = np.linalg.norm(y)
    direct = 1.0 / np.linalg.norm(x - y)
    if ry == 0.0:
        mirror = 1.0 / radius
    else:
        ystar = y * (radius ** 2 / ry ** 2)
        mirror = radius / (ry * np.linalg.norm(x - ystar))
    return (direct - mirror) / (4.0 * math.pi)


def sphere_cap_area(radius, alpha):
    return TWO_PI * radius ** 2 * (1.0 - math.cos(alpha))


# ---------------------------------------------------------------------------
# half-space {x_d > 0}


def halfspace_interval_measure(X, a, b):
    """d=2: harmonic measure of the boundary segment [a, b] x {0}."""
    x, h = float(X[0]), float(X[1])
    if h <= 0:
        raise ConfigError("pole must lie in the open half-plane")
    return (math.atan2(b - x, h) - math.atan2(a - x, h)) / math.pi


def halfspace_rect_measure(X, lo, hi):
    """d=3: harmonic measure of the boundary rectangle [lo,hi] x {0}, via the
    exact solid-angle formula (corner arctangent sum)."""
    px, py, h = float(X[0]), float(X[1]), float(X[2])
    if h <= 0:
        raise ConfigError("pole must lie in the open half-space")
    total = 0.0
    for su, u in ((1.0, hi[0] - px), (-1.0, lo[0] - px)):
        for sv, v in ((1.0, hi[1] - py), (-1.0, lo[1] - py)):
            total += su * sv * math.atan2(u * v, h * math.sqrt(u * u + v * v + h * h))
    return total / TWO_PI


def halfspace_green(dim, X, Y):
    """Green function of {x_d > 0} by boundary reflection."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Yr = Y.copy()
    Yr[-1] = -Yr[-1]
    if dim == 2:
        return math.log(np.linalg.norm(X - Yr) / np.linalg.norm(X - Y)) / TWO_PI
    return (1.0 / np.linalg.norm(X - Y) - 1.0 / np.linalg.norm(X - Yr)) / (4.0 * math.pi)


def halfspace_poisson_density(X, y):
    """Poisson kernel of the half-space at boundary point y, any dim."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = len(X)
    h = X[-1]
    r = np.linalg.norm(X - y)
    if d == 2:
        return h / (math.pi * r * r)
    return h / (TWO_PI * r ** 3)


# ---------------------------------------------------------------------------
# square with bottom-edge data (d = 2)


class SquareEdgeField:
    """Harmonic measure of the bottom edge of the square [lo, lo+s]^2 as a
    field on the square: u = 1 on the open bottom edge, 0 on the other three
    sides.  Summed as images of half-plane angle solutions reflected across
    y = 0 and y = s; the series converges geometrically (ratio e^{-2 pi})."""

    def __init__(self, lo, side, n_images=8):
        self.lo = np.asarray(lo, dtype=float)
        self.s = float(side)
        self.n_images = int(n_images)

    def _half_plane_term(self, x, Y):
        # (4/pi) Im artanh(e^{(i pi x - pi Y)/s}): the odd-harmonic sum
        # extending the bottom-edge square wave harmonically to Y > 0
        w = np.exp((1j * math.pi * x - math.pi * Y) / self.s)
        return (2.0 / math.pi) * (np.angle(1.0 + w) - np.angle(1.0 - w))

    def _half_plane_grad(self, x, Y):
        w = np.exp((1j * math.pi * x - math.pi * Y) / self.s)
        g = w / (1.0 - w * w)  # d/dw of artanh
        du_dx = (4.0 / math.pi) * np.imag(1j * math.pi / self.s * g)
        du_dy = (4.0 / math.pi) * np.imag(-math.pi / self.s * g)
        return du_dx, du_dy

    def _local(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return X[:, 0] - self.lo[0], X[:, 1] - self.lo[1]

    def value(self, X):
        x, y = self._local(X)
        out = np.zeros_like(x)
        for m in range(self.n_images):
            out += self._half_plane_term(x, y + 2 * m * self.s)
            out -= self._half_plane_term(x, 2 * self.s - y + 2 * m * self.s)
        return out

    def gradient(self, X):
        x, y = self._local(X)
        gx = np.zeros_like(x)
        gy = np.zeros_like(x)
        for m in range(self.n_images):
            dx, dy = self._half_plane_grad(x, y + 2 * m * self.s)
            gx += dx
            gy += dy
            dx, dy = self._half_plane_grad(x, 2 * self.s - y + 2 * m * self.s)
            gx -= dx
            gy += dy  # d/dy of term(2s - y + ...) flips the chain sign twice
        return np.stack([gx, gy], axis=1)
