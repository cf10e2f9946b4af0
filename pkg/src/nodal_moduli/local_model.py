"""The model flat connection on the family of quadrics ``xy = t``.

In the unitary gauge on ``B = {|x| < 2, |y| < 2}`` minus the axes the
connection is ``d + i (alpha/2)(dtheta_x - dtheta_y)``. The holomorphic gauge
is ``d + (alpha/2)(dx/x - dy/y)`` and the two blow-up charts carry
``d - (alpha/2) dy~/y~`` and ``d + (alpha/2) dx^/x^``.

Flat sections solve ``dv = -omega v``; a positively oriented loop around a
pole of ``i a dtheta`` therefore has holonomy ``exp(-2 pi i a)``.

Paths are always given in the ambient ``(x, y)`` coordinates and parametrized
by ``s in [0, 1]``; blow-up gauges convert to chart coordinates
(``y~ = y/x`` on chart 1, ``x^ = x/y`` on chart 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from nodal_moduli.alcove import AlcovePoint
from nodal_moduli.errors import InvariantViolation, LoopEnclosesBothDivisors, PathTooCloseToSingularity
from nodal_moduli.lie_core import polar_project_batch

GAUGES = ("unitary", "holomorphic", "blowup1", "blowup2")
DEFAULT_STEPS = 4096
SINGULAR_DISTANCE = 1e-6
POLYDISK_RADIUS = 2.0


@dataclass(frozen=True)
class QuadricPoint:
    x: complex
    y: complex
    t: complex

    def __post_init__(self):
        if abs(self.x * self.y - self.t) > 1e-12:
            raise InvariantViolation(f"point ({self.x}, {self.y}) is not on Q_{self.t}")
        if abs(self.x) >= POLYDISK_RADIUS or abs(self.y) >= POLYDISK_RADIUS:
            raise InvariantViolation("point lies outside the polydisk")


@dataclass(frozen=True)
class Path:
    """A smooth path ``s -> (x(s), y(s))`` with its derivative, vectorized in ``s``."""

    point: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    velocity: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    name: str = "path"
    closed: bool = False
    t: complex | None = None
    pieces: tuple = ()

    def reversed(self) -> Path:
        if self.pieces:
            parts = tuple(p.reversed() for p in self.pieces[::-1])
            return Path(_concat_point(parts), _concat_velocity(parts), f"reverse({self.name})", self.closed, self.t, parts)

        def point(s):
            return self.point(1 - np.asarray(s))

        def velocity(s):
            dx, dy = self.velocity(1 - np.asarray(s))
            return -dx, -dy

        return Path(point, velocity, f"reverse({self.name})", self.closed, self.t)

    def then(self, other: Path) -> Path:
        """Concatenation, traversing ``self`` first; pieces are integrated separately."""
        parts = (self.pieces or (self,)) + (other.pieces or (other,))
        return Path(_concat_point(parts), _concat_velocity(parts), f"{self.name}*{other.name}", pieces=parts)

    def samples(self, m: int = 257) -> list[QuadricPoint]:
        """Sample points as validated quadric points (only for paths lying on one ``Q_t``)."""
        if self.t is None:
            raise ValueError(f"{self.name} does not lie on a single quadric")
        x, y = self.point(np.linspace(0, 1, m))
        return [QuadricPoint(complex(a), complex(b), complex(self.t)) for a, b in zip(x, y)]


def _concat_point(parts):
    def point(s):
        s = np.asarray(s, dtype=float)
        m = len(parts)
        idx = np.minimum((s * m).astype(int), m - 1)
        xs = np.zeros(s.shape, dtype=complex)
        ys = np.zeros(s.shape, dtype=complex)
        for i, part in enumerate(parts):
            x, y = part.point(np.clip(s * m - i, 0, 1))
            xs = np.where(idx == i, x, xs)
            ys = np.where(idx == i, y, ys)
        return xs, ys

    return point


def _concat_velocity(parts):
    def velocity(s):
        s = np.asarray(s, dtype=float)
        m = len(parts)
        idx = np.minimum((s * m).astype(int), m - 1)
        xs = np.zeros(s.shape, dtype=complex)
        ys = np.zeros(s.shape, dtype=complex)
        for i, part in enumerate(parts):
            dx, dy = part.velocity(np.clip(s * m - i, 0, 1))
            xs = np.where(idx == i, m * dx, xs)
            ys = np.where(idx == i, m * dy, ys)
        return xs, ys

    return velocity


def vanishing_cycle(t: complex, r: float | None = None) -> Path:
    """``x = r e^{i theta}, y = (t/r) e^{-i theta}``; ``r = sqrt|t|`` gives the symmetric cycle."""
    t = complex(t)
    if r is None:
        r = np.sqrt(abs(t))
    c = t / r

    def point(s):
        e = np.exp(2j * np.pi * np.asarray(s))
        return r * e, c / e

    def velocity(s):
        e = np.exp(2j * np.pi * np.asarray(s))
        return 2j * np.pi * r * e, -2j * np.pi * c / e

    return Path(point, velocity, "gamma", closed=True, t=t)


def x_loop(r: float = 1.0, y0: complex = 0.5) -> Path:
    """Positively oriented loop around ``x = 0`` with ``y`` held fixed."""

    def point(s):
        e = np.exp(2j * np.pi * np.asarray(s))
        return r * e, np.full_like(e, y0)

    def velocity(s):
        e = np.exp(2j * np.pi * np.asarray(s))
        return 2j * np.pi * r * e, np.zeros_like(e)

    return Path(point, velocity, "x-loop", closed=True)


def y_loop(r: float = 1.0, x0: complex = 0.5) -> Path:
    """Positively oriented loop around ``y = 0`` with ``x`` held fixed."""

    def point(s):
        e = np.exp(2j * np.pi * np.asarray(s))
        return np.full_like(e, x0), r * e

    def velocity(s):
        e = np.exp(2j * np.pi * np.asarray(s))
        return np.zeros_like(e), 2j * np.pi * r * e

    return Path(point, velocity, "y-loop", closed=True)


def segment(p0: tuple[complex, complex], p1: tuple[complex, complex]) -> Path:
    x0, y0 = map(complex, p0)
    x1, y1 = map(complex, p1)

    def point(s):
        s = np.asarray(s, dtype=float)
        return x0 + s * (x1 - x0), y0 + s * (y1 - y0)

    def velocity(s):
        s = np.asarray(s, dtype=float)
        return np.full(s.shape, x1 - x0, dtype=complex), np.full(s.shape, y1 - y0, dtype=complex)

    return Path(point, velocity, "segment")


def standard_path(kind: str, t: complex, r: float | None = None) -> Path:
    """The three loops based at a point of ``Q_t``: ``gamma``, ``x-loop``, ``y-loop``."""
    t = complex(t)
    if r is None:
        r = np.sqrt(abs(t)) if t != 0 else 1.0
    if kind == "gamma":
        return vanishing_cycle(t, r)
    if kind == "x-loop":
        return x_loop(r, t / r)
    if kind == "y-loop":
        return y_loop(abs(t) / r if t != 0 else r, r)
    raise ValueError(f"unknown path kind {kind!r}")


@dataclass(frozen=True)
class ModelConnection:
    """The model connection with coefficient ``V diag(alpha) V^H`` in a chosen gauge."""

    alpha: AlcovePoint
    gauge: str = "unitary"
    conjugator: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not isinstance(self.alpha, AlcovePoint):
            object.__setattr__(self, "alpha", AlcovePoint(self.alpha))
        if self.gauge not in GAUGES:
            raise ValueError(f"gauge must be one of {GAUGES}")

    @property
    def n(self) -> int:
        return self.alpha.n

    def coefficient(self) -> np.ndarray:
        a = np.diag(self.alpha.alpha).astype(complex)
        if self.conjugator is None:
            return a
        v = np.asarray(self.conjugator)
        return v @ a @ v.conj().T

    def matrix_function(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """``f`` applied to the coefficient through its eigenvectors."""
        vals = f(self.alpha.alpha)
        if self.conjugator is None:
            return np.diag(vals)
        v = np.asarray(self.conjugator)
        return v @ np.diag(vals) @ v.conj().T

    def holonomy_closed_form(self, power: float = 1.0) -> np.ndarray:
        """``A^power = exp(-2 pi i power alpha)``, the oracle for the standard loops."""
        return self.matrix_function(lambda a: np.exp(-2j * np.pi * power * a))

    def poles(self) -> tuple[int, ...]:
        """Chart coordinates (0 or 1) along which the form has a pole."""
        return {"unitary": (0, 1), "holomorphic": (0, 1), "blowup1": (1,), "blowup2": (0,)}[self.gauge]

    def chart(self, x, y, dx, dy):
        """Chart coordinates and their velocities for the gauge."""
        if self.gauge == "blowup1":
            return x, y / x, dx, (dy * x - y * dx) / x**2
        if self.gauge == "blowup2":
            return x / y, y, (dx * y - x * dy) / y**2, dy
        return x, y, dx, dy

    def scalar_form(self, x, y, dx, dy) -> np.ndarray:
        """The scalar multiplying the coefficient matrix, evaluated on a tangent vector."""
        u, v, du, dv = self.chart(x, y, dx, dy)
        if self.gauge == "unitary":
            return 0.5j * (np.imag(du / u) - np.imag(dv / v))
        if self.gauge == "holomorphic":
            return 0.5 * (du / u - dv / v)
        if self.gauge == "blowup1":
            return -0.5 * dv / v
        return 0.5 * du / u

    def form(self, x, y, dx, dy) -> np.ndarray:
        c = np.asarray(self.scalar_form(x, y, dx, dy))
        return c[..., None, None] * self.coefficient()

    def gauge_matrix(self, x, y) -> np.ndarray:
        """``G = r_x^{-alpha/2} r_y^{alpha/2}``, taking the unitary gauge to the holomorphic one."""
        lr = np.log(abs(y)) - np.log(abs(x))
        return self.matrix_function(lambda a: np.exp(0.5 * a * lr))


def integrate(form: Callable, path: Path, steps: int = DEFAULT_STEPS, unitary: bool = True) -> np.ndarray:
    """Path-ordered solution of ``dv/ds = -omega(path'(s)) v`` with ``v(0) = I``.

    Classical fourth-order Runge-Kutta; each step's propagator is built in one
    batch and, when ``unitary``, projected back onto the group before the
    ordered product is taken.
    """
    if path.pieces:
        mats = np.array([integrate(form, p, steps, unitary) for p in path.pieces])
        return ordered_product(mats, unitary)
    h = 1.0 / steps
    s = np.linspace(0.0, 1.0, 2 * steps + 1)
    x, y = path.point(s)
    dx, dy = path.velocity(s)
    om = np.asarray(form(x, y, dx, dy))
    n = om.shape[-1]
    eye = np.eye(n)
    w0, wm, w1 = om[0:-1:2], om[1::2], om[2::2]
    k1 = -w0
    k2 = -wm @ (eye + 0.5 * h * k1)
    k3 = -wm @ (eye + 0.5 * h * k2)
    k4 = -w1 @ (eye + h * k3)
    phi = eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if unitary:
        phi = polar_project_batch(phi)
    return ordered_product(phi, unitary)


def ordered_product(mats: np.ndarray, unitary: bool = True) -> np.ndarray:
    """``M_{N-1} ... M_1 M_0`` by pairwise reduction."""
    mats = np.asarray(mats)
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            tail = mats[-1:]
            mats = mats[:-1]
        else:
            tail = None
        mats = mats[1::2] @ mats[0::2]
        if unitary:
            mats = polar_project_batch(mats)
        if tail is not None:
            mats = np.concatenate([mats, tail])
    return mats[0]


def check_path(conn: ModelConnection, path: Path, samples: int = 4097) -> None:
    s = np.linspace(0, 1, samples)
    x, y = path.point(s)
    coords = (x, y)
    if conn.gauge == "blowup1":
        if np.min(np.abs(x)) < SINGULAR_DISTANCE:
            raise PathTooCloseToSingularity("chart 1 of the blow-up needs x != 0")
        coords = (x, y / x)
    elif conn.gauge == "blowup2":
        if np.min(np.abs(y)) < SINGULAR_DISTANCE:
            raise PathTooCloseToSingularity("chart 2 of the blow-up needs y != 0")
        coords = (x / y, y)
    for axis in conn.poles():
        d = np.min(np.abs(coords[axis]))
        if not d >= SINGULAR_DISTANCE:
            raise PathTooCloseToSingularity(f"path comes within {d:.2e} of a pole of the connection")


def transport(conn: ModelConnection, path: Path, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """Parallel transport along ``path``.

    Unitary-gauge results are special unitary; other gauges return an invertible matrix.
    """
    check_path(conn, path)
    return integrate(conn.form, path, steps, unitary=conn.gauge == "unitary")


def gauge_transform_check(alpha, points, h: float = 1e-4, conjugator=None) -> float:
    """Largest discrepancy between ``omega_unitary - dG G^{-1}`` and ``omega_holomorphic``.

    ``dG`` is taken by central differences in the four real directions at each
    ``(x, y)`` in ``points``.
    """
    unit = ModelConnection(_alpha(alpha), "unitary", conjugator)
    holo = ModelConnection(unit.alpha, "holomorphic", conjugator)
    worst = 0.0
    directions = ((1, 0), (1j, 0), (0, 1), (0, 1j))
    for x, y in points:
        g_inv = np.linalg.inv(unit.gauge_matrix(x, y))
        for dx, dy in directions:
            dg = (unit.gauge_matrix(x + h * dx, y + h * dy) - unit.gauge_matrix(x - h * dx, y - h * dy)) / (2 * h)
            transformed = unit.form(x, y, dx, dy) - dg @ g_inv
            worst = max(worst, float(np.max(np.abs(transformed - holo.form(x, y, dx, dy)))))
    return worst


def polar_grid(m: int = 50, t: complex = 0.25, r_min: float = 0.3, r_max: float = 1.5) -> list[tuple[complex, complex]]:
    """``m x m`` points ``(x, t/x)`` of ``Q_t`` on a polar grid in ``x``."""
    rs = np.linspace(r_min, r_max, m)
    thetas = np.linspace(0, 2 * np.pi, m, endpoint=False)
    pts = []
    for r in rs:
        for th in thetas:
            x = r * np.exp(1j * th)
            pts.append((complex(x), complex(t / x)))
    return pts


def residue(conn: ModelConnection, radius: float = 0.5, *, center: str | None = None, t: complex = 0, base: complex = 1.0, quad_points: int = 256) -> np.ndarray:
    """``(1/2 pi i)`` times the integral of the connection form around a small loop.

    ``center`` names the divisor: ``"y~"`` (chart 1), ``"x^"`` (chart 2), or
    ``"x"``/``"y"`` for the branches of ``X_0`` in the unitary and holomorphic
    gauges. On a smooth fiber (``t != 0``) a loop around ``x = 0`` is also a loop
    around ``y = 0``, so the branch residues are only defined at ``t = 0``.
    Quadrature is the trapezoid rule, spectrally accurate on circles.
    """
    default = {"blowup1": "y~", "blowup2": "x^"}.get(conn.gauge)
    center = center or default
    if center is None:
        raise ValueError("center ('x' or 'y') is required in this gauge")
    theta = 2 * np.pi * np.arange(quad_points) / quad_points
    e = np.exp(1j * theta)
    w = radius * e
    dw = 1j * radius * e
    zero = np.zeros_like(e)
    if conn.gauge in ("blowup1", "blowup2"):
        if center != default:
            raise ValueError(f"the {conn.gauge} chart has its pole along {default}=0")
        # the chart form written directly in chart coordinates
        c = -0.5 * dw / w if conn.gauge == "blowup1" else 0.5 * dw / w
    else:
        if center not in ("x", "y"):
            raise ValueError("center must be 'x' or 'y'")
        if t != 0:
            raise LoopEnclosesBothDivisors("on Q_t with t != 0 a loop around x = 0 also encircles y = 0")
        if center == "x":
            # x-branch of X_0, punctured at the node (y = 0 identically)
            c = _branch_form(conn, w, zero, dw, zero)
        else:
            c = _branch_form(conn, zero, w, zero, dw)
    total = np.mean(c) * 2 * np.pi
    return total / (2j * np.pi) * conn.coefficient()


def _branch_form(conn, x, y, dx, dy):
    # restriction to a branch of X_0: the other coordinate's term vanishes with its differential
    if conn.gauge == "holomorphic":
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(dx != 0, dx / np.where(x == 0, 1, x), 0)
            ty = np.where(dy != 0, dy / np.where(y == 0, 1, y), 0)
        return 0.5 * (tx - ty)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(dx != 0, np.imag(dx / np.where(x == 0, 1, x)), 0)
        ty = np.where(dy != 0, np.imag(dy / np.where(y == 0, 1, y)), 0)
    return 0.5j * (tx - ty)


@dataclass(frozen=True)
class PartialConnection:
    """Coefficient of ``dtheta`` of the partial connection on a branch, per value of ``t``."""

    branch: str
    coefficient: np.ndarray
    per_t: tuple[tuple[complex, np.ndarray], ...]
    t_independent: bool
    finite: bool


def partial_connection_limit(alpha, branch: str = "x", r: float = 1.0, ts=(0.5, 0.1, 0.01, 1e-4, 1e-8, 0.0), conjugator=None) -> PartialConnection:
    """The partial connection along the curves, with the normal ``dtheta_t`` part dropped.

    In coordinates ``(x, t)`` the connection reads ``i (alpha/2)(2 dtheta_x - dtheta_t)``
    and in ``(y, t)`` it reads ``i (alpha/2)(-2 dtheta_y + dtheta_t)``. The
    returned coefficient multiplies ``dtheta`` of the branch coordinate. For
    ``t != 0`` it is cross-checked against the restriction of the unitary form
    to the curve ``xy = t``.
    """
    if branch not in ("x", "y"):
        raise ValueError("branch must be 'x' or 'y'")
    if not 0 < r < POLYDISK_RADIUS:
        raise ValueError("r must lie in (0, 2)")
    conn = ModelConnection(_alpha(alpha), "unitary", conjugator)
    sign = 1 if branch == "x" else -1
    m = conn.coefficient()
    per_t = []
    for t in ts:
        # tangent to the curve along d/dtheta of the branch coordinate, t held fixed
        tangent_only = 0.5j * (2 * sign) * m
        if t != 0:
            if branch == "x":
                x, y = r, t / r
                dx, dy = 1j * x, -1j * y
            else:
                x, y = t / r, r
                dx, dy = -1j * x, 1j * y
            restricted = conn.form(x, y, dx, dy)
            if np.max(np.abs(restricted - tangent_only)) > 1e-12:
                raise AssertionError("projected partial connection disagrees with the restriction")
        per_t.append((complex(t), tangent_only))
    coeffs = np.array([c for _, c in per_t])
    return PartialConnection(
        branch,
        per_t[-1][1],
        tuple(per_t),
        bool(np.max(np.abs(coeffs - coeffs[0])) == 0.0),
        bool(np.all(np.isfinite(coeffs))),
    )


def partial_holonomy(pc: PartialConnection, steps: int = DEFAULT_STEPS, r: float = 1.0) -> np.ndarray:
    """Holonomy of ``d + coefficient dtheta`` around the puncture of the branch (positive orientation)."""
    coeff = pc.coefficient
    loop = x_loop(r, 0.0) if pc.branch == "x" else y_loop(r, 0.0)
    idx = 0 if pc.branch == "x" else 1

    def form(x, y, dx, dy):
        z, dz = (x, dx) if idx == 0 else (y, dy)
        return np.imag(dz / z)[..., None, None] * coeff

    return integrate(form, loop, steps, unitary=True)


def _alpha(alpha) -> AlcovePoint:
    return alpha if isinstance(alpha, AlcovePoint) else AlcovePoint(alpha)
