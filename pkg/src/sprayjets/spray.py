"""Sprays and their lifts.

A spray at level r assigns to every slashed level-(r+1) point the
level-(r+2) point (x, y, y, -2 G(x, y)); the quadratic coefficients G are
what distinguishes one spray from another.  Coefficient evaluators take
the two coordinate halves of the level-(r+1) point as indexable sequences
of generic scalars and must stay polymorphic over Dual entries: the
complete lift is literally the same evaluator run on Dual pairs, and a
second lift runs it on Duals of Duals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidLevelError
from .jetspace import JetPoint, is_slashed
from .jets import Dual, jet_du, jet_re, jnorm, jcos, jsin


@dataclass(frozen=True)
class Spray:
    """Second-order geometry on the level-``level`` bundle.

    ``coeff_fn(pos, vel)`` returns the quadratic coefficients as a sequence
    of ``2**level * dim`` scalars.  ``domain``, when set, restricts the
    base chart: it receives the leading ``dim`` coordinates of a position.
    ``parent`` records the spray a lift or a projection was derived from.
    """

    level: int
    dim: int
    coeff_fn: Callable
    tag: str
    domain: Callable | None = None
    parent: "Spray | None" = None

    @property
    def fiber_dim(self) -> int:
        return (1 << self.level) * self.dim

    def coeffs(self, p: JetPoint) -> np.ndarray:
        if p.level != self.level + 1:
            raise InvalidLevelError(
                f"spray at level {self.level} takes level-{self.level + 1} points, got {p.level}"
            )
        if not is_slashed(p):
            raise DomainError("spray coefficients need a slashed point")
        if not self.in_domain(p.coords):
            raise DomainError("point lies outside the spray's chart domain")
        half = p.coords.size // 2
        return np.asarray(self.coeff_fn(p.coords[:half], p.coords[half:]), dtype=float)

    def acceleration(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return -2.0 * np.asarray(self.coeff_fn(x, v), dtype=float)

    def in_domain(self, x: Sequence[float]) -> bool:
        return self.domain is None or bool(self.domain(np.asarray(x)[: self.dim]))

    def restricted(self, domain: Callable, tag: str | None = None) -> "Spray":
        return replace(self, domain=domain, tag=tag or self.tag)


def spray_value(s: Spray, p: JetPoint) -> JetPoint:
    """The spray's defining jet at ``p``: blocks (x, y, y, -2 G(x, y))."""
    g = s.coeffs(p)
    half = p.coords.size // 2
    out = np.concatenate([p.coords, p.coords[half:], -2.0 * g])
    return JetPoint(p.level + 1, p.dim, out)


def homogeneity_check(s: Spray, p: JetPoint, lam: float) -> float:
    """Relative defect of positive 2-homogeneity in the fiber."""
    if lam <= 0.0:
        raise DomainError(f"homogeneity scaling must be positive, got {lam}")
    if p.level != s.level + 1:
        raise InvalidLevelError("homogeneity check point must sit one level above the spray")
    if not is_slashed(p):
        raise DomainError("homogeneity check needs a slashed point")
    half = p.coords.size // 2
    pos, vel = p.coords[:half], p.coords[half:]
    scaled = np.asarray(s.coeff_fn(pos, lam * vel), dtype=float)
    ref = lam * lam * np.asarray(s.coeff_fn(pos, vel), dtype=float)
    return float(np.linalg.norm(scaled - ref) / (1.0 + np.linalg.norm(ref)))


def complete_lift(s: Spray) -> Spray:
    """The lifted spray one level up, via one layer of jet arithmetic.

    Evaluating the parent coefficients on Dual pairs yields the vertical
    part as the primal component and the derivative part as the tangent
    component; both land in the block layout of the lifted level.
    """

    parent_fn = s.coeff_fn

    def lifted(pos, vel):
        if isinstance(pos, np.ndarray) and pos.dtype != object:
            pos = pos.tolist()
        if isinstance(vel, np.ndarray) and vel.dtype != object:
            vel = vel.tolist()
        half = len(pos) // 2
        ppos = [Dual(pos[i], pos[half + i]) for i in range(half)]
        pvel = [Dual(vel[i], vel[half + i]) for i in range(half)]
        out = parent_fn(ppos, pvel)
        return [jet_re(z) for z in out] + [jet_du(z) for z in out]

    return Spray(
        level=s.level + 1,
        dim=s.dim,
        coeff_fn=lifted,
        tag=f"lifted({s.tag})",
        domain=s.domain,
        parent=s,
    )


def project_spray(s: Spray) -> Spray:
    """The spray one level down: evaluate at zeroed outer fiber, doubled base.

    Applied to a complete lift this recovers the parent coefficients
    exactly, because the primal component of jet arithmetic repeats the
    float computation step for step.
    """

    if s.level < 1:
        raise InvalidLevelError("a base-level spray has no projection")
    parent_fn = s.coeff_fn

    def projected(pos, vel):
        n = len(pos)
        big_pos = list(pos) + [0.0] * n
        big_vel = list(vel) + list(vel)
        return parent_fn(big_pos, big_vel)[:n]

    return Spray(
        level=s.level - 1,
        dim=s.dim,
        coeff_fn=projected,
        tag=f"projected({s.tag})",
        domain=s.domain,
        parent=s,
    )


def acceleration_jet(s: Spray, x: np.ndarray, v: np.ndarray):
    """Acceleration and its time derivative along the geodesic through (x, v)."""
    a = s.acceleration(x, v)
    dx = [Dual(float(x[i]), float(v[i])) for i in range(len(x))]
    dv = [Dual(float(v[i]), float(a[i])) for i in range(len(v))]
    out = s.coeff_fn(dx, dv)
    jolt = -2.0 * np.asarray([jet_du(z) for z in out], dtype=float)
    return a, jolt


# --- builders -------------------------------------------------------------


@dataclass(frozen=True)
class ChristoffelField:
    """Symmetric connection coefficients on an n-dimensional chart.

    ``fn(x)`` returns an n x n x n nested structure Gamma[i][j][k],
    symmetric in (j, k), with entries generic over Dual scalars.
    """

    dim: int
    fn: Callable
    name: str = "christoffel"


def make_flat(dim: int, domain: Callable | None = None) -> Spray:
    zero = [0.0] * dim

    def coeff(pos, vel):
        return list(zero)

    return Spray(level=0, dim=dim, coeff_fn=coeff, tag="flat", domain=domain)


def make_riemannian(chris: ChristoffelField, tag: str = "riemannian",
                    domain: Callable | None = None) -> Spray:
    n = chris.dim

    def coeff(pos, vel):
        gamma = chris.fn(pos)
        out = []
        for i in range(n):
            gi = gamma[i]
            acc = 0.0
            for j in range(n):
                gij = gi[j]
                vj = vel[j]
                for k in range(n):
                    g = gij[k]
                    if isinstance(g, float) and g == 0.0:
                        continue
                    acc = acc + g * vj * vel[k]
            out.append(0.5 * acc)
        return out

    return Spray(level=0, dim=n, coeff_fn=coeff, tag=tag, domain=domain)


def sphere_christoffels() -> ChristoffelField:
    """Round unit sphere in colatitude/longitude coordinates."""

    def fn(pos):
        th = pos[0]
        s, c = jsin(th), jcos(th)
        cot = c / s
        return [
            [[0.0, 0.0], [0.0, -s * c]],
            [[0.0, cot], [cot, 0.0]],
        ]

    return ChristoffelField(dim=2, fn=fn, name="sphere")


def make_sphere(pole_margin: float = 1e-8) -> Spray:
    lo, hi = pole_margin, np.pi - pole_margin

    def domain(x):
        return lo < float(x[0]) < hi

    return make_riemannian(sphere_christoffels(), tag="sphere", domain=domain)


def make_finsler_example(c: Sequence[float]) -> Spray:
    """Direction-dependent drag coefficients G_i = c_i |y| y_i.

    Positively 2-homogeneous but not quadratic in the fiber, smooth away
    from the zero section only.
    """

    cs = [float(ci) for ci in c]
    n = len(cs)

    def coeff(pos, vel):
        speed = jnorm(vel)
        return [cs[i] * speed * vel[i] for i in range(n)]

    return Spray(level=0, dim=n, coeff_fn=coeff, tag="finsler-example")


# --- chart action ---------------------------------------------------------


def pushforward_spray(t, s: Spray) -> Spray:
    """The same spray expressed in the chart on the far side of ``t``.

    Phase points are pulled back, the defining jet is computed there, and
    the result is pushed forward with one more tangent level.  The
    evaluator stays generic over Dual coordinates so pushed sprays can be
    lifted like any other.
    """

    from .jetspace import jet_apply

    phase_level = s.level + 1
    value_level = s.level + 2

    def coeff(pos, vel):
        coords = list(pos) + list(vel)
        back = jet_apply(t.inverse, coords, phase_level, s.dim, s.dim)
        n = len(pos)
        bpos, bvel = back[:n], back[n:]
        g = s.coeff_fn(bpos, bvel)
        value = list(back) + list(bvel) + [-2.0 * gi for gi in g]
        pushed = jet_apply(t.forward, value, value_level, s.dim, s.dim)
        return [-0.5 * z for z in pushed[3 * n :]]

    def domain(x):
        return s.in_domain(np.asarray(t.inverse(list(np.asarray(x, dtype=float))), dtype=float))

    return Spray(
        level=s.level,
        dim=s.dim,
        coeff_fn=coeff,
        tag=f"pushed({s.tag},{t.name})",
        domain=None if s.domain is None else domain,
        parent=s,
    )
