"""Star-network geometry: finitely many rays glued at a single junction.

A point is a pair (x, ray) with x >= 0 the distance to the junction and
``ray`` a 1-based label. All points with x == 0 are the same junction point,
whatever label they carry; the geodesic metric runs along rays and through
the junction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# 1-based label of a ray; valid labels are 1..ray_count of the host network.
RayIndex = int

VERTEX_RAY: RayIndex = 1  # canonical label carried by the junction


def _check_coordinate(x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ValueError(f"radial coordinate must be finite and >= 0, got {x!r}")
    return x


@dataclass(frozen=True)
class NetworkPoint:
    """A point (x, ray) on a star network.

    Points at the junction (x == 0) compare equal regardless of their ray
    label, and hash alike, so they behave as a single point in sets/dicts.
    """

    x: float
    ray: RayIndex

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _check_coordinate(self.x))
        if int(self.ray) != self.ray or self.ray < 1:
            raise ValueError(f"ray label must be an integer >= 1, got {self.ray!r}")
        object.__setattr__(self, "ray", int(self.ray))

    @property
    def is_vertex(self) -> bool:
        return self.x == 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkPoint):
            return NotImplemented
        if self.is_vertex and other.is_vertex:
            return True
        return self.x == other.x and self.ray == other.ray

    def __hash__(self) -> int:
        if self.is_vertex:
            return hash((0.0, VERTEX_RAY))
        return hash((self.x, self.ray))


@dataclass(frozen=True)
class StarNetwork:
    """A star of ``ray_count`` rays, each truncated at radius ``radius``.

    The truncation radius is the computational domain bound x_max; the
    underlying geometry is the same for any radius.
    """

    ray_count: int
    radius: float

    def __post_init__(self) -> None:
        if int(self.ray_count) != self.ray_count or self.ray_count < 2:
            raise ValueError(f"a star network needs >= 2 rays, got {self.ray_count!r}")
        object.__setattr__(self, "ray_count", int(self.ray_count))
        r = float(self.radius)
        if not math.isfinite(r) or r <= 0.0:
            raise ValueError(f"truncation radius must be finite and > 0, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    def contains(self, p: NetworkPoint) -> bool:
        return p.x <= self.radius and 1 <= p.ray <= self.ray_count

    def _require(self, p: NetworkPoint) -> None:
        if not self.contains(p):
            raise ValueError(
                f"point (x={p.x}, ray={p.ray}) is outside the network "
                f"(ray_count={self.ray_count}, radius={self.radius})"
            )

    def distance(self, p: NetworkPoint, q: NetworkPoint) -> float:
        """Geodesic distance: |x - y| on a common ray, x + y through the junction."""
        self._require(p)
        self._require(q)
        if p.ray == q.ray:
            return abs(p.x - q.x)
        # distinct labels: the geodesic passes through the junction; this is
        # also right when one point *is* the junction (0 + x)
        return p.x + q.x

    def canonicalize(self, p: NetworkPoint) -> NetworkPoint:
        """Return the canonical representative: the junction is put on ray 1."""
        self._require(p)
        if p.is_vertex:
            return NetworkPoint(0.0, VERTEX_RAY)
        return p
