"""Exact 2D polygon primitives: areas, hulls, clipping, oriented frames.

All coordinates live in a local meter-based plane.  Polygons are simple
rings stored counter-clockwise with positive signed area.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DegenerateGeometry

AREA_EPS = 1e-9


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _drop_repeats(verts: np.ndarray) -> np.ndarray:
    keep = [0]
    for i in range(1, len(verts)):
        if not np.allclose(verts[i], verts[keep[-1]], atol=1e-12):
            keep.append(i)
    if len(keep) > 1 and np.allclose(verts[keep[-1]], verts[keep[0]], atol=1e-12):
        keep.pop()
    return verts[keep]


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


class Polygon:
    """Simple closed ring, normalized to CCW orientation.

    Repeated vertices are dropped on construction; self-intersecting rings
    are rejected (callers ingesting dirty data should catch
    DegenerateGeometry and skip the feature).
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices, check_simple: bool = True):
        verts = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
        verts = _drop_repeats(verts)
        if len(verts) < 3:
            raise DegenerateGeometry("ring has fewer than 3 distinct vertices")
        area = _signed_area(verts)
        if abs(area) < AREA_EPS:
            raise DegenerateGeometry(f"ring area {abs(area):.3e} below threshold")
        if area < 0:
            verts = verts[::-1].copy()
        if check_simple and self._self_intersects(verts):
            raise DegenerateGeometry("ring is self-intersecting")
        self.vertices = verts

    @staticmethod
    def _self_intersects(verts: np.ndarray) -> bool:
        n = len(verts)
        for i in range(n):
            a1, a2 = verts[i], verts[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                if _segments_properly_intersect(a1, a2, verts[j], verts[(j + 1) % n]):
                    return True
        return False

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"Polygon({len(self.vertices)} vertices, area={polygon_area(self):.3f})"


class OrientedFrame:
    """Minimum-area bounding rectangle expressed as origin + orthonormal axes.

    Local coordinates of the source polygon fall inside
    [0, extent[0]] x [0, extent[1]], with extent[0] >= extent[1].
    """

    __slots__ = ("origin", "axes", "extent")

    def __init__(self, origin, axes, extent):
        self.origin = np.asarray(origin, dtype=np.float64)
        self.axes = np.asarray(axes, dtype=np.float64)  # rows: u (width), v (height)
        self.extent = (float(extent[0]), float(extent[1]))
        if abs(np.dot(self.axes[0], self.axes[1])) > 1e-9:
            raise DegenerateGeometry("frame axes not orthonormal")
        if self.extent[0] <= 0 or self.extent[1] <= 0:
            raise DegenerateGeometry("frame extent not strictly positive")

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.origin) @ self.axes.T

    def to_world(self, points: np.ndarray) -> np.ndarray:
        return np.atleast_2d(points) @ self.axes + self.origin


def polygon_area(p: Polygon) -> float:
    """Positive area by the shoelace formula on the normalized ring."""
    return _signed_area(p.vertices)


def polygon_centroid(p: Polygon) -> np.ndarray:
    v = p.vertices
    nxt = np.roll(v, -1, axis=0)
    cross = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
    area = 0.5 * np.sum(cross)
    cx = np.sum((v[:, 0] + nxt[:, 0]) * cross) / (6.0 * area)
    cy = np.sum((v[:, 1] + nxt[:, 1]) * cross) / (6.0 * area)
    return np.array([cx, cy])


def convex_hull(p: Polygon) -> Polygon:
    """Minimal convex polygon containing all vertices (monotone chain)."""
    hull = _hull_points(p.vertices)
    if len(hull) < 3:
        raise DegenerateGeometry("hull degenerate (collinear input)")
    return Polygon(hull, check_simple=False)


def _hull_points(points: np.ndarray) -> np.ndarray:
    pts = np.unique(points, axis=0)
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    if len(pts) < 3:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for pt in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper: list = []
    for pt in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return np.array(lower[:-1] + upper[:-1])


def is_convex(p: Polygon) -> bool:
    v = p.vertices
    n = len(v)
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = max(1.0, float(np.max(np.abs(v))) ** 2)
    return bool(np.all(cross >= -1e-9 * scale)) and n >= 3


def _clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: clip `subject` against convex CCW `clip`."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            return np.empty((0, 2))
        cp1, cp2 = clip[i], clip[(i + 1) % n]
        ex, ey = cp2[0] - cp1[0], cp2[1] - cp1[1]

        def inside(pt):
            return ex * (pt[1] - cp1[1]) - ey * (pt[0] - cp1[0]) >= -1e-12

        def intersect(s, e):
            dx, dy = e[0] - s[0], e[1] - s[1]
            denom = ex * dy - ey * dx
            if abs(denom) < 1e-18:
                return e
            t = (ex * (s[1] - cp1[1]) - ey * (s[0] - cp1[0])) / -denom
            return (s[0] + t * dx, s[1] + t * dy)

        input_list, output = output, []
        s = input_list[-1]
        for e in input_list:
            if inside(e):
                if not inside(s):
                    output.append(intersect(s, e))
                output.append(e)
            elif inside(s):
                output.append(intersect(s, e))
            s = e
    return np.asarray(output, dtype=np.float64).reshape(-1, 2)


def _ring_area(verts: np.ndarray) -> float:
    if len(verts) < 3:
        return 0.0
    return abs(_signed_area(verts))


def triangulate(p: Polygon) -> list[np.ndarray]:
    """Ear-clipping triangulation of a simple CCW polygon."""
    verts = list(p.vertices)
    tris: list[np.ndarray] = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def point_in_tri(pt, a, b, c):
        d1 = cross(a, b, pt)
        d2 = cross(b, c, pt)
        d3 = cross(c, a, pt)
        return d1 >= -1e-12 and d2 >= -1e-12 and d3 >= -1e-12

    guard = 0
    while len(verts) > 3 and guard < 10000:
        guard += 1
        n = len(verts)
        clipped = False
        for i in range(n):
            a, b, c = verts[(i - 1) % n], verts[i], verts[(i + 1) % n]
            if cross(a, b, c) <= 1e-12:
                continue  # reflex or collinear corner
            ear = True
            for j in range(n):
                if j in ((i - 1) % n, i, (i + 1) % n):
                    continue
                if point_in_tri(verts[j], a, b, c):
                    ear = False
                    break
            if ear:
                tris.append(np.array([a, b, c]))
                verts.pop(i)
                clipped = True
                break
        if not clipped:
            break
    if len(verts) == 3:
        tris.append(np.array(verts))
    return tris


def intersection_area(a: Polygon, b: Polygon) -> float:
    """Area of a ∩ b.  Commutative; 0 when disjoint.

    Convex pairs clip directly; a non-convex operand is decomposed into
    triangles first.
    """
    # cheap reject on bounding boxes
    amin, amax = a.vertices.min(axis=0), a.vertices.max(axis=0)
    bmin, bmax = b.vertices.min(axis=0), b.vertices.max(axis=0)
    if np.any(amin > bmax) or np.any(bmin > amax):
        return 0.0

    a_convex, b_convex = is_convex(a), is_convex(b)
    if a_convex and b_convex:
        return _ring_area(_clip_convex(a.vertices, b.vertices))
    if b_convex:
        return sum(_ring_area(_clip_convex(tri, b.vertices)) for tri in triangulate(a))
    if a_convex:
        return sum(_ring_area(_clip_convex(tri, a.vertices)) for tri in triangulate(b))
    total = 0.0
    tris_b = triangulate(b)
    for tri_a in triangulate(a):
        for tri_b in tris_b:
            total += _ring_area(_clip_convex(tri_a, tri_b))
    return total


def oriented_bounding_frame(p: Polygon) -> OrientedFrame:
    """Minimum-area bounding rectangle via rotating calipers on hull edges.

    Width >= height by convention; ties broken by the smaller width-axis
    angle to +x (angle normalized into [0, pi)).
    """
    hull = _hull_points(p.vertices)
    if len(hull) < 3:
        raise DegenerateGeometry("cannot frame a degenerate polygon")
    best = None
    for i in range(len(hull)):
        edge = hull[(i + 1) % len(hull)] - hull[i]
        norm = math.hypot(edge[0], edge[1])
        if norm < 1e-12:
            continue
        theta = math.atan2(edge[1], edge[0])
        for phi in (theta % math.pi,):
            u = np.array([math.cos(phi), math.sin(phi)])
            v = np.array([-u[1], u[0]])
            pu = hull @ u
            pv = hull @ v
            w = pu.max() - pu.min()
            h = pv.max() - pv.min()
            area = w * h
            cand = (area, phi, pu.min(), pv.min(), w, h)
            if best is None or area < best[0] - 1e-12 or (
                abs(area - best[0]) <= 1e-12 and phi < best[1] - 1e-12
            ):
                # prefer the orientation whose *width* axis has the smaller angle
                best = cand
    area, phi, umin, vmin, w, h = best
    u = np.array([math.cos(phi), math.sin(phi)])
    v = np.array([-u[1], u[0]])
    if w < h:
        # rotate the frame 90 deg so width >= height, renormalizing the angle
        phi = (phi + math.pi / 2) % math.pi
        u = np.array([math.cos(phi), math.sin(phi)])
        v = np.array([-u[1], u[0]])
        pu = hull @ u
        pv = hull @ v
        umin, vmin = pu.min(), pv.min()
        w, h = pu.max() - umin, pv.max() - vmin
    origin = umin * u + vmin * v
    return OrientedFrame(origin, np.array([u, v]), (w, h))


def points_in_polygon(points: np.ndarray, p: Polygon) -> np.ndarray:
    """Vectorized even-odd test; boundary points may land either way."""
    pts = np.atleast_2d(points)
    v = p.vertices
    n = len(v)
    inside = np.zeros(len(pts), dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        crosses = ((y1 > y) != (y2 > y)) & (
            x < (x2 - x1) * (y - y1) / (y2 - y1 + 1e-300) + x1
        )
        inside ^= crosses
    return inside


def point_to_polygon_distance(point, p: Polygon) -> float:
    """Distance from a point to the polygon boundary (0 if on it); points
    strictly inside also return their boundary distance -- combine with
    points_in_polygon when a signed notion is needed."""
    pt = np.asarray(point, dtype=np.float64)
    v = p.vertices
    nxt = np.roll(v, -1, axis=0)
    d = nxt - v
    denom = np.sum(d * d, axis=1)
    t = np.clip(np.sum((pt - v) * d, axis=1) / np.where(denom < 1e-300, 1.0, denom), 0, 1)
    proj = v + t[:, None] * d
    return float(np.min(np.linalg.norm(proj - pt, axis=1)))


def polygon_min_distance(a: Polygon, b: Polygon) -> float:
    """Minimum distance between two polygon boundaries (0 if overlapping)."""
    if intersection_area(a, b) > 0:
        return 0.0
    best = math.inf
    for poly_from, poly_to in ((a, b), (b, a)):
        va = poly_from.vertices
        vb = poly_to.vertices
        nxt = np.roll(vb, -1, axis=0)
        d = nxt - vb
        denom = np.sum(d * d, axis=1)
        denom = np.where(denom < 1e-300, 1.0, denom)
        for pt in va:
            t = np.clip(np.sum((pt - vb) * d, axis=1) / denom, 0, 1)
            proj = vb + t[:, None] * d
            best = min(best, float(np.min(np.linalg.norm(proj - pt, axis=1))))
    return best
