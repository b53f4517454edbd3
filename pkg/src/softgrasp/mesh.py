"""Triangle meshes: OBJ / STL readers and parallel-jaw ray sampling."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Mesh",
    "MeshParseError",
    "RayHit",
    "load_mesh",
    "parse_obj",
    "parse_stl",
    "plane_frame",
    "cast_parallel_rays",
]

UNIT_SCALE = {"m": 1.0, "mm": 1e-3}


class MeshParseError(ValueError):
    def __init__(self, message, offset=None):
        where = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")
        self.offset = offset


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray = field(repr=False)
    dropped_degenerate: int = 0

    @classmethod
    def from_arrays(cls, vertices, triangles, *, weld: bool = True) -> "Mesh":
        """Build a mesh, merging identical vertices and dropping zero-area faces."""
        V = np.asarray(vertices, dtype=float).reshape(-1, 3)
        T = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
        if V.size == 0 or T.size == 0:
            raise MeshParseError("mesh has no triangles")
        if T.min() < 0 or T.max() >= len(V):
            raise MeshParseError("triangle index out of range")
        if weld:
            V, inverse = np.unique(V, axis=0, return_inverse=True)
            T = inverse.reshape(-1)[T]
        n = np.cross(V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]])
        area2 = np.linalg.norm(n, axis=1)
        scale = max(float(np.ptp(V, axis=0).max()), 1e-300)
        keep = area2 > 1e-14 * scale * scale
        if not np.any(keep):
            raise MeshParseError("mesh has no non-degenerate triangles")
        T = T[keep]
        normals = n[keep] / area2[keep, None]
        return cls(V, T, normals, int(np.count_nonzero(~keep)))

    @property
    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def translated(self, offset) -> "Mesh":
        return Mesh(self.vertices + np.asarray(offset, dtype=float), self.triangles,
                    self.normals, self.dropped_degenerate)

    def scaled(self, factor: float) -> "Mesh":
        return Mesh(self.vertices * factor, self.triangles, self.normals, self.dropped_degenerate)


def parse_obj(data: bytes) -> Mesh:
    """Vertices and faces of a Wavefront OBJ; polygons are fan-triangulated."""
    verts = []
    tris = []
    offset = 0
    for raw in data.splitlines(keepends=True):
        line = raw.split(b"#", 1)[0].strip()
        start = offset
        offset += len(raw)
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == b"v":
                if len(parts) < 4:
                    raise MeshParseError("vertex needs three coordinates", start)
                verts.append([float(p) for p in parts[1:4]])
            elif tag == b"f":
                if len(parts) < 4:
                    raise MeshParseError("face needs at least three vertices", start)
                idx = []
                for p in parts[1:]:
                    i = int(p.split(b"/", 1)[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                for j in range(1, len(idx) - 1):
                    tris.append((idx[0], idx[j], idx[j + 1]))
        except ValueError as exc:
            if isinstance(exc, MeshParseError):
                raise
            raise MeshParseError(f"malformed OBJ record {line[:40]!r}", start) from None
    if not tris:
        raise MeshParseError("OBJ file contains no faces", len(data))
    if min(min(t) for t in tris) < 0 or max(max(t) for t in tris) >= len(verts):
        raise MeshParseError("face references a missing vertex", len(data))
    return Mesh.from_arrays(verts, tris)


def _parse_stl_binary(data: bytes) -> Mesh:
    if len(data) < 84:
        raise MeshParseError("binary STL shorter than its header", len(data))
    (count,) = struct.unpack_from("<I", data, 80)
    need = 84 + 50 * count
    if len(data) < need:
        complete = (len(data) - 84) // 50
        raise MeshParseError(
            f"binary STL truncated: header declares {count} facets, file holds {complete}",
            84 + 50 * complete)
    rec = np.frombuffer(data, dtype=np.dtype([("n", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]),
                        count=count, offset=84)
    V = rec["v"].reshape(-1, 3).astype(float)
    T = np.arange(len(V)).reshape(-1, 3)
    return Mesh.from_arrays(V, T)


def _parse_stl_ascii(data: bytes) -> Mesh:
    verts = []
    offset = 0
    state = "solid"
    loop = 0
    for raw in data.splitlines(keepends=True):
        start = offset
        offset += len(raw)
        parts = raw.split()
        if not parts:
            continue
        key = parts[0].lower()
        if key == b"vertex":
            if len(parts) != 4:
                raise MeshParseError("vertex needs three coordinates", start)
            try:
                verts.append([float(p) for p in parts[1:]])
            except ValueError:
                raise MeshParseError("malformed vertex coordinates", start) from None
            loop += 1
        elif key == b"endloop":
            if loop != 3:
                raise MeshParseError(f"facet loop has {loop} vertices, expected 3", start)
            loop = 0
        elif key == b"endsolid":
            state = "done"
            break
        elif key not in (b"solid", b"facet", b"outer", b"endfacet"):
            raise MeshParseError(f"unexpected ASCII STL keyword {parts[0][:20]!r}", start)
    if state != "done":
        raise MeshParseError("ASCII STL ends before 'endsolid'", len(data))
    if loop:
        raise MeshParseError("ASCII STL ends inside a facet", len(data))
    if not verts:
        raise MeshParseError("STL file contains no facets", len(data))
    V = np.asarray(verts)
    return Mesh.from_arrays(V, np.arange(len(V)).reshape(-1, 3))


def parse_stl(data: bytes) -> Mesh:
    """ASCII or binary STL, told apart by the binary size contract."""
    if len(data) >= 84:
        (count,) = struct.unpack_from("<I", data, 80)
        if len(data) == 84 + 50 * count:
            return _parse_stl_binary(data)
    if data.lstrip()[:5].lower() == b"solid":
        return _parse_stl_ascii(data)
    return _parse_stl_binary(data)


def load_mesh(path, fmt: str | None = None, units: str = "m") -> Mesh:
    """Read an OBJ or STL file; coordinates are converted to meters."""
    path = Path(path)
    if units not in UNIT_SCALE:
        raise ValueError(f"units must be one of {sorted(UNIT_SCALE)}, got {units!r}")
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    data = path.read_bytes()
    if fmt == "obj":
        mesh = parse_obj(data)
    elif fmt == "stl":
        mesh = parse_stl(data)
    else:
        raise ValueError(f"unsupported mesh format {fmt!r}")
    scale = UNIT_SCALE[units]
    return mesh if scale == 1.0 else mesh.scaled(scale)


def plane_frame(direction):
    """Orthonormal (u, w) spanning the plane normal to ``direction``.

    For direction = +x this is (+y, +z), so plane coordinates read as (y, z).
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    ref = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(ref, d)
    u /= np.linalg.norm(u)
    return u, np.cross(d, u)


@dataclass(frozen=True)
class RayHit:
    depth: float
    face: int


def cast_parallel_rays(mesh: Mesh, direction, points_uw, *, tol: float = 1e-12):
    """Hits of rays along ``direction`` through plane points (u, w).

    Returns one list of RayHit per ray, sorted by depth along the direction.
    Faces parallel to the rays are skipped. Hits on shared edges are merged.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    u, w = plane_frame(d)
    P = np.asarray(points_uw, dtype=float).reshape(-1, 2)
    V = mesh.vertices
    Vu, Vw, Vd = V @ u, V @ w, V @ d
    hits = [[] for _ in range(len(P))]
    if len(P) == 0:
        return hits
    order = np.argsort(P[:, 0], kind="stable")
    Pu_sorted = P[order, 0]
    facing = np.abs(mesh.normals @ d) > 1e-12
    extent = float(np.ptp(V, axis=0).max())
    eps = tol * max(extent, 1.0)
    for f in np.flatnonzero(facing):
        a, b, c = mesh.triangles[f]
        tu = Vu[[a, b, c]]
        tw = Vw[[a, b, c]]
        lo = np.searchsorted(Pu_sorted, tu.min() - eps, side="left")
        hi = np.searchsorted(Pu_sorted, tu.max() + eps, side="right")
        if lo >= hi:
            continue
        idx = order[lo:hi]
        pw = P[idx, 1]
        sel = (pw >= tw.min() - eps) & (pw <= tw.max() + eps)
        if not np.any(sel):
            continue
        idx = idx[sel]
        x, y = P[idx, 0], P[idx, 1]
        det = (tw[1] - tw[2]) * (tu[0] - tu[2]) + (tu[2] - tu[1]) * (tw[0] - tw[2])
        l1 = ((tw[1] - tw[2]) * (x - tu[2]) + (tu[2] - tu[1]) * (y - tw[2])) / det
        l2 = ((tw[2] - tw[0]) * (x - tu[2]) + (tu[0] - tu[2]) * (y - tw[2])) / det
        l3 = 1.0 - l1 - l2
        inside = (l1 >= -1e-12) & (l2 >= -1e-12) & (l3 >= -1e-12)
        for i, b1, b2, b3 in zip(idx[inside], l1[inside], l2[inside], l3[inside]):
            hits[i].append(RayHit(float(b1 * Vd[a] + b2 * Vd[b] + b3 * Vd[c]), int(f)))
    merge = 1e-9 * max(extent, 1e-300)
    out = []
    for hs in hits:
        hs.sort(key=lambda h: (h.depth, h.face))
        merged = []
        for h in hs:
            if merged and abs(h.depth - merged[-1].depth) <= merge:
                continue
            merged.append(h)
        out.append(merged)
    return out


def _unit_cube():
    V = np.array([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)], dtype=float)
    return V


def box_mesh(size, center=(0.0, 0.0, 0.0)) -> Mesh:
    """Closed axis-aligned box with outward-facing triangles."""
    sx, sy, sz = (float(s) for s in size)
    V = (_unit_cube() - 0.5) * np.array([sx, sy, sz]) + np.asarray(center, dtype=float)
    # Vertex index = 4x + 2y + z for corner bits (x, y, z).
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    T = [(q[0], q[1], q[2]) for q in quads] + [(q[0], q[2], q[3]) for q in quads]
    return Mesh.from_arrays(V, T)


def ellipsoid_mesh(radii, n_lat: int = 24, n_lon: int = 48, center=(0.0, 0.0, 0.0)) -> Mesh:
    """UV-sphere ellipsoid with outward-facing triangles."""
    a, b, c = (float(r) for r in radii)
    verts = [(0.0, 0.0, c)]
    for i in range(1, n_lat):
        th = math.pi * i / n_lat
        for j in range(n_lon):
            ph = 2 * math.pi * j / n_lon
            verts.append((a * math.sin(th) * math.cos(ph), b * math.sin(th) * math.sin(ph), c * math.cos(th)))
    verts.append((0.0, 0.0, -c))
    south = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append((0, ring(1, j), ring(1, j + 1)))
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a0, a1 = ring(i, j), ring(i, j + 1)
            b0, b1 = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append((a0, b0, b1))
            tris.append((a0, b1, a1))
    for j in range(n_lon):
        tris.append((south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)))
    V = np.asarray(verts) + np.asarray(center, dtype=float)
    return Mesh.from_arrays(V, tris)


def to_obj(mesh: Mesh, precision: int = 9) -> str:
    lines = [f"v {x:.{precision}g} {y:.{precision}g} {z:.{precision}g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    return "\n".join(lines) + "\n"


def to_stl_binary(mesh: Mesh) -> bytes:
    out = bytearray(b"softgrasp".ljust(80, b" "))
    out += struct.pack("<I", len(mesh.triangles))
    for (a, b, c), n in zip(mesh.triangles, mesh.normals):
        out += struct.pack("<12fH", *n, *mesh.vertices[a], *mesh.vertices[b], *mesh.vertices[c], 0)
    return bytes(out)
