"""Procedural watertight hand model, stand-in for licensed model assets.

The mesh is the zero level set of a capsule-and-rounded-box distance field
(palm slab, thenar wedge, three capsules per finger), extracted with marching
cubes at a cell size chosen to land near the requested vertex count. The
skeleton is a wrist plus five 3-joint chains with fingertip pseudo-joints,
matching the usual 16-joint hand topology. Everything downstream (regressor,
skinning weights, shape bases) is derived deterministically from the seed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from skimage.measure import marching_cubes

from .model import (
    NUM_JOINTS,
    NUM_KEYPOINTS,
    NUM_TIPS,
    HandModelSpec,
    Mesh,
)

__all__ = ["generate_synthetic_model", "icosphere"]

_MIN_VERTICES = 100


@dataclass
class _Skeleton:
    joints: np.ndarray        # (21, 3) designed keypoint positions, mm
    parents: np.ndarray       # (16,)
    tip_parents: np.ndarray   # (5,)
    capsules: list            # (a, b, radius) triples
    palm_center: np.ndarray
    palm_half: np.ndarray
    palm_round: float


def _design_skeleton(rng):
    """Lay out a stylized right hand in the x-y plane, wrist at the origin."""
    # Per-finger: MCP position, planar direction angle from +y (rad),
    # (proximal, middle, distal) segment lengths, (proximal, mid, distal) radii.
    fingers = [
        # thumb
        (np.array([-58.0, 28.0, 0.0]), np.deg2rad(-39.0), (40.0, 32.0, 26.0), (12.0, 11.0, 10.0)),
        # index
        (np.array([-45.0, 94.0, 0.0]), np.deg2rad(-16.0), (42.0, 30.0, 24.0), (9.5, 8.5, 7.5)),
        # middle
        (np.array([-15.0, 97.0, 0.0]), np.deg2rad(-5.0), (46.0, 33.0, 26.0), (9.5, 8.5, 7.5)),
        # ring
        (np.array([15.0, 96.0, 0.0]), np.deg2rad(6.0), (42.0, 30.0, 24.0), (9.0, 8.0, 7.0)),
        # pinky
        (np.array([45.0, 90.0, 0.0]), np.deg2rad(18.0), (34.0, 25.0, 20.0), (8.5, 8.0, 7.0)),
    ]
    joints = np.zeros((NUM_KEYPOINTS, 3))
    parents = np.full(NUM_JOINTS, -1, dtype=np.int32)
    tip_parents = np.zeros(NUM_TIPS, dtype=np.int32)
    capsules = []
    for f, (mcp, angle, lengths, radii) in enumerate(fingers):
        mcp = mcp + rng.uniform(-1.5, 1.5, size=3) * np.array([1.0, 1.0, 0.3])
        angle = angle + rng.uniform(-0.03, 0.03)
        direction = np.array([np.sin(angle), np.cos(angle), 0.0])
        lengths = np.asarray(lengths) * rng.uniform(0.96, 1.04, size=3)
        base = NUM_JOINTS // 5 * 0 + 1 + 3 * f
        pos = mcp
        for s in range(3):
            joints[base + s] = pos
            parents[base + s] = 0 if s == 0 else base + s - 1
            nxt = pos + direction * lengths[s]
            capsules.append((pos.copy(), nxt.copy(), float(radii[s])))
            pos = nxt
        joints[NUM_JOINTS + f] = pos
        tip_parents[f] = base + 2
    palm_center = np.array([0.0, 50.0, 0.0])
    palm_half = np.array([52.0, 44.0, 8.5])
    palm_round = 6.0
    # Thenar wedge connecting the thumb column to the palm.
    capsules.append((np.array([-20.0, 18.0, 0.0]), joints[1].copy(), 14.0))
    # Wrist stub so the root joint sits inside flesh.
    capsules.append((np.array([0.0, -12.0, 0.0]), np.array([0.0, 14.0, 0.0]), 16.0))
    return _Skeleton(joints, parents, tip_parents, capsules,
                     palm_center, palm_half, palm_round)


def _sdf(skel, points):
    """Signed distance (negative inside) of the union of hand primitives."""
    p = np.asarray(points, dtype=np.float64)
    q = np.abs(p - skel.palm_center) - skel.palm_half
    qp = np.maximum(q, 0.0)
    d = np.linalg.norm(qp, axis=-1) + np.minimum(q.max(axis=-1), 0.0) - skel.palm_round
    for a, b, r in skel.capsules:
        ba = b - a
        h = np.clip(((p - a) @ ba) / (ba @ ba), 0.0, 1.0)
        cap = np.linalg.norm(p - a - h[..., None] * ba, axis=-1) - r
        d = np.minimum(d, cap)
    return d


def _extract_surface(skel, cell, origin_shift=0.0):
    lo = np.array([-135.0, -32.0, -32.0]) + origin_shift * cell
    hi = np.array([72.0, 205.0, 32.0])
    shape = np.ceil((hi - lo) / cell).astype(int) + 1
    axes = [lo[k] + cell * np.arange(shape[k]) for k in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = _sdf(skel, grid.reshape(-1, 3)).reshape(grid.shape[:3])
    verts, faces, _, _ = marching_cubes(
        values, level=0.0, spacing=(cell, cell, cell), allow_degenerate=False)
    verts = verts + lo
    faces = np.ascontiguousarray(faces, dtype=np.int32)
    # Orient faces outward (positive signed volume).
    v = verts[faces]
    vol = np.einsum("ij,ij->", np.cross(v[:, 0], v[:, 1]), v[:, 2]) / 6.0
    if vol < 0:
        faces = faces[:, [0, 2, 1]]
    return verts, faces


def _edge_counts(faces):
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return counts


def _connected_components(n_verts, faces):
    parent = np.arange(n_verts)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b, c in faces:
        ra, rb, rc = find(a), find(b), find(c)
        parent[rb] = ra
        parent[rc] = ra
    return len({find(i) for i in range(n_verts)})


def _capsule_hand_mesh(skel, n_vertices):
    """Marching-cubes surface tuned toward n_vertices, validated watertight."""
    cell = 8.0 * np.sqrt(900.0 / n_vertices)
    for attempt in range(6):
        shift = 0.137 * attempt
        verts, faces = _extract_surface(skel, cell, origin_shift=shift)
        ratio = verts.shape[0] / n_vertices
        if attempt < 2 and not 0.72 <= ratio <= 1.38:
            cell *= np.sqrt(ratio)
            continue
        counts = _edge_counts(faces)
        if np.all(counts == 2) and _connected_components(len(verts), faces) == 1:
            return verts, faces
        cell *= 1.003  # re-mesh with a nudged grid on a rare bad extraction
    raise RuntimeError("could not extract a watertight single-component hand surface")


def _regressor_row(position, vertices, k=12, anchor=1000.0):
    """Sparse convex weights over the k nearest vertices hitting ``position``.

    Non-negative least squares on the vertex coordinates with a heavily
    weighted sum-to-one row, then renormalized so the row sums to 1 exactly.
    """
    d = np.linalg.norm(vertices - position, axis=1)
    nearest = np.argsort(d)[:k]
    a = np.concatenate([vertices[nearest].T, np.full((1, k), anchor)])
    b = np.concatenate([position, [anchor]])
    w, _ = nnls(a, b)
    if w.sum() <= 0:
        w = np.ones(k)
    w /= w.sum()
    row = np.zeros(vertices.shape[0])
    row[nearest] = w
    return row


def _segment_distance(points, a, b):
    ba = b - a
    h = np.clip(((points - a) @ ba) / (ba @ ba), 0.0, 1.0)
    return np.linalg.norm(points - a - h[:, None] * ba, axis=1)


def _skinning_weights(vertices, rest, parents, tip_parents, sigma=12.0, cutoff=1e-3):
    """Gaussian-of-distance weights to each joint's bone segment, normalized.

    The root's "bone" is the fan of wrist-to-MCP segments, so palm vertices
    follow the root. Weights below cutoff * row max are dropped to keep rows
    sparse, then rows are renormalized to sum to exactly 1.
    """
    child = np.full(NUM_JOINTS, -1, dtype=np.int64)
    full_parents = np.concatenate([parents, tip_parents])
    for k in range(1, NUM_KEYPOINTS):
        p = full_parents[k]
        if p != 0:
            child[p] = k
    dist = np.zeros((vertices.shape[0], NUM_JOINTS))
    mcps = [j for j in range(1, NUM_JOINTS) if parents[j] == 0]
    dist[:, 0] = np.min(
        [_segment_distance(vertices, rest[0], rest[j]) for j in mcps], axis=0)
    for j in range(1, NUM_JOINTS):
        dist[:, j] = _segment_distance(vertices, rest[j], rest[child[j]])
    w = np.exp(-((dist / sigma) ** 2))
    w[w < cutoff * w.max(axis=1, keepdims=True)] = 0.0
    return w / w.sum(axis=1, keepdims=True)


def _shape_bases(vertices, n_dims, rng, rms_mm=1.5, n_bumps=3, bump_sigma=35.0):
    """Random smooth orthogonal vertex-offset fields, rms_mm per unit coefficient."""
    n = vertices.shape[0]
    raw = np.zeros((n_dims, n * 3))
    span = vertices.max(axis=0) - vertices.min(axis=0)
    lo = vertices.min(axis=0)
    for s in range(n_dims):
        field = np.zeros((n, 3))
        for _ in range(n_bumps):
            center = lo + rng.uniform(0.0, 1.0, size=3) * span
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            r2 = np.sum((vertices - center) ** 2, axis=1)
            field += np.exp(-r2 / (2.0 * bump_sigma**2))[:, None] * direction
        raw[s] = field.ravel()
    q, _ = np.linalg.qr(raw.T)
    scale = rms_mm * np.sqrt(3.0 * n)
    return (q.T * scale).reshape(n_dims, n, 3)


def generate_synthetic_model(seed, n_vertices=900, n_shape_dims=10):
    """Build a complete synthetic hand model, bit-identical per seed.

    n_vertices is a target: the marching-cubes cell size is tuned toward it,
    not forced to hit it exactly.
    """
    if n_vertices < _MIN_VERTICES:
        raise ValueError(f"n_vertices must be >= {_MIN_VERTICES}, got {n_vertices}")
    if n_shape_dims < 1:
        raise ValueError(f"n_shape_dims must be >= 1, got {n_shape_dims}")
    rng = np.random.default_rng(seed)
    skel = _design_skeleton(rng)
    verts, faces = _capsule_hand_mesh(skel, n_vertices)
    regressor = np.stack([_regressor_row(skel.joints[k], verts)
                          for k in range(NUM_KEYPOINTS)])
    rest = regressor @ verts
    weights = _skinning_weights(verts, rest, skel.parents, skel.tip_parents)
    bases = _shape_bases(verts, n_shape_dims, rng)
    model = HandModelSpec(
        template_vertices=verts,
        faces=faces,
        shape_blendshapes=bases,
        pose_blendshapes=None,
        skinning_weights=weights,
        joint_regressor=regressor,
        parents=skel.parents,
        tip_parents=skel.tip_parents,
    )
    return model.validate()


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _ICO_T, 0], [1, _ICO_T, 0], [-1, -_ICO_T, 0], [1, -_ICO_T, 0],
    [0, -1, _ICO_T], [0, 1, _ICO_T], [0, -1, -_ICO_T], [0, 1, -_ICO_T],
    [_ICO_T, 0, -1], [_ICO_T, 0, 1], [-_ICO_T, 0, -1], [-_ICO_T, 0, 1],
], dtype=np.float64)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def icosphere(radius, center=(0.0, 0.0, 0.0), subdivisions=2):
    """Watertight triangulated sphere by icosahedron subdivision."""
    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    for _ in range(subdivisions):
        cache = {}
        new_faces = []

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    vertices = np.asarray(verts) * radius + np.asarray(center, dtype=np.float64)
    return Mesh(vertices, np.asarray(faces, dtype=np.int32))
