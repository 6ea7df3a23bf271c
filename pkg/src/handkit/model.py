"""Parametric hand model: template + blend shapes + linear blend skinning.

The model maps shape coefficients and per-joint rotations to a posed mesh.
Conventions, used consistently across the package:

- units are millimeters
- 16 articulated joints (index 0 = wrist/root), 5 fingertip pseudo-joints
  appended as regressor rows 16..20, for 21 keypoints total
- fingertips carry no rotation of their own; they ride on their parent joint
- rest joints are regressed from the shape-deformed template; pose corrective
  blend shapes (when present) deform vertices only, never the rest skeleton
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .rotations import Rotation

__all__ = [
    "NUM_JOINTS",
    "NUM_TIPS",
    "NUM_KEYPOINTS",
    "HandModelSpec",
    "Shape",
    "Pose",
    "Mesh",
    "shaped_template",
    "rest_joints",
    "forward",
    "regress_joints",
    "rest_pose_gap",
    "posed_joints_root_jacobian",
    "sample_pose",
    "flexed_pose",
]

NUM_JOINTS = 16
NUM_TIPS = 5
NUM_KEYPOINTS = NUM_JOINTS + NUM_TIPS

_ROW_SUM_TOL = 1e-6


@dataclass
class HandModelSpec:
    """Immutable bundle of everything the forward pass needs.

    template_vertices : (N, 3) mean mesh, mm
    faces             : (M, 3) int triangle indices
    shape_blendshapes : (S, N, 3) vertex offsets per unit shape coefficient
    pose_blendshapes  : (P, N, 3) or None; P = 9 * 15 rotation-feature dims
    skinning_weights  : (N, 16) convex rows
    joint_regressor   : (21, N) convex rows; rows 16..20 are fingertips
    parents           : (16,) parent joint indices, parents[0] == -1
    tip_parents       : (5,) articulated joint each fingertip attaches to
    """

    template_vertices: np.ndarray
    faces: np.ndarray
    shape_blendshapes: np.ndarray
    pose_blendshapes: np.ndarray | None
    skinning_weights: np.ndarray
    joint_regressor: np.ndarray
    parents: np.ndarray
    tip_parents: np.ndarray

    @property
    def n_vertices(self):
        return self.template_vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def n_shape_dims(self):
        return self.shape_blendshapes.shape[0]

    @property
    def full_parents(self):
        """Parent indices over all 21 keypoints (tips appended)."""
        return np.concatenate([self.parents, self.tip_parents])

    def bone_children(self):
        """For each articulated joint, its child keypoint along the finger chain.

        Entry 0 (the root, which fans out into five fingers) is -1; joints
        1..15 each have exactly one child in the MANO-style topology.
        """
        child = np.full(NUM_JOINTS, -1, dtype=np.int64)
        for k in range(1, NUM_KEYPOINTS):
            p = self.full_parents[k]
            if p != 0:
                child[p] = k
        return child

    def validate(self):
        """Raise ValueError naming the offending section on any broken invariant."""
        t = self.template_vertices
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError(f"template: expected (N, 3) array, got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValueError("template: contains non-finite values")
        n = t.shape[0]
        f = self.faces
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError(f"faces: expected (M, 3) array, got {f.shape}")
        if f.min(initial=0) < 0 or f.max(initial=-1) >= n:
            raise ValueError(f"faces: vertex indices out of range [0, {n})")
        bs = self.shape_blendshapes
        if bs.ndim != 3 or bs.shape[1:] != (n, 3):
            raise ValueError(
                f"shape_blendshapes: expected (S, {n}, 3), got {bs.shape}")
        if self.pose_blendshapes is not None:
            bp = self.pose_blendshapes
            expected_p = 9 * (NUM_JOINTS - 1)
            if bp.shape != (expected_p, n, 3):
                raise ValueError(
                    f"pose_blendshapes: expected ({expected_p}, {n}, 3), got {bp.shape}")
        w = self.skinning_weights
        if w.shape != (n, NUM_JOINTS):
            raise ValueError(
                f"skinning_weights: expected ({n}, {NUM_JOINTS}), got {w.shape}")
        if w.min() < -1e-12:
            raise ValueError("skinning_weights: negative entries")
        bad = np.abs(w.sum(axis=1) - 1.0) > _ROW_SUM_TOL
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"skinning_weights: row {i} sums to {w[i].sum():.6g}, expected 1")
        j = self.joint_regressor
        if j.shape != (NUM_KEYPOINTS, n):
            raise ValueError(
                f"joint_regressor: expected ({NUM_KEYPOINTS}, {n}), got {j.shape}")
        if j.min() < -1e-12:
            raise ValueError("joint_regressor: negative entries")
        bad = np.abs(j.sum(axis=1) - 1.0) > _ROW_SUM_TOL
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"joint_regressor: row {i} sums to {j[i].sum():.6g}, expected 1")
        p = self.parents
        if p.shape != (NUM_JOINTS,):
            raise ValueError(f"parents: expected ({NUM_JOINTS},), got {p.shape}")
        if p[0] != -1:
            raise ValueError(f"parents: root parent must be -1, got {p[0]}")
        for k in range(1, NUM_JOINTS):
            if not 0 <= p[k] < k:
                raise ValueError(
                    f"parents: joint {k} has parent {p[k]}; parents must precede children")
        tp = self.tip_parents
        if tp.shape != (NUM_TIPS,):
            raise ValueError(f"parents: expected {NUM_TIPS} tip entries, got {tp.shape}")
        if tp.min() < 1 or tp.max() >= NUM_JOINTS:
            raise ValueError("parents: tip attachments must name articulated joints")
        return self


@dataclass
class Shape:
    """Shape coefficients (dimensionless); |beta| > 5 is suspicious but allowed."""

    beta: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.beta)):
            raise ValueError("shape coefficients must be finite")
        if np.any(np.abs(self.beta) > 5.0):
            warnings.warn(
                "shape coefficient magnitude exceeds 5; mesh may be implausible",
                stacklevel=2)

    @classmethod
    def zeros(cls, n_dims):
        return cls(np.zeros(n_dims))


@dataclass
class Pose:
    """Root translation (mm) plus one local rotation per articulated joint."""

    root_translation: np.ndarray
    local_rotations: list = field(default_factory=list)

    def __post_init__(self):
        self.root_translation = np.asarray(
            self.root_translation, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(self.root_translation)):
            raise ValueError("root translation must be finite")
        if len(self.local_rotations) != NUM_JOINTS:
            raise ValueError(
                f"pose needs {NUM_JOINTS} rotations, got {len(self.local_rotations)}")

    @classmethod
    def identity(cls):
        return cls(np.zeros(3), [Rotation.identity() for _ in range(NUM_JOINTS)])


@dataclass
class Mesh:
    """Triangle mesh; faces are shared with the generating model."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.faces = np.asarray(self.faces)

    def translated(self, offset):
        return Mesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)


def _pose_feature(pose):
    """Rotation features driving pose correctives: (R_k - I) flattened, k = 1..15."""
    feats = np.empty((NUM_JOINTS - 1, 9))
    eye = np.eye(3)
    for k in range(1, NUM_JOINTS):
        feats[k - 1] = (pose.local_rotations[k].as_matrix() - eye).ravel()
    return feats.ravel()


def _shape_offset(model, shape):
    if shape.beta.shape[0] != model.n_shape_dims:
        raise ValueError(
            f"shape has {shape.beta.shape[0]} coefficients, model expects "
            f"{model.n_shape_dims}")
    return np.einsum("s,snk->nk", shape.beta, model.shape_blendshapes)


def shaped_template(model, shape, pose):
    """Template deformed by shape and (if the model ships them) pose correctives."""
    verts = model.template_vertices + _shape_offset(model, shape)
    if model.pose_blendshapes is not None:
        verts = verts + np.einsum(
            "p,pnk->nk", _pose_feature(pose), model.pose_blendshapes)
    return verts


def rest_joints(model, shape):
    """All 21 rest keypoints regressed from the shape-deformed template."""
    return model.joint_regressor @ (model.template_vertices + _shape_offset(model, shape))


def _joint_transforms(model, shape, pose):
    """Per-joint global 4x4 transforms mapping rest space to posed space.

    The root transform rotates about the rest wrist and then translates, so an
    identity pose yields exact identity matrices (no rest-pose subtraction
    residue).
    """
    rest = rest_joints(model, shape)
    g = np.zeros((NUM_JOINTS, 4, 4))
    for j in range(NUM_JOINTS):
        r = pose.local_rotations[j].as_matrix()
        local = np.eye(4)
        local[:3, :3] = r
        local[:3, 3] = rest[j] - r @ rest[j]
        if j == 0:
            local[:3, 3] += pose.root_translation
            g[0] = local
        else:
            g[j] = g[model.parents[j]] @ local
    return g, rest


def forward(model, shape, pose):
    """Pose the model; returns (mesh, 21 keypoints).

    Articulated keypoints are the kinematic joint centers; fingertip keypoints
    ride rigidly on their parent joint's transform.
    """
    g, rest = _joint_transforms(model, shape, pose)
    joints = np.empty((NUM_KEYPOINTS, 3))
    for j in range(NUM_JOINTS):
        joints[j] = g[j, :3, :3] @ rest[j] + g[j, :3, 3]
    for f in range(NUM_TIPS):
        p = model.tip_parents[f]
        joints[NUM_JOINTS + f] = g[p, :3, :3] @ rest[NUM_JOINTS + f] + g[p, :3, 3]
    verts0 = shaped_template(model, shape, pose)
    per_vertex = np.einsum("nj,jab->nab", model.skinning_weights, g)
    verts = np.einsum("nab,nb->na", per_vertex[:, :3, :3], verts0) + per_vertex[:, :3, 3]
    return Mesh(verts, model.faces), joints


def regress_joints(mesh, model):
    """Regress 21 keypoints from arbitrary mesh vertices (valid only at rest)."""
    if mesh.vertices.shape[0] != model.n_vertices:
        raise ValueError(
            f"mesh has {mesh.vertices.shape[0]} vertices, model expects "
            f"{model.n_vertices}")
    return model.joint_regressor @ mesh.vertices


def rest_pose_gap(model, shape, pose):
    """Per-joint distance between regressed and kinematic joints on a posed mesh.

    Returns (per_joint, mean) over the 16 articulated joints, in mm. Zero at
    the identity pose; grows with articulation because the regressor is only
    valid on rest-pose geometry.
    """
    mesh, kin = forward(model, shape, pose)
    reg = regress_joints(mesh, model)
    per_joint = np.linalg.norm(reg[:NUM_JOINTS] - kin[:NUM_JOINTS], axis=1)
    return per_joint, float(per_joint.mean())


def posed_joints_root_jacobian(model, shape, pose):
    """Analytic (21, 3, 3) Jacobian of posed keypoints w.r.t. the root rotvec.

    Entry [k, :, i] is the derivative of keypoint k against coordinate i of the
    root rotation's axis-angle vector, holding all other parameters fixed.
    Uses the closed-form derivative of the rotation matrix along its rotvec
    coordinates (Gallego & Yezzi), with the skew-basis limit at zero rotation.
    """
    omega = pose.local_rotations[0].as_rotvec()
    r0 = pose.local_rotations[0].as_matrix()
    rest = rest_joints(model, shape)
    # Keypoints with identity root and zero translation: p_k = R0 (q_k - j0) + j0 + t.
    neutral = Pose(np.zeros(3),
                   [Rotation.identity()] + list(pose.local_rotations[1:]))
    _, q = forward(model, shape, neutral)
    lever = q - rest[0]

    def skew(v):
        return np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])

    n2 = float(omega @ omega)
    dr = np.empty((3, 3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        if n2 < 1e-16:
            dr[i] = skew(e)
        else:
            dr[i] = (omega[i] * skew(omega) + skew(np.cross(omega, (np.eye(3) - r0) @ e))) @ r0 / n2
    jac = np.empty((NUM_KEYPOINTS, 3, 3))
    for i in range(3):
        jac[:, :, i] = lever @ dr[i].T
    return jac


def _perpendicular_axis(direction, rng=None, reference=None):
    """A unit vector perpendicular to ``direction``; random if rng given."""
    d = direction / np.linalg.norm(direction)
    if rng is not None:
        v = rng.normal(size=3)
    else:
        v = np.asarray(reference, dtype=np.float64)
    v = v - (v @ d) * d
    n = np.linalg.norm(v)
    if n < 1e-9:
        v = np.array([0.0, 0.0, 1.0]) - d[2] * d
        n = np.linalg.norm(v)
    return v / n


def _rest_bone_directions(model, shape):
    """Unit rest-pose bone directions for joints 1..15 (joint -> its child)."""
    rest = rest_joints(model, shape)
    child = model.bone_children()
    dirs = np.zeros((NUM_JOINTS, 3))
    for j in range(1, NUM_JOINTS):
        d = rest[child[j]] - rest[j]
        dirs[j] = d / np.linalg.norm(d)
    return dirs


def sample_pose(model, rng, shape=None, max_swing=0.8, max_twist=0.0,
                root_rotation=True, max_translation=0.0):
    """Draw a random articulated pose.

    Every non-root joint gets a swing about a random axis perpendicular to its
    rest bone direction plus a twist about the bone itself, so the magnitudes
    of true swing and twist are controlled independently (handy for ablations).
    """
    if shape is None:
        shape = Shape.zeros(model.n_shape_dims)
    dirs = _rest_bone_directions(model, shape)
    rotations = [Rotation.identity()]
    for j in range(1, NUM_JOINTS):
        axis = _perpendicular_axis(dirs[j], rng=rng)
        swing = Rotation.from_axis_angle(axis, rng.uniform(-max_swing, max_swing))
        rot = swing
        if max_twist > 0:
            twist = Rotation.from_axis_angle(dirs[j], rng.uniform(-max_twist, max_twist))
            rot = swing * twist
        rotations.append(rot)
    if root_rotation:
        v = rng.normal(size=3)
        rotations[0] = Rotation.from_axis_angle(
            v / np.linalg.norm(v), rng.uniform(0.0, np.pi / 2))
    translation = rng.uniform(-max_translation, max_translation, size=3) \
        if max_translation > 0 else np.zeros(3)
    return Pose(translation, rotations)


def flexed_pose(model, amount, shape=None):
    """One-parameter curl family: every finger joint flexes by ``amount`` radians.

    The flexion axis per joint is perpendicular to the rest bone direction,
    picked deterministically, so the family sweeps from the rest pose into a
    progressively stronger grip as ``amount`` grows.
    """
    if shape is None:
        shape = Shape.zeros(model.n_shape_dims)
    dirs = _rest_bone_directions(model, shape)
    rotations = [Rotation.identity()]
    for j in range(1, NUM_JOINTS):
        axis = _perpendicular_axis(dirs[j], reference=np.array([0.0, 1.0, 0.0]))
        rotations.append(Rotation.from_axis_angle(axis, amount))
    return Pose(np.zeros(3), rotations)
