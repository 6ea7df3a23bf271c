"""Rotation primitives: axis-angle / matrix conversions, swing-twist split, vector alignment.

Rotations are stored as unit quaternions (w, x, y, z) and composed in that
form; matrices are materialized on demand. All angles are radians, normalized
to (-pi, pi]. Everything here is pure and side-effect free.
"""

import numpy as np

__all__ = [
    "Rotation",
    "normalize_angle",
    "rotation_from_axis_angle",
    "swing_twist_decompose",
    "align_vectors",
]

_UNIT_AXIS_TOL = 1e-6


def normalize_angle(angle):
    """Wrap an angle in radians into (-pi, pi]."""
    a = float(angle) % (2.0 * np.pi)
    if a > np.pi:
        a -= 2.0 * np.pi
    return a


class Rotation:
    """A proper 3D rotation backed by a unit quaternion (w, x, y, z).

    ``a * b`` composes so that ``(a * b).apply(v) == a.apply(b.apply(v))``,
    i.e. ``b`` acts first.
    """

    __slots__ = ("_q",)

    def __init__(self, quat):
        q = np.asarray(quat, dtype=np.float64)
        if q.shape != (4,):
            raise ValueError(f"quaternion must have shape (4,), got {q.shape}")
        n = np.linalg.norm(q)
        if n < 1e-12:
            raise ValueError("zero quaternion does not define a rotation")
        q = q / n
        # Canonical sign: w >= 0 keeps axis-angle round trips in (-pi, pi].
        if q[0] < 0:
            q = -q
        self._q = q

    @property
    def quat(self):
        """Unit quaternion (w, x, y, z) with w >= 0."""
        return self._q.copy()

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_axis_angle(cls, axis, angle):
        """Rotation by ``angle`` radians about the unit vector ``axis``."""
        axis = np.asarray(axis, dtype=np.float64)
        if axis.shape != (3,):
            raise ValueError(f"axis must have shape (3,), got {axis.shape}")
        n = np.linalg.norm(axis)
        if abs(n - 1.0) > _UNIT_AXIS_TOL:
            raise ValueError(f"axis must be unit length, got norm {n:.6g}")
        half = 0.5 * normalize_angle(angle)
        s = np.sin(half)
        return cls(np.array([np.cos(half), s * axis[0], s * axis[1], s * axis[2]]))

    @classmethod
    def from_rotvec(cls, vec):
        """Rotation from an axis-angle vector (axis * angle); zero vector is identity."""
        vec = np.asarray(vec, dtype=np.float64)
        angle = np.linalg.norm(vec)
        if angle < 1e-12:
            return cls.identity()
        return cls.from_axis_angle(vec / angle, angle)

    @classmethod
    def from_matrix(cls, m):
        """Rotation from a 3x3 orthonormal matrix (Shepperd's method)."""
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"matrix must have shape (3, 3), got {m.shape}")
        t = np.trace(m)
        if t > 0:
            s = np.sqrt(t + 1.0) * 2.0
            q = np.array([
                0.25 * s,
                (m[2, 1] - m[1, 2]) / s,
                (m[0, 2] - m[2, 0]) / s,
                (m[1, 0] - m[0, 1]) / s,
            ])
        elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
            s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            q = np.array([
                (m[2, 1] - m[1, 2]) / s,
                0.25 * s,
                (m[0, 1] + m[1, 0]) / s,
                (m[0, 2] + m[2, 0]) / s,
            ])
        elif m[1, 1] >= m[2, 2]:
            s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            q = np.array([
                (m[0, 2] - m[2, 0]) / s,
                (m[0, 1] + m[1, 0]) / s,
                0.25 * s,
                (m[1, 2] + m[2, 1]) / s,
            ])
        else:
            s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            q = np.array([
                (m[1, 0] - m[0, 1]) / s,
                (m[0, 2] + m[2, 0]) / s,
                (m[1, 2] + m[2, 1]) / s,
                0.25 * s,
            ])
        return cls(q)

    def as_matrix(self):
        w, x, y, z = self._q
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def as_axis_angle(self):
        """Return (unit axis, angle) with angle in [0, pi]; x-axis for identity."""
        w, x, y, z = self._q
        s = np.sqrt(x * x + y * y + z * z)
        if s < 1e-12:
            return np.array([1.0, 0.0, 0.0]), 0.0
        angle = 2.0 * np.arctan2(s, w)
        return np.array([x, y, z]) / s, normalize_angle(angle)

    def as_rotvec(self):
        axis, angle = self.as_axis_angle()
        return axis * angle

    def __mul__(self, other):
        if not isinstance(other, Rotation):
            return NotImplemented
        w1, x1, y1, z1 = self._q
        w2, x2, y2, z2 = other._q
        return Rotation(np.array([
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]))

    def inverse(self):
        w, x, y, z = self._q
        return Rotation(np.array([w, -x, -y, -z]))

    def apply(self, vecs):
        """Rotate a 3-vector or an (..., 3) array of vectors."""
        v = np.asarray(vecs, dtype=np.float64)
        return v @ self.as_matrix().T

    def angle_to(self, other):
        """Magnitude of the relative rotation between self and other, in [0, pi]."""
        _, angle = (self.inverse() * other).as_axis_angle()
        return abs(angle)

    def is_identity(self, tol=1e-9):
        return self.angle_to(Rotation.identity()) < tol

    def __repr__(self):
        w, x, y, z = self._q
        return f"Rotation(w={w:.6f}, x={x:.6f}, y={y:.6f}, z={z:.6f})"


def rotation_from_axis_angle(axis, angle):
    """Rodrigues construction; see :meth:`Rotation.from_axis_angle`."""
    return Rotation.from_axis_angle(axis, angle)


def swing_twist_decompose(r, axis):
    """Split ``r`` into a swing and a twist angle about ``axis``.

    Returns ``(swing, twist)`` with ``r == swing * rotation_from_axis_angle(axis,
    twist)`` (twist acts first) and ``swing`` moving ``axis`` onto ``r.apply(axis)``
    without any rotation about ``axis`` itself.

    The quaternion's vector part is projected onto the axis; when the projection
    and scalar part both vanish (a half-turn sending axis to -axis) the twist is
    defined as 0 and the whole rotation is returned as swing.
    """
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if abs(n - 1.0) > _UNIT_AXIS_TOL:
        raise ValueError(f"axis must be unit length, got norm {n:.6g}")
    w, x, y, z = r.quat
    proj = axis[0] * x + axis[1] * y + axis[2] * z
    tw = np.array([w, proj * axis[0], proj * axis[1], proj * axis[2]])
    if np.linalg.norm(tw) < 1e-12:
        return Rotation(r.quat), 0.0
    twist_rot = Rotation(tw)
    twist = normalize_angle(2.0 * np.arctan2(proj, w))
    swing = r * twist_rot.inverse()
    return swing, twist


def align_vectors(from_vec, to_vec):
    """Minimal rotation carrying ``from_vec`` onto ``to_vec`` (directions only).

    The rotation axis is perpendicular to both inputs. Antiparallel inputs get a
    deterministic half-turn: the axis is ``from x e`` where ``e`` is the canonical
    basis vector of the smallest-magnitude component of ``from``.
    """
    a = np.asarray(from_vec, dtype=np.float64)
    b = np.asarray(to_vec, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ValueError("align_vectors requires non-zero input vectors")
    a, b = a / na, b / nb
    c = np.cross(a, b)
    d = float(np.dot(a, b))
    s = np.linalg.norm(c)
    if s < 1e-12:
        if d > 0:
            return Rotation.identity()
        e = np.zeros(3)
        e[np.argmin(np.abs(a))] = 1.0
        axis = np.cross(a, e)
        axis /= np.linalg.norm(axis)
        return Rotation.from_axis_angle(axis, np.pi)
    return Rotation.from_axis_angle(c / s, np.arctan2(s, d))
