"""Cone operations for the interior-point solver.

Three cone families appear in the KKT system:

* nonnegative orthant, handled componentwise;
* second-order cone  soc(d) = {v : v[0] >= ||v[1:]||};
* rotated second-order cone  rsoc(d) = {v : 2 v[0] v[1] >= ||v[2:]||^2,
  v[0] >= 0, v[1] >= 0}.

The rotated cone is treated natively in the program data: its rows are
never rewritten. Internally every rsoc operation conjugates by the
orthogonal involution T that maps rsoc onto soc,

    T = [[1/sqrt2, 1/sqrt2, 0], [1/sqrt2, -1/sqrt2, 0], [0, 0, I]],

which touches only the 2x2 leading block, so sparsity of the assembled
KKT matrix is unaffected.

Nesterov-Todd scaling for the second-order cone follows the standard
closed form: with det(v) = v0^2 - ||v1||^2,

    sb = s / sqrt(det s),  zb = z / sqrt(det z),
    gamma = sqrt((1 + sb.zb) / 2),
    wb = (sb + J zb) / (2 gamma),     J = diag(1, -1, ..., -1),
    eta = (det s / det z)^(1/4),

    W v    = eta  * (2 wb (wb.v) - J v)
    Winv v = (2 (J wb) ((J wb).v) - J v) / eta

and satisfies W z = Winv s = lambda.
"""

from __future__ import annotations

import math

import numpy as np

_SQRT2 = math.sqrt(2.0)


def _jmul(v: np.ndarray) -> np.ndarray:
    out = -v.copy()
    out[0] = v[0]
    return out


def soc_residual(v: np.ndarray) -> float:
    """v[0] - ||v[1:]||; nonnegative iff v is in the cone."""
    return v[0] - np.linalg.norm(v[1:])


def soc_det(v: np.ndarray) -> float:
    return v[0] * v[0] - float(v[1:] @ v[1:])


def rotate_to_soc(v: np.ndarray) -> np.ndarray:
    out = v.copy()
    out[0] = (v[0] + v[1]) / _SQRT2
    out[1] = (v[0] - v[1]) / _SQRT2
    return out


# T is an involution, so the same map rotates back.
rotate_from_soc = rotate_to_soc


def rsoc_residual(v: np.ndarray) -> float:
    """min eigenvalue-like margin; nonnegative iff v is in the rotated cone."""
    return soc_residual(rotate_to_soc(v))


class NonnegCone:
    """R^d_+ with componentwise scaling."""

    def __init__(self, dim: int):
        self.dim = dim
        self.degree = dim

    def unit(self) -> np.ndarray:
        return np.ones(self.dim)

    def margin(self, v: np.ndarray) -> float:
        return float(v.min()) if self.dim else 0.0

    def compute_scaling(self, s: np.ndarray, z: np.ndarray) -> "NonnegScaling":
        return NonnegScaling(s, z)

    def jordan_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a * b

    def jordan_solve(self, a: np.ndarray, d: np.ndarray) -> np.ndarray:
        return d / a

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        neg = dv < 0
        if not neg.any():
            return math.inf
        return float((-v[neg] / dv[neg]).min())


class NonnegScaling:
    def __init__(self, s: np.ndarray, z: np.ndarray):
        self.w = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.w * v

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        return v / self.w

    def wsq_diag(self) -> np.ndarray:
        return self.w * self.w


class SocCone:
    """Second-order cone of dimension d >= 2."""

    rotated = False

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError("second-order cone needs dimension >= 2")
        self.dim = dim
        self.degree = 2

    def unit(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def _rot(self, v: np.ndarray) -> np.ndarray:
        return v

    def margin(self, v: np.ndarray) -> float:
        return soc_residual(self._rot(v))

    def compute_scaling(self, s: np.ndarray, z: np.ndarray) -> "SocScaling":
        return SocScaling(self._rot(s), self._rot(z), self.rotated)

    def jordan_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        ar, br = self._rot(a), self._rot(b)
        out = ar[0] * br + br[0] * ar
        out[0] = float(ar @ br)
        return self._rot(out)

    def jordan_solve(self, a: np.ndarray, d: np.ndarray) -> np.ndarray:
        ar, dr = self._rot(a), self._rot(d)
        det = soc_det(ar)
        u0 = (ar[0] * dr[0] - float(ar[1:] @ dr[1:])) / det
        u = np.empty_like(dr)
        u[0] = u0
        u[1:] = (dr[1:] - u0 * ar[1:]) / ar[0]
        return self._rot(u)

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        # Smallest positive root of det(v + a dv) = 0, plus the v0 + a dv0 > 0
        # boundary; v is assumed strictly inside the cone.
        vr, dr = self._rot(v), self._rot(dv)
        c0 = soc_det(vr)
        c1 = 2.0 * (vr[0] * dr[0] - float(vr[1:] @ dr[1:]))
        c2 = soc_det(dr)
        best = math.inf
        if dr[0] < 0:
            best = -vr[0] / dr[0]
        if abs(c2) < 1e-300:
            if c1 < 0:
                best = min(best, -c0 / c1)
            return best
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc >= 0:
            sq = math.sqrt(disc)
            for root in ((-c1 - sq) / (2 * c2), (-c1 + sq) / (2 * c2)):
                if root > 0:
                    best = min(best, root)
        return best


class RsocCone(SocCone):
    """Rotated second-order cone, conjugated onto soc by T."""

    rotated = True

    def __init__(self, dim: int):
        if dim < 3:
            raise ValueError("rotated cone needs dimension >= 3")
        super().__init__(dim)

    def unit(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[0] = e[1] = 1.0 / _SQRT2
        return e

    def _rot(self, v: np.ndarray) -> np.ndarray:
        return rotate_to_soc(v)


class SocScaling:
    """NT scaling W = eta * M^(1/2) with M = 2 wb wb' - J.

    M^(1/2) has the hyperbolic Householder closed form

        [[wb0, wb1'], [wb1, I + wb1 wb1' / (1 + wb0)]]

    and M^(-1/2) = J M^(1/2) J, so W and its inverse apply in O(dim).
    """

    def __init__(self, s: np.ndarray, z: np.ndarray, rotated: bool):
        det_s, det_z = soc_det(s), soc_det(z)
        if det_s <= 0 or det_z <= 0 or s[0] <= 0 or z[0] <= 0:
            raise FloatingPointError("iterate left the cone interior")
        rho_s, rho_z = math.sqrt(det_s), math.sqrt(det_z)
        sb, zb = s / rho_s, z / rho_z
        gamma = math.sqrt((1.0 + float(sb @ zb)) / 2.0)
        self.wb = (sb + _jmul(zb)) / (2.0 * gamma)
        self.eta = math.sqrt(rho_s / rho_z)
        self.rotated = rotated
        # s and z arrive already in the soc frame; rotate lambda back out.
        lam = self.eta * self._msqrt(z)
        self.lam = rotate_to_soc(lam) if rotated else lam

    def _msqrt(self, v: np.ndarray) -> np.ndarray:
        wb = self.wb
        out = np.empty_like(v)
        dot = float(wb[1:] @ v[1:])
        out[0] = wb[0] * v[0] + dot
        out[1:] = v[0] * wb[1:] + v[1:] + wb[1:] * (dot / (1.0 + wb[0]))
        return out

    def _maybe_rot(self, v: np.ndarray) -> np.ndarray:
        return rotate_to_soc(v) if self.rotated else v

    def apply(self, v: np.ndarray) -> np.ndarray:
        vr = self._maybe_rot(v)
        return self._maybe_rot(self.eta * self._msqrt(vr))

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        vr = self._maybe_rot(v)
        out = _jmul(self._msqrt(_jmul(vr))) / self.eta
        return self._maybe_rot(out)

    def wsq_dense(self) -> np.ndarray:
        d = len(self.wb)
        m = 2.0 * np.outer(self.wb, self.wb) - np.diag(np.r_[1.0, -np.ones(d - 1)])
        wsq = (self.eta * self.eta) * m
        if self.rotated:
            t = np.eye(d)
            t[0, 0] = t[0, 1] = t[1, 0] = 1.0 / _SQRT2
            t[1, 1] = -1.0 / _SQRT2
            wsq = t @ wsq @ t
        return wsq


def make_cone(kind: str, dim: int):
    if kind == "nonneg":
        return NonnegCone(dim)
    if kind == "soc":
        return SocCone(dim)
    if kind == "rsoc":
        return RsocCone(dim)
    raise ValueError(f"unknown cone kind {kind!r}")
