"""Small dense linear algebra for 2x2 and 3x3 deformation gradients.

Everything here works on single matrices of shape ``(d, d)`` as well as
stacks of shape ``(..., d, d)``; vectors follow the same convention.
"""

from __future__ import annotations

import itertools

import numpy as np

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 30


def _as_square_stack(F):
    F = np.asarray(F, dtype=float)
    if F.ndim < 2 or F.shape[-1] != F.shape[-2] or F.shape[-1] not in (2, 3):
        raise ValueError(f"expected (..., d, d) with d in (2, 3), got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise ValueError("matrix entries must be finite")
    return F


def det(F):
    """Determinant by cofactor expansion (exact formula for d <= 3)."""
    F = _as_square_stack(F)
    if F.shape[-1] == 2:
        return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]
    return (
        F[..., 0, 0] * (F[..., 1, 1] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 1])
        - F[..., 0, 1] * (F[..., 1, 0] * F[..., 2, 2] - F[..., 1, 2] * F[..., 2, 0])
        + F[..., 0, 2] * (F[..., 1, 0] * F[..., 2, 1] - F[..., 1, 1] * F[..., 2, 0])
    )


def adjugate(F):
    """Classical adjoint, ``adj(F) @ F == det(F) * I``."""
    F = _as_square_stack(F)
    if F.shape[-1] == 2:
        out = np.empty_like(F)
        out[..., 0, 0] = F[..., 1, 1]
        out[..., 0, 1] = -F[..., 0, 1]
        out[..., 1, 0] = -F[..., 1, 0]
        out[..., 1, 1] = F[..., 0, 0]
        return out
    cof = np.empty_like(F)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = (F[..., r[0], c[0]] * F[..., r[1], c[1]]
                     - F[..., r[0], c[1]] * F[..., r[1], c[0]])
            cof[..., i, j] = (-1) ** (i + j) * minor
    return np.swapaxes(cof, -1, -2)


def _singular_values_2x2(F):
    # F = R(theta) diag(Q + R, Q - R) R(phi); Q - R already carries sign(det F)
    a, b = F[..., 0, 0], F[..., 0, 1]
    c, d = F[..., 1, 0], F[..., 1, 1]
    q = np.hypot((a + d) / 2.0, (c - b) / 2.0)
    r = np.hypot((a - d) / 2.0, (c + b) / 2.0)
    return np.stack([q + r, np.abs(q - r)], axis=-1)


def jacobi_eigh(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues and eigenvectors (columns) of symmetric 3x3 matrices by cyclic Jacobi.

    Sweeps stop once the off-diagonal Frobenius norm falls below
    ``tol * ||A||`` for every matrix in the stack.
    """
    A = np.array(A, dtype=float, copy=True)
    single = A.ndim == 2
    A = A.reshape(-1, 3, 3)
    V = np.tile(np.eye(3), (A.shape[0], 1, 1))
    scale = np.sqrt(np.sum(A * A, axis=(1, 2)))
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * (A[:, 0, 1] ** 2 + A[:, 0, 2] ** 2 + A[:, 1, 2] ** 2))
        if np.all(off <= tol * scale):
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = A[:, p, q]
            active = np.abs(apq) > 0.0
            if not np.any(active):
                continue
            theta = np.where(active, (A[:, q, q] - A[:, p, p]) / np.where(active, 2.0 * apq, 1.0), 0.0)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            cs = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * cs
            # A <- J^T A J and V <- V J with J the Givens rotation in the (p, q) plane
            for M in (A, V):
                Mp = M[:, :, p].copy()
                Mq = M[:, :, q].copy()
                M[:, :, p] = cs[:, None] * Mp - sn[:, None] * Mq
                M[:, :, q] = sn[:, None] * Mp + cs[:, None] * Mq
            Ap = A[:, p, :].copy()
            Aq = A[:, q, :].copy()
            A[:, p, :] = cs[:, None] * Ap - sn[:, None] * Aq
            A[:, q, :] = sn[:, None] * Ap + cs[:, None] * Aq
    eig = np.stack([A[:, 0, 0], A[:, 1, 1], A[:, 2, 2]], axis=-1)
    return (eig[0], V[0]) if single else (eig, V)


def jacobi_eigenvalues(A, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    return jacobi_eigh(A, tol, max_sweeps)[0]


def _one_sided_sweeps(B, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    # Hestenes form of the same rotations, applied to the columns of B = F V:
    # the pairwise test is relative, so tiny singular values converge as well
    B = B.copy()
    for _ in range(max_sweeps):
        done = True
        for p, q in ((0, 1), (0, 2), (1, 2)):
            alpha = np.sum(B[:, :, p] ** 2, axis=-1)
            beta = np.sum(B[:, :, q] ** 2, axis=-1)
            gamma = np.sum(B[:, :, p] * B[:, :, q], axis=-1)
            active = np.abs(gamma) > tol * np.sqrt(alpha * beta)
            if not np.any(active):
                continue
            done = False
            # zeta may overflow to inf, which correctly gives t = 0
            with np.errstate(over="ignore"):
                zeta = np.where(active, (beta - alpha) / np.where(active, 2.0 * gamma, 1.0), 0.0)
            t = np.where(active, np.sign(zeta) / (np.abs(zeta) + np.hypot(zeta, 1.0)), 0.0)
            t = np.where(active & (zeta == 0.0), 1.0, t)
            cs = 1.0 / np.sqrt(t * t + 1.0)
            sn = t * cs
            Bp = B[:, :, p].copy()
            Bq = B[:, :, q].copy()
            B[:, :, p] = cs[:, None] * Bp - sn[:, None] * Bq
            B[:, :, q] = sn[:, None] * Bp + cs[:, None] * Bq
        if done:
            break
    return B


def _singular_values_3x3(F):
    shape = F.shape[:-2]
    flat = F.reshape(-1, 3, 3)
    _, V = jacobi_eigh(np.swapaxes(flat, -1, -2) @ flat)
    # |F v_i| instead of sqrt(lambda_i), after polishing the columns of F V
    sigma = np.linalg.norm(_one_sided_sweeps(flat @ V), axis=-2)
    sigma = -np.sort(-sigma, axis=-1)
    return sigma.reshape(*shape, 3)


def singular_values(F):
    """Plain singular values in descending order."""
    F = _as_square_stack(F)
    if F.shape[-1] == 2:
        return _singular_values_2x2(F)
    return _singular_values_3x3(F)


def signed_singular_values(F):
    """Canonical signed singular values of ``F``.

    Magnitudes are sorted in descending order, all entries but the last are
    nonnegative and the last one carries ``sign(det F)``.  For 2x2 matrices
    the last magnitude is taken as ``|det F| / sigma_1``, which is as accurate
    as the closed form and makes the product reproduce the cofactor
    determinant; for 3x3 the polished Jacobi value is kept.
    """
    F = _as_square_stack(F)
    sigma = singular_values(F)
    D = det(F)
    nu = sigma.copy()
    if F.shape[-1] == 2:
        lead = sigma[..., 0]
        nu[..., -1] = np.where(lead > 0.0, D / np.where(lead > 0.0, lead, 1.0), 0.0)
    else:
        nu[..., -1] = np.where(D < 0.0, -sigma[..., -1], sigma[..., -1])
    return canonicalize(nu)


def canonicalize(nu):
    """Canonical representative of the orbit of ``nu`` under the signed permutations."""
    nu = np.asarray(nu, dtype=float)
    if nu.shape[-1] not in (2, 3):
        raise ValueError(f"expected trailing dimension 2 or 3, got {nu.shape}")
    mag = -np.sort(-np.abs(nu), axis=-1)
    # product of the signs, not the sign of the product, which may underflow
    sign = np.prod(np.sign(nu), axis=-1)
    out = mag.copy()
    out[..., -1] = np.where(sign < 0, -mag[..., -1], mag[..., -1])
    return out


def minors_vector(nu):
    """Lift signed singular values to ``(nu, pairwise products, full product)``.

    d=2 gives ``(n1, n2, n1 n2)``, d=3 gives
    ``(n1, n2, n3, n2 n3, n3 n1, n1 n2, n1 n2 n3)``.
    """
    nu = np.asarray(nu, dtype=float)
    if nu.shape[-1] == 2:
        return np.stack([nu[..., 0], nu[..., 1], nu[..., 0] * nu[..., 1]], axis=-1)
    if nu.shape[-1] == 3:
        a, b, c = nu[..., 0], nu[..., 1], nu[..., 2]
        return np.stack([a, b, c, b * c, c * a, a * b, a * b * c], axis=-1)
    raise ValueError(f"expected trailing dimension 2 or 3, got {nu.shape}")


def matrix_minors(F):
    """All minors of ``F`` flattened row-major: ``(F, det)`` or ``(F, adj F, det)``."""
    F = _as_square_stack(F)
    d = F.shape[-1]
    lead = F.shape[:-2]
    parts = [F.reshape(*lead, d * d)]
    if d == 3:
        parts.append(adjugate(F).reshape(*lead, 9))
    parts.append(det(F)[..., None])
    return np.concatenate(parts, axis=-1)


def minors_degrees(d, lifting="svpc"):
    """Polynomial degree of every lifted coordinate (used for LP row scaling)."""
    if lifting == "svpc":
        return np.array([1, 1, 2] if d == 2 else [1, 1, 1, 2, 2, 2, 3])
    if lifting == "pc":
        return np.array([1] * 4 + [2] if d == 2 else [1] * 9 + [2] * 9 + [3])
    raise ValueError(f"unknown lifting {lifting!r}")


def symmetry_group(d):
    """All signed permutation matrices ``P diag(eps)`` with ``prod(eps) == 1``."""
    if d not in (2, 3):
        raise ValueError(f"d must be 2 or 3, got {d}")
    elements = []
    for perm in itertools.permutations(range(d)):
        P = np.zeros((d, d))
        P[np.arange(d), perm] = 1.0
        for eps in itertools.product((1.0, -1.0), repeat=d):
            if np.prod(eps) == 1.0:
                elements.append(P @ np.diag(eps))
    return elements


def lifted_action(S):
    """Matrix acting on ``minors_vector`` so that ``m(S nu) == T @ m(nu)``."""
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    if d == 2:
        T = np.zeros((3, 3))
        T[:2, :2] = S
        T[2, 2] = 1.0
        return T
    # pairwise products transform like the cofactor matrix, which equals S for S in SO(3)
    T = np.zeros((7, 7))
    T[:3, :3] = S
    T[3:6, 3:6] = S
    T[6, 6] = 1.0
    return T


def random_rotation(d, rng):
    """Uniformly distributed element of SO(d)."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
