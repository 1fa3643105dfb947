"""Pointwise quantities of the conformally rescaled metric g = u^(2/(n-2)) g_eucl.

With f = log u, the quantities computed here are the squared conformal
gradient ("P-function")

    |grad f|_g^2 = |Du|^2 / u^(2(n-1)/(n-2)),

the conformal Hessian of f in Euclidean components,

    hess_g f = D^2 f - (2 df x df - |Df|^2 I) / (n-2),

the level-set mean curvature map

    H_g/(n-1) = u^(-1/(n-2)) * (H/(n-1) - |Df|/(n-2)),

and the quasi-Einstein combination Ric_g + hess_g f + df x df/(n-2)
- |grad f|_g^2 g/(n-2), which vanishes identically when u is harmonic.

Everything is assembled from Euclidean (u, Du, D2u) values; nothing here
differentiates a discretized metric, so the only error sources are the
solver's derivative values themselves.  All functions accept scalars with
vector/matrix data for one point, or batched arrays with a leading axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CriticalPointError

_EYE3 = np.eye(3)


def _batched(grad):
    return np.asarray(grad).ndim == 2


def p_function(u, grad, n=3):
    """Squared conformal gradient length |grad f|_g^2 of f = log u.

    Coincides with the classical P-function |Du|^2 / u^(2(n-1)/(n-2));
    constant exactly on radial potentials.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("p_function requires u > 0")
    grad = np.asarray(grad, dtype=float)
    g2 = np.sum(grad * grad, axis=-1)
    return g2 * u ** (-2.0 * (n - 1) / (n - 2))


def hess_f_conformal(u, grad, hess, n=3):
    """Conformal Hessian of f = log u in Euclidean components.

    Returns (tensor, |hess_g f|_g, |Delta_g f|).  The g-trace recovers
    Delta_g f = u^(-2/(n-2)) * (Delta f + |Df|^2), which vanishes for
    harmonic u, so the reported Laplacian residual bounds derivative error.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("hess_f_conformal requires u > 0")
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    batched = _batched(grad)
    uu = u[..., None] if batched else u
    df = grad / uu
    outer = df[..., :, None] * df[..., None, :]
    d2f = hess / (uu[..., None] if batched else u) - outer
    df2 = np.sum(df * df, axis=-1)
    eye = _EYE3 if not batched else _EYE3[None]
    df2e = df2[..., None, None] if batched else df2
    tensor = d2f - (2.0 * outer - df2e * eye) / (n - 2)
    frob2 = np.sum(tensor * tensor, axis=(-2, -1))
    hess_norm = np.sqrt(frob2) * u ** (-2.0 / (n - 2))
    trace = np.trace(tensor, axis1=-2, axis2=-1)
    lap_res = np.abs(trace) * u ** (-2.0 / (n - 2))
    return tensor, hess_norm, lap_res


def hess_f_norm_g(u, grad, hess, n=3):
    """|hess_g f|_g only (vectorized convenience wrapper)."""
    return hess_f_conformal(u, grad, hess, n=n)[1]


def mean_curvature_conformal(h_euclid, u, grad_norm, n=3):
    """Map the Euclidean level-set mean curvature H to its conformal
    counterpart H_g; both use the unit normal -Du/|Du|.

    A level set is minimal in the rescaled metric exactly when
    H/(n-1) = |Du|/((n-2) u).
    """
    u = np.asarray(u, dtype=float)
    grad_norm = np.asarray(grad_norm, dtype=float)
    if np.any(grad_norm == 0):
        raise CriticalPointError("mean curvature map needs |Du| > 0")
    df_norm = grad_norm / u
    return (n - 1) * u ** (-1.0 / (n - 2)) * (h_euclid / (n - 1) - df_norm / (n - 2))


def level_set_mean_curvature(grad, hess):
    """Euclidean mean curvature of the level set through a regular point,
    H = D2u(nu, nu)/|Du| with nu = -Du/|Du| (equals div nu for harmonic u)."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    gn = np.linalg.norm(grad, axis=-1)
    if np.any(gn == 0):
        raise CriticalPointError("level-set curvature needs |Du| > 0")
    quad = np.einsum("...a,...ab,...b->...", grad, hess, grad)
    return quad / gn ** 3


def ricci_conformal(u, grad, hess, n=3):
    """Ricci tensor of g in Euclidean components.

    General conformal-change formula; the term with Delta f + |Df|^2 drops
    out for harmonic u but is kept so that non-harmonic perturbations
    register.
    """
    u = np.asarray(u, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    batched = _batched(grad)
    uu = u[..., None] if batched else u
    df = grad / uu
    outer = df[..., :, None] * df[..., None, :]
    d2f = hess / (uu[..., None] if batched else u) - outer
    df2 = np.sum(df * df, axis=-1)
    lapf = np.trace(hess, axis1=-2, axis2=-1) / u - df2
    eye = _EYE3 if not batched else _EYE3[None]
    scal = (lapf + df2) / (n - 2)
    scal = scal[..., None, None] if batched else scal
    return -d2f + outer / (n - 2) - scal * eye


@dataclass(frozen=True)
class QuasiEinsteinResidual:
    """Componentwise defect of the quasi-Einstein equation plus |Delta_g f|."""

    tensor_residual_norm: float
    laplacian_residual: float


def quasi_einstein_residual(u, grad, hess, n=3):
    """Max-norm defect of Ric_g + hess_g f + df x df/(n-2)
    - |grad f|_g^2 g/(n-2); identically zero in exact arithmetic for
    harmonic u, so the value bounds solver and derivative error.
    """
    u = np.asarray(u, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    batched = _batched(grad)
    ric = ricci_conformal(u, grad, hess, n=n)
    tensor, _, lap_res = hess_f_conformal(u, grad, hess, n=n)
    uu = u[..., None] if batched else u
    df = grad / uu
    outer = df[..., :, None] * df[..., None, :]
    df2 = np.sum(df * df, axis=-1)
    eye = _EYE3 if not batched else _EYE3[None]
    df2e = df2[..., None, None] if batched else df2
    # |grad f|_g^2 g = |Df|^2 g_eucl in Euclidean components
    total = ric + tensor + outer / (n - 2) - df2e * eye / (n - 2)
    resid = np.max(np.abs(total), axis=(-2, -1))
    if batched:
        return resid, lap_res
    return QuasiEinsteinResidual(tensor_residual_norm=float(resid),
                                 laplacian_residual=float(lap_res))


def scalar_curvature(u, grad, hess, n=3):
    """Scalar curvature of g; satisfies R_g/(n-1) = |grad f|_g^2/(n-2)
    for harmonic u."""
    ric = ricci_conformal(u, grad, hess, n=n)
    u = np.asarray(u, dtype=float)
    trace = np.trace(ric, axis1=-2, axis2=-1)
    return u ** (-2.0 / (n - 2)) * trace


def dsigma_g_weight(u, n=3):
    """Weight turning Euclidean surface measure into the g-surface measure
    on a level set: dsigma_g = u^((n-1)/(n-2)) dsigma."""
    return np.asarray(u, dtype=float) ** ((n - 1.0) / (n - 2.0))


def dmu_g_weight(u, n=3):
    """Weight turning Euclidean volume measure into the g-volume measure:
    dmu_g = u^(n/(n-2)) dmu."""
    return np.asarray(u, dtype=float) ** (n / (n - 2.0))
