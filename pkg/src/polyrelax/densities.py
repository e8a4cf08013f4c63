"""Isotropic benchmark densities written in signed singular values.

Every ``phi_*`` function is vectorised over a leading batch axis: it takes
``nu`` of shape ``(d,)`` or ``(N, d)`` and returns a float or an ``(N,)``
array.  Hencky values are ``+inf`` whenever ``prod(nu) <= 0``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .linalg import signed_singular_values

KSD_THRESHOLD = np.sqrt(2.0) - 1.0


def _scalar_or_array(values, nu):
    return float(values) if np.ndim(nu) == 1 else values


def _magnitudes(nu):
    # sorted, so that sums are bitwise identical on every orbit of the signed permutations
    return np.sort(np.abs(np.asarray(nu, dtype=float)), axis=-1)


def _square_sum(nu):
    m = _magnitudes(nu)
    return np.sum(m * m, axis=-1)


def phi_ksd(nu):
    """Kohn-Strang-Dolzmann density: ``1 + |nu|^2`` outside radius sqrt(2)-1, a cone inside."""
    nu = np.asarray(nu, dtype=float)
    rad = np.sqrt(_square_sum(nu))
    out = np.where(rad >= KSD_THRESHOLD, 1.0 + rad * rad, 2.0 * np.sqrt(2.0) * rad)
    return _scalar_or_array(out, nu)


def phi_ksd_exact_pc(nu):
    """Closed-form polyconvex envelope of :func:`phi_ksd`.

    With ``rho = |nu1| + |nu2|`` (so ``rho^2 = |F|^2 + 2|det F|``) the envelope
    is ``1 + |nu|^2`` for ``rho >= 1`` and ``2 (rho - |nu1 nu2|)`` otherwise.
    """
    nu = np.asarray(nu, dtype=float)
    m = _magnitudes(nu)
    a, b = m[..., 0], m[..., 1]
    rho = a + b
    out = np.where(rho >= 1.0, 1.0 + (a * a + b * b), 2.0 * (rho - a * b))
    return _scalar_or_array(out, nu)


def phi_double_well(nu):
    nu = np.asarray(nu, dtype=float)
    s = _square_sum(nu)
    return _scalar_or_array((s - 1.0) ** 2, nu)


def phi_double_well_exact_pc(nu):
    nu = np.asarray(nu, dtype=float)
    s = _square_sum(nu)
    return _scalar_or_array(np.where(s >= 1.0, (s - 1.0) ** 2, 0.0), nu)


def phi_squared_norm(nu):
    """``sum(nu_i^2)``; convex in the lifted coordinates, so its own envelope."""
    nu = np.asarray(nu, dtype=float)
    return _scalar_or_array(_square_sum(nu), nu)


@dataclass
class DensityParams:
    """Name plus material parameters of a registered density."""

    name: str = "ksd"
    d: int = 2
    mu: float = 1.0
    kappa: float = 1.0
    k: float = 1.0 / 3.0
    ell: float = 1.0 / 8.0

    def __post_init__(self):
        if self.name not in REGISTRY:
            raise ValueError(f"unknown density {self.name!r}; choose from {sorted(REGISTRY)}")
        if self.d not in REGISTRY[self.name].dims:
            raise ValueError(f"density {self.name!r} is defined for d in {REGISTRY[self.name].dims}")
        if self.name == "hencky":
            for key in ("mu", "kappa", "k", "ell"):
                if not getattr(self, key) > 0:
                    raise ValueError(f"hencky parameter {key} must be positive")

    def to_dict(self):
        return asdict(self)


def phi_hencky(nu, p: DensityParams | None = None, *, mu=1.0, kappa=1.0, k=1.0 / 3.0, ell=1.0 / 8.0):
    """Exponentiated Hencky energy in signed singular values.

    ``mu/k exp(k |dev log U|^2) + kappa/(2 ell) exp(ell log(det)^2)`` for
    ``prod(nu) > 0``, ``+inf`` otherwise.  The deviatoric part subtracts the
    mean ``(1/d) sum(log|nu_i|)``.
    """
    if p is not None:
        mu, kappa, k, ell = p.mu, p.kappa, p.k, p.ell
    nu = np.asarray(nu, dtype=float)
    batch = np.atleast_2d(nu)
    out = np.full(batch.shape[0], np.inf)
    # sign of the product from the signs alone, so tiny entries cannot underflow it to zero
    ok = np.all(batch != 0.0, axis=-1) & (np.prod(np.sign(batch), axis=-1) > 0.0)
    if np.any(ok):
        logs = np.log(_magnitudes(batch[ok]))
        dev = logs - logs.mean(axis=-1, keepdims=True)
        vol = logs.sum(axis=-1)
        with np.errstate(over="ignore"):
            out[ok] = (mu / k) * np.exp(k * np.sum(dev * dev, axis=-1)) \
                + (kappa / (2.0 * ell)) * np.exp(ell * vol * vol)
    return float(out[0]) if nu.ndim == 1 else out


def w_from_phi(F, phi):
    """Evaluate the isotropic matrix density ``W(F) = phi(nu(F))``."""
    return phi(signed_singular_values(F))


@dataclass(frozen=True)
class Density:
    name: str
    dims: tuple
    factory: Callable = field(repr=False)
    exact_factory: Optional[Callable] = field(default=None, repr=False)


def _fixed(fn):
    return lambda p: fn


def _hencky_factory(p):
    return functools.partial(phi_hencky, p=p)


REGISTRY = {
    "ksd": Density("ksd", (2,), _fixed(phi_ksd), _fixed(phi_ksd_exact_pc)),
    "double_well": Density("double_well", (2, 3), _fixed(phi_double_well), _fixed(phi_double_well_exact_pc)),
    "hencky": Density("hencky", (2, 3), _hencky_factory),
    "squared_norm": Density("squared_norm", (2, 3), _fixed(phi_squared_norm), _fixed(phi_squared_norm)),
}


def get_density(params: DensityParams):
    """Return ``(phi, exact_pc)`` for the registry entry; ``exact_pc`` may be None."""
    entry = REGISTRY[params.name]
    exact = entry.exact_factory(params) if entry.exact_factory is not None else None
    return entry.factory(params), exact
