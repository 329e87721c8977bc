"""Analytic functions used as operator-function symbols.

Each :class:`OperatorFunctionSpec` can be evaluated on complex scalars and on
:class:`~lidskii_lab.jets.Jet` objects.  Jet evaluation always reproduces the
scalar value in the constant term, which is what the series engine relies on
when it differentiates ``exp(-t*phi(1/zeta))``.

Branches are principal throughout.  For arguments inside a sector
``|arg z| <= theta < pi/2`` this is continuous, and for ``psi`` it agrees with
``arg log z = arctan(arg z / ln|z|)``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import numpy as np

from . import jets
from .jets import Jet


@dataclass(frozen=True)
class OperatorFunctionSpec:
    name: str
    params: Dict[str, Any]
    scalar: Callable[[complex], complex] = field(repr=False)
    jet: Callable[[Jet], Jet] = field(repr=False)
    sector_halfangle: Optional[float] = None
    regular_growth: bool = True

    def __call__(self, z):
        if isinstance(z, Jet):
            return self.jet(z)
        if np.ndim(z):
            return np.array([self.scalar(complex(x)) for x in np.ravel(z)]).reshape(np.shape(z))
        return self.scalar(complex(z))

    def label(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner})"


def power(alpha: float) -> OperatorFunctionSpec:
    """``lambda**alpha``; maps the sector of half-angle theta into alpha*theta."""
    a = float(alpha)
    return OperatorFunctionSpec(
        "power", {"alpha": a},
        scalar=lambda z: cmath.exp(a * cmath.log(z)),
        jet=lambda v: jets.power(v, a),
        sector_halfangle=None,
    )


def identity() -> OperatorFunctionSpec:
    return OperatorFunctionSpec(
        "identity", {},
        scalar=lambda z: z,
        jet=lambda v: v,
    )


def exponential(scale: float = 1.0) -> OperatorFunctionSpec:
    s = float(scale)
    return OperatorFunctionSpec(
        "exp", {"scale": s},
        scalar=lambda z: cmath.exp(s * z),
        jet=lambda v: jets.exp(v * s),
        regular_growth=False,
    )


def polynomial(coeffs) -> OperatorFunctionSpec:
    """``sum_k coeffs[k] * lambda**k`` (ascending order)."""
    cs = [complex(c) for c in coeffs]

    def scalar(z):
        acc = 0j
        for c in reversed(cs):
            acc = acc * z + c
        return acc

    def jet(v):
        acc = Jet.constant(0.0, v.degree)
        for c in reversed(cs):
            acc = acc * v + c
        return acc

    return OperatorFunctionSpec("polynomial", {"coeffs": tuple(cs)}, scalar=scalar, jet=jet)


def psi_scalar(z: complex, xi: float) -> complex:
    """``z**xi * ln z * ln ln z`` on principal branches."""
    lz = cmath.log(z)
    return cmath.exp(xi * lz) * lz * cmath.log(lz)


def log_composite(xi: float, kappa: float = 1.0) -> OperatorFunctionSpec:
    """``psi(z)**kappa`` with ``psi(z) = z**xi ln z ln ln z``.

    Requires ``|z| > e`` so that ``ln ln z`` has positive real part; the image
    sector half-angle tends to ``xi*kappa*theta`` for large ``|z|``.
    """
    xi = float(xi)
    kappa = float(kappa)
    if not 0 < xi <= 1:
        raise ValueError("xi must lie in (0, 1]")

    def scalar(z):
        p = psi_scalar(z, xi)
        return p if kappa == 1.0 else cmath.exp(kappa * cmath.log(p))

    def jet(v):
        lv = jets.log(v)
        p = jets.exp(lv * xi) * lv * jets.log(lv)
        return p if kappa == 1.0 else jets.power(p, kappa)

    return OperatorFunctionSpec(
        "psi", {"xi": xi, "kappa": kappa},
        scalar=scalar, jet=jet,
        sector_halfangle=None,
    )


def from_config(name: str, **params) -> OperatorFunctionSpec:
    """Build a named function: ``power``, ``identity``, ``exp``, ``psi``, ``polynomial``."""
    name = name.lower()
    if name == "power":
        return power(float(params.get("alpha", 1.0)))
    if name == "identity":
        return identity()
    if name == "exp":
        return exponential(float(params.get("scale", 1.0)))
    if name in ("psi", "log_composite"):
        return log_composite(float(params.get("xi", 1.0)), float(params.get("kappa", 1.0)))
    if name == "polynomial":
        coeffs = params.get("coeffs", (0.0, 1.0))
        if isinstance(coeffs, str):
            coeffs = [complex(c.strip()) for c in coeffs.split(",")]
        return polynomial(coeffs)
    raise ValueError(f"unknown function {name!r}")


def sector_image_halfangle(phi: OperatorFunctionSpec, theta: float, radii) -> float:
    """Largest ``|arg phi(z)|`` over ``|arg z| = theta`` at the given radii."""
    worst = 0.0
    for r in np.atleast_1d(radii):
        for s in (-1.0, 1.0):
            worst = max(worst, abs(cmath.phase(phi(r * cmath.exp(1j * s * theta)))))
    return worst
