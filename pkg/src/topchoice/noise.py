"""Noise distributions for random-utility choice models.

Four zero-mean families are supported: Gaussian, double-exponential
(Gumbel, shifted to zero mean), Laplace and Uniform.  Each exposes the
cdf, density, density derivative, inverse cdf and variance, plus the
metadata the quadrature engine needs (kink locations, support, density
jumps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ValidationError

EULER_GAMMA = 0.5772156649015329

GAUSSIAN = "gaussian"
GUMBEL = "gumbel"
LAPLACE = "laplace"
UNIFORM = "uniform"

_KINDS = (GAUSSIAN, GUMBEL, LAPLACE, UNIFORM)
_KIND_IDS = {GAUSSIAN: 0, GUMBEL: 1, LAPLACE: 2, UNIFORM: 3}
_ALIASES = {
    "gaussian": GAUSSIAN,
    "normal": GAUSSIAN,
    "gumbel": GUMBEL,
    "double-exponential": GUMBEL,
    "double_exponential": GUMBEL,
    "laplace": LAPLACE,
    "uniform": UNIFORM,
}
_PARAM_NAMES = {GAUSSIAN: "sigma", GUMBEL: "beta", LAPLACE: "beta", UNIFORM: "a"}

# scale value giving unit variance, per family
_UNIT_VARIANCE_SCALE = {
    GAUSSIAN: 1.0,
    GUMBEL: math.sqrt(6.0) / math.pi,
    LAPLACE: 1.0 / math.sqrt(2.0),
    UNIFORM: math.sqrt(3.0),
}

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class NoiseModel:
    """A zero-mean noise distribution with a single positive scale.

    ``scale`` is sigma for Gaussian, beta for Gumbel and Laplace, and the
    half-width a for Uniform.  The Gumbel family is shifted by
    -scale * EULER_GAMMA so its mean is zero.
    """

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown noise kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValidationError(f"noise scale must be positive, got {self.scale}")

    # -- constructors -------------------------------------------------

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "NoiseModel":
        return cls(GAUSSIAN, sigma)

    @classmethod
    def gumbel(cls, beta: float = 1.0) -> "NoiseModel":
        return cls(GUMBEL, beta)

    @classmethod
    def laplace(cls, beta: float = 1.0) -> "NoiseModel":
        return cls(LAPLACE, beta)

    @classmethod
    def uniform(cls, a: float = 1.0) -> "NoiseModel":
        return cls(UNIFORM, a)

    @classmethod
    def unit_variance(cls, kind: str) -> "NoiseModel":
        kind = _ALIASES.get(kind.lower().strip(), kind)
        if kind not in _KINDS:
            raise ValidationError(f"unknown noise kind {kind!r}")
        return cls(kind, _UNIT_VARIANCE_SCALE[kind])

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        """Parse a model spec string ``<kind>:<param>=<value>``.

        ``<kind>:unit-variance`` requests the scale giving variance one.
        Examples: ``gumbel:beta=1``, ``gaussian:sigma=0.5``,
        ``uniform:unit-variance``.
        """
        parts = text.strip().split(":")
        if len(parts) != 2:
            raise ValidationError(
                f"bad model spec {text!r}; expected '<kind>:<param>=<value>'"
            )
        kind_raw, rest = parts[0].lower().strip(), parts[1].strip()
        kind = _ALIASES.get(kind_raw)
        if kind is None:
            raise ValidationError(f"unknown noise kind {kind_raw!r} in {text!r}")
        if rest.lower() in ("unit-variance", "unit_variance"):
            return cls.unit_variance(kind)
        if "=" not in rest:
            raise ValidationError(f"bad model spec {text!r}; missing '<param>=<value>'")
        pname, _, pval = rest.partition("=")
        pname = pname.lower().strip()
        if pname != _PARAM_NAMES[kind]:
            raise ValidationError(
                f"model {kind!r} takes parameter {_PARAM_NAMES[kind]!r}, got {pname!r}"
            )
        if pval.lower().strip() in ("unit-variance", "unit_variance"):
            return cls.unit_variance(kind)
        try:
            value = float(pval)
        except ValueError:
            raise ValidationError(f"bad numeric value {pval!r} in {text!r}") from None
        return cls(kind, value)

    def spec(self) -> str:
        """Inverse of :meth:`parse`."""
        return f"{self.kind}:{_PARAM_NAMES[self.kind]}={self.scale!r}"

    @property
    def kind_id(self) -> int:
        return _KIND_IDS[self.kind]

    # -- distribution functions ---------------------------------------

    def variance(self) -> float:
        s = self.scale
        if self.kind == GAUSSIAN:
            return s * s
        if self.kind == GUMBEL:
            return math.pi**2 * s * s / 6.0
        if self.kind == LAPLACE:
            return 2.0 * s * s
        return s * s / 3.0

    def std(self) -> float:
        return math.sqrt(self.variance())

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.kind == GAUSSIAN:
            return ndtr(x / s)
        if self.kind == GUMBEL:
            t = x / s + EULER_GAMMA
            return np.exp(-np.exp(-t))
        if self.kind == LAPLACE:
            return np.where(
                x < 0, 0.5 * np.exp(np.minimum(x, 0) / s),
                1.0 - 0.5 * np.exp(-np.maximum(x, 0) / s),
            )
        return np.clip((x + s) / (2.0 * s), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.kind == GAUSSIAN:
            u = x / s
            return np.exp(-0.5 * u * u) / (s * _SQRT2PI)
        if self.kind == GUMBEL:
            t = x / s + EULER_GAMMA
            # f = (1/s) exp(-t - exp(-t)); safe at both tails
            return np.exp(-t - np.exp(-t)) / s
        if self.kind == LAPLACE:
            return np.exp(-np.abs(x) / s) / (2.0 * s)
        return np.where(np.abs(x) <= s, 1.0 / (2.0 * s), 0.0)

    def pdf_deriv(self, x):
        """Derivative of the density.

        For the Uniform family the derivative is zero almost everywhere;
        the boundary points +-a take the one-sided value 0 (the jumps are
        exposed separately through :meth:`pdf_jumps`).
        """
        x = np.asarray(x, dtype=float)
        s = self.scale
        if self.kind == GAUSSIAN:
            return -(x / (s * s)) * self.pdf(x)
        if self.kind == GUMBEL:
            t = x / s + EULER_GAMMA
            e = np.exp(-t)
            return np.exp(-t - e) * (e - 1.0) / (s * s)
        if self.kind == LAPLACE:
            return -np.sign(x) * self.pdf(x) / s
        return np.zeros_like(x)

    def icdf(self, q):
        q = np.asarray(q, dtype=float)
        s = self.scale
        if self.kind == GAUSSIAN:
            return s * ndtri(q)
        if self.kind == GUMBEL:
            return -s * (np.log(-np.log(q)) + EULER_GAMMA)
        if self.kind == LAPLACE:
            return np.where(
                q < 0.5,
                s * np.log(2.0 * np.maximum(q, 1e-320)),
                -s * np.log(2.0 * np.maximum(1.0 - q, 1e-320)),
            )
        return s * (2.0 * q - 1.0)

    # -- quadrature metadata ------------------------------------------

    def support(self) -> tuple[float, float]:
        if self.kind == UNIFORM:
            return (-self.scale, self.scale)
        return (-math.inf, math.inf)

    def tail_bounds(self, eps: float) -> tuple[float, float]:
        """Interval (lo, hi) with F(lo) <= eps and 1 - F(hi) <= eps."""
        if self.kind == UNIFORM:
            return (-self.scale, self.scale)
        lo = float(self.icdf(eps))
        hi = float(self.icdf(1.0 - eps))
        return (lo, hi)

    def has_even_density(self) -> bool:
        """True when f(-x) == f(x); the shifted Gumbel family is skewed."""
        return self.kind != GUMBEL

    def kinks(self) -> tuple[float, ...]:
        """Points where cdf or density is not smooth."""
        if self.kind == UNIFORM:
            return (-self.scale, self.scale)
        if self.kind == LAPLACE:
            return (0.0,)
        return ()

    def pdf_jumps(self) -> tuple[tuple[float, float], ...]:
        """Jump discontinuities of the density as (location, jump height)."""
        if self.kind == UNIFORM:
            h = 1.0 / (2.0 * self.scale)
            return ((-self.scale, h), (self.scale, -h))
        return ()


def parse_model(text: str) -> NoiseModel:
    return NoiseModel.parse(text)
