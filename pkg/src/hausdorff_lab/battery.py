"""Closed-form test functions with known Fourier and Hilbert transforms.

Conventions: f_hat(xi) = int f(x) exp(-2 pi i x xi) dx and the Hilbert
transform has multiplier -i sign(xi), i.e. Hf(x) = (1/pi) p.v. int f(y)/(x-y) dy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import dawsn

# Arguments are clipped before evaluation.  The Hausdorff integrand reads f at
# x/t for t down to exp(-700), and every battery function is negligible long
# before this cut.
ARG_CLIP = 1e150


def _clip(x):
    return np.clip(np.asarray(x, dtype=float), -ARG_CLIP, ARG_CLIP)


@dataclass(frozen=True)
class Pointwise:
    """A one-dimensional function with optional closed-form companions.

    ``breaks`` lists the points where f is discontinuous; quadrature routines
    split there.  ``fourier`` and ``hilbert`` are callables or None.
    """

    name: str
    f: Callable
    breaks: tuple = ()
    fourier: Callable | None = None
    hilbert: Callable | None = None
    l1: float | None = None
    mean_zero: bool = False
    periodized: Callable | None = None  # (x, period) -> sum_j f(x + j period)

    def __call__(self, x):
        with np.errstate(over="ignore", under="ignore"):
            return self.f(_clip(x))

    @property
    def n(self) -> int:
        return 1

    def factor(self, j: int) -> "Pointwise":
        return self

    @property
    def factors(self) -> tuple:
        return (self,)

    def hilbert_function(self) -> "Pointwise":
        if self.hilbert is None:
            raise ValueError(f"{self.name} has no closed-form Hilbert transform")
        return Pointwise(f"H[{self.name}]", self.hilbert)

    def fourier_function(self) -> "Pointwise":
        if self.fourier is None:
            raise ValueError(f"{self.name} has no closed-form Fourier transform")
        return Pointwise(f"F[{self.name}]", self.fourier)

    def scaled(self, c) -> "Pointwise":
        f, fo, hi = self.f, self.fourier, self.hilbert
        return Pointwise(f"{c}*{self.name}", lambda x: c * f(x), self.breaks,
                         None if fo is None else (lambda x: c * fo(x)),
                         None if hi is None else (lambda x: c * hi(x)),
                         None if self.l1 is None else abs(c) * self.l1, self.mean_zero)


@dataclass(frozen=True)
class TensorFunction:
    """f(x) = prod_j f_j(x_j) built from one-dimensional factors."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def name(self) -> str:
        return "(x)".join(f.name for f in self.factors)

    @property
    def breaks(self) -> tuple:
        return tuple(f.breaks for f in self.factors)

    def factor(self, j: int) -> Pointwise:
        return self.factors[j]

    def __call__(self, *xs):
        out = 1.0
        for f, x in zip(self.factors, xs):
            out = out * f(x)
        return out

    def _companion(self, attr):
        parts = []
        for f in self.factors:
            g = getattr(f, attr)
            if g is None:
                return None
            parts.append(Pointwise(f"{attr}[{f.name}]", g))
        return TensorFunction(parts)

    def fourier_function(self) -> "TensorFunction":
        out = self._companion("fourier")
        if out is None:
            raise ValueError("a factor has no closed-form Fourier transform")
        return out

    def hilbert_axis(self, j: int) -> "TensorFunction":
        parts = list(self.factors)
        parts[j] = parts[j].hilbert_function()
        return TensorFunction(parts)


def tensor(*parts: Pointwise) -> TensorFunction:
    return TensorFunction(parts)


def gaussian() -> Pointwise:
    return Pointwise(
        "gaussian",
        lambda x: np.exp(-np.pi * x * x),
        fourier=lambda xi: np.exp(-np.pi * np.asarray(xi) ** 2),
        hilbert=lambda x: (2 / np.sqrt(np.pi)) * dawsn(np.sqrt(np.pi) * np.asarray(x)),
        l1=1.0,
    )


def poisson_profile(a: float = 1.0) -> Pointwise:
    """Unit-mass Cauchy profile (1/(pi a)) / (1 + (x/a)^2)."""
    return Pointwise(
        f"poisson{a:g}",
        lambda x: (1 / (np.pi * a)) / (1 + (x / a) ** 2),
        fourier=lambda xi: np.exp(-2 * np.pi * a * np.abs(xi)),
        hilbert=lambda x: (1 / np.pi) * x / (a * a + x * x),
        l1=1.0,
        periodized=lambda x, P: (1 / P) * np.sinh(2 * np.pi * a / P)
        / (np.cosh(2 * np.pi * a / P) - np.cos(2 * np.pi * np.asarray(x) / P)),
    )


def odd_rational() -> Pointwise:
    """x / (1 + x^2)^2, mean zero, with Hf = (x^2 - 1) / (2 (x^2 + 1)^2)."""
    return Pointwise(
        "odd_rational",
        lambda x: x / (1 + x * x) ** 2,
        fourier=lambda xi: -1j * np.pi ** 2 * xi * np.exp(-2 * np.pi * np.abs(xi)),
        hilbert=lambda x: (x * x - 1) / (2 * (x * x + 1) ** 2),
        l1=1.0,
        mean_zero=True,
    )


def odd_gaussian() -> Pointwise:
    """x exp(-pi x^2), mean zero."""
    def hil(x):
        x = np.asarray(x, dtype=float)
        return x * (2 / np.sqrt(np.pi)) * dawsn(np.sqrt(np.pi) * x) - 1 / np.pi

    return Pointwise(
        "odd_gaussian",
        lambda x: x * np.exp(-np.pi * x * x),
        fourier=lambda xi: -1j * np.asarray(xi) * np.exp(-np.pi * np.asarray(xi) ** 2),
        hilbert=hil,
        l1=1 / np.pi,
        mean_zero=True,
    )


def indicator(a: float = 0.0, b: float = 1.0) -> Pointwise:
    def fo(xi):
        xi = np.asarray(xi, dtype=float)
        out = np.full(xi.shape, b - a, dtype=complex)
        nz = xi != 0
        z = xi[nz]
        out[nz] = (np.exp(-2j * np.pi * a * z) - np.exp(-2j * np.pi * b * z)) / (2j * np.pi * z)
        return out

    def hil(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return (1 / np.pi) * np.log(np.abs((x - a) / (x - b)))

    return Pointwise(
        f"chi({a:g},{b:g})",
        lambda x: ((x > a) & (x < b)).astype(float),
        breaks=(a, b),
        fourier=fo,
        hilbert=hil,
        l1=b - a,
    )


def odd_step() -> Pointwise:
    """chi(0,1) - chi(-1,0): a rough mean-zero member, Hf = (1/pi) ln|x^2/(x^2 - 1)|."""
    def fo(xi):
        xi = np.asarray(xi, dtype=float)
        # -2i int_0^1 sin(2 pi x xi) dx
        out = np.zeros(xi.shape, dtype=complex)
        nz = xi != 0
        z = xi[nz]
        out[nz] = -2j * (1 - np.cos(2 * np.pi * z)) / (2 * np.pi * z)
        return out

    def hil(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return (1 / np.pi) * np.log(np.abs(x * x / (x * x - 1)))

    return Pointwise(
        "odd_step",
        lambda x: np.sign(x) * (np.abs(x) < 1),
        breaks=(-1.0, 0.0, 1.0),
        fourier=fo,
        hilbert=hil,
        l1=2.0,
        mean_zero=True,
    )


def zero() -> Pointwise:
    return Pointwise("zero", lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                     fourier=lambda xi: np.zeros_like(np.asarray(xi, dtype=float)),
                     hilbert=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                     l1=0.0, mean_zero=True)


def standard_battery() -> list[Pointwise]:
    """Smooth and rough, odd and even members with closed-form transform pairs."""
    return [gaussian(), poisson_profile(), odd_rational(), indicator()]


def hardy_battery() -> list[Pointwise]:
    """Mean-zero members whose Hilbert transforms are integrable."""
    return [odd_rational(), odd_gaussian(), odd_step()]


def battery_for(n: int, members: Sequence[Pointwise] | None = None) -> list:
    """Battery members for dimension n (n-fold tensor powers when n > 1)."""
    members = list(members or standard_battery())
    if n == 1:
        return members
    return [TensorFunction([m] * n) for m in members]
