"""Radial mesh and the l-dependent single-electron model potential.

The potential has the form

    V_l(r) = -Z_l(r)/r - alpha_c/(2 r^4) * (1 - exp(-(r/r_c)^6))
    Z_l(r) = 1 + (z-1) exp(-a1 r) - r (a3 + a4 r) exp(-a2 r)

and the dipole operator can be dressed with the core-polarization factor
returned by :func:`corrected_multipole`.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, DomainError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RadialGrid:
    """Uniform mesh r_i = (i+1)*dr, i = 0..n_points-1 (no point at r = 0)."""

    dr: float
    n_points: int
    r_core: float = 10.0
    absorber_start: float = 0.8

    def __post_init__(self):
        if not self.dr > 0:
            raise DomainError(f"dr must be positive, got {self.dr}")
        if self.n_points < 2:
            raise DomainError("grid needs at least two points")
        if not 0 < self.r_core < self.absorber_start * self.r_max < self.r_max:
            raise DomainError(
                "need 0 < r_core < absorber_start*r_max < r_max, got "
                f"r_core={self.r_core}, absorber_start={self.absorber_start}, r_max={self.r_max}"
            )

    @classmethod
    def from_extent(cls, r_max: float, dr: float, **kw) -> "RadialGrid":
        n = int(round(r_max / dr))
        return cls(dr=dr, n_points=n, **kw)

    @property
    def r_max(self) -> float:
        return self.dr * self.n_points

    @property
    def r(self) -> np.ndarray:
        return self.dr * np.arange(1, self.n_points + 1, dtype=float)

    @property
    def r_absorb(self) -> float:
        return self.absorber_start * self.r_max

    def index(self, r: float) -> int:
        """Index of the last grid point with r_i <= r (clipped to the grid)."""
        i = int(np.floor(r / self.dr + 1e-9)) - 1
        return min(max(i, 0), self.n_points - 1)

    def key(self) -> str:
        s = f"{self.dr!r}:{self.n_points}:{self.r_core!r}:{self.absorber_start!r}"
        return hashlib.sha1(s.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ModelPotentialParams:
    """Per-l fit coefficients of the model potential.

    ``coeffs`` maps l -> (a1, a2, a3, a4, r_c). Requests for l above the
    highest fitted l fall back to the highest fitted set.
    """

    z: float
    alpha_c: float
    coeffs: Mapping[int, tuple]
    r_c_prime: float = 1.0
    a_c: Mapping[int, float] = field(default_factory=dict)
    valence_n: Mapping[int, int] = field(default_factory=dict)
    element: str = ""

    def __post_init__(self):
        if self.z < 1:
            raise DomainError("z must be >= 1")
        if self.alpha_c < 0:
            raise DomainError("alpha_c must be >= 0")
        if not self.coeffs:
            raise ConfigurationError("no per-l coefficients given")
        for l, c in self.coeffs.items():
            if len(c) != 5:
                raise ConfigurationError(f"l={l}: expected (a1, a2, a3, a4, r_c)")
            if not c[4] > 0:
                raise DomainError(f"l={l}: r_c must be positive")

    @classmethod
    def coulomb(cls, z: float = 1.0) -> "ModelPotentialParams":
        """Bare -1/r potential: Z_l == 1 and no core polarization."""
        if z != 1.0:
            raise DomainError("only the z = 1 Coulomb limit is representable")
        return cls(z=1.0, alpha_c=0.0, coeffs={0: (0.0, 0.0, 0.0, 0.0, 1.0)},
                   r_c_prime=1.0, a_c={1: 0.0}, valence_n={}, element="H")

    @property
    def l_fitted(self) -> int:
        return max(self.coeffs)

    def for_l(self, l: int) -> tuple:
        if l < 0:
            raise DomainError("l must be non-negative")
        return self.coeffs.get(l, self.coeffs[self.l_fitted])

    def r_c(self, l: int) -> float:
        return self.for_l(l)[4]

    def n_min(self, l: int) -> int:
        """Lowest principal quantum number reported for this l."""
        return self.valence_n.get(l, l + 1)

    def key(self) -> str:
        items = sorted((int(k), tuple(map(float, v))) for k, v in self.coeffs.items())
        s = repr((self.z, self.alpha_c, items, self.r_c_prime, sorted(self.a_c.items())))
        return hashlib.sha1(s.encode()).hexdigest()[:16]


def _parse_param_text(text: str) -> ModelPotentialParams:
    kv: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"malformed line: {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        kv[k] = v
    try:
        version = int(kv.pop("schema_version"))
    except KeyError:
        raise ConfigurationError("parameter file lacks schema_version") from None
    if version != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported schema_version {version}")
    coeffs = {}
    for k in list(kv):
        if k.startswith("l") and k[1:].isdigit():
            vals = tuple(float(x) for x in kv.pop(k).split())
            coeffs[int(k[1:])] = vals
    a_c = {int(k[4:]): float(kv.pop(k)) for k in list(kv) if k.startswith("a_c_")}
    valence = {}
    if "valence_n" in kv:
        valence = {l: int(n) for l, n in enumerate(kv.pop("valence_n").split())}
    try:
        return ModelPotentialParams(
            z=float(kv["z"]),
            alpha_c=float(kv["alpha_c"]),
            coeffs=coeffs,
            r_c_prime=float(kv.get("r_c_prime", 1.0)),
            a_c=a_c,
            valence_n=valence,
            element=kv.get("element", ""),
        )
    except KeyError as e:
        raise ConfigurationError(f"parameter file lacks {e.args[0]}") from None


def load_params(path: str | Path | None = None) -> ModelPotentialParams:
    """Read a parameter table. ``None`` loads the bundled Rb set."""
    if path is None:
        text = resources.files("atomslit.data").joinpath("rb_marinescu.dat").read_text()
    else:
        text = Path(path).read_text()
    return _parse_param_text(text)


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    return r


def effective_charge(params: ModelPotentialParams, l: int, r):
    r = _check_r(r)
    a1, a2, a3, a4, _ = params.for_l(l)
    return 1.0 + (params.z - 1.0) * np.exp(-a1 * r) - r * (a3 + a4 * r) * np.exp(-a2 * r)


def polarization_term(params: ModelPotentialParams, l: int, r):
    r = _check_r(r)
    rc = params.r_c(l)
    return -params.alpha_c / (2 * r**4) * (1.0 - np.exp(-((r / rc) ** 6)))


def potential(params: ModelPotentialParams, l: int, r):
    r = _check_r(r)
    return -effective_charge(params, l, r) / r + polarization_term(params, l, r)


def corrected_multipole(params: ModelPotentialParams, L: int, r):
    """Factor multiplying r^L once core polarization is accounted for."""
    r = _check_r(r)
    if L < 1:
        raise DomainError("multipole order must be >= 1")
    if L not in params.a_c:
        raise ConfigurationError(f"no core polarizability a_c for L={L}")
    p = 2 * L + 1
    return 1.0 - params.a_c[L] / r**p * (1.0 - np.exp(-((r / params.r_c_prime) ** p)))


def absorber(grid: RadialGrid, w0: float = 0.05) -> np.ndarray:
    """Magnitude W(r) >= 0 of the absorbing potential -i W(r) on the grid."""
    r = grid.r
    rs = grid.r_absorb
    x = np.clip((r - rs) / (grid.r_max - rs), 0.0, None)
    return w0 * x**4
