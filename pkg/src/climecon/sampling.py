"""Quasi-random parameter-space exploration and fitted parameter distributions.

Sobol sequences (Gray-code construction over a published direction-number
table) cover sweep hypercubes; Monte Carlo experiments draw from the
distributions fitted to empirical estimates of the pricing, growth, and
climate parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

_TABLE_RESOURCE = "data/joe_kuo_direction_numbers.txt"
_BITS = 32
_SCALE = 2.0 ** -_BITS


class DimensionUnsupported(ValueError):
    """Requested dimension exceeds the embedded direction-number table."""


def _load_table() -> list[tuple[int, int, list[int]]]:
    """Parse rows (d, s, a, m_1..m_s) of the direction-number file."""
    text = resources.files("climecon").joinpath(_TABLE_RESOURCE).read_text()
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("d "):
            continue
        parts = line.split()
        d, s, a = int(parts[0]), int(parts[1]), int(parts[2])
        m = [int(v) for v in parts[3:]]
        if len(m) != s:
            raise ValueError(f"direction-number row for d={d} has {len(m)} m_i, expected {s}")
        rows.append((d, s, a, m))
    return rows


_table_cache: list | None = None


def _direction_numbers(dim: int) -> np.ndarray:
    """Direction numbers V[j, k] (bit-shifted m values) for ``dim`` dimensions."""
    global _table_cache
    if _table_cache is None:
        _table_cache = _load_table()
    if dim < 1 or dim > len(_table_cache) + 1:
        raise DimensionUnsupported(
            f"dimension {dim} outside supported range 1..{len(_table_cache) + 1}"
        )
    V = np.zeros((dim, _BITS), dtype=np.uint64)
    # first dimension: van der Corput in base 2
    V[0] = [1 << (_BITS - k) for k in range(1, _BITS + 1)]
    for j in range(1, dim):
        d, s, a, m = _table_cache[j - 1]
        v = [0] * (_BITS + 1)
        for k in range(1, min(s, _BITS) + 1):
            v[k] = m[k - 1] << (_BITS - k)
        for k in range(s + 1, _BITS + 1):
            acc = v[k - s] ^ (v[k - s] >> s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    acc ^= v[k - i]
            v[k] = acc
        V[j] = v[1:]
    return V


class SobolSequence:
    """Deterministic Sobol stream in [0, 1)^dim.

    By default the all-zeros point at index 0 is skipped, so the first
    emitted 1-D point is 0.5.  Two instances with equal settings emit
    identical streams.
    """

    def __init__(self, dim: int, skip_zero: bool = True):
        self.dim = dim
        self.skip_zero = skip_zero
        self._v = _direction_numbers(dim)
        self._x = np.zeros(dim, dtype=np.uint64)
        self._count = 0
        self.index = 0

    def next_point(self) -> np.ndarray:
        if self._count == 0 and not self.skip_zero:
            self._count += 1
            self.index += 1
            return np.zeros(self.dim)
        # rightmost zero bit of the Gray-code counter
        c = self._count if self.skip_zero else self._count - 1
        bit = 0
        while c & 1:
            c >>= 1
            bit += 1
        if bit >= _BITS:
            raise OverflowError("Sobol sequence exhausted 2^32 points")
        self._x ^= self._v[:, bit]
        self._count += 1
        self.index += 1
        return self._x.astype(np.float64) * _SCALE

    def take(self, n: int) -> np.ndarray:
        return np.array([self.next_point() for _ in range(n)]).reshape(n, self.dim)


def sobol_points(dim: int, n: int, skip_zero: bool = True) -> np.ndarray:
    """First ``n`` Sobol points in [0, 1)^dim."""
    if n == 0:
        return np.empty((0, dim))
    return SobolSequence(dim, skip_zero=skip_zero).take(n)


def scale_to_box(points: np.ndarray, ranges) -> np.ndarray:
    """Affinely map unit-cube points onto per-dimension (lo, hi) ranges."""
    points = np.asarray(points, dtype=float)
    lo = np.array([r[0] for r in ranges], dtype=float)
    hi = np.array([r[1] for r in ranges], dtype=float)
    if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
        raise ValueError("ranges must be finite")
    if np.any(lo >= hi):
        raise ValueError("each range must satisfy lo < hi")
    return lo + points * (hi - lo)


# ---------------------------------------------------------------------------
# fitted parameter distributions

@dataclass(frozen=True)
class DistributionSpec:
    """A base distribution plus an optional affine transform and clamp.

    kind/params:
        ``normal``      (mu, sd)
        ``lognormal``   (mu_log, sd_log)    log-space parameters
        ``gengamma``    (shape, scale, family)  Stacy form: scale * G**(1/family)
                        with G ~ Gamma(shape)

    ``shift`` maps x -> x + c, ``reflect_shift`` maps x -> c - x (at most one
    is set); the clamp interval applies last.
    """

    kind: str
    params: tuple[float, ...]
    shift: float | None = None
    reflect_shift: float | None = None
    clamp: tuple[float, float] | None = None

    def __post_init__(self):
        if self.shift is not None and self.reflect_shift is not None:
            raise ValueError("at most one of shift / reflect_shift may be set")
        if self.kind == "normal":
            if self.params[1] <= 0:
                raise ValueError("normal sd must be > 0")
        elif self.kind == "lognormal":
            if self.params[1] <= 0:
                raise ValueError("lognormal sd_log must be > 0")
        elif self.kind == "gengamma":
            if any(v <= 0 for v in self.params):
                raise ValueError("gengamma shape, scale, family must be > 0")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")


def sample(spec: DistributionSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. values from a distribution spec."""
    if spec.kind == "normal":
        mu, sd = spec.params
        x = rng.normal(mu, sd, size=n)
    elif spec.kind == "lognormal":
        mu_log, sd_log = spec.params
        x = rng.lognormal(mean=mu_log, sigma=sd_log, size=n)
    else:
        shape, scale, family = spec.params
        x = scale * rng.gamma(shape, 1.0, size=n) ** (1.0 / family)
    if spec.reflect_shift is not None:
        x = spec.reflect_shift - x
    elif spec.shift is not None:
        x = x + spec.shift
    if spec.clamp is not None:
        x = np.clip(x, spec.clamp[0], spec.clamp[1])
    return x


def fitted_distributions() -> dict[str, DistributionSpec]:
    """Empirically fitted distributions for the Monte Carlo parameters.

    Pricing parameters come from estimates of the wage-price block
    (relaxation speed, markup, money illusion), productivity growth from
    the same source (percent units, converted to fractions), and the two
    climate parameters from published lognormal fits.  The markup draw is
    shifted right by one unit; the money-illusion draw is reflected and
    shifted (1 - x) and clamped to its definitional range [0, 1].
    """
    return {
        "eta": DistributionSpec("normal", (0.4, 0.12)),
        "xi": DistributionSpec("gengamma", (3.0894, 0.7154, 0.9959), shift=1.0),
        "gamma": DistributionSpec("gengamma", (6.2327, 0.0033, 0.3158),
                                  reflect_shift=1.0, clamp=(0.0, 1.0)),
        "alpha": DistributionSpec("normal", (0.0206, 0.0112)),
        "ecs": DistributionSpec("lognormal", (1.107, 0.264)),
        "c_up": DistributionSpec("lognormal", (5.886, 0.251)),
    }
