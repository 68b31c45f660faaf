"""Monte-Carlo realizations of isotropic Gaussian fields and derived estimators.

The field is the truncated series

    X(r, phi) = sum_{|l| <= L} e^{i l phi} sum_j J_l(rho_j r) z[l][j]

over the atoms (rho_j, mass_j) of the radial spectral measure, with
independent coefficients E|z[l][j]|^2 = 2 pi mass_j, so that the covariance
equals :func:`polyspec2d.transforms.cov_from_spectrum`.  Conjugating the
series and using J_{-l} = (-1)^l J_l shows X is real iff
z[-l] = (-1)^l conj(z[l]); z[0] is therefore real.

The non-Gaussian test field is Y = X^2 - E X^2, whose third cumulant is
8 C2(r12) C2(r13) C2(r23) by the Isserlis theorem.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bessel import besselj_signed_table
from .errors import AliasingError, InvalidConfigError, InvalidInputError
from .transforms import RadialSpectralMeasure, cov_from_spectrum

BLOCK = 1024
IMAG_TOL = 1e-10
MIN_REALIZATIONS = 1000


@dataclass(frozen=True)
class SimulationConfig:
    """Atoms-only spectral measure, truncation, sample size, seed and targets.

    ``points`` are polar pairs (r, phi); ``circle`` is (R, N) with N a power
    of two and N >= 4 L + 4 so that squared-field coefficients do not alias.
    """

    F: RadialSpectralMeasure
    L: int
    realization_count: int
    seed: int
    points: tuple = ()
    circle: tuple | None = None

    def __post_init__(self):
        F = self.F
        if not isinstance(F, RadialSpectralMeasure) or F.density is not None or not F.atoms:
            raise InvalidConfigError("simulation needs an atoms-only spectral measure")
        if isinstance(self.L, bool) or not isinstance(self.L, (int, np.integer)) or self.L < 0:
            raise InvalidConfigError("L must be a non-negative integer")
        n = self.realization_count
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n <= 0:
            raise InvalidConfigError("realization_count must be a positive integer")
        s = self.seed
        if isinstance(s, bool) or not isinstance(s, (int, np.integer)) or not 0 <= s < 2**64:
            raise InvalidConfigError("seed must be a 64-bit non-negative integer")
        pts = tuple((float(r), float(ph)) for r, ph in self.points)
        if any(not (math.isfinite(r) and r >= 0 and math.isfinite(ph)) for r, ph in pts):
            raise InvalidConfigError("points must be finite polar pairs with r >= 0")
        object.__setattr__(self, "points", pts)
        reach = max([r for r, _ in pts], default=0.0)
        if self.circle is not None:
            R, N = self.circle
            R, N = float(R), int(N)
            if not (math.isfinite(R) and R > 0):
                raise InvalidConfigError("circle radius must be positive")
            if N < 1 or N & (N - 1):
                raise InvalidConfigError("circle sample count must be a power of two")
            if N < 4 * self.L + 4:
                raise InvalidConfigError(f"circle sample count {N} < 4L + 4 = {4 * self.L + 4}")
            object.__setattr__(self, "circle", (R, N))
            reach = max(reach, R)
        need = math.ceil(reach * F.rho_max) + 20
        if reach > 0 and self.L < need:
            raise InvalidConfigError(f"L={self.L} below ceil(r rho_max) + 20 = {need}")

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        """Build from a JSON-style mapping; every key is validated."""
        if not isinstance(d, dict):
            raise InvalidConfigError("config must be a JSON object")
        known = {"atoms", "L", "realization_count", "seed", "points", "circle", "circle_orders",
                 "triples", "point_triples"}
        extra = set(d) - known
        if extra:
            raise InvalidConfigError(f"unknown config keys {sorted(extra)}")
        for key in ("atoms", "L", "realization_count", "seed"):
            if key not in d:
                raise InvalidConfigError(f"missing config key {key!r}")
        try:
            F = RadialSpectralMeasure(atoms=[tuple(a) for a in d["atoms"]])
            circle = d.get("circle")
            if circle is not None:
                circle = (circle["R"], circle["N"]) if isinstance(circle, dict) else tuple(circle)
            return cls(F, d["L"], d["realization_count"], d["seed"],
                       tuple(tuple(p) for p in d.get("points", ())), circle)
        except InvalidConfigError:
            raise
        except (InvalidInputError, TypeError, ValueError, KeyError) as exc:
            raise InvalidConfigError(f"bad config: {exc}") from exc


# ---------------------------------------------------------------------------
# realizations


@dataclass(eq=False)
class FieldRealizations:
    """A block of realizations; ``z`` has shape (n, 2L+1, J), order l at l + L."""

    rho: np.ndarray
    z: np.ndarray
    first: int = 0
    imag_residue: float = field(default=0.0, init=False)

    @property
    def L(self) -> int:
        return (self.z.shape[1] - 1) // 2

    @property
    def bandwidth(self) -> int:
        return self.L

    def __len__(self) -> int:
        return self.z.shape[0]

    def _real(self, values):
        scale = max(1.0, float(np.max(np.abs(values.real), initial=0.0)))
        resid = float(np.max(np.abs(values.imag), initial=0.0)) / scale
        self.imag_residue = max(self.imag_residue, resid)
        if resid > IMAG_TOL:
            raise InvalidInputError(f"field evaluation not real: residue {resid:.3g}")
        return values.real

    def evaluate(self, r: float, phi: float) -> np.ndarray:
        """X(r, phi) for every realization."""
        jt = besselj_signed_table(self.L, np.asarray(self.rho) * r)
        phase = np.exp(1j * np.arange(-self.L, self.L + 1) * phi)
        return self._real(np.einsum("nlj,lj,l->n", self.z, jt, phase))

    def circle_coeffs(self, R: float) -> np.ndarray:
        """Z_{R,l} = sum_j J_l(R rho_j) z[l][j], shape (n, 2L+1)."""
        jt = besselj_signed_table(self.L, np.asarray(self.rho) * R)
        return np.einsum("nlj,lj->nl", self.z, jt)

    def circle_values(self, R: float, N: int) -> np.ndarray:
        """X on the N angles 2 pi k / N of the circle, shape (n, N)."""
        if N < 2 * self.L + 1:
            raise AliasingError(f"N={N} cannot hold orders up to {self.L}")
        coeffs = self.circle_coeffs(R)
        arr = np.zeros((len(self), N), dtype=complex)
        arr[:, np.arange(-self.L, self.L + 1) % N] = coeffs
        return self._real(np.fft.ifft(arr, axis=1) * N)


@dataclass(eq=False)
class SquaredField:
    """Y = X^2 - E X^2 built on a block of Gaussian realizations."""

    base: FieldRealizations
    c0: float

    @property
    def L(self) -> int:
        return self.base.L

    @property
    def bandwidth(self) -> int:
        return 2 * self.base.L

    def __len__(self) -> int:
        return len(self.base)

    def evaluate(self, r: float, phi: float) -> np.ndarray:
        return self.base.evaluate(r, phi) ** 2 - self.c0

    def circle_values(self, R: float, N: int) -> np.ndarray:
        return self.base.circle_values(R, N) ** 2 - self.c0


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _make_block(config: SimulationConfig, block: int) -> FieldRealizations:
    first = block * BLOCK
    n = min(BLOCK, config.realization_count - first)
    L = config.L
    mass = config.F.atom_mass
    J = mass.size
    draws = _block_rng(config.seed, block).standard_normal((n, L + 1, J, 2))
    z = np.empty((n, 2 * L + 1, J), dtype=complex)
    # l >= 1: E|z|^2 = 2 pi m split evenly over the real and imaginary parts
    scale = np.sqrt(math.pi * mass)
    z[:, L + 1:] = scale * (draws[:, 1:, :, 0] + 1j * draws[:, 1:, :, 1])
    z[:, L] = np.sqrt(2 * math.pi * mass) * draws[:, 0, :, 0]
    sign = (-1.0) ** np.arange(1, L + 1)
    z[:, L - 1::-1] = sign[None, :, None] * np.conj(z[:, L + 1:])
    return FieldRealizations(config.F.atom_rho, z, first)


def block_count(config: SimulationConfig) -> int:
    return -(-config.realization_count // BLOCK)


def sample_gaussian_field(config: SimulationConfig):
    """Yield blocks of realizations in order; each block has its own
    counter-based Philox stream keyed by (seed, block index)."""
    for b in range(block_count(config)):
        yield _make_block(config, b)


def map_blocks(config: SimulationConfig, func, threads: int = 1) -> list:
    """[func(block) for every block], in block order for any thread count."""
    def run(b):
        return func(_make_block(config, b))

    blocks = range(block_count(config))
    if threads <= 1:
        return [run(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, blocks))


def squared_field(realization: FieldRealizations, F: RadialSpectralMeasure) -> SquaredField:
    """Y = X^2 - C2(0) on the same realizations."""
    return SquaredField(realization, cov_from_spectrum(F, 0.0))


def estimate_circle_coeffs(field, R: float, N: int, L: int | None = None) -> np.ndarray:
    """DFT coefficients of the field sampled at N equispaced circle angles.

    Returns shape (n, 2L+1) with order l at index l + L; ``L`` defaults to
    the field bandwidth.  Raises :class:`AliasingError` when N < 4 L_field + 4.
    """
    if N < 4 * field.L + 4:
        raise AliasingError(f"N={N} < 4L + 4 = {4 * field.L + 4}")
    if L is None:
        L = field.bandwidth
    if 2 * L + 1 > N:
        raise AliasingError(f"cannot resolve orders up to {L} with N={N}")
    coeffs = np.fft.fft(field.circle_values(R, N), axis=1) / N
    return coeffs[:, np.arange(-L, L + 1) % N]


# ---------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class CumulantEstimate:
    indices: tuple
    value: complex
    se: float

    @property
    def ratio(self) -> float:
        """|value| / SE, the number of standard errors away from zero."""
        return abs(self.value) / self.se if self.se > 0 else math.inf


def _se(influence: np.ndarray) -> float:
    n = influence.shape[0]
    if np.iscomplexobj(influence):
        return math.sqrt(np.var(influence.real, ddof=1) / n + np.var(influence.imag, ddof=1) / n)
    return math.sqrt(np.var(influence, ddof=1) / n)


def k_statistic(columns) -> tuple[complex, float]:
    """Unbiased joint cumulant estimate (k-statistic) of 2 to 4 variables.

    ``columns`` is a sequence of equal-length sample arrays.  The standard
    error comes from the empirical influence function.
    """
    cols = [np.asarray(c) for c in columns]
    p = len(cols)
    if p not in (2, 3, 4):
        raise InvalidInputError("joint k-statistics are implemented for orders 2 to 4")
    n = cols[0].shape[0]
    if any(c.shape != (n,) for c in cols) or n < p + 1:
        raise InvalidInputError("columns must be 1-d of equal length > order")
    c = [x - x.mean() for x in cols]
    if p == 2:
        prod = c[0] * c[1]
        return prod.mean() * n / (n - 1), _se(prod)
    if p == 3:
        prod = c[0] * c[1] * c[2]
        return prod.mean() * n * n / ((n - 1) * (n - 2)), _se(prod)
    a, b, cc, d = c
    m = lambda x, y: (x * y).mean()  # noqa: E731
    pairs = ((a, b, cc, d), (a, cc, b, d), (a, d, b, cc))
    m4 = (a * b * cc * d).mean()
    m22 = sum(m(x, y) * m(u, v) for x, y, u, v in pairs)
    k = n * n * ((n + 1) * m4 - (n - 1) * m22) / ((n - 1) * (n - 2) * (n - 3))
    infl = a * b * cc * d - sum(m(u, v) * x * y + m(x, y) * u * v for x, y, u, v in pairs)
    trip = ((a, (b, cc, d)), (b, (a, cc, d)), (cc, (a, b, d)), (d, (a, b, cc)))
    infl = infl - sum((y * z * w).mean() * x for x, (y, z, w) in trip)
    return k, _se(infl)


def estimate_cumulants(coeffs: np.ndarray, tuples, L: int | None = None) -> list[CumulantEstimate]:
    """k-statistics of coefficient tuples.

    ``coeffs`` has shape (n, 2L+1) with order l at index l + L.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 2:
        raise InvalidInputError("coefficients must have shape (n, 2L+1)")
    if coeffs.shape[0] < MIN_REALIZATIONS:
        raise InvalidInputError(f"need at least {MIN_REALIZATIONS} realizations")
    if L is None:
        L = (coeffs.shape[1] - 1) // 2
    out = []
    for tup in tuples:
        tup = tuple(int(t) for t in tup)
        if any(abs(t) > L for t in tup):
            raise InvalidInputError(f"order tuple {tup} beyond L={L}")
        value, se = k_statistic([coeffs[:, t + L] for t in tup])
        out.append(CumulantEstimate(tup, complex(value), se))
    return out


# ---------------------------------------------------------------------------
# analytic references for the squared field


def wick_cum3(F: RadialSpectralMeasure, x1, x2, x3) -> float:
    """8 C2(|x1-x2|) C2(|x1-x3|) C2(|x2-x3|) for Cartesian points."""
    p = [np.asarray(x, dtype=float) for x in (x1, x2, x3)]
    d = [float(np.hypot(*(p[i] - p[j]))) for i, j in ((0, 1), (0, 2), (1, 2))]
    return 8 * float(np.prod([cov_from_spectrum(F, v) for v in d]))


def wick_circle_bicoefficient(F: RadialSpectralMeasure, R: float, l2: int, l3: int,
                              M: int | None = None) -> complex:
    """Cum(Z^Y_{-l2-l3}, Z^Y_{l2}, Z^Y_{l3}) for the squared field on the circle.

    The angular double Fourier coefficient of the Wick cumulant
    8 C2(u) C2(v) C2(u - v), with u, v the angles from the first point.
    """
    if M is None:
        M = 1 << max(6, math.ceil(math.log2(8 * (math.ceil(R * F.rho_max) + 30))))
    th = 2 * math.pi * np.arange(M) / M
    chord = lambda a: R * np.sqrt(np.maximum(0.0, 2 * (1 - np.cos(a))))  # noqa: E731
    cu = cov_from_spectrum(F, chord(th))
    cuv = cov_from_spectrum(F, chord(th[:, None] - th[None, :]))
    kappa = 8 * cu[:, None] * cu[None, :] * cuv
    return complex(np.fft.fft2(kappa)[l2 % M, l3 % M] / (M * M))


def polar_to_xy(r: float, phi: float) -> np.ndarray:
    return np.array([r * math.cos(phi), r * math.sin(phi)])


def evaluations_csv(points, values: np.ndarray) -> str:
    """One row per realization: index then the value at every point."""
    head = "realization," + ",".join(f"X(r={r:.17g};phi={ph:.17g})" for r, ph in points)
    rows = [head]
    for i, row in enumerate(np.atleast_2d(values)):
        rows.append(f"{i}," + ",".join(f"{v:.17g}" for v in row))
    return "\n".join(rows) + "\n"
