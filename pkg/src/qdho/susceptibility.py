"""Susceptibility sources for the damped oscillator.

Two kinds of source are supported: an exactly solvable two-rate model

    chi(w) = K / (a - i w),   K = 2 g2 (g1^2 + w0^2) / w0^2,   a = g1 + 2 g2,

and measured data, i.e. Im chi sampled on a frequency grid with an asserted
power-law tail. Everything downstream (Green function, thermal integrals,
the discretized reservoir) consumes a source through the small dispatch
functions defined here: ``im_chi``, ``alpha_squared``, ``coupling_alpha``.

Unit convention: hbar = k_B = 1 and every rate (omega0, gamma1, gamma2,
temperatures) is a frequency in one common unit; chi itself is
dimensionless.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .quadrature import QuadratureConfig, integrate_adaptive, integrate_semi_infinite

__all__ = [
    "ModelParams",
    "TabulatedChi",
    "DiagonalizabilityReport",
    "PassivityError",
    "DivergenceError",
    "NotDiagonalizableError",
    "PoleError",
    "chi_model",
    "im_chi",
    "alpha_squared",
    "coupling_alpha",
    "kk_reconstruct",
    "check_diagonalizable",
    "resolve_omega0",
]


class PassivityError(ValueError):
    """Im chi < 0 was encountered; a passive environment cannot amplify."""


class DivergenceError(ValueError):
    """A spectral integral diverges for the given tail decay."""


class NotDiagonalizableError(ValueError):
    """The coupled Hamiltonian is not positive definite for these inputs."""


class PoleError(ValueError):
    """Evaluation requested exactly at (or too close to) a response pole."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the exactly solvable two-rate susceptibility.

    ``gamma1`` and ``gamma2`` act as damping rates of the oscillator;
    ``gamma2 -> 0`` switches the coupling off entirely. Validity of the
    thermodynamic formulas additionally requires omega0^2 > 2 g1 g2, which
    is checked by the consumers, not here, so that out-of-range parameter
    sets can still be constructed and diagnosed.
    """

    omega0: float
    gamma1: float
    gamma2: float

    def __post_init__(self):
        for name in ("omega0", "gamma1", "gamma2"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite number")
        if self.omega0 <= 0.0:
            raise ValueError("omega0 must be positive")
        if self.gamma1 <= 0.0:
            raise ValueError("gamma1 must be positive")
        if self.gamma2 < 0.0:
            raise ValueError("gamma2 must be non-negative")

    @property
    def coupling_strength(self):
        """K = 2 g2 (g1^2 + w0^2) / w0^2."""
        return 2.0 * self.gamma2 * (self.gamma1 ** 2 + self.omega0 ** 2) / self.omega0 ** 2

    @property
    def relaxation_rate(self):
        """a = g1 + 2 g2, the (single) relaxation rate of the model chi."""
        return self.gamma1 + 2.0 * self.gamma2

    @property
    def chi_static(self):
        """chi(0) = K / a."""
        return self.coupling_strength / self.relaxation_rate

    @property
    def stability_margin(self):
        """omega0^2 - 2 g1 g2; positive iff the Hamiltonian diagonalizes."""
        return self.omega0 ** 2 - 2.0 * self.gamma1 * self.gamma2


@dataclass(frozen=True, eq=False)
class TabulatedChi:
    """Im chi measured on a strictly increasing positive frequency grid.

    Between grid points Im chi is interpolated with a monotone cubic
    (PCHIP, anchored through the origin since Im chi is odd in w); beyond
    the last point it continues as the power law
    Im chi ~ im_chi[-1] * (grid[-1]/w)**tail_exponent.
    """

    grid: np.ndarray
    im_chi: np.ndarray
    tail_exponent: float

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.im_chi, dtype=float)
        if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 2:
            raise ValueError("grid and im_chi must be 1-d arrays of equal length >= 2")
        if not np.all(np.diff(grid) > 0.0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] <= 0.0:
            raise ValueError("grid frequencies must be positive")
        if np.any(vals < 0.0):
            raise PassivityError("im_chi must be non-negative everywhere")
        if not math.isfinite(self.tail_exponent):
            raise ValueError("tail_exponent must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "im_chi", vals)
        anchor_x = np.concatenate(([0.0], grid))
        anchor_y = np.concatenate(([0.0], vals))
        object.__setattr__(self, "_interp", PchipInterpolator(anchor_x, anchor_y))

    def im_chi_at(self, omega):
        omega = np.asarray(omega, dtype=float)
        inside = omega <= self.grid[-1]
        out = np.empty_like(omega)
        out[inside] = self._interp(omega[inside])
        tail = ~inside
        if np.any(tail):
            out[tail] = self.im_chi[-1] * (self.grid[-1] / omega[tail]) ** self.tail_exponent
        return out

    @classmethod
    def from_csv(cls, path, tail_exponent):
        """Read a two-column ``omega,im_chi`` CSV (header line required)."""
        with open(path, newline="") as fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            header = next(reader, None)
            if header is None or [c.strip().lower() for c in header] != ["omega", "im_chi"]:
                raise ValueError(f"{path}: expected header line 'omega,im_chi'")
            data = [(float(r[0]), float(r[1])) for r in reader if r]
        if not data:
            raise ValueError(f"{path}: no data rows")
        grid, vals = map(np.array, zip(*data))
        return cls(grid=grid, im_chi=vals, tail_exponent=tail_exponent)

    @classmethod
    def from_model(cls, params, grid=None, tail_exponent=1.0):
        """Sample a model source onto a grid (validation pipelines)."""
        if grid is None:
            top = 200.0 * max(params.omega0, params.relaxation_rate)
            grid = np.geomspace(1e-4 * params.omega0, top, 600)
        grid = np.asarray(grid, dtype=float)
        return cls(grid=grid, im_chi=np.asarray(chi_model(grid, params)).imag,
                   tail_exponent=tail_exponent)


def resolve_omega0(src, omega0=None):
    """Bare oscillator frequency for a source; tabulated data needs it given."""
    if isinstance(src, ModelParams):
        if omega0 is not None and omega0 != src.omega0:
            raise ValueError("conflicting omega0 for a model source")
        return src.omega0
    if omega0 is None:
        raise ValueError("omega0 is required with a tabulated susceptibility")
    if omega0 <= 0.0:
        raise ValueError("omega0 must be positive")
    return float(omega0)


def chi_model(omega, p):
    """Model susceptibility K/(a - i w) at real or complex frequency.

    Analytic everywhere except the simple pole at w = -i a, where a
    ``PoleError`` is raised. For real w the imaginary part K w/(a^2 + w^2)
    is non-negative, i.e. the model is passive.
    """
    k = p.coupling_strength
    a = p.relaxation_rate
    den = a - 1j * np.asarray(omega)
    if np.any(den == 0.0):
        raise PoleError(f"chi has a pole at omega = {-1j * a}", pole=-1j * a)
    out = k / den
    return out if out.ndim else complex(out)


def im_chi(omega, src):
    """Im chi at real frequency for either source kind (vectorized)."""
    omega = np.asarray(omega, dtype=float)
    if isinstance(src, ModelParams):
        a = src.relaxation_rate
        return src.coupling_strength * omega / (a * a + omega * omega)
    return src.im_chi_at(omega)


def alpha_squared(omega, src, omega0=None):
    """Squared oscillator-reservoir coupling density,
    alpha^2(w) = (2/pi) w0^2 w Im chi(w).

    For the model source this equals the closed form
    4 g2 w^2 (g1^2 + w0^2) / (pi [(g1 + 2 g2)^2 + w^2]).
    """
    w0 = resolve_omega0(src, omega0)
    omega = np.asarray(omega, dtype=float)
    return (2.0 / math.pi) * w0 * w0 * omega * im_chi(omega, src)


def coupling_alpha(omega, src, omega0=None):
    """Coupling amplitude alpha(w) >= 0; rejects negative Im chi."""
    a2 = alpha_squared(omega, src, omega0)
    if np.any(np.asarray(a2) < 0.0):
        raise PassivityError("negative Im chi implies an active environment")
    return np.sqrt(a2)


def _im_chi_tail_exponent(src):
    # model Im chi ~ K/w at large w
    return 1.0 if isinstance(src, ModelParams) else float(src.tail_exponent)


def _kernel_m(omega, src):
    # m(xi) = (2/pi) xi Im chi(xi) = alpha^2(xi)/w0^2, the KK integrand weight
    return (2.0 / math.pi) * np.asarray(omega, dtype=float) * im_chi(omega, src)


def _kk_scales(src, omega):
    if isinstance(src, ModelParams):
        base = max(src.relaxation_rate, src.omega0)
        hard_max = None
    else:
        base = src.grid[-1]
        hard_max = None  # tail power law is defined out to infinity
    return base, hard_max


def static_susceptibility(src, cfg=None):
    """Re chi(0) = (2/pi) int_0^inf Im chi(xi)/xi dxi.

    Closed form K/a for the model; quadrature plus the asserted tail for
    tabulated data. Raises ``DivergenceError`` when the tail decays too
    slowly for the integral to exist (tail_exponent <= 0, i.e. the
    1/xi^2-weighted coupling density decays no faster than 1/xi).
    """
    if isinstance(src, ModelParams):
        return src.chi_static
    p = float(src.tail_exponent)
    if p <= 0.0:
        raise DivergenceError(
            f"Im chi tail exponent {p} <= 0: the zero-frequency dispersion "
            "integral diverges")
    cfg = cfg or QuadratureConfig()
    cfg_tail = QuadratureConfig(
        rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
        max_subdivisions=cfg.max_subdivisions,
        cutoff_factor=cfg.cutoff_factor, tail_order=1.0 + p)

    def f(xi):
        return _kernel_m(xi, src) / (xi * xi)

    res = integrate_semi_infinite(f, 0.0, cfg_tail, scale=src.grid[-1],
                                  points=src.grid[:: max(1, src.grid.size // 32)])
    return res.value


def kk_reconstruct(omega, src, cfg=None):
    """Full chi at real frequency from the absorptive part alone.

    Evaluates the dispersion relation

        Re chi(w) = P int_0^inf m(xi)/(xi^2 - w^2) dxi,
        m(xi) = (2/pi) xi Im chi(xi),

    with the principal value regularized by subtracting m(w) at the
    singular point (legitimate because P int_0^inf dxi/(xi^2 - w^2) = 0),
    plus Im chi(w) read directly from the source. At w = 0 the integral is
    not singular and reduces to the static susceptibility.
    """
    cfg = cfg or QuadratureConfig()
    w = float(omega)
    if w < 0.0:
        raise ValueError("kk_reconstruct expects omega >= 0")
    if isinstance(src, TabulatedChi) and src.tail_exponent <= 0.0:
        raise DivergenceError(
            f"Im chi tail exponent {src.tail_exponent} <= 0: dispersion "
            "integral diverges")
    if w == 0.0:
        return complex(static_susceptibility(src, cfg), 0.0)

    m_w = float(_kernel_m(np.array([w]), src)[0])
    base, _ = _kk_scales(src, w)
    cutoff = max(cfg.cutoff_factor * base, 2.0 * w)

    def subtracted(xi):
        return (_kernel_m(xi, src) - m_w) / (xi * xi - w * w)

    pieces = [
        integrate_adaptive(subtracted, 0.0, w, cfg),
        integrate_adaptive(subtracted, w, cutoff, cfg,
                           points=[p for p in (base, 10.0 * base) if w < p < cutoff]),
    ]

    def tail(u):
        xi = 1.0 / u
        return (_kernel_m(xi, src) - m_w) / (1.0 - (w * u) ** 2)

    pieces.append(integrate_adaptive(tail, 0.0, 1.0 / cutoff, cfg))
    re = math.fsum(p.value for p in pieces)
    return complex(re, float(im_chi(np.array([w]), src)[0]))


@dataclass(frozen=True)
class DiagonalizabilityReport:
    """Outcome of the normal-mode existence check.

    The criterion is chi_static < 1, equivalently
    int_0^inf alpha^2(xi)/xi^2 dxi < omega0^2. ``margin`` is reported in
    the reduced form omega0^2 - 2 g1 g2 for the model (where the criterion
    simplifies exactly to that sign condition) and as
    omega0^2 (1 - chi_static) for tabulated sources.
    """

    diagonalizable: bool
    margin: float
    chi_static: float
    omega0: float

    @property
    def integral(self):
        """int_0^inf alpha^2(xi)/xi^2 dxi = omega0^2 * chi_static."""
        return self.omega0 ** 2 * self.chi_static


def check_diagonalizable(src, cfg=None, omega0=None):
    """Decide whether the coupled Hamiltonian admits normal modes.

    A divergent dispersion integral is reported as not diagonalizable
    rather than raised.
    """
    w0 = resolve_omega0(src, omega0)
    if isinstance(src, ModelParams):
        chi0 = src.chi_static
        margin = src.stability_margin
        return DiagonalizabilityReport(margin > 0.0, margin, chi0, w0)
    try:
        chi0 = static_susceptibility(src, cfg)
    except DivergenceError:
        return DiagonalizabilityReport(False, -math.inf, math.inf, w0)
    return DiagonalizabilityReport(chi0 < 1.0, w0 * w0 * (1.0 - chi0), chi0, w0)


def require_diagonalizable(src, cfg=None, omega0=None):
    """Raise ``NotDiagonalizableError`` unless the source passes the check."""
    report = check_diagonalizable(src, cfg, omega0)
    if not report.diagonalizable:
        raise NotDiagonalizableError(
            "thermodynamic formulas need omega0^2 > int alpha^2/xi^2 "
            f"(margin = {report.margin!r})")
    return report
