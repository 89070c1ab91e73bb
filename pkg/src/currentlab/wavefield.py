"""Positive-frequency wave packets on a periodic box and their conserved currents.

Conventions, shared by every module in this package: natural units, metric
signature (+,-) in 1+1 dimensions, index 0 = time, index 1 = space. Space is a
periodic box of length L, so admissible wavenumbers are k = 2*pi*m/L for an
integer harmonic m, and each mode carries the frequency

    omega = +sqrt(k**2 + mass**2) > 0.

Frequencies are always recomputed from (harmonic, L, mass) and never stored,
which rules out negative-frequency contamination by construction.

The conserved current of a scalar packet is the antisymmetrized bilinear

    j_mu = i (psi* d_mu psi - psi d_mu psi*),

and for the massless vector variant the same expression with an overall sign
flip and a (+,-,-,-) Lorentz contraction over the four polarization
components. Because every packet is a finite mode sum, psi, its gradient, the
current and its divergence all have closed forms that are evaluated exactly up
to floating-point roundoff: no finite differences anywhere in this module.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GridError, ZeroNormError
from .tolerances import DEFAULT, Tolerances

_TWO_PI = 2.0 * math.pi


class CausalClass(enum.Enum):
    TIMELIKE_FUTURE = "timelike_future"
    TIMELIKE_PAST = "timelike_past"
    NULL = "null"
    SPACELIKE = "spacelike"
    ZERO = "zero"


@dataclass(frozen=True)
class SpacetimePoint:
    """A point (t, x) of the periodic spacetime strip; x is interpreted mod L."""

    t: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise ValueError("spacetime point coordinates must be finite")


@dataclass(frozen=True)
class TwoVector:
    """Contravariant 2-vector (v^0, v^1) in the (+,-) signature."""

    v0: float
    v1: float

    def __post_init__(self):
        if not (math.isfinite(self.v0) and math.isfinite(self.v1)):
            raise ValueError("vector components must be finite")

    def minkowski_sq(self) -> float:
        return self.v0 * self.v0 - self.v1 * self.v1

    def lowered(self) -> tuple:
        """Covariant components (v_0, v_1) = (v^0, -v^1)."""
        return (self.v0, -self.v1)


def classify_components(v0: float, v1: float, scale: float = 1.0,
                        tolerances: Tolerances = DEFAULT) -> CausalClass:
    """Causal class of a contravariant 2-vector given a reference scale.

    Zero wins over Null: a vector smaller than zero_rel*scale in the 1-norm is
    reported Zero regardless of its Minkowski square.
    """
    if abs(v0) + abs(v1) < tolerances.zero_rel * scale:
        return CausalClass.ZERO
    q = v0 * v0 - v1 * v1
    if abs(q) < tolerances.class_rel * (v0 * v0 + v1 * v1):
        return CausalClass.NULL
    if q > 0.0:
        return CausalClass.TIMELIKE_FUTURE if v0 > 0.0 else CausalClass.TIMELIKE_PAST
    return CausalClass.SPACELIKE


def classify(v: TwoVector, scale: float = 1.0,
             tolerances: Tolerances = DEFAULT) -> CausalClass:
    return classify_components(v.v0, v.v1, scale, tolerances)


def classify_array(j0, j1, scale: float, tolerances: Tolerances = DEFAULT):
    """Vectorized causal classification; returns an object array of CausalClass."""
    j0 = np.asarray(j0, dtype=float)
    j1 = np.asarray(j1, dtype=float)
    q = j0 * j0 - j1 * j1
    out = np.empty(j0.shape, dtype=object)
    zero = (np.abs(j0) + np.abs(j1)) < tolerances.zero_rel * scale
    null = ~zero & (np.abs(q) < tolerances.class_rel * (j0 * j0 + j1 * j1))
    tlf = ~zero & ~null & (q > 0.0) & (j0 > 0.0)
    tlp = ~zero & ~null & (q > 0.0) & (j0 <= 0.0)
    out[zero] = CausalClass.ZERO
    out[null] = CausalClass.NULL
    out[tlf] = CausalClass.TIMELIKE_FUTURE
    out[tlp] = CausalClass.TIMELIKE_PAST
    out[~zero & ~null & (q <= 0.0)] = CausalClass.SPACELIKE
    return out


@dataclass(frozen=True)
class Mode:
    """One positive-frequency plane-wave mode exp(-i(omega t - k x))."""

    harmonic: int
    coeff: complex

    def __post_init__(self):
        if not isinstance(self.harmonic, (int, np.integer)):
            raise ValueError("harmonic must be an integer")
        c = complex(self.coeff)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError("mode coefficient must be finite")

    def wavenumber(self, box_length: float) -> float:
        return _TWO_PI * self.harmonic / box_length

    def frequency(self, mass: float, box_length: float) -> float:
        return math.hypot(self.wavenumber(box_length), mass)


class _ModeBilinear:
    """Shared evaluation engine for currents of positive-frequency mode sums.

    Everything a current needs is a Gram-weighted bilinear in the per-mode
    amplitudes u_j(t,x) = c_j exp(-i(omega_j t - k_j x)):

        j^mu = Re sum_{j,l} G[j,l] conj(u_j) u_l (omega_j+omega_l, k_j+k_l)^mu

    with G = 1 for a scalar packet and G[j,l] = -(eps_j* . eps_l) for the
    vector variant. Marginal currents of many-body packets reduce to the same
    form with an effective Gram matrix, so they reuse this class as well.
    """

    __slots__ = ("mass", "box_length", "harmonics", "coeffs", "k", "omega",
                 "w0", "w1", "wdiv", "current_scale", "divergence_scale")

    def __init__(self, mass, box_length, harmonics, coeffs, gram):
        self.mass = float(mass)
        self.box_length = float(box_length)
        self.harmonics = np.asarray(harmonics, dtype=np.int64)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.k = _TWO_PI * self.harmonics / self.box_length
        self.omega = np.hypot(self.k, self.mass)
        gram = np.asarray(gram)
        self.w0 = gram * np.add.outer(self.omega, self.omega)
        self.w1 = gram * np.add.outer(self.k, self.k)
        om2 = self.omega * self.omega
        k2 = self.k * self.k
        # mass-shell bracket (omega_j^2-omega_l^2)-(k_j^2-k_l^2); zero up to roundoff
        self.wdiv = 1j * gram * (np.subtract.outer(om2, om2) - np.subtract.outer(k2, k2))
        amp = np.abs(self.coeffs)
        g = np.abs(gram)
        pair = np.add.outer(self.omega, self.omega) + np.abs(np.add.outer(self.k, self.k))
        self.current_scale = float(amp @ (g * pair) @ amp)
        size = np.add.outer(om2 + k2, om2 + k2)
        self.divergence_scale = float(amp @ (g * size) @ amp)
        for name in ("harmonics", "coeffs", "k", "omega", "w0", "w1", "wdiv"):
            getattr(self, name).setflags(write=False)

    def u_at(self, t: float, x: float):
        return self.coeffs * np.exp(-1j * (self.omega * t - self.k * x))

    def current_at(self, t: float, x: float) -> tuple:
        u = self.u_at(t, x)
        z0 = np.vdot(u, self.w0 @ u)
        z1 = np.vdot(u, self.w1 @ u)
        if __debug__:
            lim = 1e-12 * (self.current_scale + 1.0)
            assert abs(z0.imag) < lim and abs(z1.imag) < lim
        return (z0.real, z1.real)

    def divergence_at(self, t: float, x: float) -> float:
        u = self.u_at(t, x)
        z = np.vdot(u, self.wdiv @ u)
        return z.real

    def u_grid(self, ts, xs):
        ts = np.asarray(ts, dtype=float).ravel()
        xs = np.asarray(xs, dtype=float).ravel()
        phase = np.outer(ts, self.omega) - np.outer(xs, self.k)
        return self.coeffs[None, :] * np.exp(-1j * phase)

    def current_grid(self, ts, xs) -> tuple:
        u = self.u_grid(ts, xs)
        j0 = np.einsum("pj,jl,pl->p", u.conj(), self.w0, u).real
        j1 = np.einsum("pj,jl,pl->p", u.conj(), self.w1, u).real
        return j0, j1

    def divergence_grid(self, ts, xs):
        u = self.u_grid(ts, xs)
        return np.einsum("pj,jl,pl->p", u.conj(), self.wdiv, u).real

    def total_flux(self) -> float:
        # cross terms integrate to zero over the box, so only the diagonal survives
        diag = np.real(np.diagonal(self.w0))
        return self.box_length * float(diag @ (np.abs(self.coeffs) ** 2))


def _canonical_modes(modes):
    """Sort by harmonic and merge duplicates by summing coefficients."""
    merged = {}
    for mode in modes:
        if not isinstance(mode, Mode):
            mode = Mode(int(mode[0]), complex(mode[1]))
        merged[mode.harmonic] = merged.get(mode.harmonic, 0j) + complex(mode.coeff)
    out = tuple(Mode(h, merged[h]) for h in sorted(merged) if merged[h] != 0j)
    return out


@dataclass(frozen=True, eq=False)
class ScalarWavePacket:
    """Finite sum of positive-frequency scalar modes on the periodic box."""

    mass: float
    box_length: float
    modes: tuple

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass >= 0.0):
            raise ValueError("mass must be finite and non-negative")
        if not (math.isfinite(self.box_length) and self.box_length > 0.0):
            raise ValueError("box_length must be finite and positive")
        canon = _canonical_modes(self.modes)
        if not canon:
            raise ZeroNormError("packet has no mode with a nonzero coefficient")
        if self.mass == 0.0 and any(m.harmonic == 0 for m in canon):
            raise ValueError("harmonic 0 is forbidden for a massless packet "
                             "(its frequency would vanish)")
        object.__setattr__(self, "modes", canon)
        harmonics = [m.harmonic for m in canon]
        coeffs = [m.coeff for m in canon]
        gram = np.ones((len(canon), len(canon)))
        engine = _ModeBilinear(self.mass, self.box_length, harmonics, coeffs, gram)
        object.__setattr__(self, "_engine", engine)

    # -- field evaluation ---------------------------------------------------

    def psi_at(self, t: float, x: float) -> complex:
        return complex(np.sum(self._engine.u_at(t, x)))

    def gradient_at(self, t: float, x: float) -> tuple:
        """Covariant gradient (d_t psi, d_x psi)."""
        e = self._engine
        u = e.u_at(t, x)
        return (complex(np.sum(-1j * e.omega * u)), complex(np.sum(1j * e.k * u)))

    def current_at(self, t: float, x: float) -> tuple:
        return self._engine.current_at(t, x)

    def current_grid(self, ts, xs) -> tuple:
        return self._engine.current_grid(ts, xs)

    def divergence_at(self, t: float, x: float) -> float:
        return self._engine.divergence_at(t, x)

    def divergence_grid(self, ts, xs):
        return self._engine.divergence_grid(ts, xs)

    # -- derived quantities -------------------------------------------------

    @property
    def current_scale(self) -> float:
        return self._engine.current_scale

    @property
    def divergence_scale(self) -> float:
        return self._engine.divergence_scale

    def total_flux(self) -> float:
        """Integral of j^0 over one box period (conserved, slice independent)."""
        return self._engine.total_flux()

    def normalized(self) -> "ScalarWavePacket":
        flux = self.total_flux()
        if not flux > 0.0:
            raise ZeroNormError(f"total flux {flux} is not positive")
        s = 1.0 / math.sqrt(flux)
        return ScalarWavePacket(self.mass, self.box_length,
                                tuple(Mode(m.harmonic, m.coeff * s) for m in self.modes))


_ETA4 = np.array([1.0, -1.0, -1.0, -1.0])


def _minkowski4(a, b) -> complex:
    """(+,-,-,-) contraction conj(a)_alpha b^alpha of two complex 4-vectors."""
    return complex(np.sum(_ETA4 * np.conj(a) * b))


@dataclass(frozen=True, eq=False)
class VectorWavePacket:
    """Massless vector packet; each mode carries a complex 4-polarization.

    The density is only guaranteed sign-definite for polarizations with
    negative Minkowski norm (transverse-like); any other choice is accepted
    but triggers a warning, and such packets are excluded from the positivity
    guarantees of the probability machinery.
    """

    box_length: float
    modes: tuple
    polarizations: tuple
    mass: float = 0.0

    def __post_init__(self):
        if self.mass != 0.0:
            raise ValueError("vector packets are massless; mass must be 0")
        if not (math.isfinite(self.box_length) and self.box_length > 0.0):
            raise ValueError("box_length must be finite and positive")
        if len(self.modes) != len(self.polarizations):
            raise ValueError("one polarization 4-vector is required per mode")
        # fold coefficients into per-mode amplitude 4-vectors, then merge duplicates
        merged = {}
        for mode, pol in zip(self.modes, self.polarizations):
            if not isinstance(mode, Mode):
                mode = Mode(int(mode[0]), complex(mode[1]))
            a = complex(mode.coeff) * np.asarray(pol, dtype=complex)
            if a.shape != (4,) or not np.all(np.isfinite(a.view(float))):
                raise ValueError("polarization must be a finite complex 4-vector")
            if mode.harmonic in merged:
                merged[mode.harmonic] = merged[mode.harmonic] + a
            else:
                merged[mode.harmonic] = a
        harmonics = sorted(h for h, a in merged.items() if np.any(a != 0))
        if not harmonics:
            raise ZeroNormError("packet has no mode with a nonzero amplitude")
        if any(h == 0 for h in harmonics):
            raise ValueError("harmonic 0 is forbidden for a massless packet")
        amps = [merged[h] for h in harmonics]
        object.__setattr__(self, "modes", tuple(Mode(h, 1.0 + 0j) for h in harmonics))
        object.__setattr__(self, "polarizations",
                           tuple(tuple(a) for a in amps))
        for h, a in zip(harmonics, amps):
            norm = _minkowski4(a, a).real
            if norm >= 0.0:
                warnings.warn(
                    f"mode harmonic {h}: polarization has non-negative Minkowski "
                    f"norm {norm:.3g}; the density may be sign-indefinite",
                    stacklevel=2)
        gram = np.empty((len(amps), len(amps)), dtype=complex)
        for i, ai in enumerate(amps):
            for j, aj in enumerate(amps):
                gram[i, j] = -_minkowski4(ai, aj)
        engine = _ModeBilinear(0.0, self.box_length, harmonics,
                               np.ones(len(amps), dtype=complex), gram)
        object.__setattr__(self, "_engine", engine)

    def psi_at(self, t: float, x: float):
        """The four complex field components psi^alpha at (t, x)."""
        e = self._engine
        phases = np.exp(-1j * (e.omega * t - e.k * x))
        amps = np.asarray(self.polarizations, dtype=complex)
        return phases @ amps

    def gradient_at(self, t: float, x: float):
        """Covariant gradients (d_t psi^alpha, d_x psi^alpha), two 4-vectors."""
        e = self._engine
        phases = np.exp(-1j * (e.omega * t - e.k * x))
        amps = np.asarray(self.polarizations, dtype=complex)
        return ((-1j * e.omega * phases) @ amps, (1j * e.k * phases) @ amps)

    def current_at(self, t: float, x: float) -> tuple:
        return self._engine.current_at(t, x)

    def current_grid(self, ts, xs) -> tuple:
        return self._engine.current_grid(ts, xs)

    def divergence_at(self, t: float, x: float) -> float:
        return self._engine.divergence_at(t, x)

    def divergence_grid(self, ts, xs):
        return self._engine.divergence_grid(ts, xs)

    @property
    def current_scale(self) -> float:
        return self._engine.current_scale

    @property
    def divergence_scale(self) -> float:
        return self._engine.divergence_scale

    def total_flux(self) -> float:
        return self._engine.total_flux()

    def normalized(self) -> "VectorWavePacket":
        flux = self.total_flux()
        if not flux > 0.0:
            raise ZeroNormError(f"total flux {flux} is not positive")
        s = 1.0 / math.sqrt(flux)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return VectorWavePacket(
                self.box_length, self.modes,
                tuple(tuple(s * complex(c) for c in pol) for pol in self.polarizations))


# -- module-level operations ------------------------------------------------

def evaluate_psi(packet: ScalarWavePacket, p: SpacetimePoint) -> complex:
    return packet.psi_at(p.t, p.x)


def evaluate_gradient(packet: ScalarWavePacket, p: SpacetimePoint) -> tuple:
    return packet.gradient_at(p.t, p.x)


def current(packet, p: SpacetimePoint) -> TwoVector:
    j0, j1 = packet.current_at(p.t, p.x)
    return TwoVector(j0, j1)


def divergence(packet, p: SpacetimePoint) -> float:
    return packet.divergence_at(p.t, p.x)


def normalize(packet):
    return packet.normalized()


@dataclass(frozen=True, eq=False)
class ClassificationMap:
    """Row-major grid of current samples with their causal classes.

    Sample i*n_x + j sits at (t_i, x_j); t varies slowest.
    """

    t: np.ndarray
    x: np.ndarray
    j0: np.ndarray
    j1: np.ndarray
    classes: np.ndarray
    n_t: int
    n_x: int

    def counts(self) -> dict:
        out = {c.value: 0 for c in CausalClass}
        for c in self.classes:
            out[c.value] += 1
        return out

    def class_at(self, i: int, j: int) -> CausalClass:
        return self.classes[i * self.n_x + j]


def classification_map(packet, t_range, x_range, n_t: int, n_x: int,
                       tolerances: Tolerances = DEFAULT) -> ClassificationMap:
    t0, t1 = float(t_range[0]), float(t_range[1])
    x0, x1 = float(x_range[0]), float(x_range[1])
    if not (n_t >= 2 and n_x >= 2):
        raise GridError(f"grid needs at least 2 points per axis, got {n_t}x{n_x}")
    if not (t1 > t0 and x1 > x0):
        raise GridError("grid ranges must be non-empty (upper bound above lower)")
    ts = np.linspace(t0, t1, n_t)
    xs = np.linspace(x0, x1, n_x)
    tt = np.repeat(ts, n_x)
    xx = np.tile(xs, n_t)
    j0, j1 = packet.current_grid(tt, xx)
    classes = classify_array(j0, j1, packet.current_scale, tolerances)
    return ClassificationMap(tt, xx, j0, j1, classes, n_t, n_x)
