"""Projective polarization measurements, exact and through a noisy bench.

Six intensities I_ij = |<j|U|i>|^2 with (i, j) running over the input/output
pairs (L,L), (H,H), (L,H), (L,D), (H,L), (H,D) determine an SU(2) process up
to gauge. The closed forms in the quaternion components q = (q0, qx, qy, qz),

    I_LL = q0^2 + qz^2
    I_HH = q0^2 + qx^2
    I_LH = (1 + 2 qx qz + 2 q0 qy) / 2
    I_LD = (1 + 2 qy qz - 2 q0 qx) / 2
    I_HL = (1 + 2 qx qz - 2 q0 qy) / 2
    I_HD = (1 + 2 qx qy + 2 q0 qz) / 2

are even under q -> -q, the measurement-level face of the gauge ambiguity.

The noisy path models the optical bench instead: each state is prepared from
a horizontal source by a half-wave and a quarter-wave plate and analyzed by a
quarter-wave plate followed by a linear polarizer, with Gaussian jitter on
the rotating-element angles.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import su2
from .errors import NonPhysicalDataError

LABELS = ("LL", "HH", "LH", "LD", "HL", "HD")

# file values this far outside [0, 1] are normalization overshoot, clamped;
# anything worse is rejected as non-physical
CLAMP_SLACK = 0.05


@dataclass
class MeasurementSet:
    """The six normalized intensities, ordered LL, HH, LH, LD, HL, HD."""

    ll: float
    hh: float
    lh: float
    ld: float
    hl: float
    hd: float

    def as_array(self):
        return np.array([self.ll, self.hh, self.lh, self.ld, self.hl, self.hd])

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=float).reshape(6)
        return cls(*(float(v) for v in values))


@dataclass
class NoiseModel:
    """Zero-mean Gaussian jitter (std delta_deg, degrees) on element angles.

    include_lp_jitter also shakes the polarizer transmission axis;
    share_across_measurements reuses one draw for all six measurements
    instead of redrawing per measurement.
    """

    delta_deg: float
    include_lp_jitter: bool = True
    share_across_measurements: bool = False

    def __post_init__(self):
        if self.delta_deg < 0:
            raise ValueError(f"delta_deg must be >= 0, got {self.delta_deg}")


@dataclass
class BenchSettings:
    """Waveplate angles (degrees) realizing the six measurements.

    angles_deg maps each label to (prep HWP, prep QWP, analysis QWP, LP).
    """

    angles_deg: dict

    def as_matrix(self):
        """Angles as a (6, 4) array in label order."""
        return np.array([self.angles_deg[lab] for lab in LABELS], dtype=float)


_BASIS = {
    "L": np.array([1.0, 0.0], dtype=complex),
    "R": np.array([0.0, 1.0], dtype=complex),
    "H": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "V": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    "D": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
    "A": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0),
}


def basis_state(label):
    """One of the six mutually unbiased states L, R, H, V, D, A."""
    try:
        return _BASIS[label].copy()
    except KeyError:
        raise ValueError(f"unknown polarization label {label!r}") from None


def linear_state(alpha):
    """Linear polarization at angle alpha (radians) in the circular basis."""
    alpha = np.asarray(alpha, dtype=float)
    out = np.empty(alpha.shape + (2,), dtype=complex)
    out[..., 0] = np.exp(-1j * alpha)
    out[..., 1] = np.exp(1j * alpha)
    return out / np.sqrt(2.0)


def waveplate(delta, alpha):
    """Unit-determinant Jones matrix of a retarder (circular basis).

    delta is the retardance (pi for a half-wave plate, pi/2 for a
    quarter-wave plate), alpha the optic-axis angle in radians. alpha may be
    an array; the matrix broadcasts to shape alpha.shape + (2, 2).
    """
    alpha = np.asarray(alpha, dtype=float)
    c = np.cos(delta / 2.0)
    s = np.sin(delta / 2.0)
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = 1j * s * np.exp(-2j * alpha)
    out[..., 1, 0] = 1j * s * np.exp(2j * alpha)
    out[..., 1, 1] = c
    return out


def hwp(alpha):
    return waveplate(np.pi, alpha)


def qwp(alpha):
    return waveplate(np.pi / 2.0, alpha)


def projective_intensity(U, input_state, output_state):
    """|<out|U|in>|^2 for a unitary and two normalized states."""
    amp = np.vdot(output_state, np.asarray(U, dtype=complex) @ input_state)
    return float(abs(amp) ** 2)


def six_intensities_from_quats(q):
    """Closed-form intensities for quaternions (..., 4) -> (..., 6)."""
    q = np.asarray(q, dtype=float)
    q0, qx, qy, qz = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (6,))
    out[..., 0] = q0**2 + qz**2
    out[..., 1] = q0**2 + qx**2
    out[..., 2] = 0.5 * (1.0 + 2.0 * qx * qz + 2.0 * q0 * qy)
    out[..., 3] = 0.5 * (1.0 + 2.0 * qy * qz - 2.0 * q0 * qx)
    out[..., 4] = 0.5 * (1.0 + 2.0 * qx * qz - 2.0 * q0 * qy)
    out[..., 5] = 0.5 * (1.0 + 2.0 * qx * qy + 2.0 * q0 * qz)
    return out


def six_intensities_exact(p):
    """Noise-free MeasurementSet of a gate, from the closed forms."""
    su2.validate_params(p)
    return MeasurementSet.from_array(
        six_intensities_from_quats(su2.params_to_quat(p))
    )


def derive_bench_settings():
    """Waveplate angles that realize the six measurements exactly.

    From a horizontal source, HWP(0) keeps |H> and QWP(45) turns |H> into
    |L>; on the analysis side LP(0) behind QWP(0) projects on |H>, LP(45)
    behind QWP(0) on |L>, and LP(45) behind QWP(45) on |D>. The table is
    verified against the target states before being returned.
    """
    prep = {"L": (0.0, 45.0), "H": (0.0, 0.0)}
    ana = {"L": (0.0, 45.0), "H": (0.0, 0.0), "D": (45.0, 45.0)}
    settings = BenchSettings(
        {lab: prep[lab[0]] + ana[lab[1]] for lab in LABELS}
    )
    for lab in LABELS:
        h, w, wa, lp = np.radians(settings.angles_deg[lab])
        prepared = qwp(w) @ hwp(h) @ basis_state("H")
        analyzed = qwp(wa).conj().T @ linear_state(lp)
        for state, target in ((prepared, lab[0]), (analyzed, lab[1])):
            overlap = abs(np.vdot(basis_state(target), state)) ** 2
            if abs(overlap - 1.0) > 1e-12:
                raise RuntimeError(
                    f"bench settings failed to reproduce {target!r}"
                )
    return settings


_DEFAULT_SETTINGS = None


def default_bench_settings():
    """Cached result of derive_bench_settings()."""
    global _DEFAULT_SETTINGS
    if _DEFAULT_SETTINGS is None:
        _DEFAULT_SETTINGS = derive_bench_settings()
    return _DEFAULT_SETTINGS


def pipeline_intensities(U, angles_rad):
    """Intensity through the prepare/analyze bench, vectorized.

    U has shape (..., 2, 2); angles_rad is (..., 4) holding (prep HWP,
    prep QWP, analysis QWP, LP) and must broadcast against U's batch shape.
    """
    angles_rad = np.asarray(angles_rad, dtype=float)
    h, w = angles_rad[..., 0], angles_rad[..., 1]
    wa, lp = angles_rad[..., 2], angles_rad[..., 3]
    source = basis_state("H")
    prepared = np.einsum("...ij,...jk,k->...i", qwp(w), hwp(h), source)
    analyzer = np.einsum(
        "...i,...ij->...j", linear_state(lp).conj(), qwp(wa)
    )
    amp = np.einsum("...i,...ij,...j->...", analyzer, U, prepared)
    return np.clip(np.abs(amp) ** 2, 0.0, 1.0)


def noisy_six_from_quats(quats, noise, rng, settings=None):
    """Noisy-bench intensities for quaternions (n, 4) -> (n, 6).

    Every rotating element of every measurement gets an independent Gaussian
    angle error of std delta_deg (one shared draw per gate when
    share_across_measurements is set; the polarizer column is zeroed when
    include_lp_jitter is off).
    """
    if settings is None:
        settings = default_bench_settings()
    quats = np.asarray(quats, dtype=float)
    n = quats.shape[0]
    U = su2.quat_matrices(quats)
    base = settings.as_matrix()
    if noise.share_across_measurements:
        jitter = np.broadcast_to(
            rng.normal(0.0, noise.delta_deg, size=(n, 1, 4)), (n, 6, 4)
        ).copy()
    else:
        jitter = rng.normal(0.0, noise.delta_deg, size=(n, 6, 4))
    if not noise.include_lp_jitter:
        jitter[..., 3] = 0.0
    angles = np.radians(base[None, :, :] + jitter)
    out = np.empty((n, 6))
    for k in range(6):
        out[:, k] = pipeline_intensities(U, angles[:, k, :])
    return out


def six_intensities_noisy(p, noise, settings=None, rng=None):
    """Simulated bench measurement of one gate under angular jitter.

    With delta_deg = 0 this reproduces six_intensities_exact to 1e-12.
    """
    su2.validate_params(p)
    if rng is None:
        rng = np.random.default_rng()
    quat = su2.params_to_quat(p)[None, :]
    values = noisy_six_from_quats(quat, noise, rng, settings=settings)[0]
    return MeasurementSet.from_array(values)


def save_measurements(m, path):
    """Write one line of six comma-separated intensities."""
    with open(path, "w") as fh:
        fh.write(",".join(f"{v:.17g}" for v in m.as_array()) + "\n")


def load_measurements(path):
    """Read a six-intensity line, clamping slight [0, 1] overshoots.

    Values beyond CLAMP_SLACK outside [0, 1] cannot come from normalization
    noise and raise NonPhysicalDataError.
    """
    with open(path) as fh:
        text = fh.read().strip()
    parts = text.split(",")
    if len(parts) != 6:
        raise NonPhysicalDataError(
            f"expected 6 comma-separated intensities, got {len(parts)}"
        )
    try:
        values = np.array([float(v) for v in parts])
    except ValueError:
        raise NonPhysicalDataError(f"non-numeric intensity in {path}")
    if np.any(values < -CLAMP_SLACK) or np.any(values > 1.0 + CLAMP_SLACK):
        raise NonPhysicalDataError(
            f"intensities {values} too far outside [0, 1]"
        )
    if np.any(values < 0.0) or np.any(values > 1.0):
        warnings.warn(
            "clamping out-of-range intensities into [0, 1]", stacklevel=2
        )
        values = np.clip(values, 0.0, 1.0)
    return MeasurementSet.from_array(values)
