"""Reference reconstructors: closed-form inversion and likelihood baseline.

Writing the gate as U = [[A e^{i phi}, B e^{i psi}], [-B e^{-i psi},
A e^{-i phi}]] with A, B >= 0 and A^2 + B^2 = 1, the six intensities read

    I_LL = A^2
    I_HH = A^2 cos^2(phi) + B^2 sin^2(psi)
    I_LH = 1/2 - A B cos(phi + psi)
    I_LD = 1/2 + A B sin(phi + psi)
    I_HL = 1/2 + A B cos(phi - psi)
    I_HD = 1/2 - A^2 sin(2 phi) / 2 + B^2 sin(2 psi) / 2

so I_LL fixes (A, B), the (I_LH, I_LD) pair fixes the phase sum, I_HL fixes
the phase difference up to sign, and I_HD / I_HH break the remaining tie.
Each formula is unit-tested against matrix elements rather than trusted.

The likelihood baseline minimizes sum (I_th - I_exp)^2 / I_th with a
Nelder-Mead simplex from random starts. Its single-start default is an
engine that is *supposed* to show a failure tail: it stands in for generic
black-box minimizers that get trapped away from the global minimum.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import su2
from .errors import DegenerateGateError, NonPhysicalDataError
from .polarimetry import six_intensities_exact, six_intensities_from_quats

# below this A*B the phase system is ill-conditioned
AB_DEGENERATE_THRESHOLD = 0.05
# a degenerate-branch candidate explaining the data this well is returned
# instead of raising
DEGENERATE_RESIDUAL_TOL = 1e-10
# intensities may poke outside [0, 1] by at most this before being rejected
RANGE_TOL = 1e-9
# floor for the likelihood denominators, which vanish with the intensity
LIKELIHOOD_FLOOR = 1e-9


@dataclass
class AppendixParams:
    """Magnitude/phase coordinates (A, B, phi, psi) of an SU(2) gate."""

    a: float
    b: float
    phi: float
    psi: float

    def to_quat(self):
        return np.array(
            [
                self.a * np.cos(self.phi),
                -self.b * np.sin(self.psi),
                -self.b * np.cos(self.psi),
                -self.a * np.sin(self.phi),
            ]
        )

    def to_params(self):
        return su2.quat_to_params(self.to_quat())


def appendix_from_quat(q):
    """Inverse of AppendixParams.to_quat, for tests and diagnostics."""
    q0, qx, qy, qz = np.asarray(q, dtype=float).reshape(4)
    a = float(np.hypot(q0, qz))
    b = float(np.hypot(qx, qy))
    phi = float(np.arctan2(-qz, q0)) if a > 0 else 0.0
    psi = float(np.arctan2(-qx, -qy)) if b > 0 else 0.0
    return AppendixParams(a, b, phi, psi)


@dataclass
class ReconstructionResult:
    """A reconstructed gate with its cost, timing and engine diagnostics."""

    params: su2.GateParams
    cost: float
    elapsed: float
    engine: str
    diagnostics: dict = field(default_factory=dict)


@dataclass
class BaselineConfig:
    """Nelder-Mead baseline: restarts, per-start budget, simplex tolerance."""

    restarts: int = 1
    max_evals: int = 600
    tol: float = 1e-10
    seed: int | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


def _check_range(values):
    values = np.asarray(values, dtype=float)
    if np.any(values < -RANGE_TOL) or np.any(values > 1.0 + RANGE_TOL):
        raise NonPhysicalDataError(
            f"intensities outside [0, 1]: {values.tolist()}"
        )
    return np.clip(values, 0.0, 1.0)


def _residual(quat, target):
    pred = six_intensities_from_quats(quat)
    return float(np.sum((pred - target) ** 2))


def _degenerate_candidates(a, b, m):
    """Gates consistent with near-diagonal or near-antidiagonal data.

    With B ~ 0 the gate is e^{-i phi sigma_z}-like and (I_HH, I_HD) still fix
    phi through cos(2 phi) = 2 I_HH - 1 and sin(2 phi) = 1 - 2 I_HD; the
    mirror case A ~ 0 fixes psi the same way.
    """
    cands = []
    if a >= b:
        two_phi = np.arctan2(1.0 - 2.0 * m[5], 2.0 * m[1] - 1.0)
        cands.append(AppendixParams(a, b, two_phi / 2.0, 0.0))
        cands.append(AppendixParams(a, b, two_phi / 2.0, np.pi / 2.0))
    if b >= a:
        two_psi = np.arctan2(2.0 * m[5] - 1.0, 1.0 - 2.0 * m[1])
        cands.append(AppendixParams(a, b, 0.0, two_psi / 2.0))
        cands.append(AppendixParams(a, b, np.pi / 2.0, two_psi / 2.0))
    return cands


def _phase_candidates(a, b, m):
    """The +-arccos branch pair of the generic inversion."""
    phase_sum = np.arctan2(m[3] - 0.5, 0.5 - m[2])
    cos_diff = (m[4] - 0.5) / (a * b)
    if abs(cos_diff) > 1.0 + 1e-6:
        raise NonPhysicalDataError(
            f"phase-difference cosine {cos_diff} outside [-1, 1]"
        )
    diff = np.arccos(np.clip(cos_diff, -1.0, 1.0))
    return [
        AppendixParams(a, b, (phase_sum + d) / 2.0, (phase_sum - d) / 2.0)
        for d in (diff, -diff)
    ]


def invert_six(m):
    """Closed-form gate reconstruction from all six intensities.

    On noiseless data from a gate with A*B above the degeneracy threshold
    this recovers the gate to fidelity 1 - 1e-9 or better. When A*B is below
    the threshold the phase split is ill-conditioned: if a degenerate-branch
    candidate still explains the data essentially exactly it is returned,
    otherwise a DegenerateGateError carrying the best candidate is raised.
    """
    target = _check_range(m.as_array())
    a = float(np.sqrt(target[0]))
    b = float(np.sqrt(1.0 - target[0]))

    if a * b > AB_DEGENERATE_THRESHOLD:
        cands = _phase_candidates(a, b, target)
        best = min(cands, key=lambda c: _residual(c.to_quat(), target))
        return best.to_params()

    cands = _degenerate_candidates(a, b, target)
    if a * b > 0:
        try:
            cands.extend(_phase_candidates(a, b, target))
        except NonPhysicalDataError:
            pass
    best = min(cands, key=lambda c: _residual(c.to_quat(), target))
    residual = _residual(best.to_quat(), target)
    if residual <= DEGENERATE_RESIDUAL_TOL:
        return best.to_params()
    raise DegenerateGateError(
        f"A*B = {a * b:.4g} leaves the phases ill-conditioned "
        f"(best residual {residual:.3g})",
        candidate=best.to_params(),
    )


def invert_five(m):
    """All gates consistent with the five intensities excluding I_HH.

    m maps labels to values and must contain LL, LH, LD, HL, HD. Returns
    canonical candidates that reproduce the five inputs to 1e-9; generic
    data yields exactly one, while the degenerate set (A*B = 0, or a phase
    sum on the cos = 0 circle) yields several, which is why a sixth
    measurement is kept.
    """
    wanted = ("LL", "LH", "LD", "HL", "HD")
    missing = [lab for lab in wanted if lab not in m]
    if missing:
        raise ValueError(f"missing intensities: {missing}")
    vals = _check_range([m[lab] for lab in wanted])
    five = dict(zip(wanted, vals))
    a = float(np.sqrt(five["LL"]))
    b = float(np.sqrt(1.0 - five["LL"]))
    # indices of the five labels in the six-intensity ordering
    idx = np.array([0, 2, 3, 4, 5])
    target5 = vals

    cands = []
    if a * b < 1e-6:
        # the I_HD equation alone leaves a sign pair for the phase
        if b < a:
            s2 = np.clip((1.0 - 2.0 * five["HD"]) / max(a * a, 1e-12), -1, 1)
            x = np.arcsin(s2)
            for two_phi in (x, np.pi - x):
                cands.append(AppendixParams(a, b, two_phi / 2.0, 0.0))
        else:
            s2 = np.clip((2.0 * five["HD"] - 1.0) / max(b * b, 1e-12), -1, 1)
            x = np.arcsin(s2)
            for two_psi in (x, np.pi - x):
                cands.append(AppendixParams(a, b, 0.0, two_psi / 2.0))
    else:
        phase_sum = np.arctan2(five["LD"] - 0.5, 0.5 - five["LH"])
        cos_diff = (five["HL"] - 0.5) / (a * b)
        if abs(cos_diff) > 1.0 + 1e-6:
            raise NonPhysicalDataError(
                f"phase-difference cosine {cos_diff} outside [-1, 1]"
            )
        diff = np.arccos(np.clip(cos_diff, -1.0, 1.0))
        for d in (diff, -diff):
            cands.append(
                AppendixParams(
                    a, b, (phase_sum + d) / 2.0, (phase_sum - d) / 2.0
                )
            )

    kept = []
    for c in cands:
        quat = c.to_quat()
        pred = six_intensities_from_quats(quat)[idx]
        if np.abs(pred - target5).max() > 1e-9:
            continue
        params = c.to_params()
        if any(
            su2.quat_fidelity(su2.params_to_quat(params), su2.params_to_quat(k))
            > 1.0 - 1e-9
            for k in kept
        ):
            continue
        kept.append(params)
    return kept


def log_likelihood(p, m):
    """sum (I_th - I_exp)^2 / I_th over the six intensities.

    Vanishing theoretical intensities are floored at LIKELIHOOD_FLOOR to
    keep the cost finite.
    """
    su2.validate_params(p)
    th = six_intensities_from_quats(su2.params_to_quat(p))
    exp = m.as_array()
    return float(np.sum((th - exp) ** 2 / np.maximum(th, LIKELIHOOD_FLOOR)))


def _chart_cost(x, exp):
    """Likelihood cost on the unconstrained chart (theta, polar, azimuth)."""
    theta = min(max(x[0], 0.0), np.pi)
    sa, ca = np.sin(x[1]), np.cos(x[1])
    quat = np.array(
        [
            np.cos(theta),
            np.sin(theta) * sa * np.cos(x[2]),
            np.sin(theta) * sa * np.sin(x[2]),
            np.sin(theta) * ca,
        ]
    )
    th = six_intensities_from_quats(quat)
    return float(np.sum((th - exp) ** 2 / np.maximum(th, LIKELIHOOD_FLOOR)))


def _chart_to_params(x):
    theta = min(max(float(x[0]), 0.0), np.pi)
    axis = np.array(
        [
            np.sin(x[1]) * np.cos(x[2]),
            np.sin(x[1]) * np.sin(x[2]),
            np.cos(x[1]),
        ]
    )
    return su2.canonicalize(su2.GateParams(theta, axis))


def minimize_likelihood(m, cfg=None, rng=None):
    """Nelder-Mead likelihood minimization from random starts.

    Runs cfg.restarts independent simplex searches over (theta, axis polar
    angle, axis azimuth) and keeps the best. The default single start
    deliberately exposes the local-minimum failure tail of this engine
    class; raise restarts for an honest multi-start baseline.
    """
    if cfg is None:
        cfg = BaselineConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    exp = _check_range(m.as_array())
    t0 = time.perf_counter()
    best_x = None
    best_cost = np.inf
    evals = 0
    converged = False
    starts = []
    for _ in range(cfg.restarts):
        x0 = np.array(
            [
                rng.uniform(0.0, np.pi),
                np.arccos(rng.uniform(-1.0, 1.0)),
                rng.uniform(-np.pi, np.pi),
            ]
        )
        starts.append(x0)
        res = minimize(
            _chart_cost,
            x0,
            args=(exp,),
            method="Nelder-Mead",
            options={
                "maxfev": cfg.max_evals,
                "xatol": cfg.tol,
                "fatol": cfg.tol,
            },
        )
        evals += res.nfev
        converged = converged or bool(res.success)
        if res.fun < best_cost:
            best_cost = float(res.fun)
            best_x = res.x
    params = _chart_to_params(best_x)
    return ReconstructionResult(
        params=params,
        cost=best_cost,
        elapsed=time.perf_counter() - t0,
        engine="baseline",
        diagnostics={
            "evaluations": evals,
            "restarts": cfg.restarts,
            "converged": converged,
            "start_points": starts,
        },
    )
