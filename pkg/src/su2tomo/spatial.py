"""Space-dependent tomography over pixel grids.

A patterned birefringent plate (g-plate) acts as a waveplate whose optic
axis rotates linearly along one coordinate, alpha(x, y) = pi x / period; a
stack of such elements realizes a transformation that varies across the
beam. The transverse plane is discretized into pixels, each carrying its
own SU(2) gate, and the six intensity frames are processed pixel by pixel.

Two continuity mechanisms make the maps cheap and gauge-smooth: the genetic
engine seeds each pixel's initial population from the best solutions of
already-scanned neighbors (so only a few generations are needed away from
the first pixel), and the network engine applies an a-posteriori gauge fix
that flips a pixel to (pi - theta, -n) whenever that representative is
closer to its already-fixed neighbor.
"""

import dataclasses
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import genetic, su2
from .errors import GeometryError, NonPhysicalDataError
from .network import DEFAULT_CODEC, forward_batch
from .polarimetry import (
    CLAMP_SLACK,
    LABELS,
    MeasurementSet,
    default_bench_settings,
    pipeline_intensities,
)

DEFAULT_PERIOD_MM = 5.0


@dataclass(frozen=True)
class GPlate:
    """Waveplate with optic axis alpha = pi * (axis coordinate) / period."""

    axis: str
    delta: float
    period_mm: float = DEFAULT_PERIOD_MM

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"g-plate axis must be 'x' or 'y', got {self.axis!r}")
        if self.period_mm <= 0:
            raise ValueError("period_mm must be positive")


@dataclass(frozen=True)
class UniformPlate:
    """Ordinary waveplate: fixed retardance and optic-axis angle."""

    delta: float
    alpha0: float = 0.0


@dataclass(frozen=True)
class PlateSpec:
    """Ordered stack of plates; light traverses the tuple front to back."""

    elements: tuple

    def __post_init__(self):
        if not self.elements:
            raise ValueError("plate stack must be non-empty")

    @classmethod
    def parse(cls, text):
        """Parse a stack description like 'w:pi/2,gx:pi,gy:pi/4'.

        Tokens are traversal-ordered: 'gx:DELTA[:PERIOD]' / 'gy:DELTA[:PERIOD]'
        for g-plates, 'w:DELTA[:ALPHA0]' for uniform plates. Angles accept
        plain numbers or pi fractions such as 'pi', 'pi/4', '3pi/4'.
        """
        elements = []
        for token in text.split(","):
            parts = token.strip().split(":")
            kind = parts[0]
            if kind in ("gx", "gy"):
                delta = parse_angle(parts[1])
                period = float(parts[2]) if len(parts) > 2 else DEFAULT_PERIOD_MM
                elements.append(GPlate(kind[1], delta, period))
            elif kind == "w":
                delta = parse_angle(parts[1])
                alpha0 = parse_angle(parts[2]) if len(parts) > 2 else 0.0
                elements.append(UniformPlate(delta, alpha0))
            else:
                raise ValueError(f"unknown plate token {token!r}")
        return cls(tuple(elements))

    def describe(self):
        """Stack description string, inverse of parse up to formatting."""
        out = []
        for el in self.elements:
            if isinstance(el, GPlate):
                out.append(f"g{el.axis}:{el.delta:.17g}:{el.period_mm:.17g}")
            else:
                out.append(f"w:{el.delta:.17g}:{el.alpha0:.17g}")
        return ",".join(out)


_PI_RE = re.compile(r"^([0-9.]*)\s*pi\s*(?:/\s*([0-9.]+))?$")


def parse_angle(text):
    """Angle in radians from '0.5', 'pi', 'pi/4', or '3pi/4'."""
    text = text.strip()
    m = _PI_RE.match(text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * np.pi / den
    return float(text)


@dataclass(frozen=True)
class GridGeometry:
    """Pixel grid with physical pitch; the optical axis sits at the center.

    The default pitch spans two default g-plate periods across 73 pixels.
    """

    width: int = 73
    height: int = 73
    pitch_mm: float = 2.0 * DEFAULT_PERIOD_MM / 73.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.pitch_mm <= 0:
            raise GeometryError(
                f"invalid grid {self.width}x{self.height} @ {self.pitch_mm}"
            )

    def pixel_coords(self):
        """Physical (X, Y) in millimeters of every pixel center, (H, W)."""
        j = np.arange(self.width)
        i = np.arange(self.height)
        x = (j - (self.width - 1) / 2.0) * self.pitch_mm
        y = ((self.height - 1) / 2.0 - i) * self.pitch_mm
        return np.broadcast_to(x, (self.height, self.width)).copy(), \
            np.broadcast_to(y[:, None], (self.height, self.width)).copy()


@dataclass
class FrameSet:
    """Six co-registered intensity frames (6, H, W) in label order."""

    frames: np.ndarray
    geometry: GridGeometry
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.shape != (6, self.geometry.height, self.geometry.width):
            raise GeometryError(
                f"frames shape {self.frames.shape} does not match geometry"
            )

    def pixel_vectors(self):
        """Per-pixel six-intensity vectors, shape (H, W, 6)."""
        return np.moveaxis(self.frames, 0, -1)


@dataclass
class ParamMap:
    """Per-pixel gate parameters with optional cost and fidelity layers."""

    theta: np.ndarray
    axis: np.ndarray
    geometry: GridGeometry
    cost: np.ndarray | None = None
    fid: np.ndarray | None = None

    def __post_init__(self):
        shape = (self.geometry.height, self.geometry.width)
        self.theta = np.asarray(self.theta, dtype=float)
        self.axis = np.asarray(self.axis, dtype=float)
        if self.theta.shape != shape or self.axis.shape != shape + (3,):
            raise GeometryError("parameter layers do not match geometry")

    def quats(self):
        return su2.theta_axis_to_quats(self.theta, self.axis)

    def cell(self, i, j):
        return su2.GateParams(self.theta[i, j], self.axis[i, j])


@dataclass
class ContinuityConfig:
    """Neighbor seeding and gauge-continuity settings for pixel scans.

    neighbor_radius = 0 disables seeding entirely (independent pixels);
    pixels then all run `origin_generations` only at the first pixel and
    `generations` elsewhere, exactly as in the seeded mode.
    """

    neighbor_radius: int = 2
    perturbation: float = 0.2
    origin_generations: int = 60
    generations: int = 10

    def __post_init__(self):
        if self.neighbor_radius < 0:
            raise ValueError("neighbor_radius must be >= 0")
        if self.perturbation < 0:
            raise ValueError("perturbation must be >= 0")
        if self.origin_generations < 1 or self.generations < 1:
            raise ValueError("generation counts must be >= 1")


def plate_unitaries(spec, x, y):
    """Stack unitaries at physical coordinates; broadcasts over x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast_shapes(x.shape, y.shape)
    U = np.broadcast_to(np.eye(2, dtype=complex), shape + (2, 2)).copy()
    for el in spec.elements:
        if isinstance(el, GPlate):
            coord = x if el.axis == "x" else y
            alpha = np.pi * coord / el.period_mm
        else:
            alpha = np.broadcast_to(el.alpha0, shape)
        c = np.cos(el.delta / 2.0)
        s = np.sin(el.delta / 2.0)
        E = np.empty(shape + (2, 2), dtype=complex)
        E[..., 0, 0] = c
        E[..., 0, 1] = 1j * s * np.exp(-2j * alpha)
        E[..., 1, 0] = 1j * s * np.exp(2j * alpha)
        E[..., 1, 1] = c
        U = E @ U
    return U


def plate_unitary(spec, x, y):
    """Single-point version of plate_unitaries."""
    return plate_unitaries(spec, np.asarray(float(x)), np.asarray(float(y)))


def _unitaries_to_canonical(U):
    """Canonical (theta, axis) grids from a (..., 2, 2) unitary stack."""
    quats = np.empty(U.shape[:-2] + (4,))
    quats[..., 0] = (U[..., 0, 0].real + U[..., 1, 1].real) / 2.0
    quats[..., 1] = -(U[..., 0, 1].imag + U[..., 1, 0].imag) / 2.0
    quats[..., 2] = (U[..., 1, 0].real - U[..., 0, 1].real) / 2.0
    quats[..., 3] = (U[..., 1, 1].imag - U[..., 0, 0].imag) / 2.0
    return su2.quats_to_theta_axis(su2.canonicalize_quats(quats))


def truth_map(spec, geom):
    """Canonical gate parameters of the plate stack at every pixel center."""
    X, Y = geom.pixel_coords()
    theta, axis = _unitaries_to_canonical(plate_unitaries(spec, X, Y))
    return ParamMap(theta, axis, geom)


def simulate_frames(spec, geom, noise, rng, per_pixel_noise=False):
    """Six noisy frames of a plate stack.

    One angle draw is made per measurement per rotating element and shared
    across all pixels (physical plates are global per acquisition);
    per_pixel_noise redraws per pixel instead.
    """
    X, Y = geom.pixel_coords()
    U = plate_unitaries(spec, X, Y)
    base = default_bench_settings().as_matrix()
    n_meas = 1 if noise.share_across_measurements else 6
    if per_pixel_noise:
        jit = rng.normal(
            0.0, noise.delta_deg, size=(n_meas, geom.height, geom.width, 4)
        )
    else:
        jit = rng.normal(0.0, noise.delta_deg, size=(n_meas, 4))
    jit = np.broadcast_to(jit, (6,) + jit.shape[1:]).copy()
    if not noise.include_lp_jitter:
        jit[..., 3] = 0.0
    frames = np.empty((6, geom.height, geom.width))
    for k in range(6):
        if per_pixel_noise:
            angles = np.radians(base[k] + jit[k])
        else:
            angles = np.radians(base[k] + jit[k])[None, None, :]
        frames[k] = pipeline_intensities(U, angles)
    return FrameSet(
        frames,
        geom,
        meta={
            "delta_deg": noise.delta_deg,
            "spec": spec.describe(),
            "per_pixel_noise": per_pixel_noise,
        },
    )


def downsample_frames(raw, target):
    """Block-mean binning of every frame onto a coarser geometry."""
    fh, fw = raw.geometry.height, raw.geometry.width
    th, tw = target.height, target.width
    if fh % th or fw % tw:
        raise GeometryError(
            f"cannot bin {fh}x{fw} frames onto {tw}x{th} (non-divisible)"
        )
    by, bx = fh // th, fw // tw
    binned = raw.frames.reshape(6, th, by, tw, bx).mean(axis=(2, 4))
    return FrameSet(binned, target, meta=dict(raw.meta))


def _seed_population(pool, n, epsilon, rng):
    """Initial genes sampled from neighbor solutions with uniform jitter.

    theta is clamped back into [0, pi] (not folded) so seeds stay near the
    neighbor's solution; the axis is re-normalized.
    """
    picks = pool[rng.integers(0, pool.shape[0], size=n)]
    genes = picks + rng.uniform(-epsilon, epsilon, size=(n, 4))
    genes[:, 0] = np.clip(genes[:, 0], 0.0, np.pi)
    norms = np.linalg.norm(genes[:, 1:], axis=1)
    degenerate = norms < 1e-12
    genes[:, 1:] /= np.where(degenerate, 1.0, norms)[:, None]
    genes[degenerate, 1:] = (0.0, 0.0, 1.0)
    return genes


def reconstruct_map_ga(frames, cfg=None, cont=None, rng=None):
    """Row-major seeded genetic scan of a frame set.

    The first pixel runs a full-length GA on a random population; every
    later pixel draws its initial population from the best solutions of
    already-processed pixels within Chebyshev distance neighbor_radius,
    jittered uniformly by +-perturbation per gene, and runs the short
    generation count.
    """
    if cfg is None:
        cfg = genetic.GaConfig()
    if cont is None:
        cont = ContinuityConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    geom = frames.geometry
    h, w = geom.height, geom.width
    pixels = frames.pixel_vectors()
    pixel_rngs = rng.spawn(h * w)

    theta = np.empty((h, w))
    axis = np.empty((h, w, 3))
    cost = np.empty((h, w))
    best_genes = np.empty((h, w, 4))
    d = cont.neighbor_radius

    for i in range(h):
        for j in range(w):
            prng = pixel_rngs[i * w + j]
            gens = cont.origin_generations if (i == 0 and j == 0) \
                else cont.generations
            initial = None
            if d >= 1 and (i, j) != (0, 0):
                pool = []
                for r in range(max(0, i - d), i + 1):
                    for c in range(max(0, j - d), min(w, j + d + 1)):
                        if r < i or c < j:
                            pool.append(best_genes[r, c])
                if pool:
                    initial = _seed_population(
                        np.array(pool), cfg.population, cont.perturbation,
                        prng,
                    )
            m = MeasurementSet.from_array(pixels[i, j])
            run_cfg = dataclasses.replace(cfg, generations=gens)
            res = genetic.run_ga(m, run_cfg, prng, initial=initial)
            theta[i, j] = res.params.theta
            axis[i, j] = res.params.n
            cost[i, j] = res.cost
            best_genes[i, j] = res.diagnostics["best_genes"]
    return ParamMap(theta, axis, geom, cost=cost)


def gauge_fix_map(pmap):
    """Flip pixels to the gauge representative closest to a fixed neighbor.

    Row-major scan; the reference is the left neighbor, or the pixel above
    on the first column. A pixel flips to (pi - theta, -n) only when that is
    strictly closer to the reference in Euclidean parameter distance.
    Idempotent, and blind to every pixel's fidelity.
    """
    h, w = pmap.theta.shape
    vec = np.concatenate([pmap.theta[..., None], pmap.axis], axis=-1)
    for i in range(h):
        for j in range(w):
            if i == 0 and j == 0:
                continue
            ref = vec[i, j - 1] if j > 0 else vec[i - 1, j]
            cur = vec[i, j]
            flip = np.empty(4)
            flip[0] = np.pi - cur[0]
            flip[1:] = -cur[1:]
            if np.sum((flip - ref) ** 2) < np.sum((cur - ref) ** 2):
                vec[i, j] = flip
    return ParamMap(
        vec[..., 0], vec[..., 1:], pmap.geometry,
        cost=None if pmap.cost is None else pmap.cost.copy(),
        fid=None if pmap.fid is None else pmap.fid.copy(),
    )


def reconstruct_map_nn(frames, model, codec=DEFAULT_CODEC):
    """Independent per-pixel network inference plus the gauge-fix pass."""
    geom = frames.geometry
    X = frames.pixel_vectors().reshape(-1, 6)
    theta, axis = codec.decode(forward_batch(model, X))
    raw = ParamMap(
        theta.reshape(geom.height, geom.width),
        axis.reshape(geom.height, geom.width, 3),
        geom,
    )
    return gauge_fix_map(raw)


def map_fidelity(a, b):
    """Per-pixel gate fidelity grid and its mean."""
    if a.theta.shape != b.theta.shape:
        raise GeometryError(
            f"geometry mismatch: {a.theta.shape} vs {b.theta.shape}"
        )
    grid = su2.quat_fidelity(a.quats(), b.quats())
    return grid, float(grid.mean())


def save_frameset(fs, directory):
    """Manifest plus six row-major CSV matrices named by label."""
    import os

    os.makedirs(directory, exist_ok=True)
    geom = fs.geometry
    with open(os.path.join(directory, "manifest.txt"), "w") as fh:
        fh.write(f"width = {geom.width}\n")
        fh.write(f"height = {geom.height}\n")
        fh.write(f"pitch_mm = {geom.pitch_mm:.12g}\n")
        fh.write(f"labels = {','.join(LABELS)}\n")
        for key in ("delta_deg", "seed", "spec"):
            if key in fs.meta and fs.meta[key] is not None:
                fh.write(f"{key} = {fs.meta[key]}\n")
    for k, lab in enumerate(LABELS):
        np.savetxt(
            os.path.join(directory, f"{lab}.csv"), fs.frames[k],
            delimiter=",", fmt="%.17g",
        )


def load_frameset(directory):
    """Read a frame-set directory, clamping slight out-of-range values."""
    import os

    manifest = {}
    path = os.path.join(directory, "manifest.txt")
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                key, _, value = line.partition("=")
                manifest[key.strip()] = value.strip()
    geom = GridGeometry(
        width=int(manifest["width"]),
        height=int(manifest["height"]),
        pitch_mm=float(manifest.get("pitch_mm", GridGeometry.pitch_mm)),
    )
    frames = np.empty((6, geom.height, geom.width))
    for k, lab in enumerate(LABELS):
        try:
            frames[k] = np.loadtxt(
                os.path.join(directory, f"{lab}.csv"), delimiter=","
            ).reshape(geom.height, geom.width)
        except ValueError as exc:
            raise NonPhysicalDataError(f"malformed frame {lab}.csv: {exc}")
    if np.any(frames < -CLAMP_SLACK) or np.any(frames > 1.0 + CLAMP_SLACK):
        raise NonPhysicalDataError(
            f"frame values in {directory} too far outside [0, 1]"
        )
    if np.any(frames < 0.0) or np.any(frames > 1.0):
        warnings.warn(
            "clamping out-of-range frame values into [0, 1]", stacklevel=2
        )
        frames = np.clip(frames, 0.0, 1.0)
    meta = {k: manifest[k] for k in ("delta_deg", "seed", "spec")
            if k in manifest}
    return FrameSet(frames, geom, meta=meta)


def save_param_map(pmap, path):
    """CSV with header x,y,theta,nx,ny,nz plus optional layers."""
    cols = ["x", "y", "theta", "nx", "ny", "nz"]
    if pmap.cost is not None:
        cols.append("cost")
    if pmap.fid is not None:
        cols.append("fidelity")
    h, w = pmap.theta.shape
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(h):
            for j in range(w):
                row = [str(j), str(i), f"{pmap.theta[i, j]:.17g}"]
                row += [f"{v:.17g}" for v in pmap.axis[i, j]]
                if pmap.cost is not None:
                    row.append(f"{pmap.cost[i, j]:.17g}")
                if pmap.fid is not None:
                    row.append(f"{pmap.fid[i, j]:.17g}")
                fh.write(",".join(row) + "\n")


def load_param_map(path, pitch_mm=None):
    """Inverse of save_param_map; geometry pitch defaults when absent."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise GeometryError(f"malformed parameter map {path}: {exc}")
    need = ["x", "y", "theta", "nx", "ny", "nz"]
    if header[: len(need)] != need:
        raise GeometryError(f"unexpected parameter-map header {header}")
    xs = data[:, 0].astype(int)
    ys = data[:, 1].astype(int)
    w, h = int(xs.max()) + 1, int(ys.max()) + 1
    if data.shape[0] != w * h:
        raise GeometryError("parameter map does not cover a full grid")
    if pitch_mm is None:
        pitch_mm = GridGeometry.pitch_mm
    geom = GridGeometry(width=w, height=h, pitch_mm=pitch_mm)
    theta = np.empty((h, w))
    axis = np.empty((h, w, 3))
    theta[ys, xs] = data[:, 2]
    axis[ys, xs] = data[:, 3:6]
    cost = fid = None
    extra = header[6:]
    if "cost" in extra:
        cost = np.empty((h, w))
        cost[ys, xs] = data[:, 6 + extra.index("cost")]
    if "fidelity" in extra:
        fid = np.empty((h, w))
        fid[ys, xs] = data[:, 6 + extra.index("fidelity")]
    return ParamMap(theta, axis, geom, cost=cost, fid=fid)
