"""Benchmark sweeps comparing reconstruction engines on random gates.

A plan fixes the gate count, the waveplate-jitter levels, and the engine
list; the run samples one shared set of random gates, produces one shared
noisy measurement set per jitter level, feeds the identical inputs to every
engine, and collects fidelity and wall-time statistics per reconstruction.
All randomness flows from a single root seed through labeled sub-streams so
repeated runs are bit-identical and engines never see different data.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import classic, genetic, network, su2
from .errors import InvalidParameterError
from .polarimetry import MeasurementSet, NoiseModel, noisy_six_from_quats

KNOWN_ENGINES = ("baseline", "ga", "nn")

REPORT_COLUMNS = (
    "engine", "delta_deg", "mean_infidelity", "fidelity_std",
    "tail_frac_gt_0p1", "median_time_s", "n",
)
HISTOGRAM_COLUMNS = ("engine", "delta_deg", "bin_lo", "bin_hi", "count")
TAIL_THRESHOLD = 0.1
HISTOGRAM_BINS = np.logspace(-8.0, 0.0, 41)


@dataclass
class BenchmarkPlan:
    """What to run: engines x jitter levels on a shared gate set."""

    n_gates: int = 1000
    deltas: tuple = (0.0, 1.0, 2.0, 5.0)
    engines: tuple = ("baseline", "ga", "nn")
    seed: int | None = None
    ga_repeats: int = 1
    baseline: classic.BaselineConfig = field(
        default_factory=classic.BaselineConfig
    )
    ga: genetic.GaConfig = field(default_factory=genetic.GaConfig)

    def __post_init__(self):
        self.deltas = tuple(float(d) for d in self.deltas)
        self.engines = tuple(self.engines)
        if self.n_gates < 1:
            raise InvalidParameterError("n_gates must be positive")
        if self.ga_repeats < 1:
            raise InvalidParameterError("ga_repeats must be positive")
        if not self.engines:
            raise InvalidParameterError("engine list must be non-empty")
        for eng in self.engines:
            if eng not in KNOWN_ENGINES:
                raise InvalidParameterError(
                    f"unknown engine {eng!r}; known: {KNOWN_ENGINES}"
                )
        if any(d < 0 for d in self.deltas):
            raise InvalidParameterError("jitter levels must be >= 0")


@dataclass
class EngineStats:
    """Fidelity and timing samples for one engine at one jitter level."""

    engine: str
    delta_deg: float
    fidelities: np.ndarray
    times: np.ndarray

    @property
    def mean_infidelity(self):
        return float(np.mean(1.0 - self.fidelities))

    @property
    def fidelity_std(self):
        return float(np.std(self.fidelities))

    @property
    def tail_fraction(self):
        return float(np.mean(1.0 - self.fidelities > TAIL_THRESHOLD))

    @property
    def median_time(self):
        return float(np.median(self.times))


@dataclass
class BenchmarkReport:
    plan: BenchmarkPlan
    entries: list

    def stats(self, engine, delta_deg):
        for e in self.entries:
            if e.engine == engine and e.delta_deg == float(delta_deg):
                return e
        raise KeyError(f"no entry for ({engine}, {delta_deg})")


def _reconstruct_baseline(six, cfg, rng):
    m = MeasurementSet.from_array(six)
    res = classic.minimize_likelihood(m, cfg, rng=rng)
    return res.params


def _reconstruct_ga(six, cfg, repeats, rng):
    m = MeasurementSet.from_array(six)
    best = None
    for _ in range(repeats):
        res = genetic.run_ga(m, cfg, rng=rng)
        if best is None or res.cost < best.cost:
            best = res
    return best.params


def _reconstruct_nn(six, model):
    m = MeasurementSet.from_array(six)
    return network.forward(model, m)


def run_benchmark(plan, model=None, progress=None):
    """Execute a plan; returns a report with raw per-gate samples.

    The root seed feeds three labeled sub-streams (gate sampling, noise
    draws, engine randomness); engine randomness is further split per
    jitter level and per gate, so the sequential loop order never leaks
    into any other engine's inputs.
    """
    if "nn" in plan.engines and model is None:
        raise InvalidParameterError("nn engine requires a trained model")
    root = np.random.SeedSequence(plan.seed)
    gates_ss, noise_ss, engine_ss = root.spawn(3)

    truth = su2.sample_haar_quats(
        np.random.default_rng(gates_ss), plan.n_gates
    )
    noise_children = noise_ss.spawn(len(plan.deltas))
    # Engine streams are indexed by the engine's fixed position in
    # KNOWN_ENGINES, not its position in the plan, so dropping an engine
    # from the list never shifts another engine's randomness.
    engine_children = engine_ss.spawn(len(KNOWN_ENGINES) * len(plan.deltas))

    entries = []
    for di, delta in enumerate(plan.deltas):
        noisy = noisy_six_from_quats(
            truth, NoiseModel(delta_deg=delta),
            np.random.default_rng(noise_children[di]),
        )
        for engine in plan.engines:
            ei = KNOWN_ENGINES.index(engine)
            gate_rngs = np.random.default_rng(
                engine_children[ei * len(plan.deltas) + di]
            ).spawn(plan.n_gates)
            fids = np.empty(plan.n_gates)
            times = np.empty(plan.n_gates)
            for g in range(plan.n_gates):
                t0 = time.perf_counter()
                if engine == "baseline":
                    params = _reconstruct_baseline(
                        noisy[g], plan.baseline, gate_rngs[g]
                    )
                elif engine == "ga":
                    params = _reconstruct_ga(
                        noisy[g], plan.ga, plan.ga_repeats, gate_rngs[g]
                    )
                else:
                    params = _reconstruct_nn(noisy[g], model)
                times[g] = time.perf_counter() - t0
                fids[g] = su2.quat_fidelity(
                    truth[g], su2.params_to_quat(params)
                )
            entries.append(EngineStats(engine, delta, fids, times))
            if progress is not None:
                progress(entries[-1])
    return BenchmarkReport(plan, entries)


def write_report_csv(report, path):
    """One row per (engine, jitter level) with summary statistics."""
    with open(path, "w") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for e in report.entries:
            fh.write(
                f"{e.engine},{e.delta_deg:.17g},{e.mean_infidelity:.17g},"
                f"{e.fidelity_std:.17g},{e.tail_fraction:.17g},"
                f"{e.median_time:.17g},{e.fidelities.size}\n"
            )


def histogram_counts(stats, bins=HISTOGRAM_BINS):
    """Log-binned infidelity counts; values are clipped into the range."""
    infid = np.clip(1.0 - stats.fidelities, bins[0], bins[-1])
    counts, _ = np.histogram(infid, bins=bins)
    return counts


def write_histogram_csv(report, path, bins=HISTOGRAM_BINS):
    with open(path, "w") as fh:
        fh.write(",".join(HISTOGRAM_COLUMNS) + "\n")
        for e in report.entries:
            counts = histogram_counts(e, bins)
            for b in range(counts.size):
                fh.write(
                    f"{e.engine},{e.delta_deg:.17g},{bins[b]:.17g},"
                    f"{bins[b + 1]:.17g},{counts[b]}\n"
                )


def render_histogram_svg(report, path, bins=HISTOGRAM_BINS):
    """Self-contained SVG bar charts, one panel per (engine, jitter).

    Emission is presentation-only: it reads the same counts the CSV
    records and never feeds anything back into the report.
    """
    panel_w, panel_h, margin = 420, 150, 40
    n_panels = len(report.entries)
    width = panel_w + 2 * margin
    height = n_panels * (panel_h + margin) + margin
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for idx, e in enumerate(report.entries):
        counts = histogram_counts(e, bins)
        top = margin + idx * (panel_h + margin)
        peak = max(int(counts.max()), 1)
        bar_w = panel_w / counts.size
        parts.append(
            f'<text x="{margin}" y="{top - 6}">'
            f'{e.engine} at jitter {e.delta_deg:g} deg '
            f'(n={e.fidelities.size}, mean infid '
            f'{e.mean_infidelity:.3g})</text>'
        )
        parts.append(
            f'<rect x="{margin}" y="{top}" width="{panel_w}" '
            f'height="{panel_h}" fill="none" stroke="black"/>'
        )
        for b, count in enumerate(counts):
            if count == 0:
                continue
            h = panel_h * count / peak
            x = margin + b * bar_w
            parts.append(
                f'<rect x="{x:.2f}" y="{top + panel_h - h:.2f}" '
                f'width="{bar_w:.2f}" height="{h:.2f}" fill="#4477aa"/>'
            )
        for decade in range(-8, 1, 2):
            frac = (decade - (-8)) / 8.0
            x = margin + frac * panel_w
            parts.append(
                f'<text x="{x:.2f}" y="{top + panel_h + 14}" '
                f'text-anchor="middle">1e{decade}</text>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
