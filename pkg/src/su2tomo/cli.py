"""Command-line interface: simulate, reconstruct, train, benchmark, fidelity.

Every verb accepts --seed (root of all randomness), --out (output path),
and --config FILE, a key-value text file whose keys mirror the verb's long
flag names (dashes or underscores); explicit flags override config values.

Exit codes: 0 success, 2 usage error, 3 I/O failure, 4 bad or non-physical
data, 5 numerical failure (training divergence, degenerate inversion).
"""

import argparse
import os
import sys

import numpy as np

from . import bench, classic, genetic, network, spatial, su2
from .errors import (
    CorruptModelError,
    DegenerateGateError,
    GeometryError,
    InvalidMatrixError,
    InvalidParameterError,
    MalformedModelError,
    ModelVersionError,
    NonPhysicalDataError,
    TrainingFailureError,
)
from .polarimetry import (
    MeasurementSet,
    NoiseModel,
    load_measurements,
    save_measurements,
    six_intensities_exact,
    six_intensities_noisy,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5

_DATA_ERRORS = (
    NonPhysicalDataError,
    GeometryError,
    InvalidParameterError,
    InvalidMatrixError,
    MalformedModelError,
    ModelVersionError,
    CorruptModelError,
)
_NUMERIC_ERRORS = (DegenerateGateError, TrainingFailureError)


class UsageError(Exception):
    pass


def _parse_grid(text):
    try:
        w_str, h_str = text.lower().split("x")
        w, h = int(w_str), int(h_str)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must look like 73x73, got {text!r}"
        )
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError(
            f"grid dimensions must be positive, got {text!r}"
        )
    return (w, h)


def _parse_gate(text):
    try:
        theta, nx, ny, nz = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"gate must be theta,nx,ny,nz, got {text!r}"
        )
    n = np.array([nx, ny, nz])
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise argparse.ArgumentTypeError("gate axis must be non-zero")
    if not 0.0 <= theta <= np.pi:
        raise argparse.ArgumentTypeError("theta must lie in [0, pi]")
    return su2.GateParams(theta, n / norm)


def _parse_float_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}")


def _parse_name_list(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _add(parser, registry, *names, **kw):
    is_flag = kw.get("action") == "store_true"
    action = parser.add_argument(*names, **kw)
    registry[action.dest] = "flag" if is_flag else kw.get("type", str)
    return action


def _build_parsers():
    top = argparse.ArgumentParser(
        prog="su2tomo",
        description="Reconstruct SU(2) polarization gates from six "
        "projective intensities.",
    )
    subs = top.add_subparsers(dest="verb", required=True)
    registries = {}

    def common(sub, reg):
        _add(sub, reg, "--seed", type=int, default=None,
             help="root seed for all randomness")
        _add(sub, reg, "--out", type=str, default=None, help="output path")
        _add(sub, reg, "--config", type=str, default=None,
             help="key-value file mirroring this verb's flags")

    sim = subs.add_parser("simulate", help="synthesize measurement data")
    reg = registries["simulate"] = {}
    common(sim, reg)
    _add(sim, reg, "--plate", type=str, default=None,
         help="plate stack, e.g. 'gx:pi' or 'w:pi/2,gx:pi,gy:pi/4'")
    _add(sim, reg, "--gate", type=_parse_gate, default=None,
         help="single gate theta,nx,ny,nz")
    _add(sim, reg, "--grid", type=_parse_grid, default=(73, 73),
         help="pixel grid WxH (default 73x73)")
    _add(sim, reg, "--pitch", type=float,
         default=spatial.GridGeometry.pitch_mm,
         help="pixel pitch in millimeters")
    _add(sim, reg, "--delta", type=float, default=0.0,
         help="waveplate jitter std in degrees")
    _add(sim, reg, "--per-pixel-noise", action="store_true",
         help="redraw jitter per pixel instead of per frame")
    sim.set_defaults(func=cmd_simulate)

    rec = subs.add_parser("reconstruct", help="fit gates to measured data")
    reg = registries["reconstruct"] = {}
    common(rec, reg)
    _add(rec, reg, "--in", dest="input", type=str, required=True,
         help="measurement file or frame-set directory")
    _add(rec, reg, "--engine", type=str, default="ga",
         choices=("analytic", "baseline", "ga", "nn"))
    _add(rec, reg, "--model", type=str, default=None,
         help="trained model file (nn engine)")
    _add(rec, reg, "--restarts", type=int, default=1,
         help="baseline engine restarts")
    _add(rec, reg, "--generations", type=int, default=60,
         help="GA generations (single gate / first pixel)")
    _add(rec, reg, "--pixel-generations", type=int, default=10,
         help="GA generations at seeded pixels")
    _add(rec, reg, "--neighbor-radius", type=int, default=2,
         help="seeding neighborhood Chebyshev radius (0 disables)")
    _add(rec, reg, "--perturbation", type=float, default=0.2,
         help="seed jitter half-width per gene")
    _add(rec, reg, "--truth-plate", type=str, default=None,
         help="plate stack to score the map against")
    _add(rec, reg, "--truth-gate", type=_parse_gate, default=None,
         help="gate theta,nx,ny,nz to score a single fit against")
    rec.set_defaults(func=cmd_reconstruct)

    tr = subs.add_parser("train", help="train the network engine")
    reg = registries["train"] = {}
    common(tr, reg)
    _add(tr, reg, "--desk", action="store_true",
         help="reduced schedule for quick runs")
    _add(tr, reg, "--log", type=str, default=None,
         help="training-log CSV path (default: <out>.log.csv)")
    _add(tr, reg, "--quiet", action="store_true",
         help="suppress per-epoch progress lines")
    tr.set_defaults(func=cmd_train)

    bm = subs.add_parser("benchmark", help="compare engines on random gates")
    reg = registries["benchmark"] = {}
    common(bm, reg)
    _add(bm, reg, "--gates", type=int, default=1000,
         help="number of random gates")
    _add(bm, reg, "--deltas", type=_parse_float_list,
         default=(0.0, 1.0, 2.0, 5.0), help="jitter levels in degrees")
    _add(bm, reg, "--engines", type=_parse_name_list,
         default=("baseline", "ga", "nn"),
         help="comma-separated engine names")
    _add(bm, reg, "--model", type=str, default=None,
         help="trained model file (nn engine)")
    _add(bm, reg, "--restarts", type=int, default=1,
         help="baseline engine restarts")
    _add(bm, reg, "--ga-repeats", type=int, default=1,
         help="independent GA runs per gate, best kept")
    _add(bm, reg, "--hist-csv", type=str, default=None,
         help="write log-binned infidelity histograms here")
    _add(bm, reg, "--svg", type=str, default=None,
         help="render histogram bar charts here")
    _add(bm, reg, "--quiet", action="store_true",
         help="suppress progress lines")
    bm.set_defaults(func=cmd_benchmark)

    fid = subs.add_parser("fidelity", help="compare two parameter maps")
    reg = registries["fidelity"] = {}
    common(fid, reg)
    _add(fid, reg, "maps", nargs=2, metavar="MAP_CSV",
         help="two parameter-map CSV files")
    fid.set_defaults(func=cmd_fidelity)

    return top, {name: sub for name, sub in
                 ((n, subs.choices[n]) for n in subs.choices)}, registries


def _scan_config(argv, verbs):
    verb = None
    config = None
    for i, tok in enumerate(argv):
        if verb is None and not tok.startswith("-") and tok in verbs:
            verb = tok
        if tok == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif tok.startswith("--config="):
            config = tok.split("=", 1)[1]
    return verb, config


def _apply_config(path, sub, registry):
    overrides = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line is not key=value: {raw!r}")
            key, _, value = line.partition("=")
            dest = key.strip().replace("-", "_")
            value = value.strip()
            if dest not in registry:
                raise UsageError(f"unknown config key {key.strip()!r}")
            conv = registry[dest]
            if conv == "flag":
                overrides[dest] = value.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    overrides[dest] = conv(value)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"bad config value for {key!r}: {exc}")
    sub.set_defaults(**overrides)


def cmd_simulate(args):
    if (args.plate is None) == (args.gate is None):
        raise UsageError("exactly one of --plate or --gate is required")
    if args.out is None:
        raise UsageError("--out is required")
    rng = np.random.default_rng(args.seed)
    noise = NoiseModel(delta_deg=args.delta)
    if args.plate is not None:
        try:
            spec = spatial.PlateSpec.parse(args.plate)
        except ValueError as exc:
            raise UsageError(str(exc))
        w, h = args.grid
        geom = spatial.GridGeometry(width=w, height=h, pitch_mm=args.pitch)
        fs = spatial.simulate_frames(
            spec, geom, noise, rng, per_pixel_noise=args.per_pixel_noise
        )
        fs.meta["seed"] = args.seed
        spatial.save_frameset(fs, args.out)
        print(
            f"wrote {geom.width}x{geom.height} frame set "
            f"(jitter {args.delta:g} deg) to {args.out}"
        )
    else:
        if args.delta > 0:
            m = six_intensities_noisy(args.gate, noise, rng=rng)
        else:
            m = six_intensities_exact(args.gate)
        save_measurements(m, args.out)
        print(f"wrote six intensities to {args.out}")
    return EXIT_OK


def _single_gate_reconstruct(args):
    m = load_measurements(args.input)
    rng = np.random.default_rng(args.seed)
    if args.engine == "analytic":
        params = classic.invert_six(m)
        extra = ""
    elif args.engine == "baseline":
        cfg = classic.BaselineConfig(restarts=args.restarts)
        res = classic.minimize_likelihood(m, cfg, rng=rng)
        params, extra = res.params, f"  cost {res.cost:.3e}"
    elif args.engine == "ga":
        cfg = genetic.GaConfig(generations=args.generations)
        res = genetic.run_ga(m, cfg, rng=rng)
        params, extra = res.params, f"  cost {res.cost:.3e}"
    else:
        if args.model is None:
            raise UsageError("--model is required with --engine nn")
        model = network.load_model(args.model)
        params = network.forward(model, m)
        extra = ""
    print(
        f"theta {params.theta:.9f}  n ({params.n[0]:+.9f}, "
        f"{params.n[1]:+.9f}, {params.n[2]:+.9f}){extra}"
    )
    if args.truth_gate is not None:
        f = su2.fidelity(
            su2.gate_matrix(args.truth_gate), su2.gate_matrix(params)
        )
        print(f"fidelity vs truth {f:.9f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(
                f"{params.theta:.17g},{params.n[0]:.17g},"
                f"{params.n[1]:.17g},{params.n[2]:.17g}\n"
            )
        print(f"wrote parameters to {args.out}")
    return EXIT_OK


def _frameset_reconstruct(args):
    fs = spatial.load_frameset(args.input)
    rng = np.random.default_rng(args.seed)
    if args.engine == "ga":
        cont = spatial.ContinuityConfig(
            neighbor_radius=args.neighbor_radius,
            perturbation=args.perturbation,
            origin_generations=args.generations,
            generations=args.pixel_generations,
        )
        pmap = spatial.reconstruct_map_ga(
            fs, genetic.GaConfig(), cont, rng
        )
    elif args.engine == "nn":
        if args.model is None:
            raise UsageError("--model is required with --engine nn")
        model = network.load_model(args.model)
        pmap = spatial.reconstruct_map_nn(fs, model)
    else:
        pixels = fs.pixel_vectors()
        h, w = fs.geometry.height, fs.geometry.width
        theta = np.empty((h, w))
        axis = np.empty((h, w, 3))
        cost = np.empty((h, w))
        for i in range(h):
            for j in range(w):
                m = MeasurementSet.from_array(pixels[i, j])
                if args.engine == "analytic":
                    p = classic.invert_six(m)
                    cost[i, j] = 0.0
                else:
                    cfg = classic.BaselineConfig(restarts=args.restarts)
                    res = classic.minimize_likelihood(m, cfg, rng=rng)
                    p, cost[i, j] = res.params, res.cost
                theta[i, j] = p.theta
                axis[i, j] = p.n
        pmap = spatial.ParamMap(theta, axis, fs.geometry, cost=cost)
    mean_cost = None if pmap.cost is None else float(pmap.cost.mean())
    summary = f"reconstructed {fs.geometry.width}x{fs.geometry.height} map"
    if mean_cost is not None:
        summary += f"  mean cost {mean_cost:.3e}"
    if args.truth_plate is not None:
        try:
            spec = spatial.PlateSpec.parse(args.truth_plate)
        except ValueError as exc:
            raise UsageError(str(exc))
        grid, mean = spatial.map_fidelity(
            pmap, spatial.truth_map(spec, fs.geometry)
        )
        pmap.fid = grid
        summary += f"  mean fidelity {mean:.6f}"
    print(summary)
    if args.out:
        spatial.save_param_map(pmap, args.out)
        print(f"wrote parameter map to {args.out}")
    return EXIT_OK


def cmd_reconstruct(args):
    if os.path.isdir(args.input):
        return _frameset_reconstruct(args)
    return _single_gate_reconstruct(args)


def cmd_train(args):
    if args.out is None:
        raise UsageError("--out is required")
    if args.desk:
        cfg = network.TrainConfig.desk(seed=args.seed)
    else:
        cfg = network.TrainConfig(seed=args.seed)
    progress = None
    if not args.quiet:
        def progress(row):
            print(
                f"epoch {row['epoch']:3d}  train {row['train_mse']:.3e}  "
                f"val {row['val_mse']:.3e}  lr {row['learning_rate']:.1e}"
            )
    log_path = args.log or args.out + ".log.csv"
    try:
        model, log = network.train(cfg, progress=progress)
    except TrainingFailureError as exc:
        if exc.log:
            network.save_training_log(exc.log, log_path)
            print(f"wrote partial log to {log_path}", file=sys.stderr)
        raise
    network.save_model(model, args.out)
    network.save_training_log(log, log_path)
    print(f"wrote model to {args.out} and log to {log_path}")
    return EXIT_OK


def cmd_benchmark(args):
    engines = args.engines
    model = None
    if "nn" in engines:
        if args.model is None:
            raise UsageError("--model is required when engines include nn")
        model = network.load_model(args.model)
    plan = bench.BenchmarkPlan(
        n_gates=args.gates,
        deltas=args.deltas,
        engines=engines,
        seed=args.seed,
        ga_repeats=args.ga_repeats,
        baseline=classic.BaselineConfig(restarts=args.restarts),
    )
    progress = None
    if not args.quiet:
        def progress(e):
            print(
                f"{e.engine:9s} jitter {e.delta_deg:4.1f} deg  "
                f"mean infid {e.mean_infidelity:.3e}  "
                f"tail {e.tail_fraction:.3f}  "
                f"median {e.median_time * 1e3:.3f} ms"
            )
    report = bench.run_benchmark(plan, model=model, progress=progress)
    out = args.out or "benchmark_report.csv"
    bench.write_report_csv(report, out)
    print(f"wrote report to {out}")
    if args.hist_csv:
        bench.write_histogram_csv(report, args.hist_csv)
        print(f"wrote histograms to {args.hist_csv}")
    if args.svg:
        bench.render_histogram_svg(report, args.svg)
        print(f"wrote plot to {args.svg}")
    return EXIT_OK


def cmd_fidelity(args):
    a = spatial.load_param_map(args.maps[0])
    b = spatial.load_param_map(args.maps[1])
    grid, mean = spatial.map_fidelity(a, b)
    print(f"mean fidelity {mean:.9f}")
    if args.out:
        h, w = grid.shape
        with open(args.out, "w") as fh:
            fh.write("x,y,fidelity\n")
            for i in range(h):
                for j in range(w):
                    fh.write(f"{j},{i},{grid[i, j]:.17g}\n")
        print(f"wrote per-pixel fidelity to {args.out}")
    return EXIT_OK


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    top, subs, registries = _build_parsers()
    try:
        verb, config = _scan_config(argv, subs)
        if config is not None:
            if verb is None:
                raise UsageError("--config requires a verb")
            _apply_config(config, subs[verb], registries[verb])
        args = top.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
