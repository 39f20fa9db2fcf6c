"""Command-line entry point.

Four subcommands drive the pipeline from a key = value config file:

  ilc          learn a scan trajectory, write history and trajectory CSVs
  optimize     sweep the amplitude x period grid, write table/summary/PGM
  simdemo      1-D band-separation demo, write signal and spectra CSVs
  reconstruct  capture a synthetic scene and super-resolve it

All float CSV output uses 17 significant digits so identical configs
reproduce byte-identical files. The last stdout line of a successful run
is a manifest naming every file written.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import (
    ExperimentConfig,
    REQUIRED,
    build_geometry,
    build_law,
    build_limits,
    build_model_plant,
    build_scan_params,
    build_world_plant,
    load_config,
)
from .errors import (
    ConfigurationError,
    DivergenceError,
    EmptyFeasibleSetError,
    IllConditionedBandError,
    NoResolvableFrequencyError,
    ScanOptError,
    SingularMixingError,
    SingularModelError,
)
from .ilc import run_ilc, tracked_output, write_history_csv, write_trajectory_csv
from .imaging import (
    ls_recon,
    make_capture_set,
    measure_improvement,
    sim_demodulate_1d,
    synth_scene,
    upsample_replicate,
    write_capture_set,
    write_pgm,
)
from .optimizer import Scenario, evaluate_candidate_artifacts, candidate_params, optimize, write_table_csv
from .scan import gen_periodic_trajectory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_EMPTY_FEASIBLE = 4

DEFAULT_PHASES = (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _manifest(paths):
    print("manifest: " + " ".join(str(p) for p in paths))


def _n_periods(cfg: ExperimentConfig) -> int:
    n = cfg.get_int("scan.n_periods", 2)
    if n < 1:
        raise ConfigurationError(f"scan.n_periods must be >= 1, got {n}")
    return n


def _ilc_settings(cfg: ExperimentConfig):
    tol = cfg.get_float("ilc.tol", 1e-3)
    if tol <= 0:
        raise ConfigurationError(f"ilc.tol must be positive, got {tol}")
    model_iters = cfg.get_int("ilc.max_model_iters", 30)
    hw_iters = cfg.get_int("ilc.max_hw_iters", 30)
    if model_iters < 0 or hw_iters < 0:
        raise ConfigurationError("ilc iteration budgets must be >= 0")
    return tol, model_iters, hw_iters, cfg.get_float("ilc.filter_cutoff"), cfg.get_float("ilc.saturation")


def cmd_ilc(cfg: ExperimentConfig, out: str) -> int:
    model = build_model_plant(cfg)
    world = build_world_plant(cfg)
    law = build_law(cfg)
    params = build_scan_params(cfg, model.dt)
    tol, model_iters, hw_iters, filter_cutoff, saturation = _ilc_settings(cfg)

    desired = gen_periodic_trajectory(params, _n_periods(cfg) * params.period)
    history = run_ilc(
        law, model, world, desired, tol, model_iters, hw_iters,
        filter_cutoff=filter_cutoff, world_saturation=saturation,
    )
    command = history.records[-1].command
    achieved = tracked_output(world, command, saturation)

    history_path = os.path.join(out, "ilc_history.csv")
    trajectory_path = os.path.join(out, "ilc_trajectory.csv")
    write_history_csv(history_path, history)
    write_trajectory_csv(trajectory_path, command, desired, achieved)

    print(f"converged = {'true' if history.converged else 'false'}")
    print(f"hardware_iterations = {history.hardware_iterations}")
    print(f"final_rms = {_fmt(history.records[-1].rms_error)}")
    _manifest([history_path, trajectory_path])
    return EXIT_OK


def _build_scenario(cfg: ExperimentConfig) -> Scenario:
    tol, model_iters, hw_iters, filter_cutoff, saturation = _ilc_settings(cfg)
    return Scenario(
        model_plant=build_model_plant(cfg),
        world_plant=build_world_plant(cfg),
        law=build_law(cfg),
        limits=build_limits(cfg),
        geometry=build_geometry(cfg),
        q=cfg.get_int("imaging.q", 2),
        captures=cfg.get_int("scan.captures", 4),
        scene_kind=cfg.get_choice("imaging.scene", ("bars", "terrain"), "bars"),
        scene_size=cfg.get_int("imaging.size", 128),
        scene_seed=cfg.get_int("imaging.scene_seed", 0),
        noise_sigma=cfg.get_float("imaging.noise_sigma", 0.0),
        tol=tol,
        max_model_iters=model_iters,
        max_hw_iters=hw_iters,
        filter_cutoff=filter_cutoff,
        world_saturation=saturation,
        n_periods=_n_periods(cfg),
        ls_lambda=cfg.get_float("imaging.lambda", 1e-3),
        max_cg_iters=cfg.get_int("imaging.max_cg_iters", 200),
        shift_error_std=cfg.get_float("optimize.shift_error_std", 0.0),
        seed=cfg.get_int("seed", 0),
    )


def cmd_optimize(cfg: ExperimentConfig, out: str) -> int:
    scenario = _build_scenario(cfg)
    amplitudes = cfg.get_float_list("optimize.amplitudes", REQUIRED)
    periods = cfg.get_int_list("optimize.periods", REQUIRED)
    result = optimize(scenario, amplitudes, periods)

    table_path = os.path.join(out, "optimize_table.csv")
    write_table_csv(table_path, result.table)

    best = result.best_score
    _, artifacts = evaluate_candidate_artifacts(
        candidate_params(scenario, best.amplitude, best.period), scenario
    )
    best_pgm = os.path.join(out, "optimize_best.pgm")
    write_pgm(best_pgm, artifacts["recon"])

    summary_path = os.path.join(out, "optimize_summary.txt")
    feasible = sum(1 for r in result.table if r.feasible)
    with open(summary_path, "w") as f:
        f.write(
            "\n".join(
                [
                    f"grid = {len(amplitudes)} amplitudes x {len(periods)} periods",
                    f"feasible = {feasible} of {len(result.table)}",
                    f"best_amplitude = {_fmt(best.amplitude)}",
                    f"best_period = {best.period}",
                    f"best_factor = {_fmt(best.factor)}",
                    f"best_rmse_recon = {_fmt(best.rmse_recon)}",
                    f"best_tracking_rms = {_fmt(best.tracking_rms)}",
                    f"best_hw_iterations = {best.hw_iterations}",
                ]
            )
            + "\n"
        )

    print(f"best_amplitude = {_fmt(best.amplitude)}")
    print(f"best_period = {best.period}")
    print(f"best_factor = {_fmt(best.factor)}")
    _manifest([table_path, best_pgm, summary_path])
    return EXIT_OK


def _demo_signal(M: int, fmax: float, seed: int) -> np.ndarray:
    """Seeded real signal with spectral support out to fmax exactly."""
    rng = np.random.default_rng(seed)
    freqs = np.fft.fftfreq(M)
    spectrum = np.zeros(M, dtype=complex)
    keep = np.abs(freqs) <= fmax + 1e-12
    spectrum[keep] = rng.standard_normal(keep.sum()) + 1j * rng.standard_normal(keep.sum())
    s = np.fft.ifft(spectrum).real
    return s / np.max(np.abs(s))


def _support_limit(signal: np.ndarray) -> float:
    spectrum = np.abs(np.fft.fft(signal))
    freqs = np.abs(np.fft.fftfreq(signal.size))
    mask = spectrum > 1e-8 * spectrum.max()
    return float(freqs[mask].max())


def cmd_simdemo(cfg: ExperimentConfig, out: str) -> int:
    M = cfg.get_int("simdemo.length", 256)
    if M < 8:
        raise ConfigurationError(f"simdemo.length must be >= 8, got {M}")
    f0 = cfg.get_float("simdemo.f0", 0.125)
    fc = cfg.get_float("simdemo.fc", 0.125)
    depth = cfg.get_float("simdemo.m", 1.0)
    phases = cfg.get_float_list("simdemo.phases", DEFAULT_PHASES)
    if len(phases) != 3:
        raise ConfigurationError("simdemo.phases must list exactly three values")
    seed = cfg.get_int("simdemo.signal_seed", 0)

    s = _demo_signal(M, fc + f0, seed)
    x = np.arange(M)
    freqs = np.fft.fftfreq(M)
    passband = np.abs(freqs) <= fc + 1e-12
    exposures = [
        np.fft.ifft(np.where(passband, np.fft.fft(s * (1.0 + depth * np.cos(2.0 * np.pi * f0 * x + p))), 0.0)).real
        for p in phases
    ]
    recovered = sim_demodulate_1d(*exposures, f0=f0, phases=phases, m=depth, fc=fc)
    factor = _support_limit(recovered) / _support_limit(exposures[0])

    signals_path = os.path.join(out, "simdemo_signals.csv")
    lines = ["k,s,y0,y1,y2,recovered"]
    for k in range(M):
        lines.append(
            ",".join(
                [str(k), _fmt(s[k])]
                + [_fmt(y[k]) for y in exposures]
                + [_fmt(recovered[k])]
            )
        )
    with open(signals_path, "w") as f:
        f.write("\n".join(lines) + "\n")

    spectra_path = os.path.join(out, "simdemo_spectra.csv")
    rbins = np.fft.rfftfreq(M)
    mag = lambda v: np.abs(np.fft.rfft(v))
    s_mag, y0_mag, rec_mag = mag(s), mag(exposures[0]), mag(recovered)
    lines = ["freq,s_mag,y0_mag,recovered_mag"]
    for i in range(rbins.size):
        lines.append(",".join([_fmt(rbins[i]), _fmt(s_mag[i]), _fmt(y0_mag[i]), _fmt(rec_mag[i])]))
    with open(spectra_path, "w") as f:
        f.write("\n".join(lines) + "\n")

    print(f"max_abs_error = {_fmt(np.max(np.abs(recovered - s)))}")
    print(f"extension_factor = {_fmt(factor)}")
    _manifest([signals_path, spectra_path])
    return EXIT_OK


def cmd_reconstruct(cfg: ExperimentConfig, out: str) -> int:
    kind = cfg.get_choice("imaging.scene", ("bars", "terrain"), "bars")
    size = cfg.get_int("imaging.size", 128)
    scene = synth_scene(kind, size, cfg.get_int("imaging.scene_seed", 0))
    shifts = cfg.get_shift_pairs("reconstruct.shifts")
    q = cfg.get_int("imaging.q", 2)
    cs = make_capture_set(
        scene, shifts, q,
        noise_sigma=cfg.get_float("imaging.noise_sigma", 0.0),
        seed=cfg.get_int("seed", 0),
    )
    recon = ls_recon(
        cs,
        lam=cfg.get_float("imaging.lambda", 1e-3),
        max_cg_iters=cfg.get_int("imaging.max_cg_iters", 200),
    )
    single = upsample_replicate(cs.frames[0], q)

    capture_paths = write_capture_set(os.path.join(out, "captures"), cs)
    recon_path = os.path.join(out, "recon.pgm")
    single_path = os.path.join(out, "single.pgm")
    write_pgm(recon_path, recon)
    write_pgm(single_path, single)

    rmse = float(np.sqrt(np.mean((recon.data - scene.data) ** 2)))
    print(f"rmse = {_fmt(rmse)}")
    if kind == "bars":
        try:
            print(f"improvement_factor = {_fmt(measure_improvement(recon, single).factor)}")
        except NoResolvableFrequencyError:
            print("improvement_factor = 0 (no resolvable frequency)")
    _manifest(capture_paths + [recon_path, single_path])
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scanopt",
        description="Scan-trajectory learning and super-resolution experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (
        ("ilc", cmd_ilc),
        ("optimize", cmd_optimize),
        ("simdemo", cmd_simdemo),
        ("reconstruct", cmd_reconstruct),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the config's master seed")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        os.makedirs(args.out, exist_ok=True)
        return args.func(cfg, args.out)
    except ConfigurationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, SingularMixingError, SingularModelError, IllConditionedBandError) as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except EmptyFeasibleSetError as err:
        print(f"optimization failed: {err}", file=sys.stderr)
        return EXIT_EMPTY_FEASIBLE
    except ScanOptError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


def entry():
    sys.exit(main(sys.argv[1:]))
