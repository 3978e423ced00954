"""Command-line interface: ``gridframe synth|transform|estimate|diagnose|demo``.

Exit codes: 0 success, 2 validation error, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as gio
from .adaptive import DEFAULT_MU, WlarState, run_pipeline
from .diagnostics import DEFAULT_THRESHOLD, circularity, classify
from .errors import ConfigError, DivergenceError, ImbalanceOverflowError
from .scenario import scenario_from_dict
from .signal_model import (FrequencyEvent, PhasorVector, SagSpec, SampleSeries,
                           ThreePhaseConfig, apply_sag, phasor_vector, synth)
from .subspace import eigen3, empirical_covariance, rank_estimate
from .transforms import (clarke_complex, clarke_full, clarke_reduced,
                         park, sequence_from_waveform, symmetrical)

EXIT_OK, EXIT_VALIDATION, EXIT_DIVERGENCE = 0, 2, 3


@contextlib.contextmanager
def _open_in(path: str | None):
    if path in (None, "-"):
        yield sys.stdin
    else:
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
        with fh:
            yield fh


@contextlib.contextmanager
def _open_out(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="\n") as fh:
            yield fh


def _rng() -> np.random.Generator:
    seed = os.environ.get("GRIDFRAME_SEED")
    if seed is None:
        return np.random.default_rng()
    try:
        return np.random.default_rng(int(seed))
    except ValueError:
        raise ConfigError(f"GRIDFRAME_SEED must be an integer, got {seed!r}") from None


def _load_config(path: str) -> ThreePhaseConfig:
    with _open_in(path) as fh:
        d = gio.load_json(fh, path)
    return gio.config_from_dict(d["config"] if isinstance(d, dict) and "config" in d else d)


def _dump_json(fh, obj) -> None:
    json.dump(obj, fh, indent=2, sort_keys=False)
    fh.write("\n")


def _nominal(args) -> tuple[float | None, float | None]:
    """(sample_rate, nominal frequency) from --config or explicit flags."""
    fs = f0 = None
    if getattr(args, "config", None):
        cfg = _load_config(args.config)
        fs, f0 = cfg.sample_rate, cfg.base_frequency
    if getattr(args, "sample_rate", None) is not None:
        fs = args.sample_rate
    if getattr(args, "frequency", None) is not None:
        f0 = args.frequency
    return fs, f0


def cmd_synth(args) -> int:
    with _open_in(args.config) as fh:
        sc = scenario_from_dict(gio.load_json(fh, args.config or "stdin"))
    n = args.duration if args.duration is not None else sc.duration
    if n <= 0:
        raise ConfigError(f"duration must be positive, got {n}")
    s = synth(sc.config, n, rng=_rng())
    with _open_out(args.output) as out:
        gio.write_samples(out, s)
    return EXIT_OK


def _estimate_phasors(s: SampleSeries, fs: float, f0: float) -> PhasorVector:
    """RMS phasors by projecting each phase onto exp(j omega0 k) over whole periods."""
    w0 = 2 * np.pi * f0 / fs
    period = 2 * np.pi / w0
    n = len(s)
    whole = int(np.floor(n / period) * period + 1e-9) if n >= period else n
    whole = max(whole, 1)
    x = s.samples[:whole]
    k = s.k[:whole]
    return PhasorVector(np.sqrt(2.0) / whole * (np.exp(-1j * w0 * k) @ x))


def _write(out, fmt: str | None, header, columns) -> None:
    if fmt == "json":
        cols = [np.asarray(c).tolist() for c in columns]
        _dump_json(out, {name: col for name, col in zip(header, cols)})
    else:
        gio.write_table(out, header, columns)


def cmd_transform(args) -> int:
    which = args.which
    if which == "symmetrical" and args.format == "csv":
        raise ConfigError("symmetrical output is JSON only")
    if which == "symmetrical":
        if args.input is None and args.config:
            pv = phasor_vector(_load_config(args.config))
        else:
            fs, f0 = _nominal(args)
            if fs is None or f0 is None:
                raise ConfigError("symmetrical on a sample CSV needs --config or "
                                  "--sample-rate and --frequency")
            with _open_in(args.input) as fh:
                pv = _estimate_phasors(gio.read_samples(fh), fs, f0)
        seq = symmetrical(pv)
        with _open_out(args.output) as out:
            _dump_json(out, seq.as_dict())
        return EXIT_OK

    with _open_in(args.input) as fh:
        s = gio.read_samples(fh)
    with _open_out(args.output) as out:
        if which == "clarke3":
            c = clarke_full(s)
            _write(out, args.format, gio.CLARKE3_HEADER, [s.k, c.v0, c.valpha, c.vbeta])
        elif which == "clarke":
            ab = clarke_reduced(s)
            _write(out, args.format, gio.CLARKE_HEADER, [s.k, ab[:, 0], ab[:, 1]])
        elif which == "complex":
            z = clarke_complex(s)
            _write(out, args.format, gio.COMPLEX_HEADER, [z.k, z.samples.real, z.samples.imag])
        elif which == "park":
            if args.theta is not None:
                theta = np.full(len(s), args.theta)
            else:
                fs, f0 = _nominal(args)
                if fs is None or f0 is None:
                    raise ConfigError("park needs --theta, --config, or --sample-rate "
                                      "and --frequency")
                theta = 2 * np.pi * f0 / fs * s.k
            dq = park(clarke_reduced(s), theta)
            _write(out, args.format, gio.PARK_HEADER, [s.k, dq[:, 0], dq[:, 1]])
        else:  # pragma: no cover - argparse restricts choices
            raise ConfigError(f"unknown transform {which!r}")
    return EXIT_OK


def _initial_state(args, k0: int) -> WlarState | None:
    if not getattr(args, "config", None):
        return None
    with _open_in(args.config) as fh:
        d = gio.load_json(fh, args.config)
    if isinstance(d, dict) and "duration" in d:
        sc = scenario_from_dict(d)
        return WlarState(h=sc.initial_h, g=sc.initial_g, mu=sc.mu, sample_index=k0)
    return None


def _scenario_mu(args) -> float:
    if not getattr(args, "config", None):
        return DEFAULT_MU
    with _open_in(args.config) as fh:
        d = gio.load_json(fh, args.config)
    if isinstance(d, dict) and "duration" in d:
        return scenario_from_dict(d).mu
    return DEFAULT_MU


def cmd_estimate(args) -> int:
    mu = args.mu if args.mu is not None else _scenario_mu(args)
    if not mu > 0:
        raise ConfigError(f"--mu must be positive, got {mu}")
    fs, _ = _nominal(args)
    with _open_in(args.input) as fh:
        series = gio.read_any_series(fh)
    trace = run_pipeline(series, mu=mu, sample_rate=fs,
                         initial=_initial_state(args, series.start_index))
    with _open_out(args.output) as out:
        gio.write_trace(out, trace)
    return EXIT_OK


def diagnose_series(s: SampleSeries, mu: float = DEFAULT_MU, fs: float | None = None,
                    threshold: float = DEFAULT_THRESHOLD, settle: float = 0.5) -> dict:
    """Covariance/eigen analysis, circularity and balance verdict of a sample series.

    Circularity and kappa are taken over the last ``1 - settle`` fraction of
    the run so the estimator transient is excluded.
    """
    if len(s) < 2:
        raise ConfigError("diagnose needs at least two samples")
    cov = empirical_covariance(s)
    eig = eigen3(cov)
    z = clarke_complex(s)
    trace = run_pipeline(z, mu=mu, sample_rate=fs)
    tail = slice(int(len(s) * settle), None)
    kappa = complex(np.mean(trace.kappa[tail]))
    verdict = classify(kappa, threshold)
    report = {
        "covariance": gio.eigen_to_dict(cov, eig),
        "rank": rank_estimate(cov),
        "circularity": circularity(z.samples).as_dict(),
        "adaptive_circularity": circularity(trace.m_bar[tail]).as_dict(),
        "kappa": {"re": kappa.real, "im": kappa.imag},
        "frequency_rad": float(np.mean(trace.omega[tail])),
        "verdict": verdict.as_dict(),
    }
    if fs is not None:
        report["frequency_hz"] = report["frequency_rad"] * fs / (2 * np.pi)
    return report


def cmd_diagnose(args) -> int:
    mu = args.mu if args.mu is not None else DEFAULT_MU
    if not mu > 0:
        raise ConfigError(f"--mu must be positive, got {mu}")
    fs, _ = _nominal(args)
    with _open_in(args.input) as fh:
        s = gio.read_samples(fh)
    report = diagnose_series(s, mu=mu, fs=fs, threshold=args.threshold)
    with _open_out(args.output) as out:
        _dump_json(out, report)
    return EXIT_OK


def demo_scenarios(fs: float = 1000.0, f0: float = 50.0) -> dict[str, ThreePhaseConfig]:
    forever = 10 ** 9
    return {
        "balanced": ThreePhaseConfig(sample_rate=fs, base_frequency=f0),
        "type_c": ThreePhaseConfig(sample_rate=fs, base_frequency=f0,
                                   sag_events=(SagSpec("C", 0.5, 0, forever),)),
        "type_d": ThreePhaseConfig(sample_rate=fs, base_frequency=f0,
                                   sag_events=(SagSpec("D", 0.5, 0, forever),)),
        "park_transient": ThreePhaseConfig(sample_rate=fs, base_frequency=f0,
                                           frequency_events=(FrequencyEvent(2000, f0 - 1.0),)),
    }


def cmd_demo(args) -> int:
    """Write plot-ready CSVs for the figure scenarios into a directory."""
    outdir = Path(args.output or "demo_output")
    outdir.mkdir(parents=True, exist_ok=True)
    mu = args.mu if args.mu is not None else DEFAULT_MU
    scen = demo_scenarios()
    for name in ("balanced", "type_c", "type_d"):
        cfg = scen[name]
        z = clarke_complex(synth(cfg, int(cfg.sample_rate / cfg.base_frequency) * 4))
        with open(outdir / f"clarke_{name}.csv", "w", newline="\n") as fh:
            gio.write_complex(fh, z.k, z.samples)

    cfg = scen["park_transient"]
    n = 8000
    s = synth(cfg, n)
    dq = park(clarke_reduced(s), cfg.omega * s.k)
    trace = run_pipeline(s, mu=mu, sample_rate=cfg.sample_rate)
    with open(outdir / "park_transient.csv", "w", newline="\n") as fh:
        gio.write_table(fh, ("k", "vd", "vq", "adaptive_vd", "adaptive_vq", "freq_hz"),
                        [s.k, dq[:, 0], dq[:, 1], trace.m_tilde.real, trace.m_tilde.imag,
                         trace.frequency_hz])

    cfg = scen["type_d"]
    s = synth(cfg, 4000)
    trace = run_pipeline(s, mu=mu, sample_rate=cfg.sample_rate)
    z = clarke_complex(s)
    tail = slice(2000, None)
    with open(outdir / "self_balancing.csv", "w", newline="\n") as fh:
        gio.write_table(fh, ("k", "clarke_re", "clarke_im", "adaptive_re", "adaptive_im"),
                        [s.k[tail], np.sqrt(2) * z.samples.real[tail],
                         np.sqrt(2) * z.samples.imag[tail], trace.m_bar.real[tail],
                         trace.m_bar.imag[tail]])
    summary = {
        "type_d_clarke_circularity": circularity(z.samples[tail]).circularity_coefficient,
        "type_d_adaptive_circularity": circularity(trace.m_bar[tail]).circularity_coefficient,
        "type_d_sequence_vuf": abs(sequence_from_waveform(
            apply_sag(cfg, cfg.sag_events[0])).vuf),
        "type_d_estimated_vuf": float(abs(trace.kappa[-1])),
    }
    with open(outdir / "summary.json", "w", newline="\n") as fh:
        _dump_json(fh, summary)
    print(f"wrote demo outputs to {outdir}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridframe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=False):
        sp.add_argument("--config", required=config_required,
                        help="signal config or scenario JSON")
        sp.add_argument("--output", default="-", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)

    sp = sub.add_parser("synth", help="synthesise a three-phase sample CSV")
    common(sp, config_required=True)
    sp.add_argument("--duration", type=int, default=None, help="override scenario duration")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("transform", help="apply a static transform")
    common(sp)
    sp.add_argument("--input", default=None, help="sample CSV (default stdin)")
    sp.add_argument("--which", required=True,
                    choices=("clarke", "clarke3", "complex", "park", "symmetrical"))
    sp.add_argument("--theta", type=float, default=None, help="fixed Park angle in rad")
    sp.add_argument("--sample-rate", type=float, default=None)
    sp.add_argument("--frequency", type=float, default=None, help="nominal frequency in Hz")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("estimate", help="run the adaptive Clarke/Park tracker")
    common(sp)
    sp.add_argument("--input", default=None)
    sp.add_argument("--mu", type=float, default=None)
    sp.add_argument("--sample-rate", type=float, default=None)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("diagnose", help="subspace, circularity and balance report")
    common(sp)
    sp.add_argument("--input", default=None)
    sp.add_argument("--mu", type=float, default=None)
    sp.add_argument("--sample-rate", type=float, default=None)
    sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("demo", help="regenerate the figure scenarios as CSV")
    sp.add_argument("--output", default="demo_output", help="output directory")
    sp.add_argument("--mu", type=float, default=None)
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"gridframe: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ConfigError, ImbalanceOverflowError) as exc:
        print(f"gridframe: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
