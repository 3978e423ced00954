"""CSV and JSON formats for configs, sample series, transform outputs and traces.

Floats are written with ``repr`` (shortest round-trip form) so that piping
one command into another loses no precision.
"""

from __future__ import annotations

import csv
import json
import math
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .signal_model import FrequencyEvent, SagSpec, SampleSeries, ThreePhaseConfig

SAMPLE_HEADER = ("k", "va", "vb", "vc")
COMPLEX_HEADER = ("k", "re", "im")
CLARKE3_HEADER = ("k", "v0", "valpha", "vbeta")
CLARKE_HEADER = ("k", "valpha", "vbeta")
PARK_HEADER = ("k", "vd", "vq")
TRACE_HEADER = ("k", "h_re", "h_im", "g_re", "g_im", "freq_rad", "freq_hz",
                "kappa_re", "kappa_im", "mbar_re", "mbar_im", "mtilde_re",
                "mtilde_im", "low_confidence")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_table(fh: IO[str], header: Sequence[str], columns: Iterable) -> None:
    cols = [np.asarray(c) for c in columns]
    fh.write(",".join(header) + "\n")
    for row in zip(*cols):
        fh.write(",".join(fmt(v) for v in row) + "\n")


def read_table(fh: IO[str]) -> tuple[list[str], np.ndarray]:
    """Parse a numeric CSV with a header row; errors carry the line number."""
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ConfigError("input is empty (expected a CSV header)") from None
    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ConfigError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise ConfigError(f"line {line}: non-numeric field in {row!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"line {line}: non-finite value")
        rows.append(vals)
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return header, data


def _start_index(k: np.ndarray) -> int:
    if k.size == 0:
        return 0
    if np.any(k != np.round(k)) or np.any(np.diff(k) != 1):
        raise ConfigError("column k must hold consecutive integer sample indices")
    return int(k[0])


def write_samples(fh: IO[str], s: SampleSeries) -> None:
    write_table(fh, SAMPLE_HEADER, [s.k, *s.samples.T])


def read_samples(fh: IO[str]) -> SampleSeries:
    header, data = read_table(fh)
    if tuple(header) != SAMPLE_HEADER:
        raise ConfigError(f"expected header {','.join(SAMPLE_HEADER)}, got {','.join(header)}")
    return SampleSeries(data[:, 1:], _start_index(data[:, 0]))


def read_any_series(fh: IO[str]):
    """Read either a phase-voltage CSV or a complex/alpha-beta CSV.

    Returns a SampleSeries for ``k,va,vb,vc`` input and a ComplexSeries
    (v_alpha + j v_beta) for ``k,re,im``, ``k,valpha,vbeta`` or
    ``k,v0,valpha,vbeta`` input.
    """
    from .transforms import ComplexSeries

    header, data = read_table(fh)
    h = tuple(header)
    if not data.size and h not in (SAMPLE_HEADER, COMPLEX_HEADER, CLARKE_HEADER, CLARKE3_HEADER):
        raise ConfigError(f"unrecognised header {','.join(header)}")
    k0 = _start_index(data[:, 0]) if data.size else 0
    if h == SAMPLE_HEADER:
        return SampleSeries(data[:, 1:], k0)
    if h in (COMPLEX_HEADER, CLARKE_HEADER):
        return ComplexSeries(data[:, 1] + 1j * data[:, 2], k0)
    if h == CLARKE3_HEADER:
        return ComplexSeries(data[:, 2] + 1j * data[:, 3], k0)
    raise ConfigError(f"unrecognised header {','.join(header)}")


def write_complex(fh: IO[str], k, z) -> None:
    z = np.asarray(z, dtype=complex)
    write_table(fh, COMPLEX_HEADER, [k, z.real, z.imag])


def write_trace(fh: IO[str], trace) -> None:
    write_table(fh, TRACE_HEADER, [
        trace.k, trace.h.real, trace.h.imag, trace.g.real, trace.g.imag,
        trace.omega, trace.frequency_hz, trace.kappa.real, trace.kappa.imag,
        trace.m_bar.real, trace.m_bar.imag, trace.m_tilde.real, trace.m_tilde.imag,
        trace.low_confidence,
    ])


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


def config_from_dict(d: dict) -> ThreePhaseConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    try:
        freq_events = tuple(
            FrequencyEvent(int(_require(e, "start_index", f"frequency_events[{i}]")),
                           float(_require(e, "new_frequency_hz", f"frequency_events[{i}]")))
            for i, e in enumerate(d.get("frequency_events", []))
        )
        sags = tuple(
            SagSpec(str(_require(e, "type", f"sag_events[{i}]")),
                    float(_require(e, "depth", f"sag_events[{i}]")),
                    int(_require(e, "start_index", f"sag_events[{i}]")),
                    int(_require(e, "end_index", f"sag_events[{i}]")))
            for i, e in enumerate(d.get("sag_events", []))
        )
        return ThreePhaseConfig(
            amplitudes=tuple(_require(d, "amplitudes", "config")),
            phases=tuple(d.get("phases_rad", (0.0, 0.0, 0.0))),
            sample_rate=float(_require(d, "sample_rate_hz", "config")),
            base_frequency=float(_require(d, "base_frequency_hz", "config")),
            frequency_events=freq_events,
            sag_events=sags,
            noise_variance=float(d.get("noise_variance", 0.0)),
        )
    except (TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def config_to_dict(c: ThreePhaseConfig) -> dict:
    return {
        "amplitudes": list(c.amplitudes),
        "phases_rad": list(c.phases),
        "sample_rate_hz": c.sample_rate,
        "base_frequency_hz": c.base_frequency,
        "frequency_events": [{"start_index": e.start_index, "new_frequency_hz": e.new_frequency}
                             for e in c.frequency_events],
        "sag_events": [{"type": s.sag_type.value, "depth": s.depth,
                        "start_index": s.start_index, "end_index": s.end_index}
                       for s in c.sag_events],
        "noise_variance": c.noise_variance,
    }


def load_json(fh: IO[str], name: str = "input"):
    try:
        return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{name}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def eigen_to_dict(cov, eig) -> dict:
    return {
        "matrix": np.asarray(cov.entries).tolist(),
        "eigenvalues": np.asarray(eig.eigenvalues).tolist(),
        "eigenvectors": np.asarray(eig.eigenvectors).T.tolist(),
    }
