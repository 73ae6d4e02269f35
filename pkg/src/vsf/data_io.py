"""Dataset ingestion, gap handling and synthetic traces.

CSV layouts
-----------
wide:  ``timestamp,node_A,node_B,...`` one row per timestamp.
long:  ``timestamp,node_id,value`` one row per reading; extra columns are
       ignored.

Timestamps are mapped to slots by sorted order (numeric if every stamp is
numeric, else ISO-like dates, else plain text). Empty cells and ``nan``
mark gaps.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence, Union

import numpy as np

from .core import SensorTrace, VSFError

log = logging.getLogger(__name__)

GAP_TOKENS = {"", "nan", "na", "null", "none"}


class LoadError(VSFError, ValueError):
    pass


class EmptyDataError(LoadError):
    pass


class AlignmentError(VSFError, ValueError):
    pass


class SpecError(VSFError, ValueError):
    pass


def _open(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline="", encoding="utf-8")
    if isinstance(source, io.TextIOBase) or hasattr(source, "read"):
        return source
    raise TypeError(f"cannot read CSV from {type(source).__name__}")


def _parse_value(text: str, line: int) -> float:
    t = text.strip()
    if t.lower() in GAP_TOKENS:
        return math.nan
    try:
        return float(t)
    except ValueError:
        raise LoadError(f"line {line}: cannot parse value {text!r}") from None


def _sort_key(stamps: Iterable[str]):
    stamps = list(stamps)
    try:
        vals = [float(s) for s in stamps]
        return dict(zip(stamps, vals)).__getitem__
    except ValueError:
        pass
    try:
        vals = [datetime.fromisoformat(s.strip().replace("/", "-")) for s in stamps]
        return dict(zip(stamps, vals)).__getitem__
    except ValueError:
        return lambda s: s


def load_csv(source, layout: str = "wide", unit: str = "") -> list[SensorTrace]:
    """Read a CSV file into one SensorTrace per node.

    A repeated ``(timestamp, node)`` reading overwrites the earlier one; the
    number of such duplicates is logged as a warning.
    """
    layout = layout.lower()
    if layout not in ("wide", "long"):
        raise ValueError(f"unknown layout {layout!r}")
    fh = _open(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataError("no header row") from None
        cells: dict[str, dict[str, float]] = {}
        nodes: list[str] = []
        duplicates = 0
        if layout == "wide":
            nodes = [h.strip() for h in header[1:]]
            if not nodes:
                raise LoadError("line 1: wide layout needs at least one node column")
            if len(set(nodes)) != len(nodes):
                raise LoadError("line 1: duplicate node columns")
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise LoadError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
                ts = row[0].strip()
                if ts in cells:
                    duplicates += len(nodes)
                cells[ts] = {n: _parse_value(v, lineno) for n, v in zip(nodes, row[1:])}
        else:
            if len(header) < 3:
                raise LoadError("line 1: long layout needs timestamp,node_id,value")
            seen = set()
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) < 3:
                    raise LoadError(f"line {lineno}: expected at least 3 fields, got {len(row)}")
                ts, node = row[0].strip(), row[1].strip()
                if not node:
                    raise LoadError(f"line {lineno}: empty node id")
                if node not in seen:
                    seen.add(node)
                    nodes.append(node)
                slot = cells.setdefault(ts, {})
                if node in slot:
                    duplicates += 1
                slot[node] = _parse_value(row[2], lineno)
    finally:
        if fh is not source:
            fh.close()
    if not cells:
        raise EmptyDataError("no data rows")
    if duplicates:
        log.warning("%d duplicate (timestamp, node) readings; last value kept", duplicates)
    order = sorted(cells, key=_sort_key(cells))
    traces = []
    for node in sorted(nodes):
        values = np.array([cells[ts].get(node, math.nan) for ts in order], dtype=float)
        traces.append(SensorTrace(node, values, unit=unit))
    return traces


def write_csv(traces: Sequence[SensorTrace], dest, layout: str = "wide",
              timestamps: Sequence | None = None) -> None:
    """Write traces so that ``load_csv`` reads back the same values."""
    n = len(traces[0]) if traces else 0
    if any(len(t) != n for t in traces):
        raise ValueError("traces differ in length")
    stamps = list(range(n)) if timestamps is None else list(timestamps)

    def fmt(t, k):
        return repr(float(t.values[k])) if t.valid[k] else ""

    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", newline="", encoding="utf-8") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        if layout == "wide":
            w.writerow(["timestamp"] + [t.node_id for t in traces])
            for k in range(n):
                w.writerow([stamps[k]] + [fmt(t, k) for t in traces])
        elif layout == "long":
            w.writerow(["timestamp", "node_id", "value"])
            for k in range(n):
                for t in traces:
                    if t.valid[k]:
                        w.writerow([stamps[k], t.node_id, fmt(t, k)])
        else:
            raise ValueError(f"unknown layout {layout!r}")
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class Interpolate:
    max_run: int = 3


@dataclass(frozen=True)
class Reject:
    pass


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``[start, stop)`` runs where ``mask`` is True."""
    out = []
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return out
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    stops = np.concatenate([idx[breaks] + 1, [idx[-1] + 1]])
    return list(zip(starts.tolist(), stops.tolist()))


def align_traces(traces: Sequence[SensorTrace],
                 gap_policy: Union[Interpolate, Reject] = Interpolate()) -> list[SensorTrace]:
    """Return gap-free copies of ``traces`` or raise AlignmentError."""
    if not traces:
        raise AlignmentError("no traces")
    n = len(traces[0])
    if any(len(t) != n for t in traces):
        raise AlignmentError("traces are not on a common slot grid")
    out = []
    for t in traces:
        runs = _runs(~t.valid)
        if not runs:
            out.append(t)
            continue
        if isinstance(gap_policy, Reject):
            a, b = runs[0]
            raise AlignmentError(f"node {t.node_id!r}: gap in slots {a}..{b - 1}")
        values = np.array(t.values, dtype=float)
        for a, b in runs:
            if a == 0 or b == n:
                raise AlignmentError(
                    f"node {t.node_id!r}: boundary gap in slots {a}..{b - 1} has no anchor")
            if b - a > gap_policy.max_run:
                raise AlignmentError(
                    f"node {t.node_id!r}: gap of {b - a} slots ({a}..{b - 1}) exceeds "
                    f"max_run={gap_policy.max_run}")
            left, right = values[a - 1], values[b]
            frac = np.arange(1, b - a + 1) / (b - a + 1)
            values[a:b] = left + (right - left) * frac
        out.append(SensorTrace(t.node_id, values, unit=t.unit))
    return out


# ------------------------------------------------------------- synthetic

@dataclass(frozen=True)
class AR1:
    coeff: float
    noise_std: float
    start: float = 1.0
    mean: float = 0.0


@dataclass(frozen=True)
class RandomWalk:
    step_std: float
    start: float = 0.0


@dataclass(frozen=True)
class SineDrift:
    """``offset + drift*t + amplitude*sin(2*pi*t/period + phase) + noise``.

    ``phase=None`` draws a phase per node from the generator.
    """

    period: float
    amplitude: float
    noise_std: float = 0.0
    offset: float = 0.0
    drift: float = 0.0
    phase: float | None = None


@dataclass(frozen=True)
class AffineLink:
    """``target += slope * source + intercept + N(0, noise_std)``; a target
    with several links sums them."""

    source: int
    target: int
    slope: float
    intercept: float = 0.0
    noise_std: float = 0.0


@dataclass(frozen=True)
class SyntheticSpec:
    node_count: int
    length: int
    process: Union[AR1, RandomWalk, SineDrift]
    links: tuple = ()
    rng_seed: int = 0
    unit: str = ""
    prefix: str = "s"

    def node_ids(self) -> list[str]:
        width = len(str(max(self.node_count - 1, 0)))
        return [f"{self.prefix}{i:0{width}d}" for i in range(self.node_count)]


def _base(proc, length: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(proc, AR1):
        x = np.empty(length)
        x[0] = proc.start
        noise = rng.normal(0.0, proc.noise_std, length) if proc.noise_std > 0 else np.zeros(length)
        for t in range(1, length):
            x[t] = proc.mean + proc.coeff * (x[t - 1] - proc.mean) + noise[t]
        return x
    if isinstance(proc, RandomWalk):
        steps = rng.normal(0.0, proc.step_std, length)
        steps[0] = 0.0
        return proc.start + np.cumsum(steps)
    if isinstance(proc, SineDrift):
        phase = rng.uniform(0, 2 * np.pi) if proc.phase is None else proc.phase
        t = np.arange(length)
        x = proc.offset + proc.drift * t + proc.amplitude * np.sin(2 * np.pi * t / proc.period + phase)
        if proc.noise_std > 0:
            x = x + rng.normal(0.0, proc.noise_std, length)
        return x
    raise SpecError(f"unknown base process {proc!r}")


def generate_synthetic(spec: SyntheticSpec) -> list[SensorTrace]:
    """Deterministic traces for ``spec``; link targets are affine images of
    their sources, exact when the link noise is zero."""
    if spec.node_count < 1 or spec.length < 1:
        raise SpecError("node_count and length must be positive")
    graph: dict[int, set[int]] = {}
    for link in spec.links:
        for end in (link.source, link.target):
            if not 0 <= end < spec.node_count:
                raise SpecError(f"link endpoint {end} out of range")
        if link.source == link.target:
            raise SpecError(f"self link on node {link.source}")
        graph.setdefault(link.target, set()).add(link.source)
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise SpecError(f"cyclic affine links: {exc.args[1]}") from None

    rng = np.random.default_rng(spec.rng_seed)
    values: dict[int, np.ndarray] = {}
    for i in range(spec.node_count):
        if i not in graph:
            values[i] = _base(spec.process, spec.length, rng)
    for i in order:
        if i not in graph:
            continue
        x = np.zeros(spec.length)
        for link in spec.links:
            if link.target == i:
                x = x + link.slope * values[link.source] + link.intercept
                if link.noise_std > 0:
                    x = x + rng.normal(0.0, link.noise_std, spec.length)
        values[i] = x
    ids = spec.node_ids()
    return [SensorTrace(ids[i], values[i], unit=spec.unit) for i in range(spec.node_count)]
