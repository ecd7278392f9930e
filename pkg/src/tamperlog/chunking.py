"""Memory-pressure driven chunk sizing for batch ingestion.

The byte budget starts at ``initial_chunk`` and is scaled multiplicatively
by a pressure-dependent factor before each batch (or each window), always
clamped to ``[min_chunk, max_chunk]``.  ``base_chunk_size`` gives the
memory-derived size used when the chunker is reset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

KB = 1024

# Scripted snapshots use a decimal total so that profile values such as 0.8
# map back to exactly the same float pressure.
SCRIPTED_TOTAL_BYTES = 10**12


@dataclass(frozen=True)
class ChunkConfig:
    target_utilization: float = 0.5
    scale_constant: float = 65536.0
    min_chunk: int = 4 * KB
    max_chunk: int = 64 * KB
    initial_chunk: int = 64 * KB

    def __post_init__(self) -> None:
        if not 0.0 < self.target_utilization < 1.0:
            raise ValueError(f"target_utilization must lie in (0, 1), got {self.target_utilization}")
        if self.scale_constant <= 0:
            raise ValueError(f"scale_constant must be positive, got {self.scale_constant}")
        if self.min_chunk <= 0:
            raise ValueError(f"min_chunk must be positive, got {self.min_chunk}")
        if not self.min_chunk <= self.initial_chunk <= self.max_chunk:
            raise ValueError(
                f"need min_chunk <= initial_chunk <= max_chunk, got "
                f"{self.min_chunk} / {self.initial_chunk} / {self.max_chunk}")

    @classmethod
    def fixed(cls, size: int = 16 * KB) -> "ChunkConfig":
        """A config whose clamps pin every chunk to ``size`` bytes."""
        return cls(min_chunk=size, max_chunk=size, initial_chunk=size)

    @property
    def is_fixed(self) -> bool:
        return self.min_chunk == self.max_chunk


@dataclass(frozen=True)
class MemorySnapshot:
    available: int
    total: int

    def __post_init__(self) -> None:
        if self.total <= 0:
            raise ValueError(f"total memory must be positive, got {self.total}")
        if not 0 <= self.available <= self.total:
            raise ValueError(f"available memory {self.available} outside [0, {self.total}]")


class MemoryProbe(Protocol):
    def snapshot(self) -> MemorySnapshot: ...


class SystemProbe:
    """Reads live memory figures via psutil."""

    def snapshot(self) -> MemorySnapshot:
        import psutil

        vm = psutil.virtual_memory()
        return MemorySnapshot(available=min(vm.available, vm.total), total=vm.total)


class ScriptedProbe:
    """Replays a list of pressure ratios, one per ``snapshot()`` call.

    Past the end of the profile the probe either holds the last value
    (``wrap=False``) or starts over (``wrap=True``).
    """

    def __init__(self, profile: Sequence[float], *, wrap: bool = False,
                 total: int = SCRIPTED_TOTAL_BYTES) -> None:
        if not profile:
            raise ValueError("scripted profile must contain at least one pressure value")
        for p in profile:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"pressure {p} outside [0, 1]")
        self.profile = tuple(float(p) for p in profile)
        self.wrap = wrap
        self.total = total
        self.calls = 0

    def pressure_at(self, i: int) -> float:
        if self.wrap:
            return self.profile[i % len(self.profile)]
        return self.profile[min(i, len(self.profile) - 1)]

    def snapshot(self) -> MemorySnapshot:
        p = self.pressure_at(self.calls)
        self.calls += 1
        available = round((1.0 - p) * self.total)
        return MemorySnapshot(available=available, total=self.total)

    def reset(self) -> None:
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "ScriptedProbe":
        values = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a decimal pressure ratio: {line!r}") from None
        return cls(values, **kwargs)


def pressure(snapshot: MemorySnapshot) -> float:
    return 1.0 - snapshot.available / snapshot.total


def adjustment_factor(p: float) -> float:
    if p > 0.8:
        return 0.8
    if p > 0.6:
        return 0.9
    if p < 0.3:
        return 1.1
    return 1.0


def clamp(value: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, value))


def base_chunk_size(snapshot: MemorySnapshot, cfg: ChunkConfig) -> int:
    raw = math.floor(snapshot.available * cfg.target_utilization / cfg.scale_constant)
    return clamp(raw, cfg.min_chunk, cfg.max_chunk)


@dataclass
class ChunkerState:
    current_chunk_size: int
    last_pressure: float = 0.0
    history: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def initial(cls, cfg: ChunkConfig) -> "ChunkerState":
        return cls(current_chunk_size=cfg.initial_chunk)


def next_chunk_size(state: ChunkerState, snapshot: MemorySnapshot, cfg: ChunkConfig) -> int:
    """Scale the previous size by the pressure factor, clamp, and record it."""
    p = pressure(snapshot)
    size = clamp(math.floor(adjustment_factor(p) * state.current_chunk_size), cfg.min_chunk, cfg.max_chunk)
    state.last_pressure = p
    state.current_chunk_size = size
    state.history.append((len(state.history), size))
    return size


class AdaptiveChunker:
    """Binds a config, a probe and the running state for one ingestion driver."""

    def __init__(self, cfg: ChunkConfig | None = None, probe: MemoryProbe | None = None) -> None:
        self.cfg = cfg or ChunkConfig()
        self.probe = probe if probe is not None else SystemProbe()
        self.state = ChunkerState.initial(self.cfg)

    def next_size(self) -> int:
        if self.cfg.is_fixed:
            size = self.cfg.min_chunk
            self.state.history.append((len(self.state.history), size))
            return size
        return next_chunk_size(self.state, self.probe.snapshot(), self.cfg)

    def reset(self) -> int:
        """Restart from the memory-derived base size."""
        snap = self.probe.snapshot()
        self.state = ChunkerState(current_chunk_size=base_chunk_size(snap, self.cfg),
                                  last_pressure=pressure(snap))
        return self.state.current_chunk_size

    @property
    def current(self) -> int:
        return self.state.current_chunk_size
