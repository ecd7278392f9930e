"""Seeded synthetic IoT log workload and its canonical byte encoding."""
from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

PRNG_ID = "python-random-mt19937"
BASE_EPOCH_MS = 1_700_000_000_000
DELIMITER = "|"

SENSOR_TYPES = ("temperature", "humidity", "pressure", "voltage", "current", "vibration", "light", "co2")
SENSOR_RANGES = {
    "temperature": (-20.0, 60.0),
    "humidity": (0.0, 100.0),
    "pressure": (950.0, 1050.0),
    "voltage": (3.0, 5.5),
    "current": (0.0, 2.0),
    "vibration": (0.0, 12.0),
    "light": (0.0, 2000.0),
    "co2": (350.0, 2000.0),
}
MESSAGES = {
    "info": ("reading ok", "periodic report", "heartbeat", "sample committed", "link stable"),
    "warning": ("value near threshold", "retrying uplink", "clock drift detected", "battery low"),
    "error": ("sensor read failed", "checksum mismatch", "buffer overflow", "uplink lost"),
}


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


@dataclass(frozen=True)
class LogEntry:
    sequence: int
    timestamp_ms: int
    device_id: str
    sensor_type: str
    value: float
    severity: Severity
    message: str


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\n", "\\n").replace("\r", "\\r")


def _split_fields(line: str) -> list[str]:
    fields, buf = [], []
    chars = iter(line)
    for ch in chars:
        if ch == "\\":
            nxt = next(chars, None)
            if nxt is None:
                raise ValueError("dangling escape at end of entry")
            buf.append({"n": "\n", "r": "\r"}.get(nxt, nxt))
        elif ch == DELIMITER:
            fields.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    fields.append("".join(buf))
    return fields


def canonical_bytes(entry: LogEntry) -> bytes:
    """``seq|ts|device|sensor|value|severity|message`` as UTF-8, single line."""
    parts = (
        str(entry.sequence),
        str(entry.timestamp_ms),
        _escape(entry.device_id),
        _escape(entry.sensor_type),
        repr(float(entry.value)),
        entry.severity.value,
        _escape(entry.message),
    )
    return DELIMITER.join(parts).encode("utf-8")


def parse(data: bytes) -> LogEntry:
    fields = _split_fields(data.decode("utf-8"))
    if len(fields) != 7:
        raise ValueError(f"expected 7 fields, got {len(fields)}")
    seq, ts, device, sensor, value, severity, message = fields
    return LogEntry(int(seq), int(ts), device, sensor, float(value), Severity(severity), message)


def iter_entries(n: int, seed: int = 42, device_count: int = 16, *,
                 message_padding: int = 0) -> Iterator[LogEntry]:
    if n < 0:
        raise ValueError("n must be non-negative")
    if device_count < 1:
        raise ValueError("device_count must be at least 1")
    rng = random.Random(seed)
    ts = BASE_EPOCH_MS
    pad = " " + "x" * message_padding if message_padding else ""
    for i in range(n):
        ts += 1 + rng.randrange(5)
        sensor = SENSOR_TYPES[rng.randrange(len(SENSOR_TYPES))]
        lo, hi = SENSOR_RANGES[sensor]
        roll = rng.random()
        severity = Severity.INFO if roll < 0.85 else Severity.WARNING if roll < 0.97 else Severity.ERROR
        choices = MESSAGES[severity.value]
        yield LogEntry(
            sequence=i,
            timestamp_ms=ts,
            device_id=f"dev-{i % device_count:04d}",
            sensor_type=sensor,
            value=round(rng.uniform(lo, hi), 3),
            severity=severity,
            message=choices[rng.randrange(len(choices))] + pad,
        )


def generate(n: int, seed: int = 42, device_count: int = 16, *,
             message_padding: int = 0) -> list[LogEntry]:
    """Deterministic for ``(n, seed, device_count)``; timestamps strictly increase."""
    return list(iter_entries(n, seed, device_count, message_padding=message_padding))


def generate_bytes(n: int, seed: int = 42, device_count: int = 16, *,
                   message_padding: int = 0) -> list[bytes]:
    return [canonical_bytes(e) for e in iter_entries(n, seed, device_count, message_padding=message_padding)]


def write_log(path: str | Path, entries: Iterable[bytes]) -> int:
    count = 0
    with open(path, "wb") as fh:
        for raw in entries:
            if b"\n" in raw:
                raise ValueError(f"entry {count} contains a newline; not a canonical entry")
            fh.write(raw + b"\n")
            count += 1
    return count


def read_log(path: str | Path) -> list[bytes]:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        return []
    lines = data.split(b"\n")
    if lines[-1] == b"":
        lines.pop()
    return lines
