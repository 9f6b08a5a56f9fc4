"""Detection events, acquisition packages, and package streams.

Timestamps are integer picosecond ticks since the session origin. One tick
is 1 ps: fine enough that rounding is far below detector jitter, and a
64-bit integer still covers sessions of many hours.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ContiguityError, WindowError

PS_PER_S = 10**12


class Party(enum.IntEnum):
    ALICE = 0
    BOB = 1


class TimeTag(NamedTuple):
    """Single detection event: picosecond timestamp plus detector channel."""

    timestamp: int
    channel: int = 0


def _as_timestamp_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("timestamps must be one-dimensional")
    return arr


@dataclass(frozen=True)
class DataPackage:
    """One acquisition window of detection events.

    `timestamps` is a sorted int64 array of picosecond ticks, all within
    [start, start + duration). Out-of-order input is sorted on construction
    (real taggers can emit out-of-order records near buffer boundaries);
    the number of inversions found is kept in `reordered`.
    """

    index: int
    start: int
    duration: int
    timestamps: np.ndarray
    channel: int = 0
    reordered: int = 0

    def __post_init__(self):
        ts = _as_timestamp_array(self.timestamps)
        inversions = int(np.sum(np.diff(ts) < 0)) if ts.size > 1 else 0
        if inversions:
            ts = np.sort(ts, kind="stable")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "reordered", self.reordered + inversions)
        if self.duration <= 0:
            raise ValueError("package duration must be positive")
        if ts.size and (ts[0] < self.start or ts[-1] >= self.start + self.duration):
            raise ValueError(
                f"tags outside window [{self.start}, {self.start + self.duration})"
            )

    @property
    def end(self) -> int:
        return self.start + self.duration

    @property
    def count(self) -> int:
        return int(self.timestamps.size)

    @property
    def tags(self) -> list[TimeTag]:
        """Record view of the package, mainly for small packages and tests."""
        return [TimeTag(int(t), self.channel) for t in self.timestamps]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataPackage):
            return NotImplemented
        return (
            self.index == other.index
            and self.start == other.start
            and self.duration == other.duration
            and self.channel == other.channel
            and np.array_equal(self.timestamps, other.timestamps)
        )


def merge_packages(packages: Sequence[DataPackage]) -> DataPackage:
    """Merge a contiguous run of packages into one spanning package.

    Raises ContiguityError when windows do not tile or indices skip.
    """
    if not packages:
        raise ContiguityError("nothing to merge")
    if len(packages) == 1:
        return packages[0]
    for prev, cur in zip(packages, packages[1:]):
        if cur.index != prev.index + 1:
            raise ContiguityError(f"index jump {prev.index} -> {cur.index}")
        if cur.start != prev.end:
            raise ContiguityError(f"window gap/overlap at index {cur.index}")
        if cur.channel != prev.channel:
            raise ContiguityError("cannot merge packages from different channels")
    first, last = packages[0], packages[-1]
    ts = np.concatenate([p.timestamps for p in packages])
    return DataPackage(
        index=first.index,
        start=first.start,
        duration=last.end - first.start,
        timestamps=ts,
        channel=first.channel,
        reordered=sum(p.reordered for p in packages),
    )


def slice_window(package: DataPackage, lo: int, hi: int) -> np.ndarray:
    """Timestamps of the package falling in [lo, hi), order preserved."""
    if lo >= hi:
        raise WindowError(f"empty window [{lo}, {hi})")
    i0, i1 = np.searchsorted(package.timestamps, (lo, hi), side="left")
    return package.timestamps[i0:i1]


@dataclass(frozen=True)
class PackageStream:
    """Ordered, contiguous sequence of packages recorded by one party."""

    party: Party
    packages: tuple[DataPackage, ...]

    def __post_init__(self):
        pkgs = tuple(self.packages)
        object.__setattr__(self, "packages", pkgs)
        for prev, cur in zip(pkgs, pkgs[1:]):
            if cur.index != prev.index + 1:
                raise ValueError(f"stream index jump {prev.index} -> {cur.index}")
            if cur.start != prev.end:
                raise ValueError(f"stream window gap at index {cur.index}")

    def __len__(self) -> int:
        return len(self.packages)

    def __iter__(self):
        return iter(self.packages)

    def by_index(self) -> dict[int, DataPackage]:
        return {p.index: p for p in self.packages}

    @property
    def total_tags(self) -> int:
        return sum(p.count for p in self.packages)


# --- CSV serialization (debugging alternative to the binary container) ---

CSV_HEADER = "timestamp_ps,channel"


def write_package_csv(package: DataPackage, path) -> None:
    """Lossless text form: metadata in comment lines, then timestamp_ps,channel."""
    with open(path, "w") as fh:
        fh.write(f"# index={package.index}\n")
        fh.write(f"# start={package.start}\n")
        fh.write(f"# duration={package.duration}\n")
        fh.write(CSV_HEADER + "\n")
        for t in package.timestamps:
            fh.write(f"{int(t)},{package.channel}\n")


def read_package_csv(path) -> DataPackage:
    meta: dict[str, int] = {}
    timestamps: list[int] = []
    channel = 0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = int(value.strip())
                continue
            if line == CSV_HEADER:
                continue
            ts, _, ch = line.partition(",")
            timestamps.append(int(ts))
            channel = int(ch)
    try:
        return DataPackage(
            index=meta["index"],
            start=meta["start"],
            duration=meta["duration"],
            timestamps=np.asarray(timestamps, dtype=np.int64),
            channel=channel,
        )
    except KeyError as exc:
        raise ValueError(f"missing metadata line for {exc} in {path}") from exc
