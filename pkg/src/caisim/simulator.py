"""Synthetic object stream: colored 16x16 objects, disruptor transforms, and
per-iteration feeding in normal or disrupted mode.

The stream stands in for a conveyor-belt camera: each object is an image whose
dominant color channel defines its true class. Features are per-channel
8-bin histograms, so the whole pipeline is image -> histogram -> classifier.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

IMAGE_SIZE = 16
N_PIXELS = IMAGE_SIZE * IMAGE_SIZE
N_BINS = 8
BIN_WIDTH = 256 // N_BINS
N_FEATURES = 3 * N_BINS


class ObjectClass(Enum):
    RED = 0
    GREEN = 1
    BLUE = 2


class Mode(Enum):
    NORMAL = "normal"
    DISRUPTED = "disrupted"


class StreamExhausted(Exception):
    """Raised when a feeder with a finite iteration budget runs dry."""


@dataclass(frozen=True)
class GeneratorProfile:
    """Pixel intensity layout for generated objects.

    Each channel draws its pixels from fixed-size uniform bands: `strong`
    bands for the dominant channel, `weak` bands for the other two. Fixed
    per-band pixel counts bound the channel means for every possible draw,
    so the dominant channel mean is always >= 160 and each weak channel
    mean is always <= 80. Band counts must sum to the pixel count.
    """

    strong_bands: tuple[tuple[int, int, int], ...] = (
        (240, 168, 255), (16, 152, 167))
    weak_bands: tuple[tuple[int, int, int], ...] = (
        (130, 32, 63), (126, 64, 81))

    def __post_init__(self):
        for name, bands in (("strong", self.strong_bands),
                            ("weak", self.weak_bands)):
            if sum(b[0] for b in bands) != N_PIXELS:
                raise ValueError(f"{name} band counts must sum to {N_PIXELS}")
            for count, lo, hi in bands:
                if not (0 <= lo <= hi <= 255 and count > 0):
                    raise ValueError(f"bad {name} band ({count}, {lo}, {hi})")
        if self.min_strong_mean() < 160:
            raise ValueError("dominant channel mean can fall below 160")
        if self.max_weak_mean() > 80:
            raise ValueError("weak channel mean can exceed 80")

    def min_strong_mean(self) -> float:
        return sum(c * lo for c, lo, _ in self.strong_bands) / N_PIXELS

    def max_weak_mean(self) -> float:
        return sum(c * hi for c, _, hi in self.weak_bands) / N_PIXELS


DEFAULT_PROFILE = GeneratorProfile()


@dataclass(frozen=True)
class SyntheticImage:
    """16x16 RGB image with integer channels in [0, 255]."""

    pixels: np.ndarray  # (16, 16, 3) uint8
    true_class: ObjectClass

    def channel_totals(self) -> np.ndarray:
        return self.pixels.reshape(-1, 3).sum(axis=0, dtype=np.int64)


@dataclass(frozen=True)
class FeatureInstance:
    """One streamed data point: 24-dim histogram features plus ground truth."""

    features: np.ndarray  # (24,) float64, three 8-bin blocks, each sums to 1
    true_class: ObjectClass
    mode: Mode


def _channel_values(rng: np.random.Generator,
                    bands: tuple[tuple[int, int, int], ...]) -> np.ndarray:
    values = np.empty(N_PIXELS, dtype=np.uint8)
    offset = 0
    for count, lo, hi in bands:
        values[offset:offset + count] = rng.integers(lo, hi + 1, size=count)
        offset += count
    return values[rng.permutation(N_PIXELS)]


def generate_object(cls: ObjectClass, rng: np.random.Generator,
                    profile: GeneratorProfile = DEFAULT_PROFILE) -> SyntheticImage:
    """Draw one object whose `cls` channel dominates the other two.

    Identical rng state yields an identical image. The dominant channel mean
    is >= 160 and each weak channel mean is <= 80 for every possible draw.
    """
    channels = []
    for idx in range(3):
        bands = profile.strong_bands if idx == cls.value else profile.weak_bands
        channels.append(_channel_values(rng, bands))
    pixels = np.stack(channels, axis=1).reshape(IMAGE_SIZE, IMAGE_SIZE, 3)
    return SyntheticImage(pixels=pixels, true_class=cls)


class Disruptor:
    """Transform applied to images while the stream runs disrupted."""

    name = "identity"

    def apply(self, img: SyntheticImage) -> SyntheticImage:
        raise NotImplementedError

    def spec(self) -> dict:
        return {"kind": self.name}


class Darkness(Disruptor):
    """Scales every channel value to floor(value * factor)."""

    name = "darkness"

    def __init__(self, factor: float = 0.2):
        if not 0.0 < factor <= 1.0:
            raise ValueError(f"darkness factor must be in (0, 1], got {factor}")
        self.factor = float(factor)

    def apply(self, img: SyntheticImage) -> SyntheticImage:
        dark = np.floor(img.pixels.astype(np.float64) * self.factor)
        return SyntheticImage(pixels=dark.astype(np.uint8),
                              true_class=img.true_class)

    def spec(self) -> dict:
        return {"kind": self.name, "factor": self.factor}


class HistogramEqualization(Disruptor):
    """Remaps each channel through its own cumulative distribution."""

    name = "histogram_equalization"

    def apply(self, img: SyntheticImage) -> SyntheticImage:
        out = np.empty_like(img.pixels)
        flat = img.pixels.reshape(-1, 3)
        for ch in range(3):
            counts = np.bincount(flat[:, ch], minlength=256)
            cdf = np.cumsum(counts)
            lut = (cdf * 255 // N_PIXELS).astype(np.uint8)
            out.reshape(-1, 3)[:, ch] = lut[flat[:, ch]]
        return SyntheticImage(pixels=out, true_class=img.true_class)


DISRUPTOR_KINDS = {
    "darkness": Darkness,
    "histogram_equalization": HistogramEqualization,
}


def make_disruptor(spec: dict) -> Disruptor:
    """Build a disruptor from a config mapping like {"kind": "darkness", "factor": 0.2}."""
    kind = spec.get("kind")
    if kind not in DISRUPTOR_KINDS:
        raise ValueError(f"unknown disruptor kind: {kind!r}")
    if kind == "darkness":
        return Darkness(factor=spec.get("factor", 0.2))
    return HistogramEqualization()


def extract_histogram(img: SyntheticImage, mode: Mode = Mode.NORMAL) -> FeatureInstance:
    """Three concatenated 8-bin histograms, each block normalized to sum 1."""
    flat = img.pixels.reshape(-1, 3)
    blocks = []
    for ch in range(3):
        counts = np.bincount(flat[:, ch] // BIN_WIDTH, minlength=N_BINS)
        blocks.append(counts.astype(np.float64) / N_PIXELS)
    return FeatureInstance(features=np.concatenate(blocks),
                           true_class=img.true_class, mode=mode)


@dataclass
class FeedSchedule:
    """Static disruption windows for batch feeding.

    Each cycle opens a disruption window at its start iteration and closes it
    at its fix iteration. `disrupt_start` must not precede `steady_len`.
    """

    steady_len: int = 30
    disrupt_start: int = 30
    fix_at: int | None = 90
    cycles: int = 1
    cycle_spacing: int | None = None  # gap between windows; defaults to window length

    def __post_init__(self):
        if self.disrupt_start < self.steady_len:
            raise ValueError("disrupt_start must be >= steady_len")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.fix_at is not None and self.fix_at <= self.disrupt_start:
            raise ValueError("fix_at must be > disrupt_start")

    def mode_at(self, iteration: int) -> Mode:
        if self.fix_at is None:
            return Mode.DISRUPTED if iteration >= self.disrupt_start else Mode.NORMAL
        window = self.fix_at - self.disrupt_start
        spacing = self.cycle_spacing if self.cycle_spacing is not None else window
        period = window + spacing
        for c in range(self.cycles):
            start = self.disrupt_start + c * period
            if start <= iteration < start + window:
                return Mode.DISRUPTED
        return Mode.NORMAL


class ObjectStream:
    """Deterministic per-iteration object source with class rotation."""

    def __init__(self, rng: np.random.Generator, n_classes: int = 3,
                 order: str = "round-robin",
                 profile: GeneratorProfile = DEFAULT_PROFILE):
        if n_classes != len(ObjectClass):
            raise ValueError("object stream generates exactly the color classes")
        if order not in ("round-robin", "shuffle"):
            raise ValueError(f"unknown class order: {order!r}")
        self._rng = rng
        self._order = order
        self._profile = profile
        self._pending: list[ObjectClass] = []
        self._count = 0

    def _next_class(self) -> ObjectClass:
        if not self._pending:
            cycle = list(ObjectClass)
            if self._order == "shuffle":
                idx = self._rng.permutation(len(cycle))
                cycle = [cycle[i] for i in idx]
            self._pending = cycle
        return self._pending.pop(0)

    def next_image(self) -> SyntheticImage:
        img = generate_object(self._next_class(), self._rng, self._profile)
        self._count += 1
        return img


class Feeder:
    """Feeds one instance per iteration, applying the disruptor while disrupted.

    The disrupted flag is owned by whoever drives the run (a static schedule
    or the experiment loop); the feeder only applies the current mode.
    """

    def __init__(self, stream: ObjectStream, disruptor: Disruptor | None = None,
                 budget: int | None = None):
        self.stream = stream
        self.disruptor = disruptor
        self.disrupted = False
        self.budget = budget
        self.iteration = 0

    def next_instance(self) -> FeatureInstance:
        if self.budget is not None and self.iteration >= self.budget:
            raise StreamExhausted(f"budget of {self.budget} iterations consumed")
        img = self.stream.next_image()
        mode = Mode.NORMAL
        if self.disrupted and self.disruptor is not None:
            img = self.disruptor.apply(img)
            mode = Mode.DISRUPTED
        self.iteration += 1
        return extract_histogram(img, mode)


def run_schedule(schedule: FeedSchedule, seed: int, iterations: int,
                 disruptor: Disruptor | None = None,
                 order: str = "round-robin") -> list[FeatureInstance]:
    """Materialize a finite instance sequence for a static schedule."""
    disruptor = disruptor if disruptor is not None else Darkness(0.2)
    feeder = Feeder(ObjectStream(np.random.default_rng(seed), order=order),
                    disruptor, budget=iterations)
    out = []
    for i in range(iterations):
        feeder.disrupted = schedule.mode_at(i) is Mode.DISRUPTED
        out.append(feeder.next_instance())
    return out


def export_dataset(schedule: FeedSchedule, seed: int, iterations: int,
                   out_dir: str | Path,
                   disruptor: Disruptor | None = None) -> Path:
    """Write one PPM per instance plus a manifest CSV; returns the manifest path."""
    disruptor = disruptor if disruptor is not None else Darkness(0.2)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stream = ObjectStream(np.random.default_rng(seed))
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "class", "mode"])
        for i in range(iterations):
            img = stream.next_image()
            mode = schedule.mode_at(i)
            if mode is Mode.DISRUPTED:
                img = disruptor.apply(img)
            write_ppm(img, out / f"object_{i:05d}.ppm")
            writer.writerow([i, img.true_class.name.lower(), mode.value])
    return manifest


def write_ppm(img: SyntheticImage, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(f"P6\n{IMAGE_SIZE} {IMAGE_SIZE}\n255\n".encode())
        fh.write(img.pixels.astype(np.uint8).tobytes())
