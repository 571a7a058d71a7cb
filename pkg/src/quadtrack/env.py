"""Radio link budget and rotor acoustic models."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

REFERENCE_DISTANCE = 1.0


class LinkState(enum.Enum):
    CONNECTED = "connected"
    DEGRADED = "degraded"
    LOST = "lost"


@dataclass(frozen=True)
class LinkModel:
    name: str
    reference_rssi: float
    path_loss_exponent: float
    loss_threshold: float
    degraded_threshold: float
    noise_std: float = 0.0

    def __post_init__(self):
        if not 1.5 <= self.path_loss_exponent <= 6.0:
            raise ValidationError(f"{self.name}: path-loss exponent outside [1.5, 6]")
        if not self.loss_threshold < self.degraded_threshold < self.reference_rssi:
            raise ValidationError(f"{self.name}: need loss < degraded < reference RSSI")
        if self.noise_std < 0:
            raise ValidationError(f"{self.name}: noise_std must be >= 0")

    @classmethod
    def from_band(cls, name: str, reference_rssi: float, loss_threshold: float,
                  loss_distance: float, degraded_margin: float = 5.0) -> LinkModel:
        """Solve the exponent so RSSI reaches `loss_threshold` at `loss_distance`."""
        n = (reference_rssi - loss_threshold) / (10.0 * math.log10(loss_distance / REFERENCE_DISTANCE))
        return cls(name, reference_rssi, n, loss_threshold, loss_threshold + degraded_margin)

    @property
    def loss_distance(self) -> float:
        """Distance beyond which the link is lost (noise-free)."""
        return REFERENCE_DISTANCE * 10.0 ** ((self.reference_rssi - self.loss_threshold)
                                             / (10.0 * self.path_loss_exponent))


def default_links() -> dict[str, LinkModel]:
    """Links fitted to the observed operating bands and loss distances.

    The band floor is used as the loss threshold; the degraded band is the
    5 dB above it.
    """
    links = [
        LinkModel.from_band("transmitter", -40.0, -90.0, 250.0),  # 2.4 GHz R/C
        LinkModel.from_band("wifi", -20.0, -80.0, 250.0),
        LinkModel.from_band("telemetry", -30.0, -120.0, 1000.0),  # 900 MHz modem
    ]
    return {link.name: link for link in links}


def rssi_at(link: LinkModel, distance, rng: np.random.Generator | None = None):
    """Log-distance RSSI in dBm; distances under 1 m are clamped to 1 m.

    Shadowing noise is only added when the link has `noise_std > 0` and an
    explicit generator is passed.
    """
    d = np.maximum(np.asarray(distance, dtype=float), REFERENCE_DISTANCE)
    rssi = link.reference_rssi - 10.0 * link.path_loss_exponent * np.log10(d / REFERENCE_DISTANCE)
    if link.noise_std > 0 and rng is not None:
        rssi = rssi + rng.normal(0.0, link.noise_std, size=np.shape(rssi))
    return float(rssi) if np.ndim(rssi) == 0 else rssi


def link_state(link: LinkModel, rssi: float) -> LinkState:
    if rssi < link.loss_threshold:
        return LinkState.LOST
    if rssi < link.degraded_threshold:
        return LinkState.DEGRADED
    return LinkState.CONNECTED


@dataclass(frozen=True)
class AcousticModel:
    rotor_count: int = 4
    blades_per_rotor: int = 2
    rpm: float = 6700.0
    source_spl: float = 80.0
    harmonics: int = 3
    rolloff: float = 6.0  # dB lost per harmonic order
    rotation_level: float = -10.0  # shaft-rate tone relative to blade-pass

    def __post_init__(self):
        for name in ("rotor_count", "blades_per_rotor", "harmonics"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be an integer >= 1")
        if not self.rpm > 0:
            raise ValidationError("rpm must be > 0")

    @property
    def rotation_frequency(self) -> float:
        return self.rpm / 60.0

    @property
    def blade_pass_frequency(self) -> float:
        return self.blades_per_rotor * self.rpm / 60.0


def tone_set(model: AcousticModel) -> list[tuple[float, float]]:
    """Rotation and blade-pass tones with their harmonics, sorted by frequency.

    Coinciding tones from the two series are merged with a power sum.
    """
    power = {}
    for k in range(1, model.harmonics + 1):
        for order, level in ((k * model.blades_per_rotor, -model.rolloff * (k - 1)),
                             (k, model.rotation_level - model.rolloff * (k - 1))):
            power[order] = power.get(order, 0.0) + 10.0 ** (level / 10.0)
    # Keys are integer multiples of the shaft rate, so merging is exact.
    return [(order * model.rpm / 60.0, 10.0 * math.log10(p)) for order, p in sorted(power.items())]


def spl_at(model: AcousticModel, slant_range) -> float:
    r = np.maximum(np.asarray(slant_range, dtype=float), 1.0)
    spl = model.source_spl - 20.0 * np.log10(r)
    return float(spl) if np.ndim(spl) == 0 else spl


def synthesize(model: AcousticModel, duration: float, sample_rate: float = 8000.0,
               phase_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Tonal pressure signal (arbitrary units) for spectral checks."""
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    phases = np.random.default_rng(phase_seed).uniform(0.0, 2.0 * math.pi, size=64)
    x = np.zeros(n)
    for i, (f, level) in enumerate(tone_set(model)):
        if f < 0.5 * sample_rate:
            x += 10.0 ** (level / 20.0) * np.sin(2.0 * math.pi * f * t + phases[i % 64])
    return t, x
