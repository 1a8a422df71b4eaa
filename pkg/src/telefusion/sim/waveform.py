from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ComplexWaveform:
    """Sampled complex optical field.

    ``samples`` is normalized so that ``mean(|s|^2)`` is the optical power in
    mW. ``center_offset`` is the offset of this field's frequency origin from
    the simulation center, in Hz.
    """

    samples: np.ndarray
    sample_rate: float
    center_offset: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("samples must be a non-empty 1-D sequence")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def power(self) -> float:
        """Mean power in mW."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def freqs(self) -> np.ndarray:
        """FFT-ordered baseband frequency grid in Hz."""
        return np.fft.fftfreq(self.samples.size, d=1.0 / self.sample_rate)

    def replace(self, samples: np.ndarray) -> "ComplexWaveform":
        return ComplexWaveform(samples, self.sample_rate, self.center_offset, dict(self.meta))

    def scaled(self, a: complex) -> "ComplexWaveform":
        return self.replace(self.samples * a)


class PropagationError(RuntimeError):
    """Raised when a propagated field becomes non-finite."""
