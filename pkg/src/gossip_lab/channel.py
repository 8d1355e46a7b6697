"""Binary symmetric channel with flip probability ``1/2 - epsilon``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParameterError


@dataclass(frozen=True)
class NoiseChannel:
    """``epsilon`` in (0, 1/2]; ``epsilon == 0.5`` is the noiseless channel."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise ParameterError(f"epsilon={self.epsilon} outside (0, 1/2]")

    @property
    def flip_prob(self) -> float:
        return 0.5 - self.epsilon

    @property
    def noiseless(self) -> bool:
        return self.epsilon == 0.5

    @classmethod
    def noiseless_channel(cls) -> "NoiseChannel":
        return cls(0.5)


def receive(bits: np.ndarray, u: np.ndarray, ch: NoiseChannel) -> np.ndarray:
    """Channel output for sent ``bits`` given uniforms ``u``.

    The receiver sees 0 iff ``u`` falls below ``P(0 | sent)``, which is
    ``1/2 + eps`` for a sent 0 and ``1/2 - eps`` for a sent 1.  With ``u``
    shared, the output is monotone in the input bit, so coupled runs from
    ordered configurations stay ordered.
    """
    bits = np.asarray(bits, dtype=np.int8)
    p0 = np.where(bits == 0, 0.5 + ch.epsilon, ch.flip_prob)
    return (np.asarray(u) >= p0).astype(np.int8)


def transmit(bit: int, ch: NoiseChannel, rng: np.random.Generator) -> int:
    """Send one bit; exactly one uniform draw is consumed even when noiseless."""
    return int(receive(np.int8(bit), rng.random(), ch))


def transmit_many(bits: np.ndarray, ch: NoiseChannel, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`transmit`, one draw per bit."""
    bits = np.asarray(bits, dtype=np.int8)
    return receive(bits, rng.random(bits.shape), ch)


def observe_probability(bias: int, n: int, ch: NoiseChannel) -> float:
    """Probability that one uniform pull (self included) shows opinion 0.

    A pulled node displays 0 with probability ``(n + bias) / 2n`` and the
    channel keeps the bit with probability ``1/2 + epsilon``, which collapses
    to ``1/2 + epsilon * bias / n``.
    """
    if n < 1 or abs(bias) > n:
        raise ParameterError(f"need |bias| <= n and n >= 1 (bias={bias}, n={n})")
    return 0.5 + ch.epsilon * bias / n
