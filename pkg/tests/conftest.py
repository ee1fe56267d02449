"""Shared oracles and test doubles.

The oracles here are deliberately independent of the package's fast paths:
dense mod-2 matrix products, polynomial long division, exhaustive codebook
scans.  Production code must agree with them, never the other way around.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from noisecycle import ChannelModel, DecodeOutcome, NoiseEstimate
from noisecycle.channel import modulate_bpsk


def mod2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense GF(2) product, the reference for all packed arithmetic."""
    return (np.asarray(a, dtype=np.int64) @ np.asarray(b, dtype=np.int64)) % 2


def crc_longdivision(message_bits, poly_bits) -> np.ndarray:
    """Schoolbook polynomial remainder of message * x^deg, as a bit vector."""
    poly = list(poly_bits)
    deg = len(poly) - 1
    work = list(message_bits) + [0] * deg
    for i in range(len(work) - deg):
        if work[i]:
            for j, p in enumerate(poly):
                work[i + j] ^= p
    return np.array(work[-deg:], dtype=np.uint8)


def enumerate_codebook(generator: np.ndarray) -> np.ndarray:
    """All codewords by explicit message loop (message index i -> bits LSB first)."""
    k, n = generator.shape
    words = np.zeros((2 ** k, n), dtype=np.uint8)
    for i in range(2 ** k):
        msg = np.array([(i >> j) & 1 for j in range(k)], dtype=np.uint8)
        words[i] = mod2(msg, generator)
    return words


def fig2_model() -> ChannelModel:
    """Three channels whose best recycling order is unique.

    Raw SNRs (1.1, 1.0, 1.05); correlations chosen so that recycling from
    channel 2 lifts channels 1 and 3 to effective SNRs of exactly 4 and 5,
    making 0->2, 2->1, 2->3 the unique maximum-total order (total 10).
    """
    corr = np.array([
        [1.0, np.sqrt(0.725), 0.7],
        [np.sqrt(0.725), 1.0, np.sqrt(0.79)],
        [0.7, np.sqrt(0.79), 1.0],
    ])
    return ChannelModel(m=3, sigma2=np.ones(3), power=np.array([1.1, 1.0, 1.05]),
                        corr=corr)


@dataclass
class PerfectDecoder:
    """Always returns the codeword it was built with, in one query."""

    codeword: np.ndarray

    def decode(self, code, soft) -> DecodeOutcome:
        est = NoiseEstimate(values=soft.received - modulate_bpsk(self.codeword),
                            source_channel=-1)
        return DecodeOutcome(status="decoded", queries=1, codeword=self.codeword,
                             noise_estimate=est, noise_variance=soft.noise_variance)


@dataclass
class FailingDecoder:
    """Always abandons."""

    queries: int = 5

    def decode(self, code, soft) -> DecodeOutcome:
        est = NoiseEstimate(values=np.zeros(soft.received.size), source_channel=-1)
        return DecodeOutcome(status="abandoned", queries=self.queries, codeword=None,
                             noise_estimate=est, noise_variance=soft.noise_variance)


@dataclass
class RecordingDecoder:
    """Scripted outcome plus a log of every soft block it saw."""

    codeword: np.ndarray
    queries: int
    log: list

    def decode(self, code, soft) -> DecodeOutcome:
        self.log.append(soft)
        est = NoiseEstimate(values=soft.received - modulate_bpsk(self.codeword),
                            source_channel=-1)
        return DecodeOutcome(status="decoded", queries=self.queries,
                             codeword=self.codeword, noise_estimate=est,
                             noise_variance=soft.noise_variance)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
