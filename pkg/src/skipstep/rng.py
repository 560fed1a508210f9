"""Deterministic random source built on counter-based Philox streams.

Algorithm (fixed for reproducibility): every stream is a numpy
``Generator`` over the ``Philox4x64-10`` counter-based bit generator, keyed
by the 128-bit pair ``(root seed, stream id)``, and Gaussian variates use
numpy's ziggurat ``standard_normal``. Identical seed plus identical call
sequence therefore gives bit-identical draws, and any stream can be
reconstructed from ``(seed, stream id)`` alone, independent of what was
drawn from other streams.

Stream-id conventions:

* samplers key the noise that creates the state at timestep ``t`` by
  stream id ``t`` itself (the initial ``x_T`` uses stream id ``T``, which
  no denoising step targets);
* ids at the top of the 64-bit range are reserved for internal consumers
  (sequential draws, model init, metric projections, reference data).

Parallel workers must not share a source: ``derive(worker_id)`` produces
an independent child source whose root seed is the first 64-bit word of
``numpy.random.SeedSequence((seed, worker_id))``.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

_MASK64 = 2**64 - 1

# reserved stream ids (samplers use ids in [0, T], far below these)
MAIN_STREAM = _MASK64
MODEL_INIT_STREAM = _MASK64 - 1
PROJECTION_STREAM = _MASK64 - 2
REFERENCE_STREAM = _MASK64 - 3


class RandomSource:
    """Seeded Gaussian source with sequential and keyed-stream access.

    The sequential methods (``normal``, ``uniform_int``) consume the main
    stream and are meant for single-owner loops such as training. The
    ``stream`` method returns an independent generator keyed by
    ``(seed, stream_id)`` without touching the main stream, which is what
    the shared-seed sampler protocol relies on.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._main = self.stream(MAIN_STREAM)

    def stream(self, stream_id: int) -> Generator:
        """Fresh generator for (seed, stream_id); independent of main-stream use."""
        key = np.array([self.seed, int(stream_id)], dtype=np.uint64)
        return Generator(Philox(key=key))

    def normal(self, shape) -> np.ndarray:
        """Standard-normal draw from the main sequential stream."""
        return self._main.standard_normal(shape)

    def uniform_int(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], inclusive, from the main stream."""
        return int(self._main.integers(low, high + 1))

    def index_batch(self, n: int, size: int) -> np.ndarray:
        """Uniform indices in [0, n), with replacement, from the main stream."""
        return self._main.integers(0, n, size=size)

    def derive(self, worker_id: int) -> "RandomSource":
        """Independent child source for worker ``worker_id`` (documented rule)."""
        child_seed = SeedSequence(entropy=(self.seed, int(worker_id))).generate_state(
            1, np.uint64
        )[0]
        return RandomSource(int(child_seed))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed})"
