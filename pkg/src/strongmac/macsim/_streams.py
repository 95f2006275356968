"""Counter-based random substreams.

Every random draw in the simulator comes from a Philox generator keyed by
``(seed, purpose, index...)``. Trial ``t`` always sees the same numbers no
matter how trials are batched or split across threads.

Per-trial streams share one Philox key per ``(seed, purpose...)`` and put the
trial index in the top word of the 256-bit counter, so trials never overlap
and no per-trial seed hashing is needed.
"""

import numpy as np

CODEBOOK = 0
MAC_TRIAL = 1
PROFILE_TRIAL = 2
SCAN_CELL = 3
IC_TRIAL = 4
IC_AUX = 5
IC_ANCHOR = 6
IC_INSTANCE = 7


def stream(seed, *key):
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derived_seed(seed, *key):
    """A 63-bit integer seed for a nested experiment."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class TrialStreams:
    """Generator repositioned at the start of trial ``t``'s substream.

    Not thread-safe: create one instance per worker.
    """

    def __init__(self, seed, *key):
        ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
        self._key = ss.generate_state(2, dtype=np.uint64)
        self._bitgen = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bitgen)

    def at(self, trial):
        if trial < 0:
            raise ValueError("trial index must be non-negative")
        self._bitgen.state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array([0, 0, 0, trial], dtype=np.uint64), "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen
