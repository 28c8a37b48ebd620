import numpy as np


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed from a tuple of non-negative integers.

    Depends only on the keys, never on call order, so grid cells and folds can
    be evaluated in any order or in parallel.
    """
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
