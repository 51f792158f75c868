from typing import List

import numpy as np


def spawn_seeds(seed: int, count: int) -> List[int]:
    """
    Expands a master seed into `count` independent child seeds.

    Children depend only on (seed, index), so jobs run in any order or
    process give the same draws.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]
