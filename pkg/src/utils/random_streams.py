"""
Reproducible random streams.

Each replica or sample block owns one numpy Generator derived from the
experiment seed and its index, so results do not depend on the number
of workers or on scheduling order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from tqdm import tqdm

from ..config.settings import SHOW_PROGRESS_BAR, worker_count

T = TypeVar("T")
R = TypeVar("R")


def derive_stream(seed: int, index: int) -> np.random.Generator:
    """Generator for stream `index` of experiment `seed`."""
    if seed < 0 or index < 0:
        raise ValueError("Seed and stream index must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def ordered_map(func: Callable[[T], R], items: Sequence[T], description: str = "",
                workers: Optional[int] = None) -> List[R]:
    """
    Apply func to every item and return results in item order.

    Runs on a thread pool when the worker environment variable asks for
    more than one worker, sequentially (with a progress bar) otherwise.
    """
    workers = workers if workers is not None else worker_count()
    disable = not SHOW_PROGRESS_BAR or len(items) < 2
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(func, items), total=len(items), desc=description, disable=disable))
    return [func(item) for item in tqdm(items, desc=description, disable=disable)]


def chunk_ranges(total: int, chunk: int) -> Iterable[range]:
    for start in range(0, total, chunk):
        yield range(start, min(start + chunk, total))
