"""Per-replication seeds from a master seed.

seed(master, i) = splitmix64(splitmix64(master) ^ splitmix64(i + 1)),
all arithmetic modulo 2**64. splitmix64 is the finalizer of Steele, Lea
and Flood's SplitMix generator; any implementation of it reproduces the
replication streams.
"""

from concurrent.futures import ThreadPoolExecutor

MASK = (1 << 64) - 1


def splitmix64(x):
    z = (x + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def replication_seed(master, index):
    return splitmix64(splitmix64(int(master) & MASK) ^ splitmix64(int(index) + 1))


def ordered_map(fn, items, workers=1):
    """map() over ``items``, optionally on a thread pool; results keep input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
