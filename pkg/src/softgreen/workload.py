"""
Prime-counting benchmark: semantics, iteration profiling, range partitioning.

The benchmark's primality test is

    int isPrime(int v) {
        if (v >= 0 && v <= 3) return 1;
        if (v % 2 == 0) return 0;
        for (i = 3; (i*i) < v; i++)
            if (v % i == 0) return 0;
        return 1;
    }

`PrimalityMode.PAPER` executes it verbatim (0, 1 and odd prime squares
come out "prime"); `PrimalityMode.CORRECTED` is mathematical primality
with the guard `i*i <= v`.

`LoopBound.LINEAR` replaces the guard with `i < v`. Verdicts are then
mathematically right for odd v > 3, but a prime costs v - 3 iterations
instead of about sqrt(v). It exists for timing studies: the measured
accelerator run times line up with this loop, not with the listing's.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from softgreen.errors import DomainError

SEMANTICS_VERSION = 1
REFERENCE_N = 10**6


class PrimalityMode(enum.Enum):
    PAPER = "paper"
    CORRECTED = "corrected"


class LoopBound(enum.Enum):
    SQRT = "sqrt"
    LINEAR = "linear"


class PartitionScheme(enum.Enum):
    BLOCK = "block"
    INTERLEAVED = "interleaved"


def is_prime(v: int, mode: PrimalityMode = PrimalityMode.PAPER) -> bool:
    if v < 0:
        raise DomainError(f"v must be >= 0, got {v}")
    if mode is PrimalityMode.PAPER:
        if v <= 3:
            return True
        if v % 2 == 0:
            return False
        i = 3
        while i * i < v:
            if v % i == 0:
                return False
            i += 1
        return True
    if v < 2:
        return False
    if v <= 3:
        return True
    if v % 2 == 0:
        return False
    i = 3
    while i * i <= v:
        if v % i == 0:
            return False
        i += 1
    return True


def _isqrt(values: np.ndarray) -> np.ndarray:
    root = np.floor(np.sqrt(values.astype(np.float64))).astype(np.int64)
    root -= root * root > values
    root += (root + 1) * (root + 1) <= values
    return root


def first_odd_divisors(values: np.ndarray) -> np.ndarray:
    """Smallest divisor d >= 3 with d*d <= v for each odd v > 3, else 0.

    Trial division run in lockstep over the whole array; candidates drop
    out as soon as they are decided.
    """
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros(values.shape, dtype=np.int64)
    live = np.flatnonzero((values > 3) & (values % 2 == 1))
    live_v = values[live]
    d = 3
    while live.size:
        keep = d * d <= live_v
        live, live_v = live[keep], live_v[keep]
        hit = live_v % d == 0
        out[live[hit]] = d
        live, live_v = live[~hit], live_v[~hit]
        d += 2
    return out


def evaluate_candidates(
    values: np.ndarray, mode: PrimalityMode, bound: LoopBound = LoopBound.SQRT
) -> tuple[np.ndarray, np.ndarray]:
    """Verdicts and inner-loop iteration counts for each candidate.

    An iteration is one entry into the loop body. Both results match
    running the benchmark function on every value.
    """
    v = np.asarray(values, dtype=np.int64)
    if v.size and v.min() < 0:
        raise DomainError("candidates must be >= 0")
    q = first_odd_divisors(v)
    looped = (v > 3) & (v % 2 == 1)
    iterations = np.zeros(v.shape, dtype=np.int64)

    if bound is LoopBound.LINEAR:
        composite = q > 0
        iterations[looped] = np.where(composite, q - 2, v - 3)[looped]
    elif mode is PrimalityMode.PAPER:
        composite = (q > 0) & (q * q < v)
        open_run = np.maximum(_isqrt(np.maximum(v - 1, 0)) - 2, 0)
        iterations[looped] = np.where(composite, q - 2, open_run)[looped]
    else:
        composite = q > 0
        open_run = np.maximum(_isqrt(v) - 2, 0)
        iterations[looped] = np.where(composite, q - 2, open_run)[looped]

    verdict = looped & ~composite
    small = v <= 3
    if mode is PrimalityMode.PAPER:
        verdict |= small
    else:
        verdict |= small & (v >= 2)
    return verdict, iterations


def candidate_range(n: int, range_start: int = 2, faithful_driver: bool = False) -> range:
    """Values handed to the primality test.

    The published OpenMP driver loops while `i*i < n`; `faithful_driver`
    keeps that bound, otherwise the whole interval [range_start, n) is used.
    """
    stop = math.isqrt(n - 1) + 1 if faithful_driver and n > 0 else n
    if stop <= range_start:
        raise DomainError(f"empty candidate range [{range_start}, {stop})")
    return range(range_start, stop)


def count_primes(
    n: int,
    mode: PrimalityMode = PrimalityMode.CORRECTED,
    range_start: int = 2,
    bound: LoopBound = LoopBound.SQRT,
    faithful_driver: bool = False,
) -> int:
    if n <= range_start:
        raise DomainError(f"n must exceed range_start ({n} <= {range_start})")
    r = candidate_range(n, range_start, faithful_driver)
    verdict, _ = evaluate_candidates(np.arange(r.start, r.stop, dtype=np.int64), mode, bound)
    return int(verdict.sum())


@dataclass(frozen=True, eq=False)
class WorkloadProfile:
    """Per-candidate loop work for one benchmark run.

    `iterations[k]` and `invokes[k]` describe candidate `range_start + k`;
    `invokes` marks candidates that get past the software pre-checks and
    reach the loop (the part an accelerator takes over).
    """

    n: int
    mode: Optional[PrimalityMode]
    bound: Optional[LoopBound]
    range_start: int
    iterations: np.ndarray = field(repr=False)
    invokes: np.ndarray = field(repr=False)
    ops_per_iteration: float
    primes: int = 0

    def __post_init__(self):
        for arr in (self.iterations, self.invokes):
            arr.setflags(write=False)
        if self.iterations.shape != self.invokes.shape:
            raise DomainError("iterations and invokes must have the same length")

    @property
    def candidates(self) -> int:
        return int(self.iterations.size)

    @property
    def total_iterations(self) -> int:
        return int(self.iterations.sum())

    @property
    def total_ops(self) -> float:
        return self.total_iterations * self.ops_per_iteration

    @property
    def calls(self) -> np.ndarray:
        """Iteration counts of the candidates that reach the loop, in order."""
        return self.iterations[self.invokes]

    @classmethod
    def synthetic(
        cls,
        iterations: Sequence[int],
        ops_per_iteration: float = 1.0,
        n: Optional[int] = None,
    ) -> "WorkloadProfile":
        """A profile in which every listed candidate reaches the loop."""
        its = np.asarray(iterations, dtype=np.int64).copy()
        if its.size and its.min() < 0:
            raise DomainError("iteration counts must be >= 0")
        return cls(
            n=len(its) if n is None else n,
            mode=None,
            bound=None,
            range_start=0,
            iterations=its,
            invokes=np.ones(its.shape, dtype=bool),
            ops_per_iteration=ops_per_iteration,
        )


def _profile_arrays(
    n: int, mode: PrimalityMode, bound: LoopBound, range_start: int, faithful_driver: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = candidate_range(n, range_start, faithful_driver)
    v = np.arange(r.start, r.stop, dtype=np.int64)
    verdict, iterations = evaluate_candidates(v, mode, bound)
    return verdict, iterations, (v > 3) & (v % 2 == 1)


@functools.lru_cache(maxsize=None)
def reference_ops_per_iteration(mode: PrimalityMode, bound: LoopBound) -> float:
    """Operations per loop iteration implied by the measured operation total.

    Chosen so that the 10^6-candidate run performs exactly the operation
    count shared by every measured efficiency row.
    """
    from softgreen.calibration import load_dataset, total_ops_constant

    _, iterations, _ = _profile_arrays(REFERENCE_N, mode, bound, 2, False)
    return total_ops_constant(load_dataset()) / int(iterations.sum())


def profile(
    n: int,
    mode: PrimalityMode = PrimalityMode.PAPER,
    ops_per_iteration: Optional[float] = None,
    bound: LoopBound = LoopBound.SQRT,
    range_start: int = 2,
    faithful_driver: bool = False,
) -> WorkloadProfile:
    if n < 4:
        raise DomainError(f"n must be >= 4, got {n}")
    verdict, iterations, invokes = _profile_arrays(n, mode, bound, range_start, faithful_driver)
    if ops_per_iteration is None:
        ops_per_iteration = reference_ops_per_iteration(mode, bound)
    return WorkloadProfile(
        n=n,
        mode=mode,
        bound=bound,
        range_start=range_start,
        iterations=iterations,
        invokes=invokes,
        ops_per_iteration=float(ops_per_iteration),
        primes=int(verdict.sum()),
    )


@dataclass(frozen=True)
class Partition:
    core_index: int
    start: int
    stop: int
    step: int = 1

    def members(self) -> range:
        return range(self.start, self.stop, self.step)

    def __len__(self) -> int:
        return len(self.members())


def partition_range(
    n: int,
    cores: int,
    scheme: PartitionScheme = PartitionScheme.BLOCK,
    range_start: int = 2,
) -> list[Partition]:
    """Split [range_start, n) across `cores` workers.

    BLOCK gives contiguous chunks whose sizes differ by at most one;
    INTERLEAVED deals values round-robin (stride = cores).
    """
    if cores < 1:
        raise DomainError(f"cores must be >= 1, got {cores}")
    if n <= range_start:
        raise DomainError(f"empty range [{range_start}, {n})")
    if scheme is PartitionScheme.INTERLEAVED:
        return [Partition(k, range_start + k, n, cores) for k in range(cores)]
    size, extra = divmod(n - range_start, cores)
    parts, lo = [], range_start
    for k in range(cores):
        hi = lo + size + (1 if k < extra else 0)
        parts.append(Partition(k, lo, hi))
        lo = hi
    return parts


def evaluate_partition(
    part: Partition, mode: PrimalityMode, bound: LoopBound = LoopBound.SQRT
) -> tuple[int, int]:
    """(primes, loop iterations) for the values of one partition."""
    r = part.members()
    v = np.arange(r.start, r.stop, r.step, dtype=np.int64)
    verdict, iterations = evaluate_candidates(v, mode, bound)
    return int(verdict.sum()), int(iterations.sum())


def count_partitioned(
    n: int,
    mode: PrimalityMode,
    cores: int,
    scheme: PartitionScheme = PartitionScheme.BLOCK,
    bound: LoopBound = LoopBound.SQRT,
    range_start: int = 2,
    workers: int = 1,
) -> tuple[int, int]:
    """Evaluate each partition (optionally on a thread pool) and sum the results."""
    parts = partition_range(n, cores, scheme, range_start)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda p: evaluate_partition(p, mode, bound), parts))
    return sum(r[0] for r in results), sum(r[1] for r in results)


# -- persistence --------------------------------------------------------------

_HEADER_KEYS = ("n", "mode", "bound", "range_start", "faithful_driver",
                "ops_per_iteration", "candidates", "total_iterations", "primes")


def save_profile(prof: WorkloadProfile, path: str | Path, faithful_driver: bool = False) -> None:
    if prof.mode is None or prof.bound is None:
        raise DomainError("only benchmark profiles can be persisted")
    header = {
        "format": "softgreen-profile",
        "semantics_version": SEMANTICS_VERSION,
        "n": prof.n,
        "mode": prof.mode.value,
        "bound": prof.bound.value,
        "range_start": prof.range_start,
        "faithful_driver": int(faithful_driver),
        "ops_per_iteration": repr(prof.ops_per_iteration),
        "candidates": prof.candidates,
        "total_iterations": prof.total_iterations,
        "primes": prof.primes,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="ascii") as fh:
        for key, value in header.items():
            fh.write(f"{key} = {value}\n")
        fh.write("---\n")
        fh.write("\n".join(map(str, prof.iterations.tolist())))
        fh.write("\n")
    tmp.replace(path)


def load_profile(path: str | Path) -> WorkloadProfile:
    text = Path(path).read_text(encoding="ascii")
    head, _, body = text.partition("---\n")
    meta = {}
    for line in head.splitlines():
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    if meta.get("format") != "softgreen-profile":
        raise DomainError(f"{path}: not a profile file")
    if int(meta.get("semantics_version", -1)) != SEMANTICS_VERSION:
        raise DomainError(f"{path}: semantics version {meta.get('semantics_version')} is stale")
    missing = [k for k in _HEADER_KEYS if k not in meta]
    if missing:
        raise DomainError(f"{path}: missing keys {missing}")
    iterations = np.array(body.split(), dtype=np.int64)
    start = int(meta["range_start"])
    v = np.arange(start, start + iterations.size, dtype=np.int64)
    prof = WorkloadProfile(
        n=int(meta["n"]),
        mode=PrimalityMode(meta["mode"]),
        bound=LoopBound(meta["bound"]),
        range_start=start,
        iterations=iterations,
        invokes=(v > 3) & (v % 2 == 1),
        ops_per_iteration=float(meta["ops_per_iteration"]),
        primes=int(meta["primes"]),
    )
    if (prof.candidates, prof.total_iterations) != (
        int(meta["candidates"]), int(meta["total_iterations"])
    ):
        raise DomainError(f"{path}: body does not match header totals")
    return prof


def cached_profile(
    n: int,
    mode: PrimalityMode = PrimalityMode.PAPER,
    bound: LoopBound = LoopBound.SQRT,
    cache_dir: Optional[str | Path] = None,
    range_start: int = 2,
    faithful_driver: bool = False,
) -> WorkloadProfile:
    """`profile` with the default calibration, memoized on disk when `cache_dir` is given."""
    if cache_dir is None:
        return profile(n, mode, bound=bound, range_start=range_start,
                       faithful_driver=faithful_driver)
    driver = "faithful" if faithful_driver else "full"
    name = f"profile-n{n}-{mode.value}-{bound.value}-s{range_start}-{driver}-v{SEMANTICS_VERSION}.txt"
    path = Path(cache_dir) / name
    if path.exists():
        try:
            return load_profile(path)
        except (DomainError, ValueError):
            path.unlink()
    prof = profile(n, mode, bound=bound, range_start=range_start, faithful_driver=faithful_driver)
    save_profile(prof, path, faithful_driver)
    return prof
