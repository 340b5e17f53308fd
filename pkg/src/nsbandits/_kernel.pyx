# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode loop.

Mirrors the policy classes in ``policies.py`` step for step and reads the
same numpy bit generator through its C interface, so a given Generator state
produces the same arms here and in the pure-Python loop.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport INFINITY, log, sqrt
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t

DEF ETC = 0
DEF EPS_GREEDY = 1
DEF UCB_KNOWN = 2
DEF UCB_ANYTIME = 3


cdef inline double _draw(bitgen_t *g) noexcept nogil:
    return g.next_double(g.state)


cdef inline int _pick(double *vals, int K, int tie_arm, bitgen_t *g) noexcept nogil:
    """0-based argmax; ties go to tie_arm (1-based, 0 = none) if tied, else uniform."""
    cdef double best = vals[0]
    cdef int k, n = 0, j
    for k in range(1, K):
        if vals[k] > best:
            best = vals[k]
    for k in range(K):
        if vals[k] == best:
            n += 1
            j = k
    if n == 1:
        return j
    if tie_arm > 0 and vals[tie_arm - 1] == best:
        return tie_arm - 1
    j = <int>(_draw(g) * n)
    for k in range(K):
        if vals[k] == best:
            if j == 0:
                return k
            j -= 1
    return -1  # unreachable


def run_episode(
    const long[:] seg_end,
    const double[:, :] seg_param,
    const signed char[:, :] seg_bern,
    int K,
    int T,
    int init_rounds,
    int horizon,
    int policy,
    int m,
    double eps,
    int d,
    int tie_arm,
    object bit_generator,
    int[:] arms_out,
    double[:] rewards_out,
    long[:, :] counts_out,
):
    """Play rounds 1..T. Writes 1-based arms, rewards, and per-segment pull
    counts of rounds after ``init_rounds``."""
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("invalid bit generator capsule")
    cdef bitgen_t *g = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")
    if horizon < T:
        raise RuntimeError(f"episode exhausted at round {horizon + 1} (horizon {horizon})")

    cdef long *n = <long *> malloc(K * sizeof(long))
    cdef double *sums = <double *> malloc(K * sizeof(double))
    cdef double *vals = <double *> malloc(K * sizeof(double))
    if n == NULL or sums == NULL or vals == NULL:
        free(n); free(sums); free(vals)
        raise MemoryError()

    cdef int t, k, arm, s = 0, lt = 1, lh, committed = -1, block = 0
    cdef long next_restart
    cdef double r, logterm
    with nogil:
        for k in range(K):
            n[k] = 0
            sums[k] = 0.0
        next_restart = (1 * <long>horizon) // d + 1 if d > 1 else <long>horizon + 1
        lh = <int>(next_restart - 1)
        for t in range(1, T + 1):
            if t == next_restart:
                block += 1
                for k in range(K):
                    n[k] = 0
                    sums[k] = 0.0
                lt = 1
                committed = -1
                next_restart = ((block + 1) * <long>horizon) // d + 1 if block + 1 < d else <long>horizon + 1
                lh = <int>(next_restart - t)
            while t > seg_end[s]:
                s += 1

            if policy == ETC:
                if lt <= m * K:
                    arm = (lt - 1) % K
                else:
                    if committed < 0:
                        for k in range(K):
                            vals[k] = sums[k] / n[k]
                        committed = _pick(vals, K, tie_arm, g)
                    arm = committed
            elif policy == EPS_GREEDY:
                if lt <= K:
                    arm = lt - 1
                elif _draw(g) < eps:
                    arm = <int>(_draw(g) * K)
                else:
                    for k in range(K):
                        vals[k] = sums[k] / n[k]
                    arm = _pick(vals, K, tie_arm, g)
            else:
                logterm = log(<double>lt) if policy == UCB_ANYTIME else log(<double>lh)
                for k in range(K):
                    if n[k] == 0:
                        vals[k] = INFINITY
                    else:
                        vals[k] = sums[k] / n[k] + sqrt(2.0 * logterm / n[k])
                arm = _pick(vals, K, tie_arm, g)

            if seg_bern[s, arm]:
                r = 1.0 if _draw(g) < seg_param[s, arm] else 0.0
            else:
                r = seg_param[s, arm]
            n[arm] += 1
            sums[arm] += r
            lt += 1
            arms_out[t - 1] = arm + 1
            rewards_out[t - 1] = r
            if t > init_rounds:
                counts_out[s, arm] += 1

    free(n)
    free(sums)
    free(vals)
