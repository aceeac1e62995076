"""Small statistics kernel: Mann-Whitney U with tie handling, population
variance, median.

The U test supports an exact null distribution computed over the observed
(possibly tied) pooled values, used automatically for small samples, and a
tie-corrected normal approximation with continuity correction otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

# Combined sample size up to which the exact permutation distribution is used.
EXACT_ENUMERATION_LIMIT = 16


@dataclass(frozen=True)
class UTestResult:
    u_a: float
    u_b: float
    n_a: int
    n_b: int
    p_value: float
    method: str  # "exact" | "normal_approx"


def _u_statistic(sample_a, sample_b):
    """U for sample_a: wins count 1, ties count 1/2. Returns twice the value
    as an exact integer to avoid float accumulation."""
    twice_u = 0
    for a in sample_a:
        for b in sample_b:
            if a > b:
                twice_u += 2
            elif a == b:
                twice_u += 1
    return twice_u


def _exact_null_counts(pooled, n_a):
    """Distribution of 2*U_a under random assignment of n_a of the pooled
    values to group A. Returns {twice_u: number_of_assignments}.

    Walks tie groups in increasing value order, tracking how many A slots were
    spent on smaller values; each placement of k A's in a group of size m
    beats every B below it and half-ties the m - k B's alongside it.
    """
    groups = []
    for v in sorted(set(pooled)):
        groups.append(sum(1 for x in pooled if x == v))

    states = {(0, 0): 1}  # (a_used, twice_u) -> weight
    n_below = 0
    for m in groups:
        nxt = {}
        for (a_used, twice_u), weight in states.items():
            b_below = n_below - a_used
            for k in range(0, min(m, n_a - a_used) + 1):
                key = (a_used + k, twice_u + 2 * k * b_below + k * (m - k))
                nxt[key] = nxt.get(key, 0) + weight * comb(m, k)
        n_below += m
        states = nxt

    return {tu: w for (a_used, tu), w in states.items() if a_used == n_a}


def mann_whitney_u(sample_a, sample_b, alternative="two_sided", method="auto"):
    """Two-sided Mann-Whitney U test.

    u_a counts pairs (a, b) with a > b, plus half of the tied pairs. The
    p-value is exact (full enumeration over the observed pooled values) when
    n_a + n_b <= 16, otherwise a tie-corrected normal approximation with
    continuity correction. `method` may force "exact" or "normal_approx".
    """
    if alternative != "two_sided":
        raise ValueError(f"unsupported alternative: {alternative}")
    if not sample_a or not sample_b:
        raise ValueError("both samples must be non-empty")
    if method not in ("auto", "exact", "normal_approx"):
        raise ValueError(f"unknown method: {method}")

    n_a, n_b = len(sample_a), len(sample_b)
    twice_u = _u_statistic(sample_a, sample_b)
    u_a = twice_u / 2
    u_b = n_a * n_b - u_a

    if method == "auto":
        method = "exact" if n_a + n_b <= EXACT_ENUMERATION_LIMIT else "normal_approx"

    if method == "exact":
        counts = _exact_null_counts(list(sample_a) + list(sample_b), n_a)
        center = n_a * n_b  # = E[2U]
        observed_dev = abs(twice_u - center)
        extreme = sum(w for tu, w in counts.items() if abs(tu - center) >= observed_dev)
        p = extreme / comb(n_a + n_b, n_a)
    else:
        p = _normal_approx_p(list(sample_a) + list(sample_b), n_a, n_b, u_a)

    return UTestResult(u_a=u_a, u_b=u_b, n_a=n_a, n_b=n_b,
                       p_value=min(1.0, p), method=method)


def _normal_approx_p(pooled, n_a, n_b, u_a):
    n = n_a + n_b
    tie_term = 0.0
    for v in set(pooled):
        t = sum(1 for x in pooled if x == v)
        tie_term += t ** 3 - t
    var = (n_a * n_b / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return 1.0  # all pooled values identical
    mu = n_a * n_b / 2.0
    z = max(0.0, abs(u_a - mu) - 0.5) / math.sqrt(var)
    return math.erfc(z / math.sqrt(2))


def population_variance(values):
    """Mean squared deviation from the mean, dividing by the count."""
    if not values:
        raise ValueError("population_variance of empty list")
    if min(values) == max(values):
        return 0.0  # exact zero for constant lists, no float residue
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def population_std(values):
    return math.sqrt(population_variance(values))


def median(values):
    """Middle element, or the mean of the two middle elements."""
    if not values:
        raise ValueError("median of empty list")
    data = sorted(values)
    n = len(data)
    mid = n // 2
    if n % 2:
        return data[mid]
    return (data[mid - 1] + data[mid]) / 2
