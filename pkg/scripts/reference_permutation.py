#!/usr/bin/env python3
"""Standalone permutation reference for perturbation fixtures.

Spells out the documented generator (SplitMix64 seeding xoshiro256**,
rejection-sampled bounds, descending Fisher-Yates) with no package
imports, so fixture expectations can be recomputed independently.

Usage: reference_permutation.py SEED N   -> prints the permutation of range(N)
"""

import sys

M = (1 << 64) - 1


def perm(seed, n):
    s, sm = [], seed & M
    for _ in range(4):
        sm = (sm + 0x9E3779B97F4A7C15) & M
        z = sm
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
        s.append(z ^ (z >> 31))

    def u64():
        r = ((((s[1] * 5) & M) << 7 | ((s[1] * 5) & M) >> 57) & M) * 9 & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = ((s[3] << 45) | (s[3] >> 19)) & M
        return r

    def below(bound):
        lim = M + 1 - ((M + 1) % bound)
        while True:
            d = u64()
            if d < lim:
                return d % bound

    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


if __name__ == "__main__":
    print(perm(int(sys.argv[1]), int(sys.argv[2])))
