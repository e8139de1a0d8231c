#!/usr/bin/env python3
"""Timing comparison: Hungarian assignment vs brute-force enumeration.

Shows why the solver matters once the paragraph/image grid grows past the
sizes a factorial search can handle.
"""

import itertools
import random
import time

from gensearch.presentation.hungarian import max_weight_assignment


def brute_force(matrix):
    rows, cols = len(matrix), len(matrix[0])
    best = 0.0
    if rows <= cols:
        for perm in itertools.permutations(range(cols), rows):
            best = max(best, sum(matrix[i][perm[i]] for i in range(rows)))
    else:
        for perm in itertools.permutations(range(rows), cols):
            best = max(best, sum(matrix[perm[j]][j] for j in range(cols)))
    return best


def main() -> None:
    rng = random.Random(1)
    print(f"{'n':>3} {'hungarian':>12} {'brute force':>12} {'agree':>6}")
    for n in range(2, 10):
        matrix = [[rng.random() for _ in range(n)] for _ in range(n)]
        t0 = time.perf_counter()
        pairs = max_weight_assignment(matrix)
        hung_total = sum(matrix[i][j] for i, j in pairs)
        t_h = time.perf_counter() - t0

        if n <= 8:
            t0 = time.perf_counter()
            brute_total = brute_force(matrix)
            t_b = time.perf_counter() - t0
            agree = abs(hung_total - brute_total) < 1e-9
            print(f"{n:>3} {t_h*1e3:>10.3f}ms {t_b*1e3:>10.3f}ms {str(agree):>6}")
        else:
            print(f"{n:>3} {t_h*1e3:>10.3f}ms {'(skipped)':>12}")
    for n in (25, 50, 100):
        matrix = [[rng.random() for _ in range(n)] for _ in range(n)]
        t0 = time.perf_counter()
        max_weight_assignment(matrix)
        print(f"{n:>3} {(time.perf_counter()-t0)*1e3:>10.3f}ms {'(too large)':>12}")


if __name__ == "__main__":
    main()
