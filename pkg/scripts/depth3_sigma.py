"""Compare the two routes to the depth-3 correction terms sigma_1, sigma_2.

The partition formula (a signed sum over contiguous compositions) is what the
cocycle checker uses.  The second route splits the integration path at
g^{-1} i inf.  At depth 2 the two coincide; at depth 3 the gap is printed so it
can be inspected, nothing is asserted.
"""
import argparse

from periodlab.cocycles import FunctionModule, PeriodFamily, sigma_partition
from periodlab.congruence_group import random_word
from periodlab.hp_kernel import PrecisionBudget, workdps
from periodlab.modular_forms import make_delta


def gap(fam, j, g, dps):
    a = fam.module.flatten(sigma_partition(fam, j, g))
    b = fam.module.flatten(fam.sigma_chen(j, g))
    with workdps(dps):
        d = max(float(abs(x - y).mid()) for x, y in zip(a, b))
        s = max(float(abs(y).mid()) for y in b) or 1.0
    return d / s


def main():
    p = argparse.ArgumentParser(description="sigma_j route comparison at depth 3")
    p.add_argument("--digits", type=int, default=25)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    a = p.parse_args()
    budget = PrecisionBudget(a.digits)
    delta = make_delta()
    k = 0
    print("gamma                      j   relative gap")
    for i in range(a.count):
        g = random_word(1, 6, a.seed * 1000 + k)
        while g.c == 0:
            k += 1
            g = random_word(1, 6, a.seed * 1000 + k)
        k += 1
        fam = PeriodFamily([delta] * 3, FunctionModule(), budget)
        for j in (1, 2):
            print(f"{str(g):26s} {j}   {gap(fam, j, g, budget.working_dps):.3e}")


if __name__ == "__main__":
    main()
