"""The translation and contraction examples, with the evidence behind each verdict.

The heavy-tailed weight ``(1 + |x - 1|)^-3`` under ``F = 1 - x`` is included on
purpose: the transported weight blows up next to the equilibrium, so the engine
reports Unstable, and the sup curve printed below shows the linear growth in t.
"""

import numpy as np

from wcstab import WeightEvolution, classify, parse_problem

CASES = {
    "translation, rho = exp(x)": "family = translation\nrho_expr = exp(x)\n",
    "translation, rho = 1": "family = translation\n",
    "F = 1 - x, rho = (1+|x-1|)^-3": "family = affine\nslope = -1\noffset = 1\nrho_expr = (1+abs(x-1))^(-3)\n",
}


def main():
    for name, doc in CASES.items():
        pr = parse_problem(doc)
        v = classify(pr)
        print(f"{name}: {v.status}")
        for c in v.criteria:
            print(f"    {c.id}: {c.status}")
        curve = WeightEvolution(pr).sup_curve(np.arange(0.0, 21.0, 5.0))
        print("    log sup rho_t/rho:", np.round(curve.log_sup, 3).tolist())


if __name__ == "__main__":
    main()
