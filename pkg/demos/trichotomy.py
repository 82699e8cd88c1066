"""Stability and hypercyclicity on F(x) = -x as the multiplier h = -lam F' varies.

Stable exactly when ``lam <= -1/p``; above that the weights decay along both
forward and backward orbits and the semigroup is a hypercyclicity candidate.
"""

from wcstab.lasota import stability_vs_hypercyclicity
from wcstab.report import format_table


def main(p=2.0):
    rows = []
    for lam in (-1.0, -0.75, -0.5, -0.25, 0.0):
        rep = stability_vs_hypercyclicity("lasota", lam, p)
        rows.append([lam, rep.analytic_stable, rep.numeric_status, rep.numeric_candidate, rep.agree,
                     "; ".join(rep.flags)])
    print(format_table(["lam", "analytic stable", "engine", "candidate", "agree", "flags"], rows))


if __name__ == "__main__":
    main()
