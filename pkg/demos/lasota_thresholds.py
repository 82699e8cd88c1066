"""Closed-form thresholds for the cell-population equation against the classifier.

Run with ``python3 demos/lasota_thresholds.py``.  Prints one table per space and
the bisection estimate of each flip point.
"""

from wcstab.lasota import bisect_threshold, threshold_sweep
from wcstab.report import format_table

HEADER = ["r", "p", "c", "threshold", "analytic", "numeric", "agree"]


def main():
    for space, rs in (("Lp", (1, 2, 3)), ("W1p_star", (1, 2))):
        rows = threshold_sweep(rs=rs, ps=(1.0, 2.0, 4.0), space=space)
        print(f"[{space}]")
        print(format_table(HEADER, [[r[k] for k in HEADER] for r in rows]))
        print()
    print("bisection (r, p, space): flip vs threshold")
    for r, p, space in ((1, 2.0, "Lp"), (2, 1.0, "Lp"), (1, 2.0, "W1p_star"), (2, 2.0, "W1p_star")):
        b = bisect_threshold(r, p, space)
        print(f"  {r} {p} {space:<9} flip = {b['flip']:.4f}  threshold = {b['threshold']:.4f}")


if __name__ == "__main__":
    main()
