#!/usr/bin/env python3
"""Solve an LP/MILP file with HiGHS and print `name value` lines.

Usage: highs_sol.py MODEL.lp
Prints `infeasible` when HiGHS proves infeasibility and `unknown` otherwise.
"""
import sys

import highspy


def main() -> int:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        print("unknown")
        return 1
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        print("infeasible")
        return 0
    if status != highspy.HighsModelStatus.kOptimal:
        print("unknown")
        return 0
    values = h.getSolution().col_value
    lp = h.getLp()
    for name, v in zip(lp.col_names_, values):
        print(f"{name} {v!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
