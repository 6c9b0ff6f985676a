#!/usr/bin/env python3
"""Print the slot-correlated model's joint table and both factorization verdicts.

The point of the exercise: given the slot, each station's instrument value is
deterministic and the per-slot product form holds trivially; pooled over slots
the two values are perfectly correlated and the product form fails.
"""
import math

from eprsim import check_factorization, s1, s2, tabulate_joint, zoo_model
from eprsim.util import fmt12


def main():
    model = zoo_model("hp_time_correlated")
    table = tabulate_joint(model, s1(0.0), s2(math.pi / 4))

    print(f"model: {model.name}   slots: {model.grid.slot_count}")
    print("joint table (value1, value2, state, slot -> probability):")
    for key in sorted(table.entries, key=str):
        print(f"  {key} -> {fmt12(table.entries[key])}")

    for mode in ("given_lambda", "given_lambda_and_m"):
        report = check_factorization(table, mode, tol=1e-9)
        verdict = "pass" if report.passed else "FAIL"
        print(
            f"{mode:22s} {verdict}  max deviation = {fmt12(report.max_deviation)}  "
            f"total variation = {fmt12(report.max_total_variation)}"
        )


if __name__ == "__main__":
    main()
