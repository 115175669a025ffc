"""Solve an exported LP with HiGHS and print its status and objective.

    hubforge run --scenario methane --horizon 168 --export-lp m.lp --out r.json
    python3 scripts/highs_check.py m.lp r.json
"""
import json
import sys

import highspy


def main():
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        sys.exit(f"HiGHS could not read {sys.argv[1]}")
    h.run()
    obj = h.getInfo().objective_function_value
    print(f"status {h.modelStatusToString(h.getModelStatus())}, objective {obj:.12g}")
    if len(sys.argv) > 2:
        ours = json.load(open(sys.argv[2]))["total_cost"]
        rel = abs(obj - ours) / (1 + abs(ours))
        print(f"report total_cost {ours:.12g}, relative difference {rel:.1e}")
        sys.exit(0 if rel <= 1e-6 else 1)


if __name__ == "__main__":
    main()
