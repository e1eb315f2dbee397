"""Shared helper: write a golden JSON file with a provenance header."""
import json
import os

GOLDEN = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")


def write_golden(name, script, method, cases):
    os.makedirs(GOLDEN, exist_ok=True)
    doc = {
        "provenance": {"tag": "DERIVED", "script": f"oracles/{script}", "method": method},
        "cases": cases,
    }
    with open(os.path.join(GOLDEN, name), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
