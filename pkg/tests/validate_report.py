#!/usr/bin/env python3
"""
Script to validate simulation reports: schema completeness and byte-identity of reruns.
"""

import json
import os
import sys

SIM_FIELDS = [
    'policy', 'capacity', 'warmup_requests', 'measured_requests', 'hits', 'hit_bytes',
    'miss_bytes', 'object_hit_ratio', 'byte_hit_ratio', 'byte_miss_ratio',
]
COMPARISON_FIELDS = ['schema_version', 'traffic_reduction_formula', 'reports', 'traffic_reduction_vs_lru']


def check_schema(data, filename):
    """
    Check that a report carries every required field.

    Args:
        data: Parsed report JSON
        filename: Name used in messages

    Returns:
        bool: True if the report is complete
    """
    success = True
    if 'reports' in data:
        missing = [k for k in COMPARISON_FIELDS if k not in data]
        if missing:
            print(f"FAIL: {filename} is missing {', '.join(missing)}")
            success = False
        sims = data.get('reports', [])
    else:
        sims = [data]

    for i, sim in enumerate(sims):
        missing = [k for k in SIM_FIELDS if k not in sim]
        if missing:
            print(f"FAIL: Report {i} in {filename} is missing {', '.join(missing)}")
            success = False
            continue
        if sim['hit_bytes'] + sim['miss_bytes'] < 0 or not 0.0 <= sim['byte_hit_ratio'] <= 1.0:
            print(f"FAIL: Report {i} in {filename} has out-of-range byte counts")
            success = False
    return success


def validate_report(first_path, second_path):
    """
    Validate two report files produced by identical runs.

    Returns:
        bool: True if both are complete and byte-identical
    """
    for path in (first_path, second_path):
        if not os.path.isfile(path):
            print(f"Error: Report {path} does not exist")
            return False

    with open(first_path, 'rb') as f:
        first = f.read()
    with open(second_path, 'rb') as f:
        second = f.read()

    success = True
    if first != second:
        print(f"FAIL: {first_path} and {second_path} differ")
        success = False

    try:
        data = json.loads(first.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        print(f"FAIL: Invalid JSON in {first_path}: {e}")
        return False

    if not check_schema(data, os.path.basename(first_path)):
        success = False
    if success:
        print(f"PASS: {os.path.basename(first_path)}")
    return success


if __name__ == '__main__':
    if len(sys.argv) != 3:
        print("Usage: python validate_report.py first_report.json second_report.json")
        sys.exit(1)

    if validate_report(sys.argv[1], sys.argv[2]):
        print("All checks passed!")
        sys.exit(0)
    else:
        print("Some checks failed.")
        sys.exit(1)
