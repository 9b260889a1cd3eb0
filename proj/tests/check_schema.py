"""Validates problem files against docs/problem.schema.json.

Usage: check_schema.py SCHEMA FIBREFIX_BINARY WORKDIR FILE...
Also validates problems written by `fibrefix generate` for a few seeds.
"""
import json
import subprocess
import sys
from pathlib import Path

import jsonschema


def main() -> int:
    schema_path, binary, workdir, *files = sys.argv[1:]
    schema = json.loads(Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    validator.check_schema(schema)

    paths = [Path(f) for f in files]
    for seed, atoms, dim in [(1, 4, 2), (2, 1, 1), (3, 9, 3)]:
        out = Path(workdir) / f"gen_{seed}"
        subprocess.run([binary, "generate", "--seed", str(seed), "--atoms", str(atoms), "--dim", str(dim),
                        "--out", str(out)], check=True, stdout=subprocess.DEVNULL)
        paths.append(out / "problem.json")

    failed = 0
    for path in paths:
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        for e in errors:
            print(f"{path}: {e.json_path}: {e.message}")
        failed += bool(errors)
        print(("FAIL " if errors else "ok   ") + str(path))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
