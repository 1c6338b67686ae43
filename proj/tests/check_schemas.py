"""Validates CLI output for every fixture against the shipped JSON schemas."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main() -> int:
    cli, fixtures, schemas = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    dfd_schema = json.loads((schemas / "dfd.schema.json").read_text())
    trace_schema = json.loads((schemas / "traceability.schema.json").read_text())
    failures = 0
    for app in sorted(p for p in fixtures.iterdir() if p.is_dir()):
        with tempfile.TemporaryDirectory() as out:
            subprocess.run([cli, "--path", str(app), "--out", out, "--format", "json,trace"],
                           check=True, capture_output=True)
            for name, schema in ((f"{app.name}.json", dfd_schema),
                                 (f"{app.name}_traceability.json", trace_schema)):
                document = json.loads((pathlib.Path(out) / name).read_text())
                try:
                    jsonschema.validate(document, schema)
                    print(f"ok {name}")
                except jsonschema.ValidationError as e:
                    failures += 1
                    print(f"invalid {name}: {e.message} at {list(e.absolute_path)}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
