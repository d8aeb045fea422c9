"""Run the CLI's model1d command and validate the manifest it writes."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main(cli, schema_path):
    schema = json.loads(Path(schema_path).read_text())
    with tempfile.TemporaryDirectory() as out:
        subprocess.run([cli, "model1d", "--out", out, "--quiet"], check=True)
        manifest = json.loads((Path(out) / "manifest.json").read_text())
    jsonschema.validate(manifest, schema)
    if manifest["kind"] != "model1d" or not manifest["all_passed"]:
        sys.exit("unexpected manifest contents")
    # A broken manifest must be rejected.
    broken = dict(manifest)
    del broken["assertions"]
    try:
        jsonschema.validate(broken, schema)
    except jsonschema.ValidationError:
        return
    sys.exit("schema accepted a manifest without assertions")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
