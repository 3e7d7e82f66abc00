"""Driving the command line tool on the configs in demos/configs.

Runs the batch command over every config, then re-verifies the Root
instance from its emitted flow file without solving again.
"""

import json
from pathlib import Path

from stopgo.cli import main

here = Path(__file__).parent
out = here.parent / "out" / "batch"
code = main(["batch", "--config", str(here / "configs"), "--out", str(out)])
summary = json.loads((out / "summary.json").read_text())
print("batch exit", code, summary["configs"])

flow = out / "root_barrier" / "flow.tsv"
main(["verify", "--config", str(here / "configs" / "root_barrier.yaml"), "--flow", str(flow), "--out", str(out / "reverify")])
