# %% [markdown]
# # Driving the checks from the command line
#
# The same suites are reachable through `xishift`. Here the entry point is
# called in-process so the demo runs anywhere the package is installed.

# %%
import json
import tempfile
from pathlib import Path

from xishift.cli import main

doc = {"kind": "pair", "H0": [[0, 0], [0, 2]], "V": [[-1, 0], [0, 0]]}
path = Path(tempfile.mkdtemp()) / "gap.json"
path.write_text(json.dumps(doc))

# %%
code = main(["verify", "--in", str(path), "--suites", "gap,ssf", "--grid", "-0.9,-0.1,3"])
print("exit status", code)

# %%
main(["ssf", "--in", str(path), "--grid", "-2,3,6", "--eps", "0,0.1", "--format", "csv"])

# %%
main(["flow", "--random", "4", "--seed", "2"])
