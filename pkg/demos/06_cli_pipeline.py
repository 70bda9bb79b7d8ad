# ---
# jupyter:
#   jupytext:
#     formats: py:percent
# ---

# %% [markdown]
# # File formats and the command line
#
# Everything above is also available from the `klbounds` command. The
# pipeline passes files between steps: a model document (JSON), a
# correlator CSV, bounds CSVs with a metadata sidecar, and result
# documents. This script drives the same entry point the console script
# uses, `klbounds.cli.run`, so it can be run anywhere. Each `run([...])`
# line corresponds to a shell command `klbounds ...`.

# %%
import json
from pathlib import Path

import numpy as np

from klbounds import SpectralModel
from klbounds.cli import run
from klbounds.io import read_bounds_csv, write_model

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

s = np.linspace(9.0, 40.0, 200)
write_model(SpectralModel.from_shape(0.9, 1.0, 9.0, s, ((s - 9.0) * (40.0 - s)) ** 2),
            OUT / "model.json")

# %% [markdown]
# `klbounds gen --model model.json --x-lo 1e-5 --x-hi 3 --n 100 --out corr.csv`

# %%
run(["gen", "--model", str(OUT / "model.json"), "--x-lo", "1e-5", "--x-hi", "3",
     "--n", "100", "--out", str(OUT / "corr.csv")])
print((OUT / "corr.csv").read_text().splitlines()[:3])

# %% [markdown]
# Shared settings can live in a config document. Flags override it key by
# key. Unknown keys are rejected, and every problem is listed at once.

# %%
cfg = {"input": {"correlator": str(OUT / "corr.csv")}, "grid": {"N_v": 2000}}
bad = {"input": cfg["input"], "grid": {"N_v": 2000, "N_w": 5}}
(OUT / "bad.json").write_text(json.dumps(bad, indent=2))
print("bad config exit code:", run(["bound-rho", "--config", str(OUT / "bad.json"),
                                    "--mu2", "0:20:3"]))
(OUT / "run.json").write_text(json.dumps(cfg, indent=2))

# %% [markdown]
# `klbounds bound-rho --config run.json --slack 1e-5 --sigma2 0.01 --mu2 0:20:41`

# %%
run(["bound-rho", "--config", str(OUT / "run.json"), "--slack", "1e-5", "--sigma2", "0.01",
     "--mu2", "0:20:41", "--out", str(OUT / "rho.csv")])
table = read_bounds_csv(OUT / "rho.csv")
print(table.metadata)
print((OUT / "rho.csv").read_text().splitlines()[:3])

# %% [markdown]
# A slack that is too small for the data is reported with exit status 2,
# distinct from crashes (status 1).

# %%
print("exit code:", run(["min-slack", "--config", str(OUT / "run.json"), "--delta-hi", "1e-14",
                         "--out", str(OUT / "ms.json")]))

# %% [markdown]
# Gap bootstrap, the Z window scan, and a plot of the bounds table.

# %%
run(["gap", "--config", str(OUT / "run.json"), "--threshold-factor", "9",
     "--out", str(OUT / "gap.json")])
gap = json.loads((OUT / "gap.json").read_text())
run(["zphi", "--config", str(OUT / "run.json"), "--slack", str(gap["delta_C_min"]),
     "--mass", str(gap["M_opt"]), "--out", str(OUT / "zphi.csv")])
run(["plot", str(OUT / "rho.csv"), "--out", str(OUT / "rho_cli.png")])
