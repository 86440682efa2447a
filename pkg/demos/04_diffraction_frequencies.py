"""Which ray does the spider leave on? Hitting frequencies at a small radius
reproduce the spinning weights (Walsh's diffraction picture)."""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spiderhjb.model import CATALOG
from spiderhjb.verify import check_diffraction_law

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

data, _ = CATALOG["diffraction"]()  # 3 rays, weights (0.5, 0.3, 0.2)
report = check_diffraction_law(data, 0.0, 0.0, [0.2, 0.1, 0.05], 20000, 7, dt=1e-4)

rows = [e for e in report.entries if e.entry_id.startswith("freq_")]
print(f"{'radius':>8} {'ray':>4} {'frequency':>10} {'weight':>8} {'3 SE':>8}")
for e in rows:
    ray, _, delta = e.entry_id.removeprefix("freq_ray").partition("_delta")
    print(f"{float(delta):8.2f} {ray:>4} {e.statistic:10.4f} {e.target:8.2f} {e.tolerance:8.4f}")
print("verdict:", "PASS" if report.passed else "FAIL")

# bar chart at the smallest radius
small = [e for e in rows if e.entry_id.endswith("delta0.05")]
freqs = [e.statistic for e in small]
weights = [e.target for e in small]
idx = np.arange(len(small))
fig, ax = plt.subplots(figsize=(6, 4))
ax.bar(idx - 0.18, weights, width=0.36, label="spinning weight")
ax.bar(idx + 0.18, freqs, width=0.36, label="hit frequency (delta = 0.05)")
ax.set_xticks(idx, [f"ray {i + 1}" for i in idx])
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "04_diffraction.png", dpi=120)
print("wrote", OUT / "04_diffraction.png")
