"""log W_N against its Gaussian limit, driven through the experiment runner.

Runs a small clt experiment and prints the W1 distance between the empirical
law of log W_N and N(-lambda^2 / 2, lambda^2).  Convergence is logarithmic in
N, so the distance shrinks slowly.
"""
import json
import os
import tempfile

from dpre2d.harness import ExperimentConfig, run

out = os.path.join(tempfile.mkdtemp(), "clt")
cfg = ExperimentConfig(kind="clt", N=[16, 64, 256], beta_hat=[0.5], family="rademacher",
                       master_seed=3, replicates=800, out=out)
manifest = run(cfg)

with open(os.path.join(out, "clt_summary.json")) as fh:
    reports = json.load(fh)["reports"]
print(f"target mean {reports[0]['target_mean']:.6f}, variance {reports[0]['target_variance']:.6f}")
for r in reports:
    print(f"N={r['N']:4d}  mean {r['mean']:+.4f}  var {r['variance']:.4f}  W1 {r['w1']:.4f}"
          f"  E[W] {r['W_mean']:.3f}")
print("files:", [f["path"] for f in manifest.files])
