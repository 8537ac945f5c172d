"""How many synthetic datasets should you generate?

An ensemble trained on m synthetic datasets keeps a 1/m share of the
reducible variance, so m datasets capture a 1 - 1/m fraction of the maximal
benefit: 2 datasets give 50%, 10 give 90%, 100 give 99%. Measuring the error
at m = 1 and m = 2 is therefore enough to predict the whole curve, because
the maximal benefit is 2 * (error_1 - error_2).

This script first replays that arithmetic on published benchmark numbers
for an interpolating decision tree (error 9.37 at m = 1, 7.38 at m = 2),
then reproduces the whole protocol end to end on a simulated dataset.
"""
import numpy as np

import genensemble as ge
from genensemble.processes import get_process
from genensemble.rng import make_rng

print(__doc__)

# --- 1. pencil-and-paper prediction from two measurements -------------------
rule = ge.fit_rule_two_point(9.37, 7.38)
print(f"maximal benefit 2*(9.37 - 7.38) = {rule.mv_plus_sdv:.2f}")
print(f"{'m':>4} {'predicted':>10} {'published':>10}")
published = {4: 6.05, 8: 5.43, 16: 5.07, 32: 4.95}
for m in (4, 8, 16, 32):
    print(f"{m:>4} {ge.predict_mse(rule, m):>10.3f} {published[m]:>10.2f}")

# --- 2. the same protocol, measured live on a toy dataset -------------------
process = get_process("gaussian_toy")
data = process.sample_real_dataset(make_rng(0), 60)
test = process.sample_real_dataset(make_rng(1), 400)

curve = ge.mse_curve(ge.GeneratorSpec("bootstrap"), data,
                     ge.PredictorSpec("cart", "regression"), test,
                     m_values=[1, 2, 4, 8, 16], repeats=50, seed=7)
means = curve.means()
live_rule = ge.fit_rule_two_point(means[1], means[2])

print("\nbootstrap + interpolating tree on a simulated dataset "
      "(50 repeats):")
print(f"{'m':>4} {'measured':>10} {'predicted':>10}")
for m in (1, 2, 4, 8, 16):
    print(f"{m:>4} {means[m]:>10.3f} {ge.predict_mse(live_rule, m):>10.3f}")

fit = ge.fit_rule_regression(means)
print(f"\nleast-squares fit against 1 - 1/m: R^2 = {fit.r_squared:.4f}, "
      f"maximal benefit = {fit.mv_plus_sdv:.3f}")
for m, frac in ((2, "50%"), (10, "90%"), (100, "99%")):
    print(f"  m = {m:>3} captures {frac} of the benefit "
          f"-> predicted error {ge.predict_mse(fit, m):.3f}")
