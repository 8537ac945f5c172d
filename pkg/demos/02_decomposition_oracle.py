"""Verifying the error decomposition on a fully known process.

The squared error of a generative ensemble splits into six interpretable
pieces: model variance (MV) and synthetic-data variance (SDV), both damped
by 1/m; real-data variance (RDV); squared bias (synthetic-data bias SDB plus
model bias MB); and irreducible noise. On the Gaussian location toy every
piece has a closed form (MV = 0.01, SDV = 0.04, RDV = 0.02, zero biases,
noise = 1), so nested Monte Carlo estimates can be checked term by term, and
an independent estimate of the total error must match their sum.
"""
import genensemble as ge
from genensemble.processes import get_process

print(__doc__)

process = get_process("gaussian_toy")
mc = ge.MonteCarloConfig(r_real=200, r_theta=50, r_syn=20, r_y=10000)
targets = process.analytic_terms

print(f"analytic targets: {targets}")
print(f"{'term':>6} {'estimate':>10} {'se':>9} {'target':>8}")
for m in (1, 2, 5):
    rep = ge.oracle_decompose(process, "iid", m=m, mc=mc, seed=7)
    print(f"--- m = {m} (direct error estimate {rep.terms['mse'].value:.4f}) ---")
    for name in ("mv", "sdv", "rdv", "sdb", "mb", "noise"):
        t = rep.terms[name]
        target = targets.get(name, float("nan"))
        print(f"{name:>6} {t.value:>10.5f} {t.std_error:>9.5f} {target:>8.4f}")
    print(f"identity gap {rep.identity_gap:+.5f} "
          f"(bootstrap se {rep.identity_gap_se:.5f}) -> {rep.status}")

print("""
Reading the table: the m = 1 error is roughly MV + SDV + RDV + noise = 1.07;
by m = 5 the MV and SDV contributions have shrunk to a fifth while RDV and
noise are untouched. The identity gap is the direct error estimate minus the
sum of the estimated terms; it stays within a few bootstrap standard errors
of zero for every m.
""")

# Correlated generators: when parameter draws share randomness, the reducible
# variance floor rises by a covariance term weighted by 1 - 1/m.
print("correlated parameter draws (m = 2): COV should equal rho * SDV")
for rho in (0.0, 0.5, 1.0):
    rep = ge.oracle_decompose(process, "correlated", m=2, rho=rho, mc=mc, seed=3)
    cov, sdv = rep.terms["cov"], rep.terms["sdv"]
    print(f"  rho = {rho:3.1f}: cov = {cov.value:+.5f} +- {cov.std_error:.5f}, "
          f"rho*sdv = {rho * sdv.value:+.5f}, identity -> {rep.status}")
