"""Three ways to get the rate of a discretized optimal encoding.

Deterministic quadrature, Monte Carlo sampling and Blahut-Arimoto should all
agree with each other and stay just below the closed-form capacity.
"""
import numpy as np

from hetcap.capacity import capacity
from hetcap.measurement import NoiseCovariance
from hetcap.oracle import ba_refinement, gaussian_constellation, mc_rate, quadrature_rate

noise, E = NoiseCovariance(0.5, 0.5), 1.0
cap = capacity(noise, E)
print(f"closed form: {cap.value:.6f} nats (= ln 1.5 = {np.log(1.5):.6f})")

con = gaussian_constellation(cap.encoding, 31)
quad = quadrature_rate(con, noise)
print(f"31x31 Gaussian constellation, quadrature: {quad:.6f}")

# standard error should halve each time the sample count quadruples;
# z is roughly standard normal, so an occasional |z| near 3 is expected
for n in (10_000, 40_000, 160_000):
    est, se = mc_rate(con, noise, n, seed=0)
    print(f"  MC n={n:>7}: {est:.5f} +- {se:.5f}  (z = {(est - quad) / se:+.2f})")

print("\nBlahut-Arimoto on nested lattices:")
for k, r in zip((7, 15, 31), ba_refinement(noise, E, (7, 15, 31))):
    print(f"  {k:>2} per axis: {r.mutual_information:.6f}  "
          f"gap {cap.value - r.mutual_information:.2e}  iters {r.iterations}")
