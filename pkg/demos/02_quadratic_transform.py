"""
Why the auxiliary updates are tight
===================================

The optimiser replaces the EE ratio and each SINR ratio by concave
surrogates with an auxiliary variable. At the closed-form auxiliary the
surrogate equals the original ratio; any other choice gives less.
"""

import numpy as np

import eebeam as eb

rng = np.random.default_rng(7)
K, M = 4, 6
H = rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))
W = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
sigma2, alpha, P0 = 1.0, np.ones(K), 2.0

ee = eb.energy_efficiency(H, W, sigma2, alpha, P0)
mu = eb.optimal_mu(H, W, sigma2, alpha, P0)
print("EE               %.12f nats/J" % ee)
print("surrogate at mu* %.12f" % eb.surrogate_v(H, W, mu, sigma2, alpha, P0))
for scale in (0.5, 0.9, 1.1, 2.0):
    print("  at %.1f mu*     %.12f" % (scale, eb.surrogate_v(H, W, scale * mu, sigma2, alpha, P0)))

z = eb.optimal_z(H, W, sigma2)
print("\nuser  SINR        q(z*)       q(|z*|)")
for k in range(K):
    # dropping the phase of z* loses tightness unless h_k w_k happens to be real
    print("%d     %.6f    %.6f    %.6f" % (k, eb.sinr(H, W, sigma2, k),
                                        eb.quadratic_sinr(z[k], H, W, sigma2, k),
                                        eb.quadratic_sinr(abs(z[k]), H, W, sigma2, k)))
