"""
Where the moments end up
========================

For fixed N the moments converge.  The exact limits depend on N; for
large N the simpler asymptotic values take over.
"""

from clocksync import ModelParams, stationary_limits

base = dict(r=1.0, sigma=0.5, alpha=2.0, beta=1.0)

for skew in (0.0, 0.1):
    print(f"v - r = {skew}")
    for N in (2, 10, 100, 1000, 10000):
        lim = stationary_limits(ModelParams(N=N, v=1.0 + skew, **base))
        R, D, d = lim.exact
        Ra, Da, da = lim.asymptotic
        print(f"  N={N:>5}  exact R={R:12.5g} D={D:10.5g} d={d:9.5g}   asymptotic R={Ra:12.5g} D={Da:10.5g}")

# Without skew R and D grow linearly in N.  With skew the drift adds terms
# quadratic in N, since a sensor waits about N / alpha between server messages.

# No server, no limit:
try:
    stationary_limits(ModelParams(N=10, alpha=0.0, beta=1.0))
except Exception as exc:
    print(type(exc).__name__, "-", exc)
