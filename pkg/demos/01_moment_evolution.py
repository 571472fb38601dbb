"""
How a small network settles
===========================

Two sensors, a server and skewed sensor clocks.  We follow the mean
squared offsets R (sensor vs server) and D (sensor vs sensor) and the
mean displacement d from t = 0 until they flatten out.
"""

import numpy as np

from clocksync import ModelParams, MomentVector, SimConfig, moments_closed_form, ode_moments, run_ensemble

params = ModelParams(N=2, r=1.0, v=2.0, sigma=1.0, alpha=1.0, beta=2.0)
start = MomentVector(0.0, 0.0, 0.0)
t = np.array([0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0])

# exact moments
R, D, d = moments_closed_form(params, start, t)

# the same curve from integrating the moment equations numerically
R_ode, D_ode, d_ode = ode_moments(params, start, t)
print("largest gap between closed form and ODE:", np.max(np.abs(np.array([R, D, d]) - [R_ode, D_ode, d_ode])))

# and from 4000 simulated networks
cfg = SimConfig(params, t_end=t[-1], obs_grid=t, replicas=4000, master_seed=1)
sim = run_ensemble(cfg)

print(f"{'t':>6} {'R':>9} {'R sim':>16} {'D':>9} {'D sim':>16} {'d':>7} {'d sim':>14}")
for i, ti in enumerate(t):
    print(
        f"{ti:6.1f} {R[i]:9.4f} {sim.R_mean[i]:9.4f}±{sim.R_se[i]:.3f}"
        f" {D[i]:9.4f} {sim.D_mean[i]:9.4f}±{sim.D_se[i]:.3f}"
        f" {d[i]:7.4f} {sim.d_mean[i]:7.4f}±{sim.d_se[i]:.3f}"
    )

# The skew keeps pushing sensors ahead of the server, so d levels off at a
# positive value instead of zero.
