"""Ten nonholonomic vehicles forming a rotating decagon.

Loads the shipped example2 scenario: unicycle vehicles whose hand points
feedback-linearize to planar double integrators, driven by the saturating
bounded-input protocol around a leader with u0 = [exp(-t), |sin(t/2)|].
Expect around a minute at the default dt = 1e-3.

Run:  python3 demos/06_example2_vehicles.py [--quick]
"""

import sys
from importlib import resources

import numpy as np

from formctl import export, integrate, load_scenario

path = resources.files("formctl") / "scenarios" / "example2.json"
scenario, output = load_scenario(str(path))

if "--quick" in sys.argv:
    scenario.t_final = 15.0

print(f"running '{scenario.name}': {scenario.topology.n_followers} "
      f"vehicles (m = {scenario.vehicle.mass} kg, "
      f"J = {scenario.vehicle.inertia} kg m^2, "
      f"L = {scenario.vehicle.hand_offset} m), T = {scenario.t_final} s")
result = integrate(scenario)

times = result.times
spec = scenario.spec
offsets = np.stack([spec.offsets(t)[:, :2] for t in times])
pos_err = np.linalg.norm(result.x[:, 1:, :2] - result.x[:, :1, :2]
                         - offsets, axis=2)
print(f"\n{'t [s]':>8}  {'max hand-position error':>24}")
for t_mark in np.linspace(0, scenario.t_final, 6):
    k = int(np.argmin(np.abs(times - t_mark)))
    print(f"{times[k]:8.1f}  {pos_err[k].max():24.6f}")

headings = result.poses[-1, :, 2]
print(f"\nfinal vehicle headings (rad): {np.round(headings, 2)}")
written = export(result, ".", plots=True,
                 snapshot_times=output["snapshots"])
print("wrote:")
for p in written:
    print("  ", p)
