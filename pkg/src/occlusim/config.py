"""Central configuration for the prediction stack and simulator.

Every tunable constant lives here so that runs are reproducible from a single
echoed config document. Values can be overridden per scenario file and again
from the command line (CLI wins).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SimConfig:
    # perception
    sensor_range: float = 50.0
    angular_resolution: float = math.radians(0.5)

    # prediction discretization
    v_max: float = 15.0              # global speed cap, m/s
    horizon: float = 4.0             # prediction horizon, s
    dt_predict: float = 0.5          # prediction step, s
    ds: float = 2.0                  # longitudinal cell size, m
    dv: float = 1.0                  # velocity cell size, m/s
    grid_cell: float = 1.0           # world grid cell size, m

    # kinematic assumptions
    a_assumed: float = 2.0           # corridor-length extrapolation accel, m/s^2
    a_cruise: float = 1.5            # comfortable acceleration, m/s^2
    a_lat_max: float = 2.5           # lateral accel cap for curve speeds, m/s^2
    a_brake_comfort: float = 2.5     # comfortable braking in profiles, m/s^2
    a_brake_floor: float = -6.0      # hardest allowed braking, m/s^2
    a_max: float = 3.0               # acceleration ceiling in profiles, m/s^2
    sigma_a: float = 0.5             # acceleration noise std, m/s^2
    standstill_gap: float = 2.0      # gap kept behind a stopped leader, m

    # hidden-vehicle handling
    hv_weight_lo: float = 0.25
    hv_weight_mid: float = 0.50
    hv_weight_hi: float = 0.25
    belief_depth: float = 30.0       # s-extent kept for unbounded occlusions, m

    # occlusion layer
    area_threshold: float = 10.0     # minimum occlusion area, m^2
    track_overlap: float = 0.3       # fraction of smaller area needed to match
    support_mass_eps: float = 1e-6   # mass fraction counted as belief support

    # corridor intention heuristic
    sigma_heading: float = 0.5       # rad
    sigma_lateral: float = 1.0       # m

    # planner
    p_occupy_threshold: float = 0.05
    planner_brake: float = 3.0       # deceleration assumed feasible when planning, m/s^2
    j_max: float = 16.0              # accel rate limit between plan steps, m/s^3
    capture_radius: float = 1.5      # max lateral offset to adopt a path, m
    lane_change_bonus: float = 5.0   # extra progress required to switch paths, m
    footprint_margin: float = 0.3    # grid-check inflation of the ego footprint, m

    # simulation loop
    tick: float = 0.1
    timeout: float = 60.0
    goal_radius: float = 2.0
    corridor_cache_frac: float = 0.25  # ego travel fraction of sensor range forcing re-search
    n_jobs: int = 1

    # metrics
    risk_tau: float = 2.0            # s
    risk_sigma_d: float = 2.0        # m

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt_predict))

    @property
    def hv_weights(self) -> tuple[float, float, float]:
        return (self.hv_weight_lo, self.hv_weight_mid, self.hv_weight_hi)

    def with_overrides(self, overrides: dict[str, float | int | str]) -> "SimConfig":
        """Return a copy with the given fields replaced.

        Unknown keys raise KeyError so typos in ``--set`` flags fail loudly.
        """
        valid = {f.name: f.type for f in dataclasses.fields(self)}
        coerced = {}
        for key, value in overrides.items():
            if key not in valid:
                raise KeyError(f"unknown config key: {key!r}")
            current = getattr(self, key)
            coerced[key] = type(current)(value)
        return dataclasses.replace(self, **coerced)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_CONFIG = SimConfig()
