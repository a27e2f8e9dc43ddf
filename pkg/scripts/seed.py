#!/usr/bin/env python3
"""Write the example experiment configs into ./configs (existing files are kept)."""

import os
from pathlib import Path

PRESETS = {
    "equator_sweep.cfg": """\
# 1-D equator profile, explicit theta1: layer present, M > 1
domain.dim = 1
domain.n = 64
time.t_final = 0.5
time.dt = 1e-4
time.stride = 250
time.probe_dt = 2e-4
physics.eps_list = 0.1, 0.03, 0.01, 0.003, 0.001
init.preset = equator
init.amplitude = 0.1
init.theta1 = explicit
init.theta1_amplitude = 0.1
output.dir = runs/equator_sweep
""",
    "well_prepared.cfg": """\
# D = 0: no initial layer, errors driven by the O(eps) correction only
domain.dim = 1
domain.n = 64
time.t_final = 0.5
time.dt = 1e-4
time.stride = 250
physics.eps_list = 0.1, 0.03, 0.01, 0.003, 0.001
init.preset = equator
init.theta1 = well_prepared
output.dir = runs/well_prepared
""",
    "twisted_2d.cfg": """\
# genuinely nonlinear 2-D data off the equator
domain.dim = 2
domain.n = 32
time.t_final = 0.2
time.dt = 2e-4
time.stride = 100
time.probe_dt = 4e-4
physics.eps_list = 0.1, 0.03, 0.01, 0.003
init.preset = twisted
init.amplitude = 0.3
init.twist = 0.5
init.theta1 = explicit
init.theta1_amplitude = 0.1
output.dir = runs/twisted_2d
output.snapshots = false
run.run_decomposition_check = true
run.workers = 4
""",
}


def seed_configs(target: Path) -> list[Path]:
    target.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in PRESETS.items():
        path = target / name
        if path.exists():
            continue
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


def main():
    target = Path(os.getenv("RELAXLIM_CONFIG_DIR", "configs"))
    written = seed_configs(target)
    print(f"Seeded {len(written)} config(s) into {target}.")


if __name__ == "__main__":
    main()
