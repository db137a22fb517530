"""Default configuration values for ellipseloss."""

import math


# Default configuration structure
DEFAULT_CONFIG = {
    "version": "1.0.0",
    "raster": {
        "k": math.sqrt(2.0) / 2.0,
        "truncation_md": 1.0,
        "fixed_sigma": None,
    },
    "loss": {
        "lambda": 0.03,
        "beta": 1.0,
        "offroad_factor": 5.0,
    },
    "optimizer": {
        "iterations": 1000,
        "step_size_xy": 0.05,
        "step_size_theta": 0.01,
    },
    # 938 cells of 0.16 m cover the 150 m scene length
    "grid": {
        "length_m": 150.08,
        "width_m": 100.0,
        "cell_l": 0.16,
        "cell_w": 0.16,
        "origin": None,
    },
    "toy": {
        "size_m": 20.0,
        "cell": 0.1,
        "boundary_x": 0.0,
        "actor_length": 4.0,
        "actor_width": 2.0,
        "center": [-0.5, 0.0],
        "tilt_deg": 30.0,
    },
    "output": {
        "out_dir": "out",
        "emit_rasters": False,
        "snapshot_every": 0,
        "max_workers": 4,
    },
    "logging": {
        "level": "INFO",
        "log_file": "",
    },
}


LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
