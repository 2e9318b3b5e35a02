#!/usr/bin/env python3
"""Regenerate the golden fixtures by driving the native CLI.

The binding layer talks to the native toolkit only through its external
interfaces, so fixtures are produced by ``python3 -m mast.cli run`` with
``--dump-intermediates`` and committed as files.
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

CONFIGS = {
    "default": {
        "lambda": 0.2, "pi_star": 0.9, "r": 0.3, "mask_sigma": 2.0,
        "tau_mode": "paper-poly", "seed": 123, "token_grid": [4, 4],
        "d": 16, "d_v": 8, "n_heads": 2, "n_styles": 2, "feature_channels": 3,
    },
    "lambda0": {
        "lambda": 0.0, "pi_star": 0.9, "r": 0.3, "mask_sigma": 0.0,
        "tau_mode": "fixed:1", "seed": 321, "token_grid": [4, 4],
        "d": 16, "d_v": 8, "n_heads": 1, "n_styles": 2, "feature_channels": 3,
    },
    # single style, all-ones mask (one band covers the whole grid)
    "single": {
        "lambda": 0.2, "pi_star": 0.9, "r": 0.3, "mask_sigma": 0.0,
        "tau_mode": "paper-poly", "seed": 555, "token_grid": [4, 4],
        "d": 16, "d_v": 8, "n_heads": 2, "n_styles": 1, "feature_channels": 3,
    },
}


def main() -> int:
    for name, cfg in CONFIGS.items():
        out = FIXTURES / name
        if out.exists():
            shutil.rmtree(out)
        out.mkdir(parents=True)
        cfg_path = out / "config.json"
        cfg_path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        cmd = [sys.executable, "-m", "mast.cli", "run", "--config", str(cfg_path),
               "--out", str(out), "--dump-intermediates"]
        subprocess.run(cmd, check=True)
        print(f"recorded fixture {name!r} -> {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
