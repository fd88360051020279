# -*- coding: utf-8 -*-
"""
Package-wide settings: the release version, optional dependency flags and
the numerical defaults and per-method hyperparameters read by both the
library and the sweep harness.
"""
from importlib.util import find_spec

from gradlab._version import version

name = "gradlab"

# Optional progress bars in the sweep
Imports = {
    "tqdm": find_spec("tqdm") is not None,
}


# Numerical defaults shared by the kernels
DEFAULTS = {
    "tol": 1e-8,
    "max_iters": 250,
    "zero_norm": 1e-12,
    "pivot_tol": 1e-12,
    "lr": 0.05,
    "cadence": 10,
    "tail": 50,
    "start": "random",
    "head_scale": 1e-4,
    "seeds": (0, 1, 2),
}

# Per-method hyperparameters. Config keys <METHOD>_<PARAM> override these.
HYPERPARAMS = {
    "baseline": {},
    "pcgrad": {},
    "gradvac": {"beta": 0.01},
    "graddrop": {},
    "rgw": {},
    "mgda": {"max_iters": 250, "tol": 1e-8},
    "cagrad": {"c": 0.4, "subproblem_iters": 100, "step": 0.05},
    "nash": {"damping": 0.5, "max_iters": 200, "tol": 1e-6},
    "alignedmtl": {"rank_tol": 1e-9},
    "imtl": {},
    "gradnorm": {"gamma": 1.5, "lr_w": 0.025},
    "uncertainty": {"lr_s": None},
    "rlw": {},
    "famo": {"lr_xi": 0.025, "eps": 1e-8},
    "dwa": {"temperature": 2.0},
    "cosreg": {"lambda_reg": 0.1, "fd_step": 1e-5},
}
