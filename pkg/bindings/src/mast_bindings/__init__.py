"""Flat-buffer binding surface for the attention-control kernels."""

__version__ = "0.1.0"

from .abi import ABI_VERSION, BindError, BufferView, SYMBOL_TABLE, view_array
from .hook import HookError, buffer_pair, hook_demo
from .kernels import (bind_anchor_queries, bind_apply_lama, bind_apply_sts,
                      bind_inject_details, bind_sharpness_and_temperature)
from .tensorfile import load, store

__all__ = [name for name in dir() if not name.startswith("_")]
