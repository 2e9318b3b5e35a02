"""Buffer descriptors, the exported symbol table, and structured errors.

The binding surface works on flat contiguous float32 buffers described by
pointer-free :class:`BufferView` records (element offset + shape). The symbol
table below is the Python mirror of the C-compatible contract documented in
``docs/abi.md``; both are versioned together with the tensor file format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ABI_VERSION = 1  # tracks the MSTT tensor format version

F32 = "f32"

__all__ = ["ABI_VERSION", "F32", "BufferView", "BindError", "SymbolSpec",
           "SYMBOL_TABLE", "view_array"]


@dataclass(frozen=True)
class BufferView:
    """Describes one float32 tensor inside a caller-provided contiguous buffer."""

    offset: int = 0                 # elements, not bytes
    shape: tuple[int, ...] = ()
    dtype: str = F32

    @property
    def count(self) -> int:
        return int(math.prod(self.shape)) if self.shape else 0

    def validate(self) -> str | None:
        if self.dtype != F32:
            return f"unsupported element type {self.dtype!r}"
        if self.offset < 0:
            return f"negative offset {self.offset}"
        if not self.shape or any(e < 1 for e in self.shape):
            return f"bad shape {self.shape}"
        return None


@dataclass(frozen=True)
class BindError:
    """Structured failure record returned by kernels instead of raising."""

    code: str
    message: str
    shapes: tuple[tuple[int, ...], ...] = ()

    def __str__(self) -> str:
        extra = f" shapes={list(self.shapes)}" if self.shapes else ""
        return f"{self.code}: {self.message}{extra}"


@dataclass(frozen=True)
class SymbolSpec:
    """One exported symbol: name plus the documented argument layout."""

    name: str
    args: tuple[str, ...]
    result: str
    doc: str = field(default="", compare=False)


SYMBOL_TABLE: tuple[SymbolSpec, ...] = (
    SymbolSpec(
        "mast_anchor_queries",
        ("const f32* q_c[t,d]", "const f32* q_cs[t,d]", "u32 t", "u32 d",
         "f32 lam", "f32* out[t,d]"),
        "i32 status",
        "out = lam * q_c + (1 - lam) * q_cs"),
    SymbolSpec(
        "mast_apply_lama",
        ("const f32* const* style_logits[n][t_q,cols_i]", "u32 n_styles",
         "const u32* style_cols", "const f32* content_logits[t_q,t_c]",
         "u32 t_q", "u32 t_c", "const f32* const* masks[n][h_t,w_t]",
         "u32 h_t", "u32 w_t", "f32 pi_star",
         "f32* out_concat[t_q,sum(cols)+t_c]"),
        "i32 status",
        "per-group closed-form bias applied to the concatenated logits"),
    SymbolSpec(
        "mast_sharpness_temperature",
        ("const f32* content_logits[t_q,t_c]", "u32 t_q", "u32 t_c",
         "const f32* concat_logits[t_q,cols]", "u32 cols",
         "const f32* coeffs", "u32 n_coeffs", "f32 clamp_min",
         "f32* out_delta", "f32* out_tau"),
        "i32 status",
        "sharpness gap and predicted restoring temperature"),
    SymbolSpec(
        "mast_apply_sts",
        ("const f32* concat_logits[t_q,cols]", "u32 t_q", "u32 cols",
         "f32 tau", "f32* out_weights[t_q,cols]"),
        "i32 status",
        "row softmax of tau * logits"),
    SymbolSpec(
        "mast_inject_details",
        ("const f32* phi_c[c,h,w]", "const f32* phi_cs[c,h,w]",
         "const f32* delta_phi[c,h,w]", "u32 c", "u32 h", "u32 w",
         "f32 r", "f32 epsilon", "f32* out[c,h,w]"),
        "i32 status",
        "phi_cs + delta_phi + omega * gaussian-highpass(phi_c)"),
)


def view_array(buffer, view: BufferView, writable: bool = False):
    """Materialize a BufferView as a numpy array over the caller's buffer.

    Returns (array, None) or (None, BindError). The array aliases the buffer;
    only views requested writable may be written through.
    """
    problem = view.validate()
    if problem:
        return None, BindError("bad-view", problem, (view.shape,))
    try:
        flat = np.frombuffer(buffer, dtype="<f4")
    except (TypeError, ValueError) as exc:
        return None, BindError("bad-buffer", str(exc))
    end = view.offset + view.count
    if end > flat.size:
        return None, BindError(
            "out-of-bounds",
            f"view needs elements [{view.offset}, {end}) but buffer holds "
            f"{flat.size}", (view.shape,))
    arr = flat[view.offset:end].reshape(view.shape)
    if writable:
        if not arr.flags.writeable:
            return None, BindError("read-only", "output buffer is not writable")
    else:
        arr = arr.view()
        arr.flags.writeable = False
    return arr, None
