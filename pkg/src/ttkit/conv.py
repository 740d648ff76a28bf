"""Reference 3D convolution and the TT-kernel forward pass.

Volumes are (T, H, W, C) float64 arrays, channels fastest.  Convolution is
stride-1 cross-correlation (no kernel flip) with SAME zero padding, so the
spatial output shape always equals the input shape; the kernel is centred
with offset ``floor(dim / 2)`` in each filter dimension, for odd and even
sizes alike.
"""

from __future__ import annotations

import numpy as np

from .errors import ChannelMismatch, ShapeMismatch
from .tensor import as_tensor
from .tensorize import Conv3dTTKernel, recover_conv3d_kernel

__all__ = ["conv3d", "tt_conv3d_forward"]


def conv3d(x, kernel) -> np.ndarray:
    """Convolve a (T, H, W, C) volume with a (t, h, w, C, S) kernel.

    Output entry (i, j, k, s) sums
    ``input[i + a - t//2, j + b - h//2, k + c - w//2, m] * kernel[a, b, c, m, s]``
    over the filter box and input channels, with out-of-range input read as 0.

    Raises
    ------
    ChannelMismatch
        If the volume's channel count differs from the kernel's.
    """
    x = as_tensor(x)
    kernel = as_tensor(kernel)
    if x.ndim != 4:
        raise ShapeMismatch(f"volume must be (T, H, W, C), got shape {x.shape}")
    if kernel.ndim != 5:
        raise ShapeMismatch(f"kernel must be (t, h, w, C, S), got shape {kernel.shape}")
    t, h, w, c_in, s_out = kernel.shape
    if x.shape[3] != c_in:
        raise ChannelMismatch(
            f"volume has {x.shape[3]} channels, kernel expects {c_in}"
        )
    dim_t, dim_h, dim_w = x.shape[:3]
    ot, oh, ow = t // 2, h // 2, w // 2
    padded = np.pad(
        x,
        ((ot, t - 1 - ot), (oh, h - 1 - oh), (ow, w - 1 - ow), (0, 0)),
    )
    out = np.zeros((dim_t, dim_h, dim_w, s_out))
    for a in range(t):
        for b in range(h):
            for c in range(w):
                window = padded[a : a + dim_t, b : b + dim_h, c : c + dim_w, :]
                out += np.tensordot(window, kernel[a, b, c], axes=(3, 0))
    return out


def tt_conv3d_forward(x, tk: Conv3dTTKernel) -> np.ndarray:
    """Convolve with a TT kernel: rebuild the dense kernel once, then convolve.

    The result is bitwise identical to ``conv3d(x, recover_conv3d_kernel(tk))``.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeMismatch(f"volume must be (T, H, W, C), got shape {x.shape}")
    if x.shape[3] != tk.spec.in_channels:
        raise ChannelMismatch(
            f"volume has {x.shape[3]} channels, kernel expects {tk.spec.in_channels}"
        )
    return conv3d(x, recover_conv3d_kernel(tk))
