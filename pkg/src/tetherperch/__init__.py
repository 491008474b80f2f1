"""Tethered tensile perching: chain-tether physics, rewards, SACfD training,
scripted demonstrations, and the evaluation toolkit around them."""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
