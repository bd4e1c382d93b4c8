"""Backend selection for the MLP hot loop.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementation in ``_kernels_py`` is used. Setting the environment
variable ``DSA_MARL_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if not os.environ.get("DSA_MARL_PURE_PYTHON"):
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

forward_batch = _impl.forward_batch
loss_and_grad = _impl.loss_and_grad
train_batch = _impl.train_batch


def get_backend(name=None):
    """Return the kernel module for ``name`` ('compiled' or 'python').

    ``None`` gives the module picked at import.
    """
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
