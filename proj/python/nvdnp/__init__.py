"""Polarization transfer from a driven NV electron spin to diffusing nuclei.

Thin wrapper over the compiled core. Units everywhere: nm, us, rad/us, tesla.
"""

import os
import sys

# Development builds keep the extension next to the CMake build tree; wheels
# install it into this package.
_ext_dir = os.environ.get("NVDNP_EXT_DIR")
if _ext_dir and _ext_dir not in sys.path:
    sys.path.insert(0, _ext_dir)

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # pragma: no cover - dev layout
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
