"""Python interface to the density-suppressed motility lab.

Everything here is implemented in the C++ extension ``_mlab``; this package
re-exports its public names. Two layouts are supported: the installed wheel
places the extension inside this package, while a development checkout puts
the freshly built extension on ``PYTHONPATH`` next to the build tree.
"""

try:
    from ._mlab import *  # noqa: F401,F403  (installed layout)
    from ._mlab import __version__  # noqa: F401
except ImportError:  # pragma: no cover - development layout
    from _mlab import *  # noqa: F401,F403
    from _mlab import __version__  # noqa: F401
