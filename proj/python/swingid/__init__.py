"""Attack identification for networks of coupled swing-equation subsystems.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface. When working from a build tree, put the directory
containing the extension on sys.path before importing.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __doc__ as _core_doc
except ImportError:  # build-tree layout: extension next to the sources
    from _core import *  # noqa: F401,F403
    from _core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
