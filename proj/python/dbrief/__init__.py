try:
    from ._dbrief import *  # noqa: F401,F403
    from ._dbrief import __version__  # noqa: F401
except ImportError:  # in-tree builds put the module on PYTHONPATH directly
    from _dbrief import *  # noqa: F401,F403
    from _dbrief import __version__  # noqa: F401
