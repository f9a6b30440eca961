"""Structure-preserving simulation of 1-D port-Hamiltonian systems with
nonlinear monotone boundary feedback.

The heavy lifting happens in the C++ extension ``_phsim``; this package adds
small ergonomic wrappers (dict-valued overrides, JSON configs).
"""

import json as _json

try:
    from ._phsim import *  # noqa: F401,F403
    from . import _phsim as _core
except ImportError:  # build-tree layout: extension next to the package
    from _phsim import *  # noqa: F401,F403
    import _phsim as _core

__version__ = _core.__version__


def instantiate(name, overrides=None, seed=0):
    """Build a catalog scenario; `overrides` may be a dict or a JSON string."""
    if overrides is None:
        text = ""
    elif isinstance(overrides, str):
        text = overrides
    else:
        text = _json.dumps(overrides)
    return _core.instantiate(name, text, seed)


def run_config(config):
    """Run a full configuration (dict or JSON string) as the CLI would."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _core.run_config(text)
