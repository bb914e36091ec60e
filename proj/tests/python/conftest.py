import os
import sys

import pytest

# Build-tree layout: the extension lives in <build>/src and the package
# wrapper under python/. Both are injected via PYTHONPATH by ctest; fall
# back to the conventional relative locations when run by hand.
_here = os.path.dirname(os.path.abspath(__file__))
_root = os.path.dirname(os.path.dirname(_here))
for candidate in (os.path.join(_root, "build", "src"), os.path.join(_root, "python")):
    if os.path.isdir(candidate) and candidate not in sys.path:
        sys.path.insert(0, candidate)


@pytest.fixture(scope="session")
def swingid():
    import swingid as mod

    return mod


@pytest.fixture(scope="session")
def model(swingid):
    data = os.environ.get("SWINGID_DATA", os.path.join(_root, "data"))
    return swingid.load_network(os.path.join(data, "ieee30.json"))
