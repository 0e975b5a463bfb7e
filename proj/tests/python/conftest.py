import os
import pathlib
import shutil

import pytest

ROOT = pathlib.Path(os.environ.get("QAUTO_SOURCE_DIR", pathlib.Path(__file__).parents[2]))


@pytest.fixture(scope="session")
def root():
    return ROOT


@pytest.fixture(scope="session")
def sim():
    exe = os.environ.get("QAUTO_SIM") or shutil.which("sim")
    if not exe:
        candidate = ROOT / "build" / "tools" / "sim"
        exe = str(candidate) if candidate.exists() else None
    if not exe:
        pytest.skip("sim executable not found; set QAUTO_SIM")
    return exe
