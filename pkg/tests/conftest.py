import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
MANIFESTS = ROOT / "manifests"

sys.path.insert(0, str(ROOT / "src"))


@pytest.fixture
def manifest_dir():
    return MANIFESTS


def write_manifest(tmp_path, text, name="m.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path
