import json

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "integration: mark test as CLI end-to-end test")


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    """Temporary working directory with a single sweep thread unless a test overrides it."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("QOMP_LAB_THREADS", "1")
    return tmp_path


@pytest.fixture
def write_config(workspace):
    def write(name: str, payload: dict):
        path = workspace / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return write
