"""
Installation checks: interpreter version, the dependency stack and the
sample environment file.
"""

import importlib
import sys
import tomllib
from pathlib import Path

import pytest
from dotenv import dotenv_values

ROOT = Path(__file__).parent


def _manifest():
    return tomllib.loads((ROOT / "pyproject.toml").read_text(encoding="utf-8"))


def test_python_version_matches_manifest():
    required = _manifest()["project"]["requires-python"]
    assert required == ">=3.11"
    assert sys.version_info >= (3, 11)


@pytest.mark.parametrize("module", ["numpy", "scipy", "pandas", "pydantic", "dotenv", "hypothesis", "mpmath"])
def test_stack_is_importable(module):
    importlib.import_module(module)


def test_runtime_dependencies_are_declared():
    declared = {spec.split(">")[0].split("=")[0].strip() for spec in _manifest()["project"]["dependencies"]}
    assert declared == {"numpy", "scipy", "pandas", "pydantic", "python-dotenv"}


def test_env_example_names_every_setting():
    values = dotenv_values(ROOT / ".env.example")
    assert set(values) == {"CONEWAVE_THREADS", "CONEWAVE_PLAN_CACHE", "CONEWAVE_LOG_LEVEL"}
    assert int(values["CONEWAVE_THREADS"]) >= 1
