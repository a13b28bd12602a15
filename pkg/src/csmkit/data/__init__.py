"""Bundled example inputs."""
from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    return Path(str(resources.files(__name__).joinpath(name)))
