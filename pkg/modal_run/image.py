"""Modal container image for remote sweeps and searches."""

import modal


def build_image():
    """CPU image with khl installed from the project manifest."""
    return (
        modal.Image.debian_slim(python_version="3.11")
        .pip_install_from_pyproject("pyproject.toml")
        .add_local_python_source("khl")
        .add_local_python_source("modal_run")
    )
