import importlib
import os
import sys
import types


class _FakeImageBuilder:
    def __init__(self):
        self.sources = []

    def pip_install_from_pyproject(self, path, *args, **kwargs):
        assert os.path.isfile(path), f"pip_install_from_pyproject: file not found: {path}"
        return self

    def add_local_python_source(self, name, **kwargs):
        found = os.path.isdir(name) or os.path.isdir(os.path.join("src", name))
        assert found, f"add_local_python_source: package not found: {name}"
        self.sources.append(name)
        return self


class _FakeApp:
    def __init__(self, *args, **kwargs):
        self.args = args
        self.kwargs = kwargs

    def function(self, *args, **kwargs):
        def decorator(func):
            func.remote = func
            return func

        return decorator

    def local_entrypoint(self, *args, **kwargs):
        def decorator(func):
            return func

        return decorator


def install_fake_modal():
    fake_modal = types.ModuleType("modal")
    fake_modal.Image = types.SimpleNamespace(debian_slim=lambda python_version=None: _FakeImageBuilder())
    fake_modal.App = _FakeApp
    sys.modules["modal"] = fake_modal
    return fake_modal


def import_fresh(module_name):
    importlib.invalidate_caches()
    for name in list(sys.modules):
        if name == module_name or name.startswith("modal_run."):
            sys.modules.pop(name, None)
    return importlib.import_module(module_name)
