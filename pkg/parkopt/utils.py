import importlib


def load_from_path(path):
    module_path, cls_name = path.rsplit(".", 1)
    return getattr(importlib.import_module(module_path), cls_name)


def hub_columns(prefix: str, count: int):
    return [f"{prefix}_{k}" for k in range(1, count + 1)]
