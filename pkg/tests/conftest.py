import time

import hypothesis

SESSION_START = time.perf_counter()

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=50, derandomize=True
)
hypothesis.settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    # The acceptance module summarizes the suite (including total wall time):
    # run it after everything else.
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
