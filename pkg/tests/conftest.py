import json
import os

import pytest

from l2i.scenario import default_plan, generate_dataset


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """One scene per bucket: 6 kinds x 2 variants x 5 obstacle counts."""
    out = tmp_path_factory.mktemp("dataset")
    manifest = generate_dataset(default_plan(seeds_per_bucket=1), str(out))
    return str(out), manifest


def read_manifest(path):
    with open(os.path.join(path, "manifest.json"), encoding="utf-8") as fh:
        return json.load(fh)
