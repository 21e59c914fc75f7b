import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from snlu import datagen  # noqa: E402


@pytest.fixture(scope="session")
def small_data():
    """A small but complete synthetic dataset + gazetteer (seeded)."""
    return datagen.generate(datagen.GenSpec(total=600, seed=0))


@pytest.fixture(scope="session")
def small_bundle(small_data):
    """A pipeline trained on the small dataset with shortened training."""
    from snlu import pipeline

    ds, gaz = small_data
    cfg = pipeline.PipelineConfig(
        seed=0,
        category_model={"epochs": 12, "patience": 3},
        subcategory_model={"epochs": 12, "patience": 3},
    )
    rules = datagen.starter_rules(ds.taxonomy)
    return pipeline.train_pipeline(cfg, ds, gaz, rules)
