"""Shallow gradient-boosted trees interpreted as purified functional ANOVA models.

Typical pipeline::

    from treefanova import boosting, fanova, attribution, pruning
    model, report = boosting.fit(train, valid, boosting.TrainConfig(max_depth=2))
    fm = fanova.interpret(model)
    pruned, result = pruning.prune(fm, train)
"""

__version__ = "0.1.0"

from .data import Dataset, gen_friedman, load_csv, split  # noqa: E402
from .ensemble import Ensemble, extract_leaf_rules, predict, predict_raw  # noqa: E402
from .fanova import FanovaModel, aggregate, evaluate, interpret, purify  # noqa: E402

__all__ = [
    "Dataset",
    "Ensemble",
    "FanovaModel",
    "aggregate",
    "evaluate",
    "extract_leaf_rules",
    "gen_friedman",
    "interpret",
    "load_csv",
    "predict",
    "predict_raw",
    "purify",
    "split",
]
