"""IDyOM-style expectancy features from variable-order multiple-viewpoint models."""
from .distributions import Distribution, combine_distributions, entropy, ic
from .model import (ExpectancyConfig, ExpectancyModel, SymbolSequence, ViewpointSystem,
                    encode_harmony, encode_melody, expectancy_features, stepwise_select)
from .ppm import ContextModel, ppm_predict, ppm_train
from .symbols import UNDEF, UNSEEN
from .viewpoints import VIEWPOINTS, Viewpoint, derive_viewpoint, get_viewpoint

__all__ = [
    "ContextModel", "Distribution", "ExpectancyConfig", "ExpectancyModel", "SymbolSequence",
    "UNDEF", "UNSEEN", "VIEWPOINTS", "Viewpoint", "ViewpointSystem", "combine_distributions",
    "derive_viewpoint", "encode_harmony", "encode_melody", "entropy", "expectancy_features",
    "get_viewpoint", "ic", "ppm_predict", "ppm_train", "stepwise_select",
]
