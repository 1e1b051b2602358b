"""Fuzzy supervised classification over fixed-width binary codewords."""
from .bitcode import Codeword, ContractError, ball_enumerate, ball_size, hamming_distance
from .evaluation import EvalReport, evaluate, oracle_predict
from .labels import LabelDistribution, argmax_label, crisp, fuzziness, normalize
from .sht import (
    Fallback,
    Prediction,
    SupervisedHashTable,
    TrainConfig,
    ZetaPolicy,
    absorb,
    build,
    build_arrays,
    load,
    query,
    save,
)

__version__ = "0.1.0"
