"""Offline exporter feeding the personalization evaluation engine.

Turns the texts of an evaluation corpus into (a) pairwise distance
matrices from contextual embeddings and (b) averaged masked-LM token
distributions, written in the engine's precomputed-metric file formats.
The two packages share no code; files are the only interface.
"""

from .corpus import (
    ExportCorpus,
    doc_key,
    gen_key,
    gold_key,
    load_export_corpus,
    needed_pairs,
)
from .errors import CorpusFormatError, ExportError, ModelLoadError
from .export import (
    ExportJob,
    export_bscore_matrix,
    export_infolm_distributions,
    run_export,
)
from .files import write_distributions, write_matrix
from .matching import greedy_match_f1, pair_distance

__version__ = "0.1.0"
