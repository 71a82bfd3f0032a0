"""Choice selection (QCA) and free generation (QA) scoring."""

from .metrics import ClassificationScores, classification_scores, corpus_bleu, normalize_tokens, rouge_l, rouge_n
from .qa import QAPair, QAResult, score_qa, score_texts
from .qca import QCAResult, Scorer, ScoringMode, get_scorer, score_choices, score_qca
from .results import EvalResults, dumps_results
from .test_sets import TestSets, make_test_sets

__all__ = [
    "ClassificationScores",
    "classification_scores",
    "corpus_bleu",
    "normalize_tokens",
    "rouge_l",
    "rouge_n",
    "QAPair",
    "QAResult",
    "score_qa",
    "score_texts",
    "QCAResult",
    "Scorer",
    "ScoringMode",
    "get_scorer",
    "score_choices",
    "score_qca",
    "EvalResults",
    "dumps_results",
    "TestSets",
    "make_test_sets",
]
