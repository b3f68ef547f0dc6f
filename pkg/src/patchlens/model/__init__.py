"""Desk-scale Transformer repair models: baseline translation, edit-pointer,
and context-biased variants, with training, decoding, and evaluation."""

from .config import ModelConfig, VARIANTS
from .data import SubtokenVocab, ExampleEncoder, EncodedExample, build_vocab
from .transformer import RepairTransformer, build_model
from .checkpoint import save_checkpoint, load_checkpoint
from .decoding import Hypothesis, greedy_decode, beam_search, rescore
from .training import TrainSettings, TrainingCurve, EpochRecord, TrainResult, forward_train, train
from .evaluation import EvalReport, evaluate, correlate_curve

__all__ = [
    "ModelConfig", "VARIANTS", "SubtokenVocab", "ExampleEncoder", "EncodedExample",
    "build_vocab", "RepairTransformer", "build_model", "save_checkpoint",
    "load_checkpoint", "Hypothesis", "greedy_decode", "beam_search", "rescore",
    "TrainSettings", "TrainingCurve", "EpochRecord", "TrainResult", "forward_train",
    "train", "EvalReport", "evaluate", "correlate_curve",
]
