from .anchored import (
    AnchorBlock,
    BackboneVersion,
    DraftModel,
    HeadParams,
    NGramFeatures,
    TargetModel,
    Vocab,
    draft_logits,
    fine_tune,
    make_base_target,
    make_draft,
    target_greedy,
    target_logits,
)
from .checkpoint import CheckpointError, load_draft, pack_tensors, save_draft, unpack_tensors
from .corpus import Corpus, load_corpus, markov_corpus, save_corpus
from .evaluation import measure_acceptance
from .synthetic import SyntheticDraft, SyntheticTarget, bernoulli_pair
from .training import (
    TrainingConfig,
    TrainingError,
    evaluate_loss,
    loss_and_gradients,
    loss_feat,
    loss_kd,
    prepare_data,
    train_draft,
)

__all__ = [
    "AnchorBlock", "BackboneVersion", "DraftModel", "HeadParams", "NGramFeatures", "TargetModel", "Vocab",
    "draft_logits", "fine_tune", "make_base_target", "make_draft", "target_greedy", "target_logits",
    "CheckpointError", "load_draft", "pack_tensors", "save_draft", "unpack_tensors",
    "Corpus", "load_corpus", "markov_corpus", "save_corpus", "measure_acceptance",
    "SyntheticDraft", "SyntheticTarget", "bernoulli_pair",
    "TrainingConfig", "TrainingError", "evaluate_loss", "loss_and_gradients", "loss_feat", "loss_kd",
    "prepare_data", "train_draft",
]
