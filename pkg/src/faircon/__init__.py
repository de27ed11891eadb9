"""Group-fair contrastive text classification with exact bound verification."""

from .augment import (
    AUGMENT_KINDS,
    AugmentStrategy,
    SynonymLexicon,
    augment_tokens,
    block_lexicon,
    group_masking_lexicon,
    make_pair_batch,
)
from .data import (
    Corpus,
    Dataset,
    Example,
    SynthConfig,
    generate_synthetic,
    load_corpus,
    load_jsonl,
    save_corpus,
    save_jsonl,
    standard_biased_config,
    stratified_batches,
)
from .encoder import (
    ClassifierParams,
    EncoderConfig,
    EncoderParams,
    encode_batch,
    encode_batch_backward,
    init_classifier,
    init_encoder,
    load_checkpoint,
    save_checkpoint,
)
from .errors import ConfigError, CorpusFormatError, TrainingDivergedError
from .fairness import (
    MetricsRecord,
    PredictionRecord,
    UndefinedRateWarning,
    eo_gaps,
    evaluate_predictions,
    f1_scores,
    group_confusion,
)
from .infobounds import (
    Critic,
    DiscreteJoint,
    GenerativeProcess,
    check_cmi_sandwich,
    check_kl_variational,
    check_logprob_upper_bound,
    check_mixture_kl_bound,
    conditional_infonce_exact,
    entropy,
    joint_from_process,
    kl_divergence,
    mutual_information,
    near_optimal_critic,
)
from .losses import (
    GradCheckReport,
    LossConfig,
    PairedBatch,
    conditional_infonce_loss,
    grad_check,
    one_stage_loss,
    pretrain_loss,
    sup_contrastive_loss,
)
from .train import (
    TrainConfig,
    TrainedModel,
    benchmark_train_config,
    evaluate_model,
    run_one_stage,
    run_two_stage,
    sweep,
    train,
)

__version__ = "0.1.0"
