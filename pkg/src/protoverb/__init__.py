"""Prototypical prompt verbalizer: a metric-space head over [MASK] embeddings.

The package trains a linear transform plus per-class prototype vectors with
contrastive objectives, supports zero-shot prototype initialization from
keyword-bearing sentences, and ships a k-shot experiment harness with a CLI.
"""

from .core import (
    EmbeddingBatch,
    GradientSet,
    LabelSpace,
    LossWeights,
    MaskEmbedding,
    VerbalizerModel,
    backward,
    class_probabilities,
    classify,
    classify_batch,
    cosine,
    loss_instance_instance,
    loss_instance_prototype,
    loss_prototype_instance,
    total_loss,
    transform,
    transform_batch,
)
from .encode import EmbeddingStore, EncoderSpec, encode_text, load_embeddings, save_embeddings
from .episodes import (
    DatasetSchema,
    EpisodeSpec,
    SynthSpec,
    TextDataset,
    k_shot_sample,
    load_dataset,
    parse_schema,
    sample_k_per_class,
    synth_generate,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateInputError,
    NumericalError,
    ProtoverbError,
    ShapeError,
    TemplateError,
    UsageError,
)
from .optim import (
    OptimConfig,
    TrainState,
    adamw_step,
    init_model,
    load_checkpoint,
    pretrain_prototypes,
    save_checkpoint,
    train,
)
from .report import (
    CANONICAL_ABLATION,
    RunRecord,
    RunReport,
    ablation_sweep,
    aggregate,
    count_params,
    dump_embeddings,
    evaluate_model,
    micro_f1,
)
from .templating import (
    PretrainSampleSpec,
    Template,
    fill_pretrain_template,
    fill_template,
    load_label_space,
    load_templates,
    match_word,
    sample_keyword_sentences,
    split_sentences,
)

__version__ = "0.1.0"
