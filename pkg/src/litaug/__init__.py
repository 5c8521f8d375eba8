"""litaug: literature-mined prompt synthesis for drug-synergy prediction.

The pipeline mines synergy sentences from an abstract corpus, clusters their
masked forms into prompt templates, fills the templates through a masked-LM
gateway to synthesize weighted positive triplets, and trains/evaluates a
feed-forward synergy classifier on the augmented data.
"""

__version__ = "0.1.0"

from .augment import (
    AugmentConfig,
    PipelineState,
    run_iteration,
    run_manual,
    run_mode,
    run_pipeline,
)
from .classifier import GridSpec, SynergyModel, TrainConfig, grid_search, train
from .corpus import (
    Abstract,
    Corpus,
    LeakageReport,
    MinedSentence,
    audit_leakage,
    load_corpus,
    mine_candidates,
    split_sentences,
)
from .datasets import LabeledTriplet, TrainingSet, load_dataset, merge_datasets
from .errors import (
    GatewayError,
    GatewayProtocolError,
    GatewayTransportError,
    InputError,
    LitaugError,
    TrainingError,
    ValidationError,
)
from .evaluation import (
    MetricTable,
    ScoredExample,
    SplitMode,
    auprc,
    bacc,
    cohens_kappa,
    max_f1,
    stratified_kfold,
    unseen_splits,
)
from .gateway import FillRequest, GatewayConfig, HttpGateway, MockGateway, build_gateway
from .kmedoids import Clustering, k_medoids
from .matching import EntityMention, Matcher
from .synthesize import (
    MaskFill,
    WarmStartPrompt,
    WeightedTriplet,
    assemble_triplets,
    expand_vocabulary,
    fill_prompt,
    manual_templates,
    warm_start_variants,
)
from .templates import PromptTemplate, embed_batch, extract_templates, mask_sentence, unmask
from .vocab import EntityType, EntityVocabulary, VocabEntry, VocabSource, load_vocabulary
