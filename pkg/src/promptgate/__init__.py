"""promptgate: a cost-aware gateway that routes LLM queries to right-sized
response templates, enforces hard token caps, and accounts for output-token
savings against an always-verbose baseline."""

from .accounting import (
    AccuracyReport,
    Ledger,
    SavingsReport,
    UsageRecord,
    cost_of_tokens,
    routing_accuracy,
    savings_vs_baseline,
    template_distribution,
)
from .costs import expected_cost, pac_bound, projected_total_cost, select_cost_aware
from .dataset import LabeledQuery, SplitSpec, load_dataset, stratified_split
from .embed_cache import EmbeddingCache
from .embedding import (
    EMBEDDING_DIM,
    EmbeddingVector,
    LocalTestEmbedder,
    RemoteEmbedder,
    embed,
    embed_batch,
    local_test_embed,
)
from .errors import (
    AuthError,
    ContractViolation,
    DatasetError,
    DivergenceError,
    IntegrityError,
    PromptGateError,
    StratificationError,
    TrainingError,
    TransportError,
)
from .mlp import (
    LabelCodec,
    MlpModel,
    Standardizer,
    TrainConfig,
    TrainReport,
    fit_standardizer,
    gradient_check,
    load_model,
    save_model,
    train_mlp,
)
from .pricing import PRICING_PRESETS, cost_params_from_pricing, pricing_for
from .providers import (
    CompletionRequest,
    CompletionResponse,
    MockProvider,
    ProviderProfile,
)
from .router import RouteResult, RouterConfig, route, route_batch
from .templates import PromptBundle, TemplateRegistry, render_prompt, token_cap
from .tokencount import count_tokens, filler_text
from .types import (
    CANONICAL_TEMPLATES,
    EXECUTIVE,
    K_TEMPLATES,
    MINIMAL,
    STANDARD,
    TECHNICAL,
    VERBOSE,
    CostParams,
    ProbVector,
    ProviderPricing,
    Query,
    TemplateId,
    TemplateSpec,
)

__version__ = "0.1.0"
