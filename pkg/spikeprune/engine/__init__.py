from .neuron import NeuronState, LifLayer, lif_step, surrogate_grad, reset_state
from .model import (
    SpikingTransformer, ModelWeights, EmbedWeights, BlockWeights, MergeWeights, HeadWeights,
    ForwardTrace, TransformerBlock, PatchMerge, SpikingEmbedding,
    block_forward, patch_merge, classify, model_forward, evaluate_accuracy
)
from .pruning import (
    ScoreMap, TokenPartition, MaskRecord, PruningRunner,
    spatial_score, temporal_score, normalize, irtop, partition,
    pruned_block_forward, model_forward_pruned, collect_masks
)
from .training import (
    SGD, EpochMetrics, EvalReport,
    loss, loss_grad, backward, train, finetune_pruned, evaluate
)
from .dataset import SyntheticDataset, generate_splits
from .search import SearchCandidate, SearchReport, enumerate_schedules, search
from .metrics import (
    LayerShape, LayerStats, EnergyReport, StatsCollector,
    count_flops, measure_firing_rate, energy_report, measure_energy, throughput
)
from .archive import save_weights, load_weights
from .config import load_config, fingerprint

__all__ = [
    'NeuronState', 'LifLayer', 'lif_step', 'surrogate_grad', 'reset_state',
    'SpikingTransformer', 'ModelWeights', 'EmbedWeights', 'BlockWeights', 'MergeWeights', 'HeadWeights',
    'ForwardTrace', 'TransformerBlock', 'PatchMerge', 'SpikingEmbedding',
    'block_forward', 'patch_merge', 'classify', 'model_forward', 'evaluate_accuracy',
    'ScoreMap', 'TokenPartition', 'MaskRecord', 'PruningRunner',
    'spatial_score', 'temporal_score', 'normalize', 'irtop', 'partition',
    'pruned_block_forward', 'model_forward_pruned', 'collect_masks',
    'SGD', 'EpochMetrics', 'EvalReport',
    'loss', 'loss_grad', 'backward', 'train', 'finetune_pruned', 'evaluate',
    'SyntheticDataset', 'generate_splits',
    'SearchCandidate', 'SearchReport', 'enumerate_schedules', 'search',
    'LayerShape', 'LayerStats', 'EnergyReport', 'StatsCollector',
    'count_flops', 'measure_firing_rate', 'energy_report', 'measure_energy', 'throughput',
    'save_weights', 'load_weights',
    'load_config', 'fingerprint'
]
