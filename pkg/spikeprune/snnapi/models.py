import math
from typing import Optional, List, Any, Dict, Tuple
from dataclasses import dataclass, field

from .enums import ResetMode, SpikeFunction, NormKind, ScorerKind
from ..errors import ConfigError, ParameterError

@dataclass
class LifParams:
    """LIF 神经元参数"""
    tau: float = 0.5
    theta: float = 1.0
    reset_mode: ResetMode = ResetMode.HARD
    spike_function: SpikeFunction = SpikeFunction.HEAVISIDE

    def validate(self):
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError(f"tau 必须在 (0, 1] 内: {self.tau}")
        if self.theta <= 0.0:
            raise ParameterError(f"theta 必须为正: {self.theta}")

@dataclass
class SurrogateParams:
    """三角替代梯度参数"""
    beta: float = 1.0

    def validate(self):
        if self.beta <= 0.0:
            raise ParameterError(f"beta 必须为正: {self.beta}")

@dataclass
class NeuronConfig:
    """配置文件中的 neuron 段"""
    tau: float = 0.5
    theta: float = 1.0
    reset_mode: ResetMode = ResetMode.HARD
    beta: float = 1.0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'NeuronConfig':
        """从字典创建 NeuronConfig 对象"""
        return cls(
            tau=float(data.get('tau', 0.5)),
            theta=float(data.get('theta', 1.0)),
            reset_mode=ResetMode(data.get('reset_mode', 'hard')),
            beta=float(data.get('beta', 1.0))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tau': self.tau,
            'theta': self.theta,
            'reset_mode': self.reset_mode.value,
            'beta': self.beta
        }

    def lif_params(self) -> LifParams:
        return LifParams(tau=self.tau, theta=self.theta, reset_mode=self.reset_mode)

    def surrogate_params(self) -> SurrogateParams:
        return SurrogateParams(beta=self.beta)

    def validate(self):
        try:
            self.lif_params().validate()
            self.surrogate_params().validate()
        except ParameterError as e:
            raise ConfigError(str(e), "neuron") from e

@dataclass
class ModelConfig:
    """脉冲 Transformer 结构配置"""
    time_steps: int = 4
    input_height: int = 16
    input_width: int = 16
    input_channels: int = 1
    patch_size: int = 4
    embed_dim: int = 32
    num_blocks: int = 2
    heads: int = 4
    mlp_ratio: int = 4
    attention_scale: float = 0.125
    num_classes: int = 2
    has_merge_stage: bool = False
    init_seed: int = 0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelConfig':
        """从字典创建 ModelConfig 对象"""
        return cls(
            time_steps=int(data.get('time_steps', 4)),
            input_height=int(data.get('input_height', 16)),
            input_width=int(data.get('input_width', 16)),
            input_channels=int(data.get('input_channels', 1)),
            patch_size=int(data.get('patch_size', 4)),
            embed_dim=int(data.get('embed_dim', 32)),
            num_blocks=int(data.get('num_blocks', 2)),
            heads=int(data.get('heads', 4)),
            mlp_ratio=int(data.get('mlp_ratio', 4)),
            attention_scale=float(data.get('attention_scale', 0.125)),
            num_classes=int(data.get('num_classes', 2)),
            has_merge_stage=bool(data.get('has_merge_stage', False)),
            init_seed=int(data.get('init_seed', 0))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'time_steps': self.time_steps,
            'input_height': self.input_height,
            'input_width': self.input_width,
            'input_channels': self.input_channels,
            'patch_size': self.patch_size,
            'embed_dim': self.embed_dim,
            'num_blocks': self.num_blocks,
            'heads': self.heads,
            'mlp_ratio': self.mlp_ratio,
            'attention_scale': self.attention_scale,
            'num_classes': self.num_classes,
            'has_merge_stage': self.has_merge_stage,
            'init_seed': self.init_seed
        }

    @property
    def grid_height(self) -> int:
        return self.input_height // self.patch_size

    @property
    def grid_width(self) -> int:
        return self.input_width // self.patch_size

    @property
    def merge_after(self) -> Optional[int]:
        """patch-merge 所在位置：第 merge_after 个 block 之后（从 1 计）"""
        return self.num_blocks // 2 if self.has_merge_stage else None

    def block_grid(self, index: int) -> Tuple[int, int, int]:
        """
        第 index 个 block（从 0 计）的输入网格

        Returns:
            Tuple[int, int, int]: (H, W, D)
        """
        h, w, d = self.grid_height, self.grid_width, self.embed_dim
        if self.merge_after is not None and index >= self.merge_after:
            return h // 2, w // 2, d * 2
        return h, w, d

    def final_grid(self) -> Tuple[int, int, int]:
        return self.block_grid(self.num_blocks - 1) if self.num_blocks else (
            self.grid_height, self.grid_width, self.embed_dim)

    def validate(self):
        checks = [
            ('time_steps', self.time_steps >= 1, "必须 ≥ 1"),
            ('num_blocks', self.num_blocks >= 1, "必须 ≥ 1"),
            ('mlp_ratio', self.mlp_ratio >= 1, "必须 ≥ 1"),
            ('heads', self.heads >= 1, "必须 ≥ 1"),
            ('embed_dim', self.embed_dim >= 1 and self.embed_dim % max(self.heads, 1) == 0,
             f"必须能被 heads={self.heads} 整除"),
            ('patch_size', self.patch_size >= 1
             and self.input_height % self.patch_size == 0
             and self.input_width % self.patch_size == 0, "必须整除输入尺寸"),
            ('num_classes', self.num_classes >= 2, "必须 ≥ 2"),
            ('input_channels', self.input_channels >= 1, "必须 ≥ 1"),
        ]
        for key, ok, message in checks:
            if not ok:
                raise ConfigError(message, f"model.{key}")
        if self.has_merge_stage:
            if self.num_blocks < 2:
                raise ConfigError("patch-merge 需要至少 2 个 block", "model.has_merge_stage")
            if self.grid_height % 2 or self.grid_width % 2:
                raise ConfigError(
                    f"patch-merge 需要偶数 token 网格，当前为 {self.grid_height}×{self.grid_width}",
                    "model.has_merge_stage")

@dataclass
class ScorerConfig:
    """IRToP 评分配置"""
    window_k: int = 3
    alpha: float = 0.5
    spatial_only_first_step: bool = True
    norm_kind: NormKind = NormKind.L1
    kind: ScorerKind = ScorerKind.IRTOP
    random_seed: int = 0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ScorerConfig':
        """从字典创建 ScorerConfig 对象"""
        return cls(
            window_k=int(data.get('window_k', 3)),
            alpha=float(data.get('alpha', 0.5)),
            spatial_only_first_step=bool(data.get('spatial_only_first_step', True)),
            norm_kind=NormKind(data.get('norm_kind', 'l1')),
            kind=ScorerKind(data.get('kind', 'irtop')),
            random_seed=int(data.get('random_seed', 0))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'window_k': self.window_k,
            'alpha': self.alpha,
            'spatial_only_first_step': self.spatial_only_first_step,
            'norm_kind': self.norm_kind.value,
            'kind': self.kind.value,
            'random_seed': self.random_seed
        }

    def validate(self):
        if self.window_k < 1 or self.window_k % 2 == 0:
            raise ConfigError(f"必须为正奇数: {self.window_k}", "scorer.window_k")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"必须在 [0, 1] 内: {self.alpha}", "scorer.alpha")

@dataclass
class PruneSchedule:
    """每个 block 的 token 保留比例 r_1..r_L"""
    ratios: List[float] = field(default_factory=list)

    @classmethod
    def identity(cls, num_blocks: int) -> 'PruneSchedule':
        return cls(ratios=[1.0] * num_blocks)

    @classmethod
    def from_dict(cls, data: Any) -> 'PruneSchedule':
        """从列表或 {"ratios": [...]} 创建 PruneSchedule 对象"""
        if isinstance(data, dict):
            data = data.get('ratios', [])
        return cls(ratios=[float(r) for r in data])

    def to_dict(self) -> Dict[str, Any]:
        return {'ratios': list(self.ratios)}

    def __len__(self) -> int:
        return len(self.ratios)

    @property
    def mean_ratio(self) -> float:
        return sum(self.ratios) / len(self.ratios) if self.ratios else 0.0

    def is_monotone(self) -> bool:
        return all(a >= b for a, b in zip(self.ratios, self.ratios[1:]))

    def label(self) -> str:
        return "-".join(f"{r:g}" for r in self.ratios)

    def validate(self, num_blocks: Optional[int] = None):
        for i, r in enumerate(self.ratios):
            if not (0.0 < r <= 1.0) or math.isnan(r):
                raise ConfigError(f"保留比例必须在 (0, 1] 内: {r}", f"schedule[{i}]")
        if num_blocks is not None and len(self.ratios) != num_blocks:
            raise ConfigError(
                f"长度 {len(self.ratios)} 与 block 数 {num_blocks} 不一致", "schedule")

@dataclass
class TrainConfig:
    """训练配置"""
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0
    prune_during_training: bool = False
    schedule: Optional[PruneSchedule] = None
    finetune_epochs: int = 5
    finetune_lr_factor: float = 0.1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        """从字典创建 TrainConfig 对象"""
        schedule = data.get('schedule')
        return cls(
            epochs=int(data.get('epochs', 30)),
            batch_size=int(data.get('batch_size', 16)),
            learning_rate=float(data.get('learning_rate', 0.05)),
            momentum=float(data.get('momentum', 0.9)),
            seed=int(data.get('seed', 0)),
            prune_during_training=bool(data.get('prune_during_training', False)),
            schedule=PruneSchedule.from_dict(schedule) if schedule not in (None, 'none') else None,
            finetune_epochs=int(data.get('finetune_epochs', 5)),
            finetune_lr_factor=float(data.get('finetune_lr_factor', 0.1))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'learning_rate': self.learning_rate,
            'momentum': self.momentum,
            'seed': self.seed,
            'prune_during_training': self.prune_during_training,
            'schedule': list(self.schedule.ratios) if self.schedule else 'none',
            'finetune_epochs': self.finetune_epochs,
            'finetune_lr_factor': self.finetune_lr_factor
        }

    def validate(self):
        if self.learning_rate < 0.0:
            raise ConfigError(f"不能为负: {self.learning_rate}", "train.learning_rate")
        if self.batch_size < 1:
            raise ConfigError(f"必须 ≥ 1: {self.batch_size}", "train.batch_size")
        if self.epochs < 0:
            raise ConfigError(f"不能为负: {self.epochs}", "train.epochs")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"必须在 [0, 1) 内: {self.momentum}", "train.momentum")
        if self.prune_during_training and self.schedule is None:
            raise ConfigError("开启剪枝训练时必须给出 schedule", "train.schedule")

@dataclass
class DatasetSpec:
    """合成数据集生成参数"""
    num_classes: int = 2
    num_train: int = 200
    num_eval: int = 100
    height: int = 16
    width: int = 16
    noise: float = 0.15
    blob_sigma: float = 2.0
    seed: int = 0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DatasetSpec':
        """从字典创建 DatasetSpec 对象"""
        return cls(
            num_classes=int(data.get('num_classes', 2)),
            num_train=int(data.get('num_train', 200)),
            num_eval=int(data.get('num_eval', 100)),
            height=int(data.get('height', 16)),
            width=int(data.get('width', 16)),
            noise=float(data.get('noise', 0.15)),
            blob_sigma=float(data.get('blob_sigma', 2.0)),
            seed=int(data.get('seed', 0))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'num_classes': self.num_classes,
            'num_train': self.num_train,
            'num_eval': self.num_eval,
            'height': self.height,
            'width': self.width,
            'noise': self.noise,
            'blob_sigma': self.blob_sigma,
            'seed': self.seed
        }

    def validate(self):
        if not 2 <= self.num_classes <= 5:
            raise ConfigError(f"支持 2~5 个类别: {self.num_classes}", "data.num_classes")
        if self.num_train < 0 or self.num_eval < 0:
            raise ConfigError("样本数不能为负", "data.num_train")
        if self.noise < 0.0 or self.blob_sigma <= 0.0:
            raise ConfigError("noise 不能为负且 blob_sigma 必须为正", "data.noise")

@dataclass
class SearchSpace:
    """保留比例网格搜索空间"""
    candidate_ratios: List[float] = field(
        default_factory=lambda: [1.0, 0.9, 0.81, 0.72, 0.64, 0.56, 0.49])
    target_avg: float = 0.65
    tolerance: float = 0.03
    batch_size: int = 64
    sample_seed: int = 0
    workers: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SearchSpace':
        """从字典创建 SearchSpace 对象"""
        ratios = data.get('candidate_ratios', [1.0, 0.9, 0.81, 0.72, 0.64, 0.56, 0.49])
        return cls(
            candidate_ratios=sorted({float(r) for r in ratios}, reverse=True),
            target_avg=float(data.get('target_avg', 0.65)),
            tolerance=float(data.get('tolerance', 0.03)),
            batch_size=int(data.get('batch_size', 64)),
            sample_seed=int(data.get('sample_seed', 0)),
            workers=int(data.get('workers', 1))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'candidate_ratios': list(self.candidate_ratios),
            'target_avg': self.target_avg,
            'tolerance': self.tolerance,
            'batch_size': self.batch_size,
            'sample_seed': self.sample_seed,
            'workers': self.workers
        }

    def validate(self):
        if not self.candidate_ratios:
            raise ConfigError("候选比例不能为空", "search.candidate_ratios")
        for r in self.candidate_ratios:
            if not 0.0 < r <= 1.0:
                raise ConfigError(f"候选比例必须在 (0, 1] 内: {r}", "search.candidate_ratios")
        if not 0.0 < self.target_avg <= 1.0:
            raise ConfigError(f"必须在 (0, 1] 内: {self.target_avg}", "search.target_avg")
        if self.tolerance < 0.0:
            raise ConfigError(f"不能为负: {self.tolerance}", "search.tolerance")
        if self.batch_size < 1 or self.workers < 1:
            raise ConfigError("batch_size 与 workers 必须 ≥ 1", "search.batch_size")

@dataclass
class EnergyConstants:
    """45nm 工艺下的单次运算能耗（pJ）"""
    e_mac: float = 4.6
    e_ac: float = 0.9

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EnergyConstants':
        """从字典创建 EnergyConstants 对象"""
        return cls(
            e_mac=float(data.get('e_mac', 4.6)),
            e_ac=float(data.get('e_ac', 0.9))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {'e_mac': self.e_mac, 'e_ac': self.e_ac}

    def validate(self):
        if self.e_mac <= 0.0 or self.e_ac <= 0.0:
            raise ConfigError("能耗常数必须为正", "energy")

@dataclass
class PathsConfig:
    """文件路径"""
    weights: str = "weights.spkw"
    data: str = "data"
    reports: str = "reports"

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PathsConfig':
        """从字典创建 PathsConfig 对象"""
        return cls(
            weights=str(data.get('weights', 'weights.spkw')),
            data=str(data.get('data', 'data')),
            reports=str(data.get('reports', 'reports'))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {'weights': self.weights, 'data': self.data, 'reports': self.reports}

@dataclass
class RunConfig:
    """一次运行的完整配置"""
    model: ModelConfig = field(default_factory=ModelConfig)
    neuron: NeuronConfig = field(default_factory=NeuronConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    schedule: Optional[PruneSchedule] = None
    train: TrainConfig = field(default_factory=TrainConfig)
    search: SearchSpace = field(default_factory=SearchSpace)
    data: DatasetSpec = field(default_factory=DatasetSpec)
    energy: EnergyConstants = field(default_factory=EnergyConstants)
    paths: PathsConfig = field(default_factory=PathsConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        """从字典创建 RunConfig 对象"""
        schedule = data.get('schedule', 'none')
        return cls(
            model=ModelConfig.from_dict(data.get('model', {})),
            neuron=NeuronConfig.from_dict(data.get('neuron', {})),
            scorer=ScorerConfig.from_dict(data.get('scorer', {})),
            schedule=PruneSchedule.from_dict(schedule) if schedule not in (None, 'none') else None,
            train=TrainConfig.from_dict(data.get('train', {})),
            search=SearchSpace.from_dict(data.get('search', {})),
            data=DatasetSpec.from_dict(data.get('data', {})),
            energy=EnergyConstants.from_dict(data.get('energy', {})),
            paths=PathsConfig.from_dict(data.get('paths', {}))
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'model': self.model.to_dict(),
            'neuron': self.neuron.to_dict(),
            'scorer': self.scorer.to_dict(),
            'schedule': list(self.schedule.ratios) if self.schedule else 'none',
            'train': self.train.to_dict(),
            'search': self.search.to_dict(),
            'data': self.data.to_dict(),
            'energy': self.energy.to_dict(),
            'paths': self.paths.to_dict()
        }

    def validate(self):
        """跨字段一致性检查"""
        self.model.validate()
        self.neuron.validate()
        self.scorer.validate()
        self.train.validate()
        self.search.validate()
        self.data.validate()
        self.energy.validate()
        if self.schedule is not None:
            self.schedule.validate(self.model.num_blocks)
        if self.train.schedule is not None:
            try:
                self.train.schedule.validate(self.model.num_blocks)
            except ConfigError as e:
                raise ConfigError(str(e), "train.schedule") from e
        if (self.data.height, self.data.width) != (self.model.input_height, self.model.input_width):
            raise ConfigError("数据尺寸与 model.input_height/input_width 不一致", "data.height")
        if self.data.num_classes != self.model.num_classes:
            raise ConfigError("数据类别数与 model.num_classes 不一致", "data.num_classes")
        if self.model.input_channels != 1:
            raise ConfigError("合成数据为单通道", "model.input_channels")
