"""
脉冲 Transformer：脉冲 patch 嵌入、SSA、MLP、残差 block、可选 patch-merge 阶段、
全局平均池化与分类头

block 之间传递的激活都是 [H, W, D] 的二值脉冲网格；block 内部按展平的 token 行计算，
rows 给出时只处理这些行（剪枝旁路由 pruning 模块负责）。
"""

import copy
from dataclasses import dataclass, field, fields
from typing import Optional, Dict, Any, List, Callable

import numpy as np

from .numerics import (
    Tensor, Rng, make_rng, matmul, flatten_grid, unflatten_grid,
    extract_patches, depthwise_conv3x3
)
from .neuron import LifLayer
from .metrics import LayerShape, count_flops
from ..errors import DimensionError, ConfigError, FormatError
from ..snnapi.enums import Billing, LayerKind
from ..snnapi.models import ModelConfig, LifParams, SurrogateParams, ScorerConfig, PruneSchedule, RunConfig
from ..log import logger


def _normal(rng: Rng, shape, fan_in: int) -> Tensor:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class _ArrayGroup:
    """按字段名枚举数组的权重分组"""

    def arrays(self) -> Dict[str, Tensor]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def zeros_like(self):
        return type(self)(**{name: np.zeros_like(arr) for name, arr in self.arrays().items()})


@dataclass
class EmbedWeights(_ArrayGroup):
    """嵌入层：patch 卷积 + 仿射，逐通道 3×3 位置卷积 + 仿射"""
    conv_w: Tensor
    conv_scale: Tensor
    conv_shift: Tensor
    pos_w: Tensor
    pos_scale: Tensor
    pos_shift: Tensor

    @classmethod
    def initialize(cls, cfg: ModelConfig, rng: Rng) -> 'EmbedWeights':
        fan_in = cfg.patch_size * cfg.patch_size * cfg.input_channels
        d = cfg.embed_dim
        return cls(
            conv_w=_normal(rng, (fan_in, d), fan_in),
            conv_scale=np.ones(d),
            conv_shift=np.zeros(d),
            pos_w=_normal(rng, (3, 3, d), 9),
            pos_scale=np.ones(d),
            pos_shift=np.zeros(d)
        )


@dataclass
class BlockWeights(_ArrayGroup):
    """一个 Transformer block 的权重，BN 折叠为逐通道仿射"""
    w_q: Tensor
    q_scale: Tensor
    q_shift: Tensor
    w_k: Tensor
    k_scale: Tensor
    k_shift: Tensor
    w_v: Tensor
    v_scale: Tensor
    v_shift: Tensor
    w_proj: Tensor
    proj_scale: Tensor
    proj_shift: Tensor
    mlp_w1: Tensor
    mlp1_scale: Tensor
    mlp1_shift: Tensor
    mlp_w2: Tensor
    mlp2_scale: Tensor
    mlp2_shift: Tensor

    @classmethod
    def initialize(cls, dim: int, hidden: int, rng: Rng) -> 'BlockWeights':
        values: Dict[str, Tensor] = {}
        for name in ("q", "k", "v", "proj"):
            values[f"w_{name}"] = _normal(rng, (dim, dim), dim)
            values[f"{name}_scale"] = np.ones(dim)
            values[f"{name}_shift"] = np.zeros(dim)
        values["mlp_w1"] = _normal(rng, (dim, hidden), dim)
        values["mlp1_scale"] = np.ones(hidden)
        values["mlp1_shift"] = np.zeros(hidden)
        values["mlp_w2"] = _normal(rng, (hidden, dim), hidden)
        values["mlp2_scale"] = np.ones(dim)
        values["mlp2_shift"] = np.zeros(dim)
        return cls(**values)


@dataclass
class MergeWeights(_ArrayGroup):
    """2×2 步长 2 的 patch-merge 卷积 + 仿射，通道翻倍"""
    conv_w: Tensor
    scale: Tensor
    shift: Tensor

    @classmethod
    def initialize(cls, dim: int, rng: Rng) -> 'MergeWeights':
        return cls(
            conv_w=_normal(rng, (4 * dim, 2 * dim), 4 * dim),
            scale=np.ones(2 * dim),
            shift=np.zeros(2 * dim)
        )


@dataclass
class HeadWeights(_ArrayGroup):
    """分类头"""
    w: Tensor
    b: Tensor

    @classmethod
    def initialize(cls, dim: int, num_classes: int, rng: Rng) -> 'HeadWeights':
        return cls(w=rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, num_classes)),
                   b=np.zeros(num_classes))


@dataclass
class ModelWeights:
    """模型全部权重"""
    embed: EmbedWeights
    blocks: List[BlockWeights]
    head: HeadWeights
    merge: Optional[MergeWeights] = None

    @classmethod
    def initialize(cls, cfg: ModelConfig, seed: Optional[int] = None) -> 'ModelWeights':
        """按配置随机初始化，种子相同则权重相同"""
        rng = make_rng(cfg.init_seed if seed is None else seed)
        embed = EmbedWeights.initialize(cfg, rng)
        blocks = []
        merge = None
        for index in range(cfg.num_blocks):
            if cfg.merge_after is not None and index == cfg.merge_after:
                merge = MergeWeights.initialize(cfg.embed_dim, rng)
            _, _, dim = cfg.block_grid(index)
            blocks.append(BlockWeights.initialize(dim, dim * cfg.mlp_ratio, rng))
        _, _, final_dim = cfg.final_grid()
        head = HeadWeights.initialize(final_dim, cfg.num_classes, rng)
        return cls(embed=embed, blocks=blocks, head=head, merge=merge)

    def named_arrays(self) -> Dict[str, Tensor]:
        """
        展平的 名称 → 数组 映射

        返回的数组与权重对象共享内存，原地修改即修改权重。
        """
        named: Dict[str, Tensor] = {}
        for name, arr in self.embed.arrays().items():
            named[f"embed.{name}"] = arr
        for index, block in enumerate(self.blocks):
            for name, arr in block.arrays().items():
                named[f"blocks.{index}.{name}"] = arr
        if self.merge is not None:
            for name, arr in self.merge.arrays().items():
                named[f"merge.{name}"] = arr
        for name, arr in self.head.arrays().items():
            named[f"head.{name}"] = arr
        return named

    def zeros_like(self) -> 'ModelWeights':
        return ModelWeights(
            embed=self.embed.zeros_like(),
            blocks=[b.zeros_like() for b in self.blocks],
            head=self.head.zeros_like(),
            merge=self.merge.zeros_like() if self.merge is not None else None
        )

    def copy(self) -> 'ModelWeights':
        return copy.deepcopy(self)

    def load_arrays(self, arrays: Dict[str, Tensor]):
        """
        用 名称 → 数组 映射覆盖权重

        Raises:
            FormatError: 如果名称集合或形状与当前结构不一致
        """
        named = self.named_arrays()
        missing = sorted(set(named) - set(arrays))
        extra = sorted(set(arrays) - set(named))
        if missing or extra:
            raise FormatError(f"权重条目不匹配，缺少 {missing[:3]}，多余 {extra[:3]}")
        for name, target in named.items():
            source = np.asarray(arrays[name], dtype=np.float64)
            if source.shape != target.shape:
                raise FormatError(f"权重 {name} 形状为 {source.shape}，模型需要 {target.shape}")
            target[...] = source


@dataclass
class ForwardTrace:
    """训练所需的前向记录"""
    patches: Optional[Tensor] = None
    embed_steps: List[Dict[str, Any]] = field(default_factory=list)
    block_steps: List[List[Dict[str, Any]]] = field(default_factory=list)
    merge_steps: List[Dict[str, Any]] = field(default_factory=list)
    head_steps: List[Dict[str, Any]] = field(default_factory=list)
    logits: Optional[Tensor] = None


def _record(probe, name: str, billing: Billing, inputs: Optional[Tensor], flops: int):
    if probe is not None:
        probe.record(name, billing, inputs, flops)


def _fire(layer: LifLayer, x: Tensor, rows, cache: Optional[Dict[str, Any]], key: str) -> Tensor:
    spikes, u_tilde = layer.fire(x, rows)
    if cache is not None:
        cache[f"{key}_u"] = u_tilde
        cache[f"{key}_s"] = spikes
    return spikes


class SpikingEmbedding:
    """脉冲 patch 嵌入，位置信息由逐通道卷积 + LIF 残差注入"""

    def __init__(self, cfg: ModelConfig, weights: EmbedWeights, params: LifParams, sg: SurrogateParams):
        self.cfg = cfg
        self.weights = weights
        tokens = cfg.grid_height * cfg.grid_width
        shape = (tokens, cfg.embed_dim)
        self.conv_lif = LifLayer("embed.conv_lif", shape, params, sg)
        self.pos_lif = LifLayer("embed.pos_lif", shape, params, sg)
        self.out_lif = LifLayer("embed.out_lif", shape, params, sg)

    def lif_layers(self) -> List[LifLayer]:
        return [self.conv_lif, self.pos_lif, self.out_lif]

    def project(self, image: Tensor, probe=None):
        """
        patch 卷积，静态图像每个样本只计算一次

        Returns:
            Tuple[Tensor, Tensor]: (展开的 patch, 卷积输出 [N, D])

        Raises:
            DimensionError: 如果图像尺寸与配置不符
        """
        cfg = self.cfg
        expected = (cfg.input_height, cfg.input_width, cfg.input_channels)
        image = np.asarray(image, dtype=np.float64)
        if image.ndim == 2 and cfg.input_channels == 1:
            image = image[:, :, None]
        if image.shape != expected:
            raise DimensionError(f"输入图像形状 {image.shape} 与配置 {expected} 不一致")
        patches = extract_patches(image, cfg.patch_size)
        z = matmul(patches, self.weights.conv_w)
        _record(probe, "embed.conv", Billing.MAC, None, count_flops(LayerShape(
            LayerKind.CONV, out_h=cfg.grid_height, out_w=cfg.grid_width,
            in_ch=cfg.input_channels, out_ch=cfg.embed_dim, kernel=cfg.patch_size)))
        return patches, z

    def step(self, z: Tensor, cache: Optional[Dict[str, Any]] = None, probe=None) -> Tensor:
        """一个时间步的嵌入输出 [H, W, D]"""
        w = self.weights
        h, wd = self.cfg.grid_height, self.cfg.grid_width
        pre = z * w.conv_scale + w.conv_shift
        s0 = _fire(self.conv_lif, pre, None, cache, "conv")
        conv = flatten_grid(depthwise_conv3x3(unflatten_grid(s0, h, wd), w.pos_w))
        pos_pre = conv * w.pos_scale + w.pos_shift
        pos = _fire(self.pos_lif, pos_pre, None, cache, "pos")
        x0 = _fire(self.out_lif, s0 + pos, None, cache, "out")
        if cache is not None:
            cache["conv_pre"] = z
            cache["pos_conv"] = conv
        tokens, dim = s0.shape
        _record(probe, "embed.pos", Billing.AC, s0, count_flops(LayerShape(
            LayerKind.DEPTHWISE, out_h=h, out_w=wd, in_ch=dim, out_ch=dim, kernel=3)))
        # 残差加法与神经元更新，按参与累加的脉冲发放率计
        _record(probe, "embed.elementwise", Billing.AC, np.concatenate([s0, pos], axis=1),
                count_flops(LayerShape(LayerKind.ELEMENTWISE, elements=4 * tokens * dim)))
        return unflatten_grid(x0, h, wd)


class TransformerBlock:
    """
    脉冲 Transformer block

    X̂ = SN(X + SSA(X))，X' = SN(X̂ + MLP(X̂))，残差后的神经元恢复二值性。
    """

    NEURONS = ("in", "q", "k", "v", "attn", "res1", "mlp1", "mlp2", "res2")

    def __init__(self, index: int, grid, heads: int, mlp_ratio: int, scale: float,
                 weights: BlockWeights, params: LifParams, sg: SurrogateParams):
        self.index = index
        self.height, self.width, self.dim = grid
        self.hidden = self.dim * mlp_ratio
        self.heads = heads
        self.scale = scale
        self.weights = weights
        tokens = self.height * self.width
        self.neurons = {
            name: LifLayer(f"blocks.{index}.{name}_lif",
                           (tokens, self.hidden if name == "mlp1" else self.dim), params, sg)
            for name in self.NEURONS
        }

    def lif_layers(self) -> List[LifLayer]:
        return list(self.neurons.values())

    def _split_heads(self, x: Tensor) -> Tensor:
        return x.reshape(x.shape[0], self.heads, -1).transpose(1, 0, 2)

    def _merge_heads(self, x: Tensor) -> Tensor:
        return x.transpose(1, 0, 2).reshape(x.shape[1], -1)

    def ssa(self, x: Tensor, rows=None, cache: Optional[Dict[str, Any]] = None, probe=None) -> Tensor:
        """
        脉冲自注意力，无 softmax

        q_s, k_s, v_s = SN(affine(w·SN(x)))，注意力 = scale·(q_s k_sᵀ) v_s（逐头），
        经神经元后做投影，返回残差前的分支值。

        Args:
            x: [K, D] 二值 token 行
            rows: 这些行在整张网格中的行号，None 表示全部
        """
        w = self.weights
        tokens = x.shape[0]
        prefix = f"block{self.index}"
        xs = _fire(self.neurons["in"], x, rows, cache, "in")
        spikes = {}
        for name in ("q", "k", "v"):
            lin = matmul(xs, getattr(w, f"w_{name}"))
            pre = lin * getattr(w, f"{name}_scale") + getattr(w, f"{name}_shift")
            spikes[name] = _fire(self.neurons[name], pre, rows, cache, name)
            if cache is not None:
                cache[f"{name}_lin"] = lin
            _record(probe, f"{prefix}.attn.{name}", Billing.AC, xs, count_flops(LayerShape(
                LayerKind.LINEAR, rows=tokens, in_features=self.dim, out_features=self.dim)))

        q, k, v = (self._split_heads(spikes[n]) for n in ("q", "k", "v"))
        scores = np.matmul(q, k.transpose(0, 2, 1))
        attn = self._merge_heads(np.matmul(scores, v)) * self.scale
        attention_flops = count_flops(LayerShape(LayerKind.ATTENTION, tokens=tokens, dim=self.dim))
        _record(probe, f"{prefix}.attn.qk", Billing.AC, spikes["q"], attention_flops)
        _record(probe, f"{prefix}.attn.av", Billing.AC, spikes["v"], attention_flops)

        o = _fire(self.neurons["attn"], attn, rows, cache, "attn")
        proj = matmul(o, w.w_proj)
        _record(probe, f"{prefix}.attn.proj", Billing.AC, o, count_flops(LayerShape(
            LayerKind.LINEAR, rows=tokens, in_features=self.dim, out_features=self.dim)))
        if cache is not None:
            cache["xs"] = xs
            cache["scores"] = scores
            cache["proj_lin"] = proj
        return proj * w.proj_scale + w.proj_shift

    def mlp(self, x: Tensor, rows=None, cache: Optional[Dict[str, Any]] = None, probe=None) -> Tensor:
        """linear → 仿射 → LIF → linear → 仿射 → LIF"""
        w = self.weights
        tokens = x.shape[0]
        prefix = f"block{self.index}"
        lin1 = matmul(x, w.mlp_w1)
        h1 = _fire(self.neurons["mlp1"], lin1 * w.mlp1_scale + w.mlp1_shift, rows, cache, "mlp1")
        lin2 = matmul(h1, w.mlp_w2)
        h2 = _fire(self.neurons["mlp2"], lin2 * w.mlp2_scale + w.mlp2_shift, rows, cache, "mlp2")
        if cache is not None:
            cache["mlp1_lin"] = lin1
            cache["mlp2_lin"] = lin2
        _record(probe, f"{prefix}.mlp.fc1", Billing.AC, x, count_flops(LayerShape(
            LayerKind.LINEAR, rows=tokens, in_features=self.dim, out_features=self.hidden)))
        _record(probe, f"{prefix}.mlp.fc2", Billing.AC, h1, count_flops(LayerShape(
            LayerKind.LINEAR, rows=tokens, in_features=self.hidden, out_features=self.dim)))
        return h2

    def forward(self, x: Tensor, rows=None, cache: Optional[Dict[str, Any]] = None, probe=None) -> Tensor:
        """
        对 [K, D] token 行执行完整 block

        Raises:
            DimensionError: 如果通道数不符
        """
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionError(f"block {self.index} 需要 [K, {self.dim}] 输入，得到 {x.shape}")
        if cache is not None:
            cache["x"] = x
            cache["rows"] = rows
        y = self.ssa(x, rows, cache, probe)
        x_hat = _fire(self.neurons["res1"], x + y, rows, cache, "res1")
        h2 = self.mlp(x_hat, rows, cache, probe)
        out = _fire(self.neurons["res2"], x_hat + h2, rows, cache, "res2")
        tokens = x.shape[0]
        _record(probe, f"block{self.index}.elementwise", Billing.AC, np.concatenate([x, x_hat], axis=1),
                count_flops(LayerShape(LayerKind.ELEMENTWISE, elements=tokens * (10 * self.dim + self.hidden))))
        return out


class PatchMerge:
    """stride-2 卷积 + 仿射 + LIF，token 数变为 1/4，通道翻倍"""

    def __init__(self, grid, weights: MergeWeights, params: LifParams, sg: SurrogateParams):
        self.height, self.width, self.dim = grid
        self.weights = weights
        tokens = (self.height // 2) * (self.width // 2)
        self.lif = LifLayer("merge.lif", (tokens, 2 * self.dim), params, sg)

    def lif_layers(self) -> List[LifLayer]:
        return [self.lif]

    def forward(self, x: Tensor, cache: Optional[Dict[str, Any]] = None, probe=None) -> Tensor:
        """
        Args:
            x: [H, W, D] 二值网格

        Returns:
            Tensor: [H/2, W/2, 2D]

        Raises:
            ConfigError: 如果 H 或 W 为奇数
        """
        height, width, dim = x.shape
        if height % 2 or width % 2:
            raise ConfigError(f"patch-merge 需要偶数网格，得到 {height}×{width}", "model.has_merge_stage")
        if (height, width, dim) != (self.height, self.width, self.dim):
            raise DimensionError(f"patch-merge 输入 {x.shape} 与配置 {(self.height, self.width, self.dim)} 不一致")
        cols = extract_patches(x, 2)
        lin = matmul(cols, self.weights.conv_w)
        out = _fire(self.lif, lin * self.weights.scale + self.weights.shift, None, cache, "merge")
        if cache is not None:
            cache["cols"] = cols
            cache["lin"] = lin
        _record(probe, "merge.conv", Billing.AC, cols, count_flops(LayerShape(
            LayerKind.CONV, out_h=height // 2, out_w=width // 2, in_ch=dim, out_ch=2 * dim, kernel=2)))
        return unflatten_grid(out, height // 2, width // 2)


def block_forward(block: TransformerBlock, x: Tensor, cache=None, probe=None) -> Tensor:
    """对整张 [H, W, D] 网格执行 block"""
    height, width, _ = x.shape
    return unflatten_grid(block.forward(flatten_grid(x), None, cache, probe), height, width)


def patch_merge(merge: PatchMerge, x: Tensor, cache=None, probe=None) -> Tensor:
    return merge.forward(x, cache, probe)


def classify(finals: List[Tensor], head: HeadWeights, caches: Optional[List[Dict[str, Any]]] = None,
             probe=None) -> Tensor:
    """
    每个时间步做全局平均池化与线性分类，再对时间步取平均

    Args:
        finals: 每个时间步最后一个 block 的输出 [H, W, D]
        head: 分类头权重
    """
    logits = np.zeros(head.b.shape[0])
    for x in finals:
        flat = flatten_grid(x)
        pooled = flat.mean(axis=0)
        logits = logits + (pooled @ head.w + head.b)
        if caches is not None:
            caches.append({"pooled": pooled, "tokens": flat.shape[0]})
        _record(probe, "head.fc", Billing.AC, flat, count_flops(LayerShape(
            LayerKind.LINEAR, rows=1, in_features=head.w.shape[0], out_features=head.w.shape[1])))
    return logits / len(finals)


BlockFn = Callable[[int, int, Tensor, Optional[Dict[str, Any]], Any], Tensor]


class SpikingTransformer:
    """
    完整的脉冲 Transformer

    一个实例及其神经元状态同一时刻只能被一个线程使用。
    """

    def __init__(self, cfg: ModelConfig, weights: Optional[ModelWeights] = None,
                 params: Optional[LifParams] = None, sg: Optional[SurrogateParams] = None,
                 scorer: Optional[ScorerConfig] = None):
        cfg.validate()
        self.cfg = cfg
        self.params = params or LifParams()
        self.sg = sg or SurrogateParams()
        self.scorer = scorer or ScorerConfig()
        self.weights = weights if weights is not None else ModelWeights.initialize(cfg)
        self._build()

    @classmethod
    def from_run_config(cls, config: RunConfig, weights: Optional[ModelWeights] = None) -> 'SpikingTransformer':
        """按运行配置中的 model / neuron / scorer 段构建"""
        return cls(config.model, weights, config.neuron.lif_params(),
                   config.neuron.surrogate_params(), config.scorer)

    def _build(self):
        cfg = self.cfg
        self.embedding = SpikingEmbedding(cfg, self.weights.embed, self.params, self.sg)
        self.blocks: List[TransformerBlock] = []
        self.merge: Optional[PatchMerge] = None
        for index in range(cfg.num_blocks):
            if cfg.merge_after is not None and index == cfg.merge_after:
                self.merge = PatchMerge(cfg.block_grid(index - 1), self.weights.merge, self.params, self.sg)
            self.blocks.append(TransformerBlock(
                index, cfg.block_grid(index), cfg.heads, cfg.mlp_ratio, cfg.attention_scale,
                self.weights.blocks[index], self.params, self.sg))

    def clone(self) -> 'SpikingTransformer':
        """复制权重得到独立的实例（状态互不共享）"""
        return SpikingTransformer(self.cfg, self.weights.copy(), copy.copy(self.params),
                                  copy.copy(self.sg), copy.copy(self.scorer))

    def lif_layers(self) -> Dict[str, LifLayer]:
        layers = self.embedding.lif_layers()
        for block in self.blocks:
            layers += block.lif_layers()
        if self.merge is not None:
            layers += self.merge.lif_layers()
        return {layer.name: layer for layer in layers}

    def reset_state(self):
        """样本之间清空全部神经元状态"""
        for layer in self.lif_layers().values():
            layer.reset()

    def embed(self, image: Tensor, trace: Optional[ForwardTrace] = None, probe=None) -> List[Tensor]:
        """
        对一张图像生成 T 个时间步的嵌入脉冲 [H, W, D]

        调用前状态必须已清空。
        """
        patches, z = self.embedding.project(image, probe)
        if trace is not None:
            trace.patches = patches
        steps = []
        for _ in range(self.cfg.time_steps):
            cache = {} if trace is not None else None
            steps.append(self.embedding.step(z, cache, probe))
            if trace is not None:
                trace.embed_steps.append(cache)
        return steps

    def block_forward(self, index: int, t: int, x: Tensor, cache=None, probe=None) -> Tensor:
        return block_forward(self.blocks[index], x, cache, probe)

    def forward(self, image: Tensor, block_fn: Optional[BlockFn] = None,
                trace: Optional[ForwardTrace] = None, probe=None) -> Tensor:
        """
        外层循环时间步、内层循环 block，最后分类

        Args:
            image: [Hin, Win, C] 图像
            block_fn: 执行单个 block 的函数 (index, t, x, cache, probe) → x'，
                      默认不剪枝；剪枝版本由 pruning 模块提供
            trace: 需要训练时传入，记录中间量
            probe: 统计收集器

        Returns:
            Tensor: 对时间步平均后的 logits
        """
        block_fn = block_fn or self.block_forward
        self.reset_state()
        steps = self.embed(image, trace, probe)
        finals = []
        for t, x in enumerate(steps):
            block_caches = []
            for index in range(len(self.blocks)):
                if self.merge is not None and index == self.cfg.merge_after:
                    merge_cache = {} if trace is not None else None
                    x = self.merge.forward(x, merge_cache, probe)
                    if trace is not None:
                        trace.merge_steps.append(merge_cache)
                cache = {} if trace is not None else None
                x = block_fn(index, t, x, cache, probe)
                block_caches.append(cache)
            if trace is not None:
                trace.block_steps.append(block_caches)
            finals.append(x)
        logits = classify(finals, self.weights.head, trace.head_steps if trace is not None else None, probe)
        if trace is not None:
            trace.logits = logits
        return logits

    def predict(self, image: Tensor, schedule: Optional[PruneSchedule] = None, probe=None) -> Tensor:
        """不剪枝或按 schedule 剪枝的推理"""
        if schedule is None:
            return self.forward(image, probe=probe)
        from .pruning import model_forward_pruned
        return model_forward_pruned(self, image, schedule, probe=probe)


def model_forward(model: SpikingTransformer, image: Tensor) -> Tensor:
    """不剪枝的前向"""
    return model.forward(image)


def evaluate_accuracy(model: SpikingTransformer, images: List[Tensor], labels: List[int],
                      schedule: Optional[PruneSchedule] = None) -> float:
    """批量准确率"""
    if not images:
        logger.warning("Empty evaluation batch")
        return 0.0
    correct = sum(int(np.argmax(model.predict(img, schedule))) == int(lbl) for img, lbl in zip(images, labels))
    return correct / len(images)
