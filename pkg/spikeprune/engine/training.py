"""
STBP 训练：交叉熵损失、沿 block 与时间步的反向累积、SGD + momentum

脉冲对 ũ 的导数用三角替代梯度代替；膜电位在时间步之间的传递梯度
（∂u[t]/∂ũ[t]，包括重置项）保留。剪枝训练时被旁路的 token 行梯度直接穿过，
其膜电位梯度保持不变。
"""

from dataclasses import dataclass, replace
from typing import Optional, List, Dict, Tuple

import numpy as np

from .numerics import Tensor, make_rng, flatten_grid, unflatten_grid, fold_patches, depthwise_conv3x3_backward
from .neuron import LifLayer, surrogate_grad, reset_grad
from .model import (
    SpikingTransformer, ModelWeights, BlockWeights, ForwardTrace, TransformerBlock
)
from .pruning import model_forward_pruned
from .metrics import StatsCollector
from ..errors import StateError, ParameterError
from ..snnapi.models import TrainConfig, PruneSchedule
from ..log import logger


def softmax(logits: Tensor) -> Tensor:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / np.sum(exp)


def loss(logits: Tensor, label: int) -> float:
    """softmax 交叉熵"""
    shifted = logits - np.max(logits)
    return float(np.log(np.sum(np.exp(shifted))) - shifted[label])


def loss_grad(logits: Tensor, label: int) -> Tensor:
    """∂loss/∂logits = softmax(logits) − onehot(label)"""
    grad = softmax(logits)
    grad[label] -= 1.0
    return grad


def linear_vjp(x: Tensor, w: Tensor, grad_out: Tensor) -> Tuple[Tensor, Tensor]:
    """
    y = x @ w 的向量-雅可比积

    Returns:
        Tuple[Tensor, Tensor]: (∂/∂x, ∂/∂w)
    """
    return grad_out @ w.T, x.T @ grad_out


def affine_vjp(z: Tensor, scale: Tensor, grad_out: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
    """
    y = z·scale + shift 的向量-雅可比积

    Returns:
        Tuple[Tensor, Tensor, Tensor]: (∂/∂z, ∂/∂scale, ∂/∂shift)
    """
    return grad_out * scale, np.sum(grad_out * z, axis=0), np.sum(grad_out, axis=0)


def lif_backward(layer: LifLayer, grad_spikes: Tensor, u_tilde: Tensor, spikes: Tensor,
                 carry: Tensor, rows: Optional[np.ndarray] = None) -> Tensor:
    """
    LIF 单步反向

    dũ = ∂L/∂s·sg(ũ) + carry·∂u/∂ũ，carry 为来自下一时间步的 ∂L/∂u，
    随后被更新为本步的 dũ。未参与本步的行保持原 carry。

    Returns:
        Tensor: 对本步输入的梯度（等于 dũ）
    """
    surrogate = surrogate_grad(u_tilde, layer.params, layer.sg)
    previous = carry if rows is None else carry[rows]
    d_u = grad_spikes * surrogate + previous * reset_grad(u_tilde, spikes, layer.params, layer.sg)
    if rows is None:
        carry[...] = d_u
    else:
        carry[rows] = d_u
    return d_u


class _Backprop:
    """一次反向传播的梯度与膜电位 carry"""

    def __init__(self, model: SpikingTransformer):
        self.model = model
        self.grads = model.weights.zeros_like()
        self.carries: Dict[str, Tensor] = {
            name: np.zeros_like(layer.state.membrane) for name, layer in model.lif_layers().items()
        }

    def lif(self, layer: LifLayer, cache, key: str, grad: Tensor, rows=None) -> Tensor:
        return lif_backward(layer, grad, cache[f"{key}_u"], cache[f"{key}_s"], self.carries[layer.name], rows)

    def _affine_linear(self, x: Tensor, w: Tensor, lin: Tensor, scale: Tensor, d_pre: Tensor,
                       grads: BlockWeights, prefix: str, weight_name: str) -> Tensor:
        g_lin, g_scale, g_shift = affine_vjp(lin, scale, d_pre)
        getattr(grads, f"{prefix}_scale")[...] += g_scale
        getattr(grads, f"{prefix}_shift")[...] += g_shift
        g_x, g_w = linear_vjp(x, w, g_lin)
        getattr(grads, weight_name)[...] += g_w
        return g_x

    def block(self, block: TransformerBlock, cache, grad_out: Tensor) -> Tensor:
        """block 反向，grad_out 与返回值都是参与计算的行"""
        rows = cache["rows"]
        w = block.weights
        g = self.grads.blocks[block.index]
        n = block.neurons

        d_res2 = self.lif(n["res2"], cache, "res2", grad_out, rows)
        g_x_hat = d_res2.copy()

        d_mlp2 = self.lif(n["mlp2"], cache, "mlp2", d_res2, rows)
        g_h1 = self._affine_linear(cache["mlp1_s"], w.mlp_w2, cache["mlp2_lin"], w.mlp2_scale,
                                   d_mlp2, g, "mlp2", "mlp_w2")
        d_mlp1 = self.lif(n["mlp1"], cache, "mlp1", g_h1, rows)
        g_x_hat += self._affine_linear(cache["res1_s"], w.mlp_w1, cache["mlp1_lin"], w.mlp1_scale,
                                       d_mlp1, g, "mlp1", "mlp_w1")

        d_res1 = self.lif(n["res1"], cache, "res1", g_x_hat, rows)
        g_x = d_res1.copy()

        g_proj, g_scale, g_shift = affine_vjp(cache["proj_lin"], w.proj_scale, d_res1)
        g.proj_scale[...] += g_scale
        g.proj_shift[...] += g_shift
        g_o, g_w = linear_vjp(cache["attn_s"], w.w_proj, g_proj)
        g.w_proj[...] += g_w

        d_attn = self.lif(n["attn"], cache, "attn", g_o, rows)
        g_attn = block._split_heads(d_attn * block.scale)
        q, k, v = (block._split_heads(cache[f"{name}_s"]) for name in ("q", "k", "v"))
        scores = cache["scores"]
        g_scores = np.matmul(g_attn, v.transpose(0, 2, 1))
        branch = {
            "q": np.matmul(g_scores, k),
            "k": np.matmul(g_scores.transpose(0, 2, 1), q),
            "v": np.matmul(scores.transpose(0, 2, 1), g_attn),
        }

        g_xs = np.zeros_like(cache["xs"])
        for name in ("q", "k", "v"):
            d_pre = self.lif(n[name], cache, name, block._merge_heads(branch[name]), rows)
            g_xs += self._affine_linear(cache["xs"], getattr(w, f"w_{name}"), cache[f"{name}_lin"],
                                        getattr(w, f"{name}_scale"), d_pre, g, name, f"w_{name}")
        g_x += self.lif(n["in"], cache, "in", g_xs, rows)
        return g_x

    def merge(self, cache, grad_out: Tensor) -> Tensor:
        """patch-merge 反向，输入输出均为 [N, D] 行"""
        merge = self.model.merge
        g = self.grads.merge
        d_pre = self.lif(merge.lif, cache, "merge", grad_out)
        g_lin, g_scale, g_shift = affine_vjp(cache["lin"], merge.weights.scale, d_pre)
        g.scale[...] += g_scale
        g.shift[...] += g_shift
        g_cols, g_w = linear_vjp(cache["cols"], merge.weights.conv_w, g_lin)
        g.conv_w[...] += g_w
        return flatten_grid(fold_patches(g_cols, merge.height, merge.width, 2))

    def embed(self, cache, grad_out: Tensor) -> Tensor:
        """嵌入单步反向，返回对卷积输出 z 的梯度"""
        embedding = self.model.embedding
        w = embedding.weights
        g = self.grads.embed
        height, width = self.model.cfg.grid_height, self.model.cfg.grid_width

        d_out = self.lif(embedding.out_lif, cache, "out", grad_out)
        g_s0 = d_out.copy()
        d_pos = self.lif(embedding.pos_lif, cache, "pos", d_out)
        g_conv, g_scale, g_shift = affine_vjp(cache["pos_conv"], w.pos_scale, d_pos)
        g.pos_scale[...] += g_scale
        g.pos_shift[...] += g_shift
        g_grid, g_pos_w = depthwise_conv3x3_backward(
            unflatten_grid(cache["conv_s"], height, width), w.pos_w, unflatten_grid(g_conv, height, width))
        g.pos_w[...] += g_pos_w
        g_s0 += flatten_grid(g_grid)

        d_conv = self.lif(embedding.conv_lif, cache, "conv", g_s0)
        g_z, g_scale, g_shift = affine_vjp(cache["conv_pre"], w.conv_scale, d_conv)
        g.conv_scale[...] += g_scale
        g.conv_shift[...] += g_shift
        return g_z


def backward(model: SpikingTransformer, trace: Optional[ForwardTrace], grad_logits: Tensor) -> ModelWeights:
    """
    沿时间步与 block 逆序累积梯度

    Args:
        model: 记录 trace 时使用的模型
        trace: 前向记录
        grad_logits: ∂loss/∂logits

    Returns:
        ModelWeights: 与权重同结构的梯度

    Raises:
        StateError: 如果没有完整的前向记录
    """
    if trace is None or trace.logits is None or not trace.block_steps:
        raise StateError("反向传播需要开启 trace 的前向记录")

    bp = _Backprop(model)
    head = model.weights.head
    steps = len(trace.block_steps)
    g_step = np.asarray(grad_logits, dtype=np.float64) / steps
    g_embed: List[Optional[Tensor]] = [None] * steps

    for t in reversed(range(steps)):
        head_cache = trace.head_steps[t]
        bp.grads.head.w[...] += np.outer(head_cache["pooled"], g_step)
        bp.grads.head.b[...] += g_step
        g_pooled = head.w @ g_step
        g_x = np.tile(g_pooled / head_cache["tokens"], (head_cache["tokens"], 1))

        for index in reversed(range(len(model.blocks))):
            cache = trace.block_steps[t][index]
            rows = cache["rows"]
            if rows is None:
                g_x = bp.block(model.blocks[index], cache, g_x)
            else:
                g_in = g_x.copy()
                g_in[rows] = bp.block(model.blocks[index], cache, g_x[rows])
                g_x = g_in
            if model.merge is not None and index == model.cfg.merge_after:
                g_x = bp.merge(trace.merge_steps[t], g_x)
        g_embed[t] = g_x

    g_z = np.zeros((trace.patches.shape[0], model.cfg.embed_dim))
    for t in reversed(range(steps)):
        g_z += bp.embed(trace.embed_steps[t], g_embed[t])
    bp.grads.embed.conv_w[...] += trace.patches.T @ g_z
    return bp.grads


def accumulate(into: ModelWeights, other: ModelWeights, factor: float = 1.0):
    """into += factor·other，逐数组原地累加"""
    targets = into.named_arrays()
    for name, arr in other.named_arrays().items():
        targets[name] += factor * arr


class SGD:
    """
    带动量的 SGD：v = μ·v + g，w = w − lr·v
    """

    def __init__(self, weights: ModelWeights, learning_rate: float, momentum: float = 0.9):
        if learning_rate < 0.0:
            raise ParameterError(f"学习率不能为负: {learning_rate}")
        self.params = weights.named_arrays()
        self.velocity = {name: np.zeros_like(arr) for name, arr in self.params.items()}
        self.learning_rate = learning_rate
        self.momentum = momentum

    def step(self, grads: ModelWeights):
        for name, grad in grads.named_arrays().items():
            velocity = self.velocity[name]
            velocity *= self.momentum
            velocity += grad
            self.params[name] -= self.learning_rate * velocity


@dataclass
class EpochMetrics:
    """一个 epoch 的训练指标"""
    epoch: int
    train_loss: float
    train_acc: float
    eval_acc: Optional[float] = None

    def to_csv_row(self) -> List[str]:
        return [str(self.epoch), f"{self.train_loss:.6f}", f"{self.train_acc:.6f}",
                "" if self.eval_acc is None else f"{self.eval_acc:.6f}"]


def forward_with_trace(model: SpikingTransformer, image: Tensor,
                       schedule: Optional[PruneSchedule] = None) -> Tuple[Tensor, ForwardTrace]:
    trace = ForwardTrace()
    if schedule is None:
        logits = model.forward(image, trace=trace)
    else:
        logits = model_forward_pruned(model, image, schedule, trace=trace)
    return logits, trace


def train_step(model: SpikingTransformer, images: List[Tensor], labels: List[int],
               optimizer: SGD, schedule: Optional[PruneSchedule] = None) -> Tuple[float, int]:
    """
    一个 batch 的前向、反向与参数更新，梯度取 batch 平均

    Returns:
        Tuple[float, int]: (损失之和, 正确个数)
    """
    grads = model.weights.zeros_like()
    total_loss = 0.0
    correct = 0
    for image, label in zip(images, labels):
        logits, trace = forward_with_trace(model, image, schedule)
        total_loss += loss(logits, label)
        correct += int(np.argmax(logits) == label)
        accumulate(grads, backward(model, trace, loss_grad(logits, label)))
    scale = 1.0 / len(images)
    for arr in grads.named_arrays().values():
        arr *= scale
    optimizer.step(grads)
    return total_loss, correct


def train(model: SpikingTransformer, dataset, cfg: TrainConfig, eval_set=None,
          schedule: Optional[PruneSchedule] = None) -> Tuple[SpikingTransformer, List[EpochMetrics]]:
    """
    训练模型副本

    Args:
        model: 初始模型，不会被修改
        dataset: 训练集，支持 len 与按下标取 (image, label)
        cfg: 训练配置；prune_during_training 时使用 cfg.schedule
        eval_set: 可选的验证集，每个 epoch 末评估
        schedule: 显式指定的剪枝 schedule，优先于 cfg

    Returns:
        Tuple[SpikingTransformer, List[EpochMetrics]]: (训练后的模型, 每个 epoch 的指标)
    """
    cfg.validate()
    if schedule is None and cfg.prune_during_training:
        schedule = cfg.schedule
    if schedule is not None:
        schedule.validate(len(model.blocks))

    trained = model.clone()
    rng = make_rng(cfg.seed)
    optimizer = SGD(trained.weights, cfg.learning_rate, cfg.momentum)
    history: List[EpochMetrics] = []
    count = len(dataset)
    if count == 0:
        logger.warning("Empty training set, returning the initial model")
        return trained, history

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(count)
        epoch_loss = 0.0
        epoch_correct = 0
        for start in range(0, count, cfg.batch_size):
            batch = [dataset[int(i)] for i in order[start:start + cfg.batch_size]]
            batch_loss, batch_correct = train_step(
                trained, [b[0] for b in batch], [b[1] for b in batch], optimizer, schedule)
            epoch_loss += batch_loss
            epoch_correct += batch_correct

        eval_acc = None
        if eval_set is not None and len(eval_set):
            eval_acc = evaluate(trained, eval_set, schedule).accuracy
        metrics = EpochMetrics(epoch=epoch, train_loss=epoch_loss / count,
                               train_acc=epoch_correct / count, eval_acc=eval_acc)
        history.append(metrics)
        logger.info(f"Epoch {epoch}/{cfg.epochs}: loss={metrics.train_loss:.4f} "
                    f"train_acc={metrics.train_acc:.4f}"
                    + (f" eval_acc={eval_acc:.4f}" if eval_acc is not None else ""))
    return trained, history


def finetune_pruned(model: SpikingTransformer, dataset, schedule: PruneSchedule, cfg: TrainConfig,
                    eval_set=None) -> Tuple[SpikingTransformer, List[EpochMetrics]]:
    """
    在剪枝前向下以降低后的学习率微调

    epoch 数为 cfg.finetune_epochs，学习率为 learning_rate·finetune_lr_factor；
    epoch 数为 0 时直接返回输入模型。
    """
    if cfg.finetune_epochs == 0:
        logger.info("Zero finetuning epochs, keeping the model as is")
        return model, []
    finetune_cfg = replace(cfg, epochs=cfg.finetune_epochs,
                           learning_rate=cfg.learning_rate * cfg.finetune_lr_factor,
                           prune_during_training=True, schedule=schedule)
    logger.info(f"Finetuning for {finetune_cfg.epochs} epochs at lr={finetune_cfg.learning_rate:g} "
                f"with schedule {schedule.label()}")
    return train(model, dataset, finetune_cfg, eval_set, schedule)


@dataclass
class EvalReport:
    """准确率与逐类统计"""
    accuracy: float
    correct: int
    total: int
    per_class: Dict[int, Tuple[int, int]]
    retained_avg: float = 1.0
    schedule: Optional[List[float]] = None
    fingerprint: Optional[str] = None

    def to_dict(self) -> Dict:
        return {
            'accuracy': self.accuracy,
            'correct': self.correct,
            'total': self.total,
            'per_class': {str(c): {'correct': ok, 'support': n, 'accuracy': ok / n if n else 0.0}
                          for c, (ok, n) in sorted(self.per_class.items())},
            'retained_avg': self.retained_avg,
            'schedule': self.schedule if self.schedule is not None else 'none',
            'fingerprint': self.fingerprint
        }


def evaluate(model: SpikingTransformer, dataset, schedule: Optional[PruneSchedule] = None) -> EvalReport:
    """在数据集上评估准确率，剪枝时同时统计平均保留比例"""
    collector = StatsCollector() if schedule is not None else None
    per_class: Dict[int, Tuple[int, int]] = {}
    correct = 0
    for i in range(len(dataset)):
        image, label = dataset[i]
        logits = model.predict(image, schedule, probe=collector)
        hit = int(np.argmax(logits) == label)
        correct += hit
        ok, n = per_class.get(int(label), (0, 0))
        per_class[int(label)] = (ok + hit, n + 1)
    total = len(dataset)
    if total == 0:
        logger.warning("Empty evaluation set")
    return EvalReport(
        accuracy=correct / total if total else 0.0,
        correct=correct,
        total=total,
        per_class=per_class,
        retained_avg=collector.retained_avg if collector is not None else 1.0,
        schedule=list(schedule.ratios) if schedule is not None else None
    )
