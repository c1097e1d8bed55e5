"""
spikeprune 命令行入口
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import fields
from typing import Optional, List, Sequence, Tuple

import numpy as np

from .engine.config import load_config, fingerprint
from .engine.model import SpikingTransformer
from .engine.archive import save_weights, load_weights
from .engine.dataset import SyntheticDataset, SampleList, load_or_generate, generate_splits
from .engine.training import train, finetune_pruned, evaluate
from .engine.search import search
from .engine.metrics import measure_energy, throughput
from .engine.pruning import collect_masks
from .engine.dump import dump_masks, read_pgm
from .errors import SpikePruneError, ConfigError, FormatError
from .snnapi.enums import ScorerKind
from .snnapi.models import RunConfig, PruneSchedule, DatasetSpec
from .snnapi.trans import parse_schedule
from .help_info import HelpCommandInfo
from .log import logger, setup_logging

SUBSETS = ("eval", "train", "search")


class SpikePruneApp:
    """各子命令的实现，每个方法返回退出码"""

    def __init__(self, args: argparse.Namespace, out=None):
        self.args = args
        self.out = out or sys.stdout
        self.config: RunConfig = load_config(getattr(args, 'config', None))
        self.fingerprint = fingerprint(self.config)

    def _say(self, message: str):
        print(message, file=self.out)

    def _build_model(self, weights_path: Optional[str] = None) -> SpikingTransformer:
        model = SpikingTransformer.from_run_config(self.config)
        if weights_path is not None:
            load_weights(model, weights_path)
        return model

    def _weights_path(self) -> str:
        return self.args.weights or self.config.paths.weights

    def _schedule(self, required: bool = False) -> Optional[PruneSchedule]:
        """--schedule 优先，省略时取配置中的 schedule"""
        text = getattr(self.args, 'schedule', None)
        if text is None:
            schedule = self.config.schedule
        else:
            schedule = parse_schedule(text, self.config.model.num_blocks)
        if required and schedule is None:
            raise ConfigError("该命令需要剪枝 schedule", "schedule")
        return schedule

    def _split(self, split: str) -> SyntheticDataset:
        return load_or_generate(self.config.paths.data, self.config.data, split)

    def _subset(self, name: str):
        if name == "search":
            images, labels = self._split("train").subset(
                self.config.search.batch_size, self.config.search.sample_seed)
            return SampleList(images, labels)
        return self._split(name)

    def _write_json(self, path: Optional[str], payload: dict):
        text = json.dumps(payload, ensure_ascii=False, indent=2)
        if path:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text + "\n")
        return text

    def cmd_train(self) -> int:
        train_set = self._split("train")
        eval_set = self._split("eval")
        model = self._build_model()
        trained, history = train(model, train_set, self.config.train, eval_set)
        out_path = self.args.out or self.config.paths.weights
        save_weights(trained, out_path)

        metrics_path = self.args.metrics or os.path.join(self.config.paths.reports, "train_metrics.csv")
        os.makedirs(os.path.dirname(metrics_path) or ".", exist_ok=True)
        with open(metrics_path, 'w', encoding='utf-8', newline='') as f:
            f.write(f"# fingerprint={self.fingerprint}\n")
            writer = csv.writer(f)
            writer.writerow(["epoch", "train_loss", "train_acc", "eval_acc"])
            for metrics in history:
                writer.writerow(metrics.to_csv_row())

        final = history[-1] if history else None
        summary = f"train_acc={final.train_acc:.4f}" if final else "no epochs"
        self._say(f"✅ 训练完成 ({summary})，权重已保存到 {out_path}")
        return 0

    def cmd_eval(self) -> int:
        model = self._build_model(self._weights_path())
        schedule = self._schedule()
        dataset = self._subset(self.args.subset)
        report = evaluate(model, dataset, schedule)
        report.fingerprint = self.fingerprint
        self._write_json(self.args.out, report.to_dict())

        label = schedule.label() if schedule else "none"
        self._say(f"✅ accuracy={report.accuracy:.4f} ({report.correct}/{report.total}) "
                  f"retained_avg={report.retained_avg:.4f} schedule={label}")
        for cls, (ok, support) in sorted(report.per_class.items()):
            self._say(f"   class {cls}: {ok / support if support else 0.0:.4f} ({ok}/{support})")
        return 0

    def cmd_finetune(self) -> int:
        model = self._build_model(self._weights_path())
        schedule = self._schedule(required=True)
        train_set = self._split("train")
        eval_set = self._split("eval")
        before = evaluate(model, eval_set, schedule).accuracy
        tuned, _ = finetune_pruned(model, train_set, schedule, self.config.train, eval_set)
        after = evaluate(tuned, eval_set, schedule).accuracy
        save_weights(tuned, self.args.out)
        self._say(f"✅ 微调完成: {before:.4f} → {after:.4f}，权重已保存到 {self.args.out}")
        return 0

    def cmd_search(self) -> int:
        space = self.config.search
        if self.args.target_avg is not None:
            space.target_avg = self.args.target_avg
            space.validate()
            self.fingerprint = fingerprint(self.config)
        model = self._build_model(self._weights_path())
        images, labels = self._split("train").subset(space.batch_size, space.sample_seed)
        report = search(model, images, labels, space, self.config.model.num_blocks)
        report.fingerprint = self.fingerprint

        out_dir = self.args.out or self.config.paths.reports
        os.makedirs(out_dir, exist_ok=True)
        report.write_csv(os.path.join(out_dir, "search.csv"))
        report.write_json(os.path.join(out_dir, "search.json"))
        best = report.best
        self._say(f"✅ 最优 schedule {best.schedule.label()} (mean={best.mean_ratio:.4f}, "
                  f"batch_accuracy={best.accuracy:.4f})，报告已写入 {out_dir}")
        return 0

    def cmd_energy(self) -> int:
        model = self._build_model(self._weights_path())
        schedule = self._schedule()
        eval_set = self._split("eval")
        count = min(self.args.samples, len(eval_set))
        images = [eval_set[i][0] for i in range(count)]
        report = measure_energy(model, images, self.config.energy, schedule, self.fingerprint)
        self._say(self._write_json(self.args.out, report.to_dict()))
        return 0

    def _load_input(self) -> np.ndarray:
        source = self.args.input
        cfg = self.config.model
        if source.endswith(".bin"):
            data = np.fromfile(source, dtype="<f4")
            expected = cfg.input_height * cfg.input_width * cfg.input_channels
            if data.size != expected:
                raise FormatError(f"{source} 含 {data.size} 个数，需要 {expected}")
            return data.astype(np.float64).reshape(cfg.input_height, cfg.input_width, cfg.input_channels)
        if source.endswith(".pgm"):
            pixels = read_pgm(source)
            expected = (cfg.input_height, cfg.input_width)
            if cfg.input_channels != 1 or pixels.shape != expected:
                raise FormatError(f"{source} 的尺寸 {pixels.shape} 与单通道输入 {expected} 不一致")
            # 0~255 映射到 [0, 1]，与 blob 峰值同尺度
            return (pixels.astype(np.float64) / 255.0)[:, :, None]
        try:
            index = int(source)
        except ValueError as e:
            raise ConfigError(f"--input 需要验证集下标、.bin 或 .pgm 文件: {source}", "input") from e
        eval_set = self._split("eval")
        if not 0 <= index < len(eval_set):
            raise ConfigError(f"下标越界: {index}（共 {len(eval_set)} 个样本）", "input")
        return eval_set[index][0]

    def cmd_masks(self) -> int:
        model = self._build_model(self._weights_path())
        schedule = self._schedule(required=True)
        records = collect_masks(model, self._load_input(), schedule)
        written = dump_masks(records, self.args.out)
        self._say(f"✅ 已写出 {len(written)} 个文件到 {self.args.out}")
        return 0

    def cmd_bench(self) -> int:
        model = self._build_model(self._weights_path())
        schedule = self._schedule()
        eval_set = self._split("eval")
        images = [eval_set[i][0] for i in range(min(self.args.batch, len(eval_set)))]
        rate = throughput(model, images, self.args.repetitions, schedule)
        self._write_json(self.args.out, {
            'images_per_second': rate,
            'batch': len(images),
            'repetitions': self.args.repetitions,
            'schedule': list(schedule.ratios) if schedule else 'none',
            'fingerprint': self.fingerprint
        })
        self._say(f"✅ throughput={rate:.2f} img/s")
        return 0

    def cmd_gen_data(self) -> int:
        spec = parse_dataset_spec(self.args.spec, self.config.data)
        train_set, eval_set = generate_splits(spec)
        train_set.save(self.args.out)
        eval_set.save(self.args.out)
        self._say(f"✅ 已生成 {len(train_set)} 个训练样本与 {len(eval_set)} 个验证样本到 {self.args.out}")
        return 0

    def cmd_ablate(self) -> int:
        schedule = self._schedule(required=True)
        eval_set = self._split("eval")
        weights = self._build_model(self._weights_path()).weights
        rows = []
        for kind in ScorerKind:
            self.config.scorer.kind = kind
            model = SpikingTransformer.from_run_config(self.config, weights)
            report = evaluate(model, eval_set, schedule)
            rows.append([kind.value, repr(report.accuracy), repr(report.retained_avg)])

        buffer = io.StringIO()
        buffer.write(f"# fingerprint={self.fingerprint}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["kind", "accuracy", "retained_avg"])
        writer.writerows(rows)
        if self.args.out:
            with open(self.args.out, 'w', encoding='utf-8', newline='') as f:
                f.write(buffer.getvalue())
        self._say(buffer.getvalue().rstrip("\n"))
        return 0


def parse_dataset_spec(text: Optional[str], base: DatasetSpec) -> DatasetSpec:
    """
    解析 k=v,... 形式的数据集规格，未给出的字段沿用 base

    Raises:
        ConfigError: 未知字段或取值无法转换
    """
    values = base.to_dict()
    types = {f.name: type(getattr(base, f.name)) for f in fields(base)}
    for part in (text or "").split(","):
        if not part.strip():
            continue
        key, sep, raw = part.partition("=")
        key = key.strip()
        if not sep or key not in types:
            raise ConfigError(f"无法解析数据集规格项 '{part}'", f"data.{key}")
        try:
            values[key] = types[key](raw.strip())
        except ValueError as e:
            raise ConfigError(f"取值 '{raw}' 无法转换为 {types[key].__name__}", f"data.{key}") from e
    spec = DatasetSpec.from_dict(values)
    spec.validate()
    return spec


def _add_common(parser: argparse.ArgumentParser, weights: bool = True):
    parser.add_argument("--config", default=None, help="JSON 配置文件")
    if weights:
        parser.add_argument("--weights", default=None, help="SPKW 权重归档")
    parser.add_argument("--verbose", action="store_true", help="输出调试日志")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikeprune", description="脉冲 Transformer 的信息保留 token 剪枝")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help=HelpCommandInfo.get("train"))
    _add_common(p, weights=False)
    p.add_argument("--out", default=None)
    p.add_argument("--metrics", default=None, help="逐 epoch 指标 CSV")

    p = sub.add_parser("eval", help=HelpCommandInfo.get("eval"))
    _add_common(p)
    p.add_argument("--schedule", default=None)
    p.add_argument("--subset", choices=SUBSETS, default="eval")
    p.add_argument("--out", default=None, help="JSON 报告路径")

    p = sub.add_parser("finetune", help=HelpCommandInfo.get("finetune"))
    _add_common(p)
    p.add_argument("--schedule", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("search", help=HelpCommandInfo.get("search"))
    _add_common(p)
    p.add_argument("--target-avg", type=float, default=None)
    p.add_argument("--out", default=None, help="报告目录")

    p = sub.add_parser("energy", help=HelpCommandInfo.get("energy"))
    _add_common(p)
    p.add_argument("--schedule", default=None)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--out", default=None)

    p = sub.add_parser("masks", help=HelpCommandInfo.get("masks"))
    _add_common(p)
    p.add_argument("--schedule", default=None)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help=HelpCommandInfo.get("bench"))
    _add_common(p)
    p.add_argument("--schedule", default=None)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--out", default=None)

    p = sub.add_parser("gen-data", help=HelpCommandInfo.get("gen-data"))
    _add_common(p, weights=False)
    p.add_argument("--spec", default="")
    p.add_argument("--out", required=True)

    p = sub.add_parser("ablate", help=HelpCommandInfo.get("ablate"))
    _add_common(p)
    p.add_argument("--schedule", default=None)
    p.add_argument("--out", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    """
    解析参数并执行子命令

    Returns:
        int: 0 成功，1 运行失败，2 参数错误
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logging(args.verbose)
    try:
        app = SpikePruneApp(args, out)
        handler = getattr(app, f"cmd_{args.command.replace('-', '_')}")
        return handler()
    except (SpikePruneError, OSError) as e:
        logger.debug(f"{args.command} failed: {e!r}")
        print(f"❌ {e}", file=sys.stderr)
        return 1
