from enum import Enum

class HelpCommandInfo(Enum):
    TRAIN = (
        "参数: --config C --out W\n\n"
        "训练不剪枝的基线模型，按 epoch 输出 CSV 指标\n"
    )
    EVAL = (
        "参数: --config C --weights W [--schedule S|none] [--subset eval|train|search]\n"
        "[--schedule] - 逗号分隔的保留比例、JSON/CSV 文件或 none（默认取配置）\n"
        "[--subset] - 评估的数据子集，search 为搜索使用的固定 batch\n\n"
        "输出准确率、逐类准确率与平均保留比例\n"
        "提示: --schedule none 与剪枝 schedule 对比即零微调实验\n"
    )
    FINETUNE = (
        "参数: --config C --weights W --schedule S --out W2\n\n"
        "在剪枝前向下以降低的学习率微调\n"
    )
    SEARCH = (
        "参数: --config C --weights W [--target-avg R] [--out DIR]\n\n"
        "在单调不增约束下网格搜索逐 block 保留比例，输出 CSV 与 JSON 报告\n"
    )
    ENERGY = (
        "参数: --config C --weights W [--schedule S] [--samples N]\n\n"
        "输出逐层 FLOPs、发放率、SOPs 与能耗的 JSON 报告\n"
    )
    MASKS = (
        "参数: --config C --weights W --schedule S --input IMG --out DIR\n"
        "<IMG> - 验证集下标，单张图像的 .bin 文件（float32），或单通道 .pgm 灰度图\n\n"
        "输出每个 (block, 时间步) 的保留掩码与分数热图（CSV 与 PGM）\n"
    )
    BENCH = (
        "参数: --config C --weights W [--schedule S] [--batch N] [--repetitions R]\n\n"
        "测量推理吞吐量（张/秒）\n"
    )
    GEN_DATA = (
        "参数: --spec k=v,... --out DIR\n"
        "<spec> - 如 num_classes=2,num_train=200,seed=0\n\n"
        "生成合成数据集\n"
    )
    ABLATE = (
        "参数: --config C --weights W --schedule S\n\n"
        "依次使用 irtop/spatial/temporal/random 评分评估，输出 CSV\n"
    )

    @classmethod
    def get(cls, command: str) -> str:
        """获取指定命令的帮助信息"""
        try:
            return cls[command.upper().replace("-", "_")].value
        except KeyError:
            return "未知命令或无帮助信息"
