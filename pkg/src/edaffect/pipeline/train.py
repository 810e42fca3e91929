"""小批量 SGD 训练与评估"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from edaffect.core.errors import BadLabel, EmptySet
from edaffect.core.model import LabeledExample
from edaffect.pipeline.config import TrainSchedule
from edaffect.pipeline.dataset import stack_examples
from edaffect.pipeline.metrics import MetricsReport
from edaffect.rtcan.model import RtcanModel
from edaffect.rtcan.network import model_forward, predict_proba
from edaffect.tensor.ops import cross_entropy
from edaffect.tensor.optim import learning_rate, sgd_step
from edaffect.tensor.tensor import Tape, Tensor, backward

LOG_EVERY_EPOCHS = 10


@dataclass
class TrainResult:
    model: RtcanModel
    loss_history: List[float] = field(default_factory=list)
    fold_id: int = 0


def schedule_lr(schedule: TrainSchedule, epoch: int) -> float:
    return learning_rate(epoch, schedule.lr0, schedule.decay, schedule.decay_every)


def train(model: RtcanModel, train_set: Sequence[LabeledExample], schedule: TrainSchedule,
          fold_id: int = 0, dim: str = "arousal") -> TrainResult:
    """训练模型(原地修改参数)

    每个 epoch 用 seed + fold_id 派生的随机数打乱样本顺序，
    损失历史记录每个 epoch 的样本平均交叉熵。
    """
    if not train_set:
        raise EmptySet("训练集为空")
    x, music, y = stack_examples(train_set, dim)
    if np.any((y != 0) & (y != 1)):
        raise BadLabel("标签必须在 {0, 1} 中")
    n = x.shape[0]
    rng = np.random.default_rng(schedule.seed + fold_id)
    model.train()
    model.zero_grad()

    history: List[float] = []
    for epoch in range(schedule.epochs):
        lr = schedule_lr(schedule, epoch)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, schedule.batch_size):
            idx = order[start:start + schedule.batch_size]
            xb = Tensor(x[idx])
            mb = None if music is None else Tensor(music[idx])
            with Tape() as tape:
                probs = model_forward(xb, mb, model)
                loss = cross_entropy(probs, y[idx])
            backward(tape, loss)
            sgd_step(model.parameters(), lr)
            total += loss.item() * idx.size
        history.append(total / n)
        if (epoch + 1) % LOG_EVERY_EPOCHS == 0 or epoch == schedule.epochs - 1:
            logger.info(f"🔄 fold {fold_id} epoch {epoch + 1}/{schedule.epochs} lr={lr:.2e} loss={history[-1]:.4f}")
        else:
            logger.debug(f"fold {fold_id} epoch {epoch + 1} loss={history[-1]:.6f}")
    return TrainResult(model, history, fold_id)


def predict(model: RtcanModel, examples: Sequence[LabeledExample], dim: str = "arousal",
            batch_size: int = 256) -> np.ndarray:
    """argmax 预测，平局取类别 0"""
    x, music, _ = stack_examples(examples, dim)
    return np.argmax(predict_proba(model, x, music, batch_size), axis=1)


def evaluate(model: RtcanModel, test_set: Sequence[LabeledExample], dim: str = "arousal",
             batch_size: int = 256) -> MetricsReport:
    if not test_set:
        raise EmptySet("测试集为空")
    truth = np.array([e.label(dim) for e in test_set], dtype=np.int64)
    return MetricsReport.from_predictions(truth, predict(model, test_set, dim, batch_size))


def warm_start(model: RtcanModel, source: Optional[RtcanModel]) -> RtcanModel:
    """用另一组参数初始化(大数据集预训练 → 小数据集)"""
    if source is not None:
        model.load_state(source.to_checkpoint())
    return model
