"""
edaffect 命令行

子命令: decompose / synth / train / eval / baseline / explain / correlate

退出码: 0 成功，1 用法错误，2 数据或校验错误，3 分解未收敛。
出错时向 stderr 输出一行 `error reason=<代码> detail=<说明>`。
"""
from __future__ import annotations

import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import orjson
import typer

try:  # typer>=0.2x 内置 click 副本，异常类需取自同一模块
    from typer import _click as click
except ImportError:
    import click
from loguru import logger
from rich.console import Console
from rich.table import Table

from edaffect.config.config_manager import SECTIONS, ConfigManager, RunConfig, read_json_config
from edaffect.core.errors import BadParams, EdaffectError, NoConvergence, UsageError
from edaffect.core.io import read_annotations_csv, read_eda_csv, write_decomposition_csv
from edaffect.core.model import LabeledExample
from edaffect.cvxeda import decompose
from edaffect.gradcam import emit_plot, gradcam_1d
from edaffect.log import setup_logger
from edaffect.pipeline import (
    Corpus,
    CrossValidationReport,
    assemble_examples,
    cross_validate,
    evaluate,
    load_corpus,
    pearson_r,
    plan_for_subjects,
    svm_cross_validate,
)
from edaffect.pipeline.manifest import Stopwatch, input_digests, write_json, write_manifest
from edaffect.rtcan import RtcanModel
from edaffect.synth import gen_from_plan, write_synth_corpus
from edaffect.tensor import Checkpoint, load_checkpoint, save_checkpoint

console = Console()
app = typer.Typer(add_completion=False, no_args_is_help=True,
                  help="皮肤电(EDA)情绪识别: 信号分解、RTCAN 训练评估、基线与显著性分析")

PREPROCESS_SECTIONS = ("irf", "cvxeda", "pipeline")

PROFILE_OPT = typer.Option(None, "--profile", help="内置 profile: large-scale / small-scale / smoke")
CONFIG_OPT = typer.Option(None, "--config", help="JSON 运行配置文件")
SEED_OPT = typer.Option(None, "--seed", help="随机种子，缺省时读取环境变量 RTCAN_SEED")
JOBS_OPT = typer.Option(None, "--jobs", help="并行 worker 数上限")
DIM_OPT = typer.Option(None, "--dim", help="目标维度 valence / arousal")
EDA_OPT = typer.Option(..., "--eda", help="EDA CSV")
ANNOTATIONS_OPT = typer.Option(..., "--annotations", help="标注 CSV")
MUSIC_OPT = typer.Option(None, "--music", help="刺激特征 CSV")


@app.callback()
def main_cb(
    log_dir: Optional[Path] = typer.Option(None, "--log-dir", help="写入文件日志的根目录"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="只输出 WARNING 及以上的日志"),
):
    """皮肤电情绪识别工具，使用 'edaffect <命令> --help' 查看各命令参数"""
    setup_logger(app_name="edaffect", log_root=log_dir, level="WARNING" if quiet else "INFO")


# ------------------------------------------------------------------ 辅助函数

def _build(profile: Optional[str], config: Optional[Path], seed: Optional[int] = None,
           overrides: Optional[Dict[str, Dict[str, Any]]] = None,
           base: Optional[Dict[str, Any]] = None) -> RunConfig:
    return ConfigManager().build(profile=profile, config_path=config, overrides=overrides,
                                 seed=seed, base=base)


def _checkpoint_layer(ckpt: Checkpoint) -> Dict[str, Any]:
    """检查点里保存的预处理参数，作为最低优先级的配置层"""
    return {k: ckpt.config[k] for k in PREPROCESS_SECTIONS if k in ckpt.config}


def _load_examples(run: RunConfig, eda: Path, annotations: Path, music: Optional[Path],
                   input_len: int, use_music: bool,
                   keep: Optional[tuple] = None) -> List[LabeledExample]:
    if use_music and music is None:
        raise UsageError("当前配置融合刺激特征，需要 --music")
    if music is not None and not use_music:
        logger.info("ℹ️ 当前配置不使用刺激特征，忽略 --music")
    corpus = load_corpus(eda, annotations, music if use_music else None)
    if keep is not None:
        corpus = Corpus([t for t in corpus.traces if t.key == keep], corpus.annotations, corpus.stimuli)
        if not corpus.traces:
            raise BadParams(f"找不到记录 {keep[0]}/{keep[1]}")
    return assemble_examples(corpus, run.irf, run.cvxeda, input_len, run.pipeline, use_music)


def _print_report(title: str, report: CrossValidationReport) -> None:
    table = Table(title=title)
    table.add_column("fold", justify="right", style="cyan")
    table.add_column("测试被试")
    for name in ("acc", "precision", "recall", "f1"):
        table.add_column(name, justify="right")
    for fold in report.folds:
        r = fold.report
        table.add_row(str(fold.fold_id), ",".join(fold.test_subjects),
                      f"{r.accuracy:.4f}", f"{r.precision:.4f}", f"{r.recall:.4f}", f"{r.f1:.4f}")
    m = report.mean
    table.add_row("mean", "", f"{m.accuracy:.4f}", f"{m.precision:.4f}", f"{m.recall:.4f}",
                  f"{m.f1:.4f}", style="bold")
    console.print(table)


# ------------------------------------------------------------------ 子命令

@app.command("decompose")
def decompose_cmd(
    input_path: Path = typer.Option(..., "--in", help="EDA CSV"),
    out: Path = typer.Option(..., "--out", help="输出目录"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="稀疏项权重"),
    gamma: Optional[float] = typer.Option(None, "--gamma", help="样条岭回归权重"),
    tau0: Optional[float] = typer.Option(None, "--tau0", help="IRF 上升时间常数(秒)"),
    tau1: Optional[float] = typer.Option(None, "--tau1", help="IRF 衰减时间常数(秒)"),
    knot_spacing: Optional[float] = typer.Option(None, "--knot-spacing", help="样条结点间距(秒)"),
    profile: Optional[str] = PROFILE_OPT,
    config: Optional[Path] = CONFIG_OPT,
):
    """把每条记录分解为 phasic / tonic / driver / residual，每条记录一个 CSV"""
    run = _build(profile, config, overrides={
        "irf": {"tau0": tau0, "tau1": tau1},
        "cvxeda": {"alpha": alpha, "gamma": gamma, "knot_spacing_s": knot_spacing},
    })
    watch = Stopwatch()
    traces = read_eda_csv(input_path)
    outputs: List[str] = []
    failed: List[str] = []
    with watch.section("decompose"):
        for trace in traces:
            try:
                dec = decompose(trace, run.irf, run.cvxeda, strict=True)
            except NoConvergence as e:
                dec = e.best
                failed.append(f"{trace.subject_id}/{trace.stimulus_id}")
            name = f"{trace.subject_id}_{trace.stimulus_id}.csv"
            write_decomposition_csv(trace, dec, out / name)
            outputs.append(name)

    write_manifest(out, {
        "command": "decompose",
        "config": {"irf": asdict(run.irf), "cvxeda": asdict(run.cvxeda)},
        "inputs": input_digests({"eda": input_path}),
        "outputs": outputs,
        "not_converged": failed,
    })
    watch.write(out)
    if failed:
        raise NoConvergence(f"{len(failed)} 条记录未收敛: {', '.join(failed[:5])}")
    logger.info(f"✅ 分解完成: {len(outputs)} 条记录 → {out}")


@app.command("synth")
def synth_cmd(
    spec: Optional[Path] = typer.Option(None, "--spec", help="合成语料参数 JSON(SynthPlan 字段或完整配置)"),
    out: Path = typer.Option(..., "--out", help="输出目录"),
    profile: Optional[str] = PROFILE_OPT,
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
):
    """生成带真值的合成语料: eda.csv / annotations.csv / music.csv / truth/"""
    overrides = None
    if spec is not None:
        data = read_json_config(spec)
        overrides = data if set(data) <= set(SECTIONS) | {"description"} else {"synth": data}
    run = _build(profile, config, seed, overrides)
    watch = Stopwatch()
    with watch.section("generate"):
        dataset = gen_from_plan(run.synth, run.irf)
        paths = write_synth_corpus(dataset, out)
    write_manifest(out, {
        "command": "synth",
        "config": {"irf": asdict(run.irf), "synth": run.to_dict()["synth"]},
        "seed": run.synth.seed,
        "outputs": sorted(Path(p).name for p in paths.values()),
    })
    watch.write(out)


@app.command("train")
def train_cmd(
    eda: Path = EDA_OPT,
    annotations: Path = ANNOTATIONS_OPT,
    music: Optional[Path] = MUSIC_OPT,
    out: Path = typer.Option(..., "--out", help="运行目录"),
    dim: Optional[str] = DIM_OPT,
    init_checkpoint: Optional[Path] = typer.Option(None, "--init-checkpoint", help="热启动用的检查点"),
    profile: Optional[str] = PROFILE_OPT,
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    jobs: Optional[int] = JOBS_OPT,
):
    """被试独立 k 折交叉验证训练 RTCAN，写出清单与每折检查点"""
    run = _build(profile, config, seed, {"pipeline": {"dim": dim, "jobs": jobs}})
    use_music = run.pipeline.use_music
    watch = Stopwatch()
    with watch.section("assemble"):
        examples = _load_examples(run, eda, annotations, music, run.rtcan.input_len, use_music)
    music_dim = examples[0].music.shape[0] if use_music else 0
    rtcan_cfg = replace(run.rtcan, music_dim=music_dim)

    plan = plan_for_subjects([e.subject_id for e in examples], run.pipeline.folds,
                             run.pipeline.subject_fraction, run.seed)
    selected = set(plan.subjects)
    examples = [e for e in examples if e.subject_id in selected]
    init_model = RtcanModel.from_checkpoint(load_checkpoint(init_checkpoint)) if init_checkpoint else None

    with watch.section("cross_validate"):
        report = cross_validate(examples, rtcan_cfg, run.schedule, plan, run.pipeline.dim,
                                run.pipeline.jobs, init_model, keep_models=True)

    config_dict = run.to_dict()
    config_dict["rtcan"] = rtcan_cfg.to_dict()
    checkpoints = []
    with watch.section("checkpoints"):
        for fold in report.folds:
            name = f"fold_{fold.fold_id:02d}.ckpt"
            extra = {k: config_dict[k] for k in PREPROCESS_SECTIONS}
            extra["fold"] = {"fold_id": fold.fold_id, "test_subjects": fold.test_subjects}
            save_checkpoint(fold.model.to_checkpoint(extra), out / name)
            checkpoints.append(name)

    write_manifest(out, {
        "command": "train",
        "profile": run.profile,
        "seed": run.seed,
        "dim": run.pipeline.dim,
        "config": config_dict,
        "inputs": input_digests({"eda": eda, "annotations": annotations,
                                 "music": music if use_music else None}),
        "n_examples": len(examples),
        "fold_plan": plan.to_dict(),
        "report": report.to_dict(),
        "checkpoints": checkpoints,
    })
    watch.write(out)
    _print_report(f"RTCAN {run.pipeline.dim}", report)


@app.command("eval")
def eval_cmd(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="模型检查点"),
    eda: Path = EDA_OPT,
    annotations: Path = ANNOTATIONS_OPT,
    music: Optional[Path] = MUSIC_OPT,
    dim: Optional[str] = DIM_OPT,
    out: Optional[Path] = typer.Option(None, "--out",
                                       help="写出 eval.json 与清单的目录，缺省为检查点旁的 eval_<检查点名>/"),
    profile: Optional[str] = PROFILE_OPT,
    config: Optional[Path] = CONFIG_OPT,
):
    """用已训练的模型评估一份语料，指标以 JSON 输出到 stdout"""
    out = out if out is not None else checkpoint.parent / f"eval_{checkpoint.stem}"
    watch = Stopwatch()
    ckpt = load_checkpoint(checkpoint)
    model = RtcanModel.from_checkpoint(ckpt)
    run = _build(profile, config, overrides={"pipeline": {"dim": dim}}, base=_checkpoint_layer(ckpt))
    use_music = model.config.music_dim > 0
    with watch.section("assemble"):
        examples = _load_examples(run, eda, annotations, music, model.config.input_len, use_music)
    with watch.section("evaluate"):
        report = evaluate(model, examples, run.pipeline.dim)
    payload = {"dim": run.pipeline.dim, "n_examples": len(examples), "metrics": report.to_dict()}
    typer.echo(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS).decode())
    write_json(out / "eval.json", payload)
    write_manifest(out, {
        "command": "eval",
        "seed": run.seed,
        "config": run.to_dict(),
        "inputs": input_digests({"checkpoint": checkpoint, "eda": eda, "annotations": annotations,
                                 "music": music if use_music else None}),
        "result": payload,
    })
    watch.write(out)


@app.command("baseline")
def baseline_cmd(
    eda: Path = EDA_OPT,
    annotations: Path = ANNOTATIONS_OPT,
    music: Optional[Path] = MUSIC_OPT,
    c: Optional[float] = typer.Option(None, "--C", help="SVM 正则化参数 C"),
    features: Optional[str] = typer.Option(None, "--features", help="eda / music / fused"),
    dim: Optional[str] = DIM_OPT,
    out: Optional[Path] = typer.Option(None, "--out",
                                       help="写出清单的目录，缺省为 EDA 文件旁的 baseline_<特征>_<维度>/"),
    profile: Optional[str] = PROFILE_OPT,
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    jobs: Optional[int] = JOBS_OPT,
):
    """同一被试独立划分下的线性 SVM 基线"""
    run = _build(profile, config, seed, {
        "svm": {"C": c, "features": features},
        "pipeline": {"dim": dim, "jobs": jobs},
    })
    out = out if out is not None else eda.parent / f"baseline_{run.svm.features}_{run.pipeline.dim}"
    use_music = run.svm.features != "eda"
    watch = Stopwatch()
    with watch.section("assemble"):
        examples = _load_examples(run, eda, annotations, music, run.rtcan.input_len, use_music)
    plan = plan_for_subjects([e.subject_id for e in examples], run.pipeline.folds,
                             run.pipeline.subject_fraction, run.seed)
    selected = set(plan.subjects)
    examples = [e for e in examples if e.subject_id in selected]
    with watch.section("cross_validate"):
        report = svm_cross_validate(examples, plan, run.svm, run.pipeline.dim, run.pipeline.jobs)
    write_manifest(out, {
        "command": "baseline",
        "seed": run.seed,
        "dim": run.pipeline.dim,
        "config": run.to_dict(),
        "inputs": input_digests({"eda": eda, "annotations": annotations,
                                 "music": music if use_music else None}),
        "fold_plan": plan.to_dict(),
        "report": report.to_dict(),
    })
    watch.write(out)
    _print_report(f"SVM({run.svm.features}, C={run.svm.C}) {run.pipeline.dim}", report)


@app.command("explain")
def explain_cmd(
    checkpoint: Path = typer.Option(..., "--checkpoint", help="模型检查点"),
    eda: Path = EDA_OPT,
    annotations: Path = ANNOTATIONS_OPT,
    music: Optional[Path] = MUSIC_OPT,
    subject: str = typer.Option(..., "--subject", help="被试 ID"),
    stimulus: str = typer.Option(..., "--stimulus", help="刺激 ID"),
    dim: Optional[str] = DIM_OPT,
    layer: List[str] = typer.Option(["attention_out"], "--layer",
                                    help="sca_out / rnta_out / attention_out，可重复"),
    target_class: Optional[int] = typer.Option(None, "--target-class", help="目标类，缺省取预测类"),
    out: Optional[Path] = typer.Option(None, "--out", help="输出目录，缺省为检查点旁的 explain_<检查点名>/"),
    profile: Optional[str] = PROFILE_OPT,
    config: Optional[Path] = CONFIG_OPT,
):
    """对一条记录计算 Grad-CAM 显著性，写出 CSV 与 SVG"""
    out = out if out is not None else checkpoint.parent / f"explain_{checkpoint.stem}"
    watch = Stopwatch()
    ckpt = load_checkpoint(checkpoint)
    model = RtcanModel.from_checkpoint(ckpt)
    run = _build(profile, config, overrides={"pipeline": {"dim": dim}}, base=_checkpoint_layer(ckpt))
    use_music = model.config.music_dim > 0
    with watch.section("assemble"):
        examples = _load_examples(run, eda, annotations, music, model.config.input_len,
                                  use_music, keep=(subject, stimulus))
    with watch.section("gradcam"):
        maps = [gradcam_1d(model, examples[0], name, target_class) for name in layer]
    with watch.section("plot"):
        written = emit_plot(examples[0], maps, out, run.pipeline.dim)
    write_manifest(out, {
        "command": "explain",
        "seed": run.seed,
        "dim": run.pipeline.dim,
        "config": run.to_dict(),
        "inputs": input_digests({"checkpoint": checkpoint, "eda": eda, "annotations": annotations,
                                 "music": music if use_music else None}),
        "record": {"subject_id": subject, "stimulus_id": stimulus},
        "maps": [{"layer": m.layer, "target_class": m.target_class} for m in maps],
        "outputs": [p.name for pair in written for p in pair],
    })
    watch.write(out)
    for csv_path, svg_path in written:
        typer.echo(str(csv_path))
        typer.echo(str(svg_path))


@app.command("correlate")
def correlate_cmd(annotations: Path = ANNOTATIONS_OPT):
    """效价与唤醒度标注之间的 Pearson 相关系数"""
    records = read_annotations_csv(annotations)
    result = pearson_r([r.valence for r in records], [r.arousal for r in records])
    typer.echo(f"r={result.r:.3f} t={result.t:.3f} n={result.n}")


# ------------------------------------------------------------------ 入口

def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """运行一条命令并返回退出码，不调用 sys.exit"""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = app(args=args, prog_name="edaffect", standalone_mode=False)
    except click.exceptions.ClickException as e:
        usage = UsageError(" ".join(e.format_message().split()))
        typer.echo(usage.one_line(), err=True)
        return usage.exit_code
    except click.exceptions.Abort:
        typer.echo("error reason=aborted detail=用户中断", err=True)
        return 1
    except EdaffectError as e:
        logger.debug(f"命令失败: {e!r}")
        typer.echo(e.one_line(), err=True)
        return e.exit_code
    return result if isinstance(result, int) else 0
