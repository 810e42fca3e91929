"""带真值的合成 EDA 语料"""
from edaffect.synth.generator import (
    SynthDataset,
    SynthPlan,
    SynthSpec,
    SynthTruth,
    gen_dataset,
    gen_from_plan,
    gen_trace,
)
from edaffect.synth.writer import write_synth_corpus

__all__ = [
    "SynthDataset",
    "SynthPlan",
    "SynthSpec",
    "SynthTruth",
    "gen_dataset",
    "gen_from_plan",
    "gen_trace",
    "write_synth_corpus",
]
