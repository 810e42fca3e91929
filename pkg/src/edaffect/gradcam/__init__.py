"""注意力子模块上的一维 Grad-CAM"""
from edaffect.gradcam.plot import emit_plot
from edaffect.gradcam.saliency import LAYERS, SaliencyMap, gradcam_1d, normalize_map

__all__ = ["LAYERS", "SaliencyMap", "emit_plot", "gradcam_1d", "normalize_map"]
