from src.explain.heatmap import HeatMap, normalize_map, render_heatmap, write_heatmap_csv
from src.explain.gradcam import gradcam
from src.explain.occlusion import occlusion_map

__all__ = ["HeatMap", "normalize_map", "render_heatmap", "write_heatmap_csv", "gradcam", "occlusion_map"]
