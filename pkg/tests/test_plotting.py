import json
import xml.etree.ElementTree as ET

import numpy as np

from treefanova.fanova import EffectTensor, FanovaModel
from treefanova.plotting import bar_svg, effect_svg, path_svg

SVG = "{http://www.w3.org/2000/svg}"


def model():
    effects = {
        (0,): EffectTensor((0,), (np.array([0.3, 0.6]),), np.array([-1.0, 0.5, 0.5])),
        (0, 1): EffectTensor((0, 1), (np.array([0.5]), np.array([0.2, 0.8])), np.array([[1.0, -2.0, 1.0], [-1.0, 2.0, -1.0]])),
        (0, 1, 2): EffectTensor((0, 1, 2), tuple(np.array([0.5]) for _ in range(3)), np.arange(8.0).reshape(2, 2, 2) - 3.5),
    }
    return FanovaModel(0.0, effects, feature_names=["a", "b", "c"], domain=[[0, 1]] * 3)


def test_main_effect_is_step_line():
    root = ET.fromstring(effect_svg(model(), (0,)))
    (line,) = root.iter(SVG + "polyline")
    assert len(line.get("points").split()) == 6


def test_heatmap_has_one_rect_per_cell_and_symmetric_scale():
    text = effect_svg(model(), (0, 1))
    root = ET.fromstring(text)
    cells = [r for r in root.iter(SVG + "rect") if r.find(SVG + "title") is not None]
    assert len(cells) == 6
    meta = json.loads(root.find(SVG + "metadata").text)
    assert meta["color_scale"]["max"] == 2.0 and meta["color_scale"]["min"] == -2.0


def test_three_way_slices():
    root = ET.fromstring(effect_svg(model(), (0, 1, 2)))
    assert len(list(root.iter(SVG + "polyline"))) == 4


def test_bar_chart_and_determinism():
    a = bar_svg(["x", "y", "z"], [0.5, -0.25, 0.0], "Bars")
    assert a == bar_svg(["x", "y", "z"], [0.5, -0.25, 0.0], "Bars")
    assert len([r for r in ET.fromstring(a).iter(SVG + "rect") if r.find(SVG + "title") is not None]) == 3


def test_path_plot():
    path = [{"lambda": 10 ** -k, "n_selected": k, "cv_metric": 0.5 + 0.1 * k} for k in range(5)]
    root = ET.fromstring(path_svg(path, "r2", chosen=0.01))
    assert root.find(SVG + "polyline") is not None
