import xml.etree.ElementTree as ET

import numpy as np

from gpsl.svg import LinePlot, _ticks


def test_render_is_deterministic_and_parseable():
    x = np.linspace(0, 1, 50)
    p = LinePlot("t", "x", "y").add(x, x ** 2, "a & b").add(x, x, "c", dashed=True)
    s1, s2 = p.render(), p.render()
    assert s1 == s2
    root = ET.fromstring(s1)
    lines = [e for e in root.iter() if e.tag.endswith("polyline")]
    assert len(lines) == 2


def test_log_axes_drop_nonpositive():
    p = LinePlot(logx=True, logy=True).add([0.0, 1.0, 10.0], [1.0, -1.0, 5.0], "s")
    x, y, _, _ = p.series[0]
    assert list(x) == [10.0] and list(y) == [5.0]
    ET.fromstring(p.render())


def test_ticks_cover_range():
    t = _ticks(0.0, 6.0, False)
    assert t[0] >= 0.0 and t[-1] <= 6.0 and len(t) >= 3
    assert _ticks(-3.2, 1.5, True) == [-3.0, -2.0, -1.0, 0.0, 1.0]


def test_empty_plot_renders():
    ET.fromstring(LinePlot("empty").render())
