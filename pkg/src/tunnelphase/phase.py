"""Tunneling phase diagram: regime classification per (system, T) and SVG panels.

Thresholds on kappa, KIE and k_tun are compared in log10 space, so deep
tunneling points (kappa ~ 1e90) never overflow.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .errors import SpecificationError

__all__ = [
    "Regime",
    "RegimeThresholds",
    "PhasePoint",
    "Panel",
    "classify",
    "build_diagram",
    "phase_to_csv",
    "summary",
    "SvgStyle",
    "render_svg",
    "PHASE_HEADER",
    "DEFAULT_PANELS",
]

PHASE_HEADER = ("panel_T", "system_id", "log10_kie", "log10_kappa", "log10_k_tun", "eta", "regime", "anomaly")
DEFAULT_PANELS = (100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0)


class Regime(str, Enum):
    TUNNELING = "Tunneling"
    TRANSITION = "Transition"
    CLASSICAL = "Classical"


@dataclass(frozen=True)
class RegimeThresholds:
    kappa_strong: float = 2.0
    kappa_classical: float = 1.1
    T_low: float = 300.0
    T_high: float = 600.0
    k_low: float = 1e-5
    k_high: float = 1.0
    kie_anomaly: float = 5.0
    kappa_anomaly: float = 1.5

    def __post_init__(self):
        vals = asdict(self)
        if not all(isinstance(v, (int, float)) and math.isfinite(v) and v > 0 for v in vals.values()):
            raise SpecificationError("thresholds must be finite and positive")
        if not self.kappa_strong > self.kappa_classical >= 1.0:
            raise SpecificationError("need kappa_strong > kappa_classical >= 1")
        if not self.T_low < self.T_high:
            raise SpecificationError("need T_low < T_high")
        if not self.k_low < self.k_high:
            raise SpecificationError("need k_low < k_high")


@dataclass(frozen=True)
class PhasePoint:
    system_id: str
    T: float
    log10_kie: float
    log10_kappa: float
    log10_k_tun: float
    eta: float
    regime: Regime
    anomaly: bool


def classify(record, thresholds: RegimeThresholds | None = None) -> PhasePoint:
    """Regime and anomaly flag for one dataset record.

    Tunneling: T < T_low, kappa >= kappa_strong, k_tun < k_low.
    Classical: T > T_high, kappa <= kappa_classical, k_tun > k_high.
    Anything else is Transition.  Anomaly (independent of regime):
    KIE >= kie_anomaly and kappa <= kappa_anomaly.
    """
    th = thresholds or RegimeThresholds()
    lk, lkie, lrate = record.log10_kappa, record.log10_kie, record.log10_k_tun
    if record.T < th.T_low and lk >= math.log10(th.kappa_strong) and lrate < math.log10(th.k_low):
        regime = Regime.TUNNELING
    elif record.T > th.T_high and lk <= math.log10(th.kappa_classical) and lrate > math.log10(th.k_high):
        regime = Regime.CLASSICAL
    else:
        regime = Regime.TRANSITION
    anomaly = lkie >= math.log10(th.kie_anomaly) and lk <= math.log10(th.kappa_anomaly)
    return PhasePoint(record.system_id, float(record.T), lkie, lk, lrate, record.eta, regime, bool(anomaly))


@dataclass(frozen=True)
class Panel:
    T: float
    points: tuple = field(default_factory=tuple)

    def median_log10_kappa(self) -> float:
        return float(np.median([p.log10_kappa for p in self.points]))

    def counts(self) -> dict:
        out = {r.value: 0 for r in Regime}
        for p in self.points:
            out[p.regime.value] += 1
        out["anomaly"] = sum(p.anomaly for p in self.points)
        return out


def build_diagram(records, panel_temperatures=DEFAULT_PANELS, thresholds: RegimeThresholds | None = None) -> list[Panel]:
    """One panel per requested temperature, points ordered by system id."""
    th = thresholds or RegimeThresholds()
    temps = sorted(float(t) for t in panel_temperatures)
    if not temps:
        raise SpecificationError("no panel temperatures requested")
    by_t: dict = {}
    for rec in records:
        by_t.setdefault(float(rec.T), []).append(rec)
    grid = np.array(sorted(by_t))
    panels = []
    for T in temps:
        hit = np.flatnonzero(np.abs(grid - T) <= 1e-9 * max(1.0, T)) if grid.size else []
        if len(hit) == 0:
            raise SpecificationError(f"panel temperature {T} K is not on the dataset grid")
        recs = sorted(by_t[float(grid[hit[0]])], key=lambda r: r.system_id)
        panels.append(Panel(T, tuple(classify(r, th) for r in recs)))
    return panels


def phase_to_csv(panels) -> str:
    lines = [",".join(PHASE_HEADER)]
    for panel in panels:
        for p in panel.points:
            lines.append(
                f"{panel.T!r},{p.system_id},{p.log10_kie!r},{p.log10_kappa!r},{p.log10_k_tun!r},"
                f"{p.eta!r},{p.regime.value},{str(p.anomaly).lower()}"
            )
    return "\n".join(lines) + "\n"


def summary(panels) -> list:
    return [{"panel_T": p.T, "median_log10_kappa": p.median_log10_kappa(), **p.counts()} for p in panels]


# ----------------------------------------------------------------------------
# SVG rendering

REGIME_COLORS = {Regime.TUNNELING: "#1f5fbf", Regime.TRANSITION: "#d08a1a", Regime.CLASSICAL: "#2e8b3a"}


@dataclass(frozen=True)
class SvgStyle:
    width: int = 480
    height: int = 400
    margin_left: int = 64
    margin_right: int = 20
    margin_top: int = 36
    margin_bottom: int = 52
    marker_radius: float = 4.0
    # axis ranges in log10 units; None means fitted to the panel's points
    x_range: tuple | None = None
    y_range: tuple | None = None


def _nice_step(span):
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if m * mag >= raw:
            return m * mag
    return 10.0 * mag


def _auto_range(values, guides):
    vals = list(values) + list(guides)
    lo, hi = min(vals), max(vals)
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    step = _nice_step(hi - lo)
    return math.floor(lo / step) * step, math.ceil(hi / step) * step, step


def _fmt(v):
    return f"{v:.2f}"


def _tick_label(v, step):
    decimals = max(0, -int(math.floor(math.log10(step)))) if step < 1 else 0
    if step in (0.25, 2.5):
        decimals += 1
    s = f"{v:.{decimals}f}"
    return "0" if s.strip("-0.") == "" else s


def render_svg(panels, thresholds: RegimeThresholds | None = None, style: SvgStyle | None = None) -> dict:
    """{filename: svg text}, one document per panel (phase_<T>.svg)."""
    panels = list(panels)
    if not panels:
        raise SpecificationError("no panels to render")
    th = thresholds or RegimeThresholds()
    st = style or SvgStyle()
    out = {}
    for panel in panels:
        out[f"phase_{int(round(panel.T))}.svg"] = _panel_svg(panel, th, st)
    return out


def panel_viewport(panel: Panel, th: RegimeThresholds, st: SvgStyle):
    """Axis ranges and the data -> pixel mapping used for ``panel``."""
    xg = [math.log10(th.kie_anomaly)]
    yg = [math.log10(th.kappa_strong), math.log10(th.kappa_classical), math.log10(th.kappa_anomaly)]
    xs = [p.log10_kie for p in panel.points]
    ys = [p.log10_kappa for p in panel.points]
    if st.x_range is not None:
        x0, x1 = st.x_range
        xstep = _nice_step(x1 - x0)
    else:
        x0, x1, xstep = _auto_range(xs, xg + [0.0])
    if st.y_range is not None:
        y0, y1 = st.y_range
        ystep = _nice_step(y1 - y0)
    else:
        y0, y1, ystep = _auto_range(ys, yg + [0.0])
    left, right = st.margin_left, st.width - st.margin_right
    top, bottom = st.margin_top, st.height - st.margin_bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * (right - left)

    def py(y):
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    return (x0, x1, xstep), (y0, y1, ystep), (left, right, top, bottom), px, py


def _panel_svg(panel: Panel, th: RegimeThresholds, st: SvgStyle) -> str:
    (x0, x1, xstep), (y0, y1, ystep), (left, right, top, bottom), px, py = panel_viewport(panel, th, st)
    e = []
    e.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{st.width}" height="{st.height}" '
        f'viewBox="0 0 {st.width} {st.height}" font-family="sans-serif" font-size="11">'
    )
    e.append(f'<rect x="0" y="0" width="{st.width}" height="{st.height}" fill="#ffffff"/>')
    e.append(f'<text x="{st.width / 2:.2f}" y="20" text-anchor="middle" font-size="14">T = {panel.T:g} K</text>')
    # ticks and grid
    k = math.ceil(x0 / xstep - 1e-9)
    while k * xstep <= x1 + 1e-9:
        x = k * xstep
        e.append(f'<line x1="{_fmt(px(x))}" y1="{top}" x2="{_fmt(px(x))}" y2="{bottom}" stroke="#eeeeee"/>')
        e.append(f'<text x="{_fmt(px(x))}" y="{bottom + 16}" text-anchor="middle">{_tick_label(x, xstep)}</text>')
        k += 1
    k = math.ceil(y0 / ystep - 1e-9)
    while k * ystep <= y1 + 1e-9:
        y = k * ystep
        e.append(f'<line x1="{left}" y1="{_fmt(py(y))}" x2="{right}" y2="{_fmt(py(y))}" stroke="#eeeeee"/>')
        e.append(f'<text x="{left - 6}" y="{_fmt(py(y) + 4)}" text-anchor="end">{_tick_label(y, ystep)}</text>')
        k += 1
    e.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" fill="none" stroke="#000000"/>')
    # threshold guides
    guides_y = (
        (math.log10(th.kappa_strong), "kappa strong", "#1f5fbf"),
        (math.log10(th.kappa_classical), "kappa classical", "#2e8b3a"),
        (math.log10(th.kappa_anomaly), "kappa anomaly", "#b22222"),
    )
    for y, label, color in guides_y:
        if y0 <= y <= y1:
            e.append(
                f'<line x1="{left}" y1="{_fmt(py(y))}" x2="{right}" y2="{_fmt(py(y))}" stroke="{color}" '
                f'stroke-dasharray="4 3"><title>{label}</title></line>'
            )
    xg = math.log10(th.kie_anomaly)
    if x0 <= xg <= x1:
        e.append(
            f'<line x1="{_fmt(px(xg))}" y1="{top}" x2="{_fmt(px(xg))}" y2="{bottom}" stroke="#b22222" '
            f'stroke-dasharray="4 3"><title>KIE anomaly</title></line>'
        )
    # points
    for p in panel.points:
        color = REGIME_COLORS[p.regime]
        stroke = ' stroke="#000000" stroke-width="1.5"' if p.anomaly else ""
        e.append(
            f'<circle cx="{_fmt(px(p.log10_kie))}" cy="{_fmt(py(p.log10_kappa))}" r="{st.marker_radius:g}" '
            f'fill="{color}" fill-opacity="0.8"{stroke}><title>{p.system_id} {p.regime.value}'
            f'{" anomaly" if p.anomaly else ""}</title></circle>'
        )
    # axis labels and legend
    e.append(f'<text x="{(left + right) / 2:.2f}" y="{st.height - 12}" text-anchor="middle">log10 KIE</text>')
    e.append(
        f'<text x="16" y="{(top + bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(top + bottom) / 2:.2f})">log10 kappa</text>'
    )
    lx, ly = right - 96, top + 12
    for i, regime in enumerate(Regime):
        e.append(f'<circle cx="{lx}" cy="{ly + 14 * i}" r="4" fill="{REGIME_COLORS[regime]}"/>')
        e.append(f'<text x="{lx + 8}" y="{ly + 14 * i + 4}">{regime.value}</text>')
    e.append("</svg>")
    return "\n".join(e) + "\n"
