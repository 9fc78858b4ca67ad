"""Logging setup and the CSV / JSON / SVG artifact writers."""

import csv
import io
import logging
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import orjson
from pydantic import BaseModel

from bcmsr.core.config import CSV_SIGNIFICANT_DIGITS, LOG_FORMAT, SVG_MARGIN, SVG_SIZE
from bcmsr.core.errors import ArtifactWriteError

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY

BOUND_COLORS = {
    "nofeedback": "#7f7f7f",
    "inner1": "#1f77b4",
    "inner2": "#2ca02c",
    "outer": "#d62728",
}
SERIES_COLORS = ("#1f77b4", "#2ca02c", "#d62728", "#7f7f7f", "#9467bd")


def setup_logging(verbose: int = 0, quiet: bool = False) -> None:
    """Configure the root handler on stderr; -v gives INFO, -vv DEBUG."""
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _plain(data: Any) -> Any:
    if isinstance(data, BaseModel):
        return data.model_dump(mode="json")
    if isinstance(data, dict):
        return {key: _plain(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [_plain(value) for value in data]
    return data


def dump_json(data: Any) -> bytes:
    """Sorted, indented JSON; pydantic records are dumped field for field."""
    return orjson.dumps(_plain(data), option=JSON_OPTIONS) + b"\n"


def load_json(text: Union[str, bytes]) -> Any:
    return orjson.loads(text)


def format_number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return f"{value:.{CSV_SIGNIFICANT_DIGITS}g}"


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], comments: Sequence[str] = ()) -> str:
    """CSV with ``.`` decimals and numbers at 12 significant digits; comments become ``#`` lines."""
    buffer = io.StringIO()
    for comment in comments:
        buffer.write(f"# {comment}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])
    return buffer.getvalue()


def write_artifact(content: Union[str, bytes], path: Optional[str] = None) -> None:
    """Write to ``path``, or to stdout when no path is given."""
    data = content.encode("utf-8") if isinstance(content, str) else content
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
        return
    try:
        target = Path(path)
        target.write_bytes(data)
    except OSError as exc:
        raise ArtifactWriteError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info("wrote %d bytes to %s", len(data), path)


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ArtifactWriteError(f"cannot read {path}: {exc.strerror or exc}") from exc


# --- SVG ---------------------------------------------------------------------


def _nice_limit(value: float) -> float:
    """Smallest multiple of 0.25 at or above ``value`` (1 for empty plots)."""
    if value <= 0:
        return 1.0
    quarters = int(value * 4 - 1e-9) + 1
    return quarters / 4.0


class _Canvas:
    """Maps data coordinates in [0, x_max] x [0, y_max] onto the fixed viewport."""

    def __init__(self, x_max: float, y_max: float):
        self.x_max, self.y_max = x_max, y_max
        self.span = SVG_SIZE - 2 * SVG_MARGIN
        self.parts: List[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
            f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
            f'<rect x="0" y="0" width="{SVG_SIZE}" height="{SVG_SIZE}" style="fill:#ffffff"/>',
        ]

    def x(self, value: float) -> float:
        return SVG_MARGIN + self.span * value / self.x_max

    def y(self, value: float) -> float:
        return SVG_SIZE - SVG_MARGIN - self.span * value / self.y_max

    def axes(self, x_label: str, y_label: str, title: str) -> None:
        origin_x, origin_y = self.x(0.0), self.y(0.0)
        line = "stroke:#000000;stroke-width:1"
        self.parts.append(f'<line x1="{origin_x:.2f}" y1="{origin_y:.2f}" x2="{self.x(self.x_max):.2f}" y2="{origin_y:.2f}" style="{line}"/>')
        self.parts.append(f'<line x1="{origin_x:.2f}" y1="{origin_y:.2f}" x2="{origin_x:.2f}" y2="{self.y(self.y_max):.2f}" style="{line}"/>')
        text = "font-family:sans-serif;font-size:14px"
        for i in range(5):
            tx, ty = self.x_max * i / 4, self.y_max * i / 4
            self.parts.append(f'<text x="{self.x(tx):.2f}" y="{origin_y + 20:.2f}" style="{text};text-anchor:middle">{tx:g}</text>')
            self.parts.append(f'<text x="{origin_x - 8:.2f}" y="{self.y(ty) + 5:.2f}" style="{text};text-anchor:end">{ty:g}</text>')
        self.parts.append(f'<text x="{SVG_SIZE / 2:.2f}" y="{SVG_SIZE - 20:.2f}" style="{text};text-anchor:middle">{x_label}</text>')
        self.parts.append(
            f'<text x="20" y="{SVG_SIZE / 2:.2f}" transform="rotate(-90 20 {SVG_SIZE / 2:.2f})" '
            f'style="{text};text-anchor:middle">{y_label}</text>'
        )
        self.parts.append(f'<text x="{SVG_SIZE / 2:.2f}" y="30" style="{text};font-size:16px;text-anchor:middle">{title}</text>')

    def legend(self, entries: Sequence[Tuple[str, str]]) -> None:
        for i, (name, color) in enumerate(entries):
            y = SVG_MARGIN + 10 + 22 * i
            left = SVG_SIZE - SVG_MARGIN - 150
            self.parts.append(f'<rect x="{left}" y="{y - 10}" width="14" height="14" style="fill:{color};fill-opacity:0.6"/>')
            self.parts.append(f'<text x="{left + 22}" y="{y + 2}" style="font-family:sans-serif;font-size:14px">{name}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def render_regions_svg(regions: Sequence[Tuple[str, Sequence[Tuple[float, float]]]], title: str) -> str:
    """Overlay of 2-D regions given as (name, counter-clockwise vertices), drawn in the given order."""
    extent = max((max(x, y) for _, vertices in regions for x, y in vertices), default=0.0)
    limit = _nice_limit(extent)
    canvas = _Canvas(limit, limit)
    canvas.axes("R1 [bits]", "R2 [bits]", title)
    for index, (name, vertices) in reversed(list(enumerate(regions))):
        color = BOUND_COLORS.get(name, SERIES_COLORS[index % len(SERIES_COLORS)])
        style = f"fill:{color};fill-opacity:0.25;stroke:{color};stroke-width:2"
        if len(vertices) == 1:
            x, y = vertices[0]
            canvas.parts.append(f'<circle cx="{canvas.x(x):.2f}" cy="{canvas.y(y):.2f}" r="4" style="{style}"/>')
        elif vertices:
            points = " ".join(f"{canvas.x(x):.2f},{canvas.y(y):.2f}" for x, y in vertices)
            canvas.parts.append(f'<polygon points="{points}" style="{style}"/>')
    canvas.legend([(name, BOUND_COLORS.get(name, SERIES_COLORS[i % len(SERIES_COLORS)])) for i, (name, _) in enumerate(regions)])
    return canvas.render()


def render_series_svg(x_values: Sequence[float], series: Sequence[Tuple[str, Sequence[float]]], x_label: str, title: str) -> str:
    """Line plot of several series over a shared x axis starting at 0."""
    x_limit = _nice_limit(max(x_values, default=0.0))
    y_limit = _nice_limit(max((max(values, default=0.0) for _, values in series), default=0.0))
    canvas = _Canvas(x_limit, y_limit)
    canvas.axes(x_label, "sum rate [bits]", title)
    for index, (name, values) in enumerate(series):
        color = SERIES_COLORS[index % len(SERIES_COLORS)]
        points = " ".join(f"{canvas.x(x):.2f},{canvas.y(y):.2f}" for x, y in zip(x_values, values))
        canvas.parts.append(f'<polyline points="{points}" style="fill:none;stroke:{color};stroke-width:2"/>')
    canvas.legend([(name, SERIES_COLORS[i % len(SERIES_COLORS)]) for i, (name, _) in enumerate(series)])
    return canvas.render()
