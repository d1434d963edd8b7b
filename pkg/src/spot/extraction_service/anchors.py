"""Inject stable per-cell anchor ids into filing HTML.

Each td/th receives an id of the form "t{table}-r{row}-c{col}" using the same
coordinate assignment (including rowspan/colspan occupancy) as the grid
parser, so a record's source_cell always names an element the review UI can
scroll to. Everything else in the document passes through verbatim.
"""

from __future__ import annotations

from html import escape
from html.parser import HTMLParser


class _TableState:
    __slots__ = ("index", "row", "occupied")

    def __init__(self, index: int) -> None:
        self.index = index
        self.row = -1
        self.occupied: set[tuple[int, int]] = set()


class _AnchorInjector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=False)
        self.out: list[str] = []
        self.stack: list[_TableState] = []
        self.counter = 0

    def _emit_tag(self, tag, attrs, self_closing=False, anchor=None):
        parts = [f"<{tag}"]
        for name, value in attrs:
            if name == "id" and anchor is not None:
                continue
            if value is None:
                parts.append(f" {name}")
            else:
                parts.append(f' {name}="{escape(value, quote=True)}"')
        if anchor is not None:
            parts.append(f' id="{anchor}"')
        parts.append("/>" if self_closing else ">")
        self.out.append("".join(parts))

    def _handle_cell(self, tag, attrs, self_closing):
        table = self.stack[-1]
        if table.row < 0:
            table.row = 0
        attr_map = dict(attrs)

        def span(name):
            try:
                return max(1, int((attr_map.get(name) or "1").strip()))
            except ValueError:
                return 1

        r = table.row
        c = 0
        while (r, c) in table.occupied:
            c += 1
        for dr in range(span("rowspan")):
            for dc in range(span("colspan")):
                table.occupied.add((r + dr, c + dc))
        anchor = f"t{table.index}-r{r}-c{c}"
        self._emit_tag(tag, attrs, self_closing, anchor)

    def _handle_start(self, tag, attrs, self_closing):
        if tag == "table":
            self.stack.append(_TableState(self.counter))
            self.counter += 1
            self._emit_tag(tag, attrs, self_closing)
            if self_closing:
                self.stack.pop()
        elif self.stack and tag == "tr":
            self.stack[-1].row += 1
            self._emit_tag(tag, attrs, self_closing)
        elif self.stack and tag in ("td", "th") and not self_closing:
            self._handle_cell(tag, attrs, self_closing)
        else:
            self._emit_tag(tag, attrs, self_closing)

    def handle_starttag(self, tag, attrs):
        self._handle_start(tag, attrs, self_closing=False)

    def handle_startendtag(self, tag, attrs):
        self._handle_start(tag, attrs, self_closing=True)

    def handle_endtag(self, tag):
        if tag == "table" and self.stack:
            self.stack.pop()
        self.out.append(f"</{tag}>")

    def handle_data(self, data):
        self.out.append(data)

    def handle_entityref(self, name):
        self.out.append(f"&{name};")

    def handle_charref(self, name):
        self.out.append(f"&#{name};")

    def handle_comment(self, data):
        self.out.append(f"<!--{data}-->")

    def handle_decl(self, decl):
        self.out.append(f"<!{decl}>")


def inject_anchors(html: str) -> str:
    """Return the document with per-cell anchor ids added to every td/th."""
    injector = _AnchorInjector()
    injector.feed(html)
    injector.close()
    return "".join(injector.out)
