"""Bit-exact file formats: PGM label masks, annotation JSON, line-result JSON.

PGM was picked for masks because it is trivially parseable, bit-exact, and has
no compression ambiguity. JSON coordinates are written with Python's repr
round-trip so doubles survive a write/read cycle unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import (
    IoFailure,
    MalformedHeader,
    MaxvalTooLarge,
    PaletteViolation,
    SchemaViolation,
    TruncatedPayload,
)
from .geometry import MAX_FLOOR_ORDER, ORIENTATIONS, LabelMask, Line5Tuple, Point2, Quad


# -- palettes -----------------------------------------------------------------


@dataclass(frozen=True)
class Palette:
    """Bijective name <-> code table for one mask role."""

    role: str
    by_name: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "by_name", MappingProxyType(dict(self.by_name)))
        codes = list(self.by_name.values())
        if len(set(codes)) != len(codes):
            raise ValueError("palette codes must be unique")

    @property
    def codes(self) -> frozenset[int]:
        return frozenset(self.by_name.values())

    def name_of(self, code: int) -> str:
        for name, c in self.by_name.items():
            if c == code:
                return name
        raise KeyError(code)

    def validate(self, mask) -> None:
        """Raise PaletteViolation if the mask uses codes outside this palette."""
        bad = sorted(set(mask.label_set()) - self.codes)
        if bad:
            raise PaletteViolation(f"mask contains codes {bad} outside the {self.role} palette")


FACADE_PALETTE = Palette(
    "facade",
    {"other": 0, "window": 1, "door": 2, "shop": 3, "left": 4, "right": 5, "front": 6},
)

FLOOR_PALETTE = Palette(
    "floor",
    {"other": 0, **{str(k): k for k in range(1, MAX_FLOOR_ORDER + 1)}},
)

#: Facade-context codes (per-element semantics, not orientation).
CONTEXT_CODES = frozenset({1, 2, 3})

#: Orientation code <-> name, as stamped into augmented semantic masks.
ORIENTATION_CODE = MappingProxyType({"left": 4, "right": 5, "front": 6})
ORIENTATION_NAME = MappingProxyType({4: "left", 5: "right", 6: "front"})


# -- PGM masks ----------------------------------------------------------------

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _pgm_tokens(data: bytes, count: int, path) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated header tokens; '#' starts a comment."""
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1] in _WHITESPACE:
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] != b"\n":
                i += 1
            continue
        if i >= n:
            raise MalformedHeader(f"{path}: header ended after {len(tokens)} tokens")
        start = i
        while i < n and data[i : i + 1] not in _WHITESPACE and data[i : i + 1] != b"#":
            i += 1
        tokens.append(data[start:i])
    return tokens, i


def _int_token(token: bytes, what: str, path) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedHeader(f"{path}: {what} is not an integer: {token!r}") from None


def read_label_mask(path) -> LabelMask:
    """Read a P5 (binary) or P2 (ASCII) PGM file into a LabelMask.

    Values come back exactly as stored; palette checks are left to the caller
    that knows whether this is a facade or a floor mask.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    (magic,), _ = _pgm_tokens(data, 1, path)
    if magic not in (b"P5", b"P2"):
        raise MalformedHeader(f"{path}: unsupported magic {magic!r} (want P5 or P2)")
    tokens, i = _pgm_tokens(data, 4, path)
    width = _int_token(tokens[1], "width", path)
    height = _int_token(tokens[2], "height", path)
    maxval = _int_token(tokens[3], "maxval", path)
    if width <= 0 or height <= 0:
        raise MalformedHeader(f"{path}: non-positive dimensions {width}x{height}")
    if maxval > 255:
        raise MaxvalTooLarge(f"{path}: maxval {maxval} > 255")
    if maxval <= 0:
        raise MalformedHeader(f"{path}: non-positive maxval {maxval}")

    n = width * height
    if magic == b"P5":
        if i >= len(data) or data[i : i + 1] not in _WHITESPACE:
            raise MalformedHeader(f"{path}: expected single whitespace after maxval")
        payload = data[i + 1 : i + 1 + n]
        if len(payload) < n:
            raise TruncatedPayload(f"{path}: expected {n} bytes, found {len(payload)}")
        values = np.frombuffer(payload, dtype=np.uint8)
    else:
        text = data[i:]
        raw = []
        for line in text.split(b"\n"):
            line = line.split(b"#", 1)[0]
            raw.extend(line.split())
        if len(raw) < n:
            raise TruncatedPayload(f"{path}: expected {n} samples, found {len(raw)}")
        values = np.array([_int_token(t, "sample", path) for t in raw[:n]], dtype=np.int64)
    if values.size and int(values.max()) > maxval:
        raise MalformedHeader(f"{path}: sample value {int(values.max())} exceeds maxval {maxval}")
    return LabelMask(width, height, values.reshape(height, width))


def write_label_mask(mask, path, format: str = "P5") -> None:
    """Write a mask as PGM. P5 output is byte-deterministic:
    header "P5\\n<w> <h>\\n255\\n" followed by raw row-major bytes."""
    if format not in ("P5", "P2"):
        raise ValueError(f"format must be P5 or P2, got {format!r}")
    header = f"{format}\n{mask.width} {mask.height}\n255\n".encode("ascii")
    try:
        if format == "P5":
            Path(path).write_bytes(header + mask.labels.tobytes())
        else:
            rows = "\n".join(" ".join(str(int(v)) for v in row) for row in mask.labels)
            Path(path).write_bytes(header + rows.encode("ascii") + b"\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# -- annotation JSON ----------------------------------------------------------


@dataclass(frozen=True)
class AnnotationRecord:
    """Quad annotations for one street-view image."""

    image_id: str
    width: int
    height: int
    facades: tuple[Quad, ...]

    def __post_init__(self):
        object.__setattr__(self, "facades", tuple(self.facades))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        for quad in self.facades:
            for c in quad.corners:
                if not (0 <= c.x <= self.width and 0 <= c.y <= self.height):
                    raise ValueError(
                        f"quad corner ({c.x}, {c.y}) outside image bounds "
                        f"{self.width}x{self.height}"
                    )


def _require(obj, key, kind, path):
    if not isinstance(obj, dict):
        raise SchemaViolation(path, f"expected object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaViolation(f"{path}/{key}", "missing required field")
    value = obj[key]
    if kind == "number":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise SchemaViolation(f"{path}/{key}", f"expected number, got {type(value).__name__}")
    elif kind == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaViolation(f"{path}/{key}", f"expected integer, got {type(value).__name__}")
    elif kind == "str":
        if not isinstance(value, str):
            raise SchemaViolation(f"{path}/{key}", f"expected string, got {type(value).__name__}")
    elif kind == "list":
        if not isinstance(value, list):
            raise SchemaViolation(f"{path}/{key}", f"expected array, got {type(value).__name__}")
    return value


def _load_json(path):
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {p}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("", f"invalid JSON in {p}: {exc}") from exc


def _dump_json(doc, path) -> None:
    try:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _point_pair(value, path) -> tuple[float, float]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise SchemaViolation(path, "expected [x, y] number pair")
    return float(value[0]), float(value[1])


def read_annotations(path) -> list[AnnotationRecord]:
    """Read an annotations file: a JSON array of per-image quad records."""
    doc = _load_json(path)
    if not isinstance(doc, list):
        raise SchemaViolation("", f"expected top-level array, got {type(doc).__name__}")
    records = []
    for ri, rec in enumerate(doc):
        rpath = f"/{ri}"
        image = _require(rec, "image", "str", rpath)
        width = _require(rec, "width", "int", rpath)
        height = _require(rec, "height", "int", rpath)
        facades_raw = _require(rec, "facades", "list", rpath)
        quads = []
        for fi, fac in enumerate(facades_raw):
            fpath = f"{rpath}/facades/{fi}"
            quad_raw = _require(fac, "quad", "list", fpath)
            orientation = _require(fac, "orientation", "str", fpath)
            if orientation not in ORIENTATIONS:
                raise SchemaViolation(f"{fpath}/orientation", f"unknown orientation {orientation!r}")
            if len(quad_raw) != 4:
                raise SchemaViolation(f"{fpath}/quad", f"expected 4 corners, got {len(quad_raw)}")
            corners = tuple(
                Point2(*_point_pair(c, f"{fpath}/quad/{ci}")) for ci, c in enumerate(quad_raw)
            )
            try:
                quads.append(Quad(corners, orientation))
            except ValueError as exc:
                raise SchemaViolation(f"{fpath}/quad", str(exc)) from exc
        try:
            records.append(AnnotationRecord(image, width, height, tuple(quads)))
        except ValueError as exc:
            raise SchemaViolation(rpath, str(exc)) from exc
    return records


def write_annotations(records, path) -> None:
    doc = [
        {
            "image": rec.image_id,
            "width": rec.width,
            "height": rec.height,
            "facades": [
                {
                    "quad": [[c.x, c.y] for c in quad.corners],
                    "orientation": quad.orientation,
                }
                for quad in rec.facades
            ],
        }
        for rec in records
    ]
    _dump_json(doc, path)


# -- line-result JSON ---------------------------------------------------------


@dataclass(frozen=True)
class FacadeLines:
    """Recognized lines for one facade; vp is None when no finite VP exists."""

    facade_id: int
    orientation: str
    vp: Point2 | None
    lines: tuple[Line5Tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")


@dataclass(frozen=True)
class ImageLines:
    """Full line-recognition result for one image."""

    image: str
    facades: tuple[FacadeLines, ...]

    def __post_init__(self):
        object.__setattr__(self, "facades", tuple(self.facades))


def write_lines(result: ImageLines, path) -> None:
    doc = {
        "image": result.image,
        "facades": [
            {
                "id": fac.facade_id,
                "orientation": fac.orientation,
                "vp": None if fac.vp is None else [fac.vp.x, fac.vp.y],
                "lines": [
                    {"xs": ln.xs, "ys": ln.ys, "xe": ln.xe, "ye": ln.ye, "order": ln.order}
                    for ln in fac.lines
                ],
            }
            for fac in result.facades
        ],
    }
    _dump_json(doc, path)


def read_lines(path) -> ImageLines:
    doc = _load_json(path)
    image = _require(doc, "image", "str", "")
    facades_raw = _require(doc, "facades", "list", "")
    facades = []
    for fi, fac in enumerate(facades_raw):
        fpath = f"/facades/{fi}"
        fid = _require(fac, "id", "int", fpath)
        orientation = _require(fac, "orientation", "str", fpath)
        if orientation not in ORIENTATIONS:
            raise SchemaViolation(f"{fpath}/orientation", f"unknown orientation {orientation!r}")
        if "vp" not in fac:
            raise SchemaViolation(f"{fpath}/vp", "missing required field")
        vp = None if fac["vp"] is None else Point2(*_point_pair(fac["vp"], f"{fpath}/vp"))
        lines = []
        for li, ln in enumerate(_require(fac, "lines", "list", fpath)):
            lpath = f"{fpath}/lines/{li}"
            xs = float(_require(ln, "xs", "number", lpath))
            ys = float(_require(ln, "ys", "number", lpath))
            xe = float(_require(ln, "xe", "number", lpath))
            ye = float(_require(ln, "ye", "number", lpath))
            order = _require(ln, "order", "int", lpath)
            try:
                lines.append(Line5Tuple(xs, ys, xe, ye, order))
            except ValueError as exc:
                raise SchemaViolation(lpath, str(exc)) from exc
        facades.append(FacadeLines(fid, orientation, vp, tuple(lines)))
    return ImageLines(image, tuple(facades))
