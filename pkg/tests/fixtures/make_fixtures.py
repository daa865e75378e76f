"""Regenerate the committed fixtures.

Run from the repository root:

    python tests/fixtures/make_fixtures.py

Writes the synthetic scene masks (see tests/scene.py for the construction and
the known ground-truth 5-tuples) and the golden lines.json produced by the
`postprocess` subcommand at default settings. The golden file is compared
byte-for-byte by tests/test_cli.py, so regenerate it only when the pipeline's
numeric behavior intentionally changes.
"""

import pathlib
import sys

HERE = pathlib.Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))  # for tests/scene.py

from floorline.cli import main
from floorline.io_formats import write_label_mask
from scene import build_scene


def run() -> None:
    facade_mask, floor_mask = build_scene()
    write_label_mask(facade_mask, HERE / "scene.semantic.pgm")
    write_label_mask(floor_mask, HERE / "scene.floor.pgm")
    code = main(
        [
            "postprocess",
            "--facade-mask", str(HERE / "scene.semantic.pgm"),
            "--floor-mask", str(HERE / "scene.floor.pgm"),
            "--out", str(HERE / "scene.lines.golden.json"),
            "--svg", str(HERE / "scene.overlay.golden.svg"),
        ]
    )
    if code != 0:
        raise SystemExit(f"postprocess failed with exit code {code}")
    print("fixtures written to", HERE)


if __name__ == "__main__":
    run()
