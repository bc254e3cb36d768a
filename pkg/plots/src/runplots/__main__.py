"""Render the full figure set for a run directory:

    python3 -m runplots RUN_DIR [OUT_DIR]
"""

import sys

from .figures import RunDataError, plot_all


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if not 1 <= len(argv) <= 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    try:
        paths = plot_all(argv[0], argv[1] if len(argv) == 2 else None)
    except RunDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
