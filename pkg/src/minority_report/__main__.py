"""Entry point for `python -m minority_report`."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
