"""Module entry point: ``python -m boselab`` runs the experiment CLI."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
