"""Module entry point: ``python -m wassdyn``."""

from wassdyn.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
