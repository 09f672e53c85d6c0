"""Entry point for python -m kornlab."""

from kornlab.cli.main import app

if __name__ == "__main__":
    app()
