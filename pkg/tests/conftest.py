import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).parent))

PROGRAMS = pathlib.Path(__file__).parent / "programs"


def program_source(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")
