"""Write the bundled example inputs under data/."""
from pathlib import Path

from kamlin.instances import already_normal, linearizable_spec, x_cubed

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    DATA.mkdir(exist_ok=True)
    for name, spec in [("x_cubed", x_cubed()), ("already_normal", already_normal()),
                       ("linearizable", linearizable_spec(n_max=24))]:
        (DATA / f"{name}.json").write_text(spec.to_json() + "\n", encoding="utf-8")
        print(f"wrote data/{name}.json ({len(spec.terms)} terms)")


if __name__ == "__main__":
    main()
