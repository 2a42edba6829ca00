import argparse

from .render import PlotSpec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bequp-plot",
        description="render cost-vs-path-count figures from a bequp results CSV",
    )
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="results CSV from `bequp run`")
    parser.add_argument("--metric", choices=("fidelity", "skf"),
                        default="fidelity")
    parser.add_argument("--out", default="figure.png")
    parser.add_argument("--logy", action="store_true",
                        help="log scale on the cost axis")
    args = parser.parse_args(argv)
    path = render(PlotSpec(input_csv=args.input_csv, metric=args.metric,
                           output=args.out, logy=args.logy))
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
