"""Command line front end.

Usage: plm-export export --model NAME --input texts.txt [--labels labels.txt]
                         --out emb.jsonl [--batch 16]

The leading "export" verb is optional. Exit codes follow the protoverb
convention: 0 success, 1 usage error, 2 data/model error.
"""

import argparse
import sys

from .export import ExportError, ExportJob, export


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(1, f"{self.prog}: usage error: {message}\n")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv[:1] == ["export"]:
        argv = argv[1:]
    parser = _Parser(prog="plm-export", description=__doc__)
    parser.add_argument("--model", required=True, help="HF model name or local path")
    parser.add_argument("--input", required=True, help="one template-filled line each")
    parser.add_argument("--labels", default=None, help="optional int-per-line sidecar")
    parser.add_argument("--out", required=True)
    parser.add_argument("--batch", type=int, default=16)
    args = parser.parse_args(argv)
    if args.batch < 1:
        parser.error("--batch must be >= 1")
    try:
        n = export(ExportJob(
            model_name=args.model,
            input_path=args.input,
            labels_path=args.labels,
            output_path=args.out,
            batch_size=args.batch,
        ))
    except ExportError as exc:
        print(f"plm-export: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {n} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
