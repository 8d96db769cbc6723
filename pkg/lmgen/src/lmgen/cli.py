"""Service entry point: lmgen --mode {stub,seq2seq} [options]."""

import argparse
import sys

from lmgen.service import make_server
from lmgen.stub import StubModel, load_word_list


def build_model(args):
    if args.mode == "stub":
        verbs = load_word_list(args.verbs) if args.verbs else frozenset()
        gazetteer = load_word_list(args.gazetteer) if args.gazetteer else frozenset()
        return StubModel(verbs, gazetteer)
    from lmgen.seq2seq import Seq2SeqModel

    if not args.checkpoint:
        raise SystemExit("seq2seq mode requires --checkpoint")
    return Seq2SeqModel(args.checkpoint, args.beam_size, args.max_length)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lmgen", description=__doc__)
    parser.add_argument("--mode", choices=["stub", "seq2seq"], default="stub")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--verbs", help="stub mode: trigger word list, one per line")
    parser.add_argument("--gazetteer", help="stub mode: entity list, one per line")
    parser.add_argument("--checkpoint", help="seq2seq mode: encoder-decoder checkpoint")
    parser.add_argument("--beam-size", type=int, default=1)
    parser.add_argument("--max-length", type=int, default=128)
    args = parser.parse_args(argv)

    try:
        model = build_model(args)
    except Exception as exc:  # refuse to start on any load failure
        print(f"error: {exc}", file=sys.stderr)
        return 1

    server = make_server(model, args.host, args.port)
    host, port = server.server_address[:2]
    print(f"lmgen {args.mode} mode listening on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    main()
