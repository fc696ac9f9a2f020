"""Command line front end.

Four subcommands: ``validate`` checks a document against one of the three
grammars, ``render`` snapshots a downstream document through an engine,
``serve`` runs a service behind the TCP wire protocol (or the browser
channel with ``--web``), and ``demo`` replays a scripted session against an
in-process loopback and prints the transcript.

Exit codes: 0 success, 1 validation or session failure, 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import os
import pathlib
import sys

from .codec import CodecError, parse_downstream, parse_upstream
from .engine import EngineError, Session
from .forms import (
    EMPTY_FORM,
    FormError,
    flatten,
    load_forms,
    parent_chain,
    parse_form,
)
from .renderers import render_html, render_text
from .services import BrokerService, CalendarError, CalendarService, UnknownResponse
from .web import WebServer
from .wire import DEFAULT_PORT, DEFAULT_TIMEOUT, LoopbackChannel, WireError, WireServer

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_IO = 3

SERVICES = {
    "calendar": CalendarService,
    "broker": BrokerService,
}

_PARSERS = {
    "down": parse_downstream,
    "up": parse_upstream,
    "form": parse_form,
}

# failures a scripted or live session can legitimately produce
_SESSION_ERRORS = (
    LookupError,
    EngineError,
    WireError,
    CodecError,
    CalendarError,
    UnknownResponse,
)


def _read_text(path: str) -> str:
    return pathlib.Path(path).read_text(encoding="utf-8")


def _forms_dir(args) -> str | None:
    return args.forms or os.environ.get("UBI_FORMS_DIR")


def _load_registry(directory: str | None) -> dict:
    return load_forms(directory) if directory else {}


def cmd_validate(args) -> int:
    try:
        text = _read_text(args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        _PARSERS[args.direction](text)
    except (CodecError, FormError) as exc:
        print(f"{args.file}: {exc}")
        return EXIT_INVALID
    print(f"{args.file}: ok")
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        document = _read_text(args.infile)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    form = EMPTY_FORM
    if args.form:
        try:
            form_text = _read_text(args.form)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        try:
            registry = _load_registry(_forms_dir(args))
            form = flatten(parent_chain(parse_form(form_text), registry))
        except (CodecError, FormError) as exc:
            print(f"{args.form}: {exc}")
            return EXIT_INVALID
        except KeyError as exc:
            print(f"{args.form}: unknown parent form {exc}")
            return EXIT_INVALID

    session = Session("render")
    try:
        session.apply_document(parse_downstream(document))
    except (CodecError, EngineError) as exc:
        print(f"{args.infile}: {exc}")
        return EXIT_INVALID

    if args.engine == "html":
        output = render_html(session, form)
    else:
        output, _ = render_text(session, form)
    if args.out:
        try:
            pathlib.Path(args.out).write_text(output, encoding="utf-8")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(output)
    return EXIT_OK


def cmd_serve(args) -> int:
    factory = SERVICES[args.service]
    try:
        forms = _load_registry(_forms_dir(args))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CodecError, FormError) as exc:
        print(f"forms: {exc}")
        return EXIT_INVALID

    if args.web:
        port = args.port if args.port is not None else 8000
        server = WebServer(factory, host=args.host, port=port,
                           assets_dir=args.assets, forms=forms,
                           session_timeout=args.timeout,
                           sim_rate=args.sim_rate)
    else:
        port = args.port if args.port is not None else DEFAULT_PORT
        server = WireServer(factory, host=args.host, port=port,
                            forms=forms, timeout=args.timeout,
                            sim_rate=args.sim_rate)
    host, bound = server.server_address[:2]
    channel = "web" if args.web else "tcp"
    print(f"serving {args.service} ({channel}) on {host}:{bound}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def _run_script(channel: LoopbackChannel, script: str) -> str | None:
    """Feed a demo script line by line; an error report ends the run."""
    for lineno, raw in enumerate(script.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        verb, _, rest = line.partition(" ")
        rest = rest.strip()
        if verb == "act":
            ordinal_text, _, payload = rest.partition(" ")
            payload = payload.strip() or None
            try:
                ordinal = int(ordinal_text)
            except ValueError:
                return f"line {lineno}: act needs a numeric ordinal"
            try:
                channel.act_ordinal(ordinal, payload)
            except _SESSION_ERRORS as exc:
                return f"line {lineno}: {exc}"
        elif verb == "tick":
            try:
                seconds = float(rest)
            except ValueError:
                return f"line {lineno}: tick needs a number of seconds"
            channel.advance(seconds)
        else:
            return f"line {lineno}: unknown script command {verb!r}"
    return None


def cmd_demo(args) -> int:
    try:
        script = _read_text(args.script)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    # fixed session id keeps transcripts reproducible run to run
    channel = LoopbackChannel(SERVICES[args.service](), engine=args.engine,
                              detail=args.detail, session_id="demo")
    channel.open()
    failure = _run_script(channel, script)
    sys.stdout.write(channel.transcript.dump())
    if failure:
        print(failure, file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ubi",
        description="Device-independent interaction toolkit front end.")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser(
        "validate", help="check a document against one of the grammars")
    validate.add_argument("file")
    validate.add_argument("--direction", choices=sorted(_PARSERS),
                          default="down",
                          help="grammar to check against (default: down)")
    validate.set_defaults(func=cmd_validate)

    render = sub.add_parser(
        "render", help="render a downstream document through an engine")
    render.add_argument("--engine", choices=("text", "html"), default="text")
    render.add_argument("--form", help="customization form file")
    render.add_argument("--forms",
                        help="directory of forms for parent lookups "
                        "(default: $UBI_FORMS_DIR)")
    render.add_argument("--in", dest="infile", required=True,
                        help="downstream document to render")
    render.add_argument("--out", help="write here instead of stdout")
    render.set_defaults(func=cmd_render)

    serve = sub.add_parser("serve", help="run a service on a live channel")
    serve.add_argument("--service", choices=sorted(SERVICES), required=True)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None,
                       help=f"default {DEFAULT_PORT} (tcp) or 8000 (web)")
    serve.add_argument("--forms",
                       help="directory of customization forms "
                       "(default: $UBI_FORMS_DIR)")
    serve.add_argument("--web", action="store_true",
                       help="serve the browser channel instead of raw TCP")
    serve.add_argument("--assets", help="static asset directory for --web")
    serve.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                       help="idle session timeout in seconds")
    serve.add_argument("--sim-rate", type=float, default=1.0,
                       help="simulated seconds per wall second")
    serve.set_defaults(func=cmd_serve)

    demo = sub.add_parser(
        "demo", help="replay a scripted session and print the transcript")
    demo.add_argument("--service", choices=sorted(SERVICES), required=True)
    demo.add_argument("--engine", choices=("text", "html"), default="text")
    demo.add_argument("--detail", default=None,
                      help="detail level passed in the session descriptor "
                      "(the broker understands 'compact')")
    demo.add_argument("--script", required=True,
                      help="file of 'act <ordinal> [payload]' and "
                      "'tick <seconds>' lines")
    demo.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
