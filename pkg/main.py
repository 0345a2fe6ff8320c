import argparse
import sys

from pydantic import BaseModel

from core.errors import BadSpec, BellCertError, InputError, NumericalError
from core.expressions import get_expressions
from core.log import configure_logging, get_logger
from core.settings import settings
from routers.commands import HANDLERS
from services.io_service import dump_json

log = get_logger("CLI")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


# ─── Парсер ───────────────────────────────────────────

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"seed (по умолчанию {settings.seed})")
    common.add_argument("--restarts", type=int, default=None, help="рестарты seesaw")
    common.add_argument("--max-iters", type=int, default=None, help="итераций на рестарт")
    common.add_argument("--tol", type=float, default=None, help="порог прироста цели")
    common.add_argument("--workers", type=int, default=None, help="параллельные рестарты/строки")
    common.add_argument("--out", default=None, help="файл вывода (иначе stdout)")
    common.add_argument("--format", choices=["json", "csv"], default=None, help="json; у sweep по умолчанию csv")
    common.add_argument("--quiet", action="store_true", help="только предупреждения и ошибки")
    return common


def _simulation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", default="optimal_cglmp",
                   choices=["optimal_cglmp", "maximally_entangled", "random_pure", "random_mixed", "file"])
    p.add_argument("--state-file", default=None)
    p.add_argument("--noise", type=float, default=0.0, help="вес шума w ∈ [0, 1]")
    p.add_argument("--noise-family", choices=["white", "random"], default="white")
    p.add_argument("--measurements", choices=["optimal", "random", "file"], default="optimal")
    p.add_argument("--measurement-file", default=None)
    p.add_argument("--shots", default="exact", help="число выборок на (x, y) или 'exact'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellcert",
        description="Невырожденность неравенств Белла и оценки запутанности по статистике",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    expr_help = f"встроенное имя {get_expressions()} или путь к JSON"

    p = sub.add_parser("certify", parents=[common], help="сертификат невырожденности")
    p.add_argument("expr", help=expr_help)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--method", choices=["lemma1", "theorem1"], default="lemma1")

    p = sub.add_parser("tsirelson", parents=[common], help="оценка C(I,d,t)")
    p.add_argument("expr", help=expr_help)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--top", type=int, default=1, help="t — число суммируемых собственных значений")

    p = sub.add_parser("monotonicity", parents=[common], help="сравнение C(I,d,1) и C(I,d−1,1)")
    p.add_argument("expr", help=expr_help)
    p.add_argument("--dim", type=int, default=None)

    p = sub.add_parser("bound", parents=[common], help="оценка когерентной информации по корреляции")
    p.add_argument("correlation", help="JSON корреляции")
    p.add_argument("--expr", default=settings.default_expression, help=expr_help)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--cert", default=None, help="готовый сертификат невырожденности (JSON)")

    p = sub.add_parser("simulate", parents=[common], help="корреляция известного состояния")
    p.add_argument("--expr", default=settings.default_expression, help=expr_help)
    p.add_argument("--dim", type=int, default=None)
    _simulation_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="sweep по шуму (CSV)")
    p.add_argument("--expr", default=settings.default_expression, help=expr_help)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--cert", default=None)
    p.add_argument("--w-grid", default=None, help="список w через запятую")
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--w-max", type=float, default=0.3)
    _simulation_flags(p)

    return parser


# ─── Вывод ────────────────────────────────────────────

OUTPUT_FORMATS = {"sweep": ("csv", "json")}


def resolve_format(args: argparse.Namespace) -> str:
    """Первый формат в OUTPUT_FORMATS идёт по умолчанию; остальным подкомандам только json."""
    allowed = OUTPUT_FORMATS.get(args.command, ("json",))
    fmt = args.format or allowed[0]
    if fmt not in allowed:
        raise BadSpec(f"{args.command} не поддерживает --format {fmt}")
    return fmt


def _emit(payload, out: str | None) -> None:
    if isinstance(payload, str):
        text = payload
    else:
        text = dump_json(payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(settings.log_level, quiet=args.quiet)

    try:
        args.format = resolve_format(args)
        payload = HANDLERS[args.command](args)
    except InputError as e:
        log.error(f"некорректный ввод: {e}")
        return EXIT_INPUT
    except NumericalError as e:
        log.error(f"численный сбой: {e}")
        return EXIT_NUMERICAL
    except BellCertError as e:
        log.error(str(e))
        return EXIT_INPUT
    except (OSError, ValueError) as e:
        log.error(f"некорректный ввод: {e}")
        return EXIT_INPUT
    except Exception as e:
        log.exception(f"внутренний сбой: {e}")
        return EXIT_NUMERICAL

    _emit(payload, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
