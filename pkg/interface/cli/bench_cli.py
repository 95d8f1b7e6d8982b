"""Command-line harness for verification runs and benchmarks"""

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from rich.console import Console
from rich.table import Table

from core.domain.entities.bench import BENCH_KERNELS, BenchConfig, BenchRecord
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.exceptions import CrossKernelError, UsageError
from core.infrastructure.config.constants import (
    APP_NAME,
    APP_VERSION,
    DEFAULT_SEED,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERIFY_FAILED,
    REPORT_FORMATS,
)

logger = logging.getLogger(__name__)

console = Console()

STRATEGY_SWEEP = 'barrett64,montgomery,shoup'


def _int(text: str) -> int:
    return int(text, 0)


def parse_int_list(text: str, count: Optional[int] = None, what: str = 'value') -> List[int]:
    """'1,2,4' -> [1, 2, 4]"""
    try:
        values = [_int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise UsageError(f"Cannot parse {what} list {text!r}")
    if not values or (count is not None and len(values) != count):
        expected = f"{count} comma-separated integers" if count else "integers"
        raise UsageError(f"{what} expects {expected}, got {text!r}")
    return values


def parse_strategies(text: str) -> List[ReductionStrategy]:
    """Comma-separated strategy names; 'all' is the barrett/montgomery/shoup sweep"""
    if text.strip().lower() == 'all':
        text = STRATEGY_SWEEP
    return [ReductionStrategy.from_string(name) for name in text.split(',') if name.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Verify and benchmark low-precision modular arithmetic kernels",
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {APP_VERSION}")

    kernel = parser.add_argument_group('kernel selection')
    kernel.add_argument('--kernel', choices=BENCH_KERNELS, default='ntt3')
    kernel.add_argument('--all', action='store_true', help="every kernel")
    kernel.add_argument('--param-set', default='A', help="A, B, C, D or custom")
    kernel.add_argument('--degree', type=_int, help="ring degree N")
    kernel.add_argument('--logq', type=_int, help="prime width in bits")
    kernel.add_argument('--limbs', type=_int, help="source limbs L")
    kernel.add_argument('--limbs-out', type=_int, help="target limbs L'")
    kernel.add_argument('--rc', help="3-step split R,C")
    kernel.add_argument('--shape', help="matmodmul H,V,W (default 512,256,256)")
    kernel.add_argument('--bp', type=_int, help="chunk width in bits")

    run = parser.add_argument_group('run')
    run.add_argument('--batch', default='1', help="comma-separated batch sizes")
    run.add_argument('--strategy', help="reduction strategy list or 'all'")
    run.add_argument('--use-bat', dest='use_bat', action='store_true', default=True)
    run.add_argument('--no-bat', dest='use_bat', action='store_false')
    run.add_argument('--iters', type=_int, default=5)
    run.add_argument('--warmup', type=_int, default=1)
    run.add_argument('--seed', type=_int, default=DEFAULT_SEED)
    run.add_argument('--verify', action='store_true', help="oracle check only, no timing")
    run.add_argument('--inject-fault', action='store_true', help="flip one output bit before checking")
    run.add_argument('--parallel-verify', action='store_true')
    run.add_argument('--skip-oracle', action='store_true', help="benchmark without output checks")

    out = parser.add_argument_group('output')
    out.add_argument('--output', type=Path)
    out.add_argument('--format', choices=REPORT_FORMATS, default='csv')
    out.add_argument('--log-level', help="DEBUG, INFO, WARNING, ERROR")
    return parser


class BenchCli:
    """Maps parsed arguments onto the verification and benchmark services"""

    def __init__(self, container):
        self.container = container
        self.settings = container.settings()

    def config_from_args(self, args: argparse.Namespace) -> BenchConfig:
        param_set = self.container.param_set_service().load_param_set(
            args.param_set, args.degree, args.logq, args.limbs, args.limbs_out,
        )
        rc: Optional[Tuple[int, int]] = None
        if args.rc:
            rc = tuple(parse_int_list(args.rc, 2, '--rc'))
        shape = tuple(parse_int_list(args.shape, 3, '--shape')) if args.shape else (512, 256, 256)
        return BenchConfig(
            kernel=args.kernel,
            param_set=param_set,
            batch=parse_int_list(args.batch, what='--batch'),
            strategies=parse_strategies(args.strategy or self.settings.default_strategy),
            use_bat=args.use_bat,
            iters=args.iters,
            warmup=args.warmup,
            seed=args.seed,
            bp=args.bp or self.settings.default_bp,
            rc=rc,
            mat_shape=shape,
            check_output=not args.skip_oracle,
            inject_fault=args.inject_fault,
            parallel_verify=args.parallel_verify,
            output=args.output,
            format=args.format,
        )

    def run(self, args: argparse.Namespace) -> int:
        try:
            cfg = self.config_from_args(args)
            if args.verify or args.inject_fault:
                return self.verify(cfg, args.all)
            return self.benchmark(cfg, args.all)
        except CrossKernelError as e:
            console.print(f"[red]error:[/red] {e}")
            logger.error(f"Run aborted: {e}")
            return EXIT_USAGE if isinstance(e, ValueError) else EXIT_VERIFY_FAILED

    def verify(self, cfg: BenchConfig, all_kernels: bool) -> int:
        code, results = self.container.verification_service().run_verify(cfg, all_kernels)

        table = Table(show_header=True, header_style="bold cyan", title="Verification")
        for column in ('kernel', 'strategy', 'batch', 'status', 'first diff', 'expected', 'actual'):
            table.add_column(column)
        for r in results:
            status = "[green]ok[/green]" if r.passed else f"[red]FAIL[/red] {r.message}"
            table.add_row(
                r.kernel, r.strategy, str(r.batch), status,
                '' if r.index is None else str(r.index),
                '' if r.expected is None else str(r.expected),
                '' if r.actual is None else str(r.actual),
            )
        console.print(table)

        if cfg.output is not None:
            path = self.container.report_service().emit_verification(results, cfg.output)
            console.print(f"Verification report written to {path}")
        return code

    def benchmark(self, cfg: BenchConfig, all_kernels: bool) -> int:
        service = self.container.benchmark_service()
        kernels = BENCH_KERNELS if all_kernels else (cfg.kernel,)
        records: List[BenchRecord] = []
        for kernel in kernels:
            records.extend(service.run_benchmark(cfg if kernel == cfg.kernel else cfg.with_kernel(kernel)))

        self.print_records(records)
        path = self.container.report_service().emit_report(records, cfg.format, cfg.output, cfg.seed)
        console.print(f"Report written to {path}")

        if cfg.check_output and not all(r.verified for r in records):
            return EXIT_VERIFY_FAILED
        return EXIT_OK

    @staticmethod
    def print_records(records: Sequence[BenchRecord]) -> None:
        table = Table(show_header=True, header_style="bold cyan", title="Benchmark")
        for column in ('cell', 'batch', 'strategy', 'bat', 'median us', 'kernels/s',
                       'mults', 'perm ops', 'verified'):
            table.add_column(column, justify='left' if column == 'cell' else 'right')
        for r in records:
            table.add_row(
                r.label, str(r.batch), r.strategy, 'yes' if r.use_bat else 'no',
                f"{r.median_us:.1f}", f"{r.throughput_per_s:.1f}",
                str(r.mults), str(r.perm_ops),
                "[green]yes[/green]" if r.verified else "[dim]no[/dim]",
            )
        console.print(table)

