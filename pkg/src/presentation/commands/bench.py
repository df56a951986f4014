from pathlib import Path

import click

from src.business.services import bench_mixers
from src.data.repositories import write_rows
from src.data.repositories.reports import BENCH_HEADER, bench_rows, format_csv
from src.presentation.commands.common import echo_config, options_text, parse_int_list


@click.command("bench")
@click.option("--kind", "kinds", type=click.Choice(["ssa", "mha"]), multiple=True,
              help="Token mixer(s) to time; both when omitted.")
@click.option("--k-list", default="256,512", show_default=True, help="Token counts.")
@click.option("--d", type=click.IntRange(min=1), default=64, show_default=True, help="Embedding dim.")
@click.option("--repeats", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def bench_command(kinds, k_list, d, repeats, seed, out):
    """Token-mixer FLOP count and forward wall time: kind,k,d,flops,wall_ns."""
    kinds = kinds or ("ssa", "mha")
    k_values = parse_int_list(k_list, "--k-list")
    echo_config(
        options_text(kinds=",".join(kinds), k_list=",".join(map(str, k_values)), d=d, repeats=repeats, seed=seed)
    )
    rows = bench_rows(bench_mixers(kinds, k_values, d, repeats, seed))
    click.echo(format_csv(BENCH_HEADER, rows))
    if out is not None:
        write_rows(out, BENCH_HEADER, rows)
