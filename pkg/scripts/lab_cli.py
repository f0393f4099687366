#!/usr/bin/env python3
"""
Command line for the attachment lab.

    python scripts/lab_cli.py generate --model ba --n 1000 --m 2 --seed 7 --out g.txt
    python scripts/lab_cli.py eval --graph g.txt --formula "forall x. !adj(x,x)"
    python scripts/lab_cli.py efgame --a a.txt --b b.txt --k 3 --witness strategy.json
    python scripts/lab_cli.py xp cyclerate --model uniform --m 2 --ngrid 1e3,1e4 --out results/rate

Results go to stdout or files; progress and errors go to stderr.
"""

import functools
import json
import sys
import traceback
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click

from chains import (MartingaleConfig, SlowChainConfig, martingale_increment_check, oscillator_demo,
                    parse_rate, simulate_martingale_ensemble, simulate_slow_chain,
                    stationary_birth_death)
from ef_game import equivalent_k, replay_strategy, spoiler_witness
from experiments import EXPERIMENT_KINDS, ExperimentConfig, ExperimentSuite
from fo_logic import evaluate, parse, quantifier_rank
from generators import POLYA_RULES, ModelConfig, generate, model_constants, sample_polya_point_tree
from graph_io import (convert_graph_file, graph_to_dot, graph_to_json, graph_to_text, read_graph_file,
                      write_dot, write_graph_file)
from lab_config import (DEFAULT_CONFIG_DIR, LabConfigManager, create_experiment_configs,
                        load_model_presets, resolve_model)
from lab_log import LabLog
from neighborhoods import cycle_components, cycle_profile


def handle_errors(func: Callable) -> Callable:
    """Domain errors print one line and exit 1; anything else prints the traceback"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except (ValueError, FileNotFoundError) as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(1)
        except Exception as e:
            click.echo(f"❌ Unexpected error: {e}", err=True)
            click.echo(f"📍 Full traceback: {traceback.format_exc()}", err=True)
            sys.exit(1)
    return wrapper


def _write_json(data: Any, out: Optional[str]):
    text = json.dumps(data, indent=2, ensure_ascii=False)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + '\n', encoding='utf-8')
    else:
        click.echo(text)


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Show detailed progress on stderr')
@click.pass_context
def lab(ctx, verbose):
    """Preferential attachment limit-law lab"""
    ctx.obj = LabLog(verbose=verbose)


# -- graphs --------------------------------------------------------------------

@lab.command(name='generate')
@click.option('--model', default='sequential', show_default=True,
              help='classical, sequential or a preset name (ba, mixed, uniform)')
@click.option('--n', 'n', type=int, required=True)
@click.option('--m', 'm', type=int, default=1, show_default=True)
@click.option('--alpha', type=float, default=None, help='Uniform mixing weight in [0, 1]')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), help='Graph file (.txt, .json or .dot); stdout if omitted')
@click.option('--dot', 'as_dot', is_flag=True, help='Write Graphviz DOT whatever the --out suffix')
@click.pass_obj
@handle_errors
def generate_cmd(log, model, n, m, alpha, seed, out, as_dot):
    """Sample a preferential attachment multigraph"""
    explicit = {'m'} | ({'alpha'} if alpha is not None else set())
    settings = resolve_model({'model': model, 'alpha': alpha if alpha is not None else 0.0, 'm': m},
                             load_model_presets(), explicit)
    cfg = ModelConfig(kind=settings['model'], n=n, m=settings['m'], alpha=settings['alpha'], seed=seed)
    log.log(f"🔧 Generating {cfg.kind} graph: n={n} m={cfg.m} alpha={cfg.alpha} seed={seed}", 'generate')
    g = generate(cfg)
    log.log(f"✅ Generated {g.n} vertices, {g.edge_count} edges", 'generate')

    if not out:
        click.echo(graph_to_dot(g) if as_dot else graph_to_text(g), nl=False)
    elif as_dot or out.endswith('.dot'):
        write_dot(g, out)
    elif out.endswith('.json'):
        _write_json(graph_to_json(g), out)
    else:
        write_graph_file(g, out)



@lab.command()
@click.argument('source', type=click.Path(exists=True, dir_okay=False))
@click.argument('target', type=click.Path(dir_okay=False))
def convert(source, target):
    """Convert a graph file between text, JSON and DOT"""
    sys.exit(0 if convert_graph_file(source, target) else 1)


@lab.command(name='eval')
@click.option('--graph', 'graph', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--formula', 'formula_text', required=True, help='Formula text, e.g. "forall x. !adj(x,x)"')
@click.option('--assign', multiple=True, help='Free-variable assignment var=vertex (repeatable)')
@handle_errors
def eval_cmd(graph, formula_text, assign):
    """Evaluate a first-order formula on a graph file; prints true or false"""
    assignment: Dict[str, int] = {}
    for item in assign:
        var, _, value = item.partition('=')
        if not value:
            raise click.BadParameter(f"expected var=vertex, got {item!r}", param_hint='--assign')
        assignment[var.strip()] = int(value)
    formula = parse(formula_text, allow_free=bool(assignment))
    click.echo('true' if evaluate(read_graph_file(graph), formula, assignment) else 'false')


@lab.command()
@click.option('--formula', 'formula_text', required=True)
@click.option('--allow-free', is_flag=True, help='Accept formulas with free variables')
@handle_errors
def qr(formula_text, allow_free):
    """Quantifier rank of a formula"""
    formula = parse(formula_text, allow_free=allow_free)
    click.echo(str(quantifier_rank(formula)))


@lab.command()
@click.option('--a', 'graph_a', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--b', 'graph_b', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--k', 'k', type=int, required=True, help='Number of rounds')
@click.option('--workers', type=int, default=1, show_default=True)
@click.option('--witness', type=click.Path(dir_okay=False), help='Write the Spoiler strategy as JSON')
@click.pass_obj
@handle_errors
def efgame(log, graph_a, graph_b, k, workers, witness):
    """Decide A ≡_k B; prints 'equivalent' or 'distinguishable'"""
    A, B = read_graph_file(graph_a), read_graph_file(graph_b)
    log.log(f"🎲 EF game: |A|={A.n} |B|={B.n} k={k}", 'efgame')
    same = equivalent_k(A, B, k, workers=workers)
    log.log("✅ Game solved", 'efgame')
    click.echo('equivalent' if same else 'distinguishable')
    if witness and not same:
        strategy = spoiler_witness(A, B, k)
        if not replay_strategy(A, B, strategy, k):
            raise RuntimeError("spoiler strategy failed its replay check")
        _write_json({'rounds': k, 'principal_line': strategy.principal_line(),
                     'strategy': strategy.to_dict()}, witness)
        log.log(f"💾 Spoiler strategy written to {witness}")


@lab.command()
@click.option('--graph', 'graph', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--r', 'r', type=int, default=2, show_default=True, help='Neighbourhood radius')
@click.option('--profile', 'profile_out', type=click.Path(dir_okay=False),
              help='Write the cycle profile as JSON')
@click.option('--census', type=int, default=None,
              help='Also count vertices with acyclic r-balls (0 = all vertices)')
@click.option('--seed', type=int, default=0, show_default=True)
@click.pass_obj
@handle_errors
def cycles(log, graph, r, profile_out, census, seed):
    """Cycle components of length <= 2r and their canonical classes"""
    g = read_graph_file(graph)
    components = cycle_components(g, r)
    rows = [(min(c.vertices), len(c.cycles), c.kind, c.size) for c in components]
    log.print_table(f"Cycle components (r={r})", ('first vertex', 'cycles', 'kind', 'ball size'), rows)
    profile = cycle_profile(g, r, census_samples=census, seed=seed)
    click.echo(f"components={profile.total} multicycles={profile.multicycles} classes={len(profile.counts)}")
    if profile.acyclic_vertices is not None:
        click.echo(f"acyclic_vertices={profile.acyclic_vertices}")
    if profile_out:
        _write_json(profile.to_json(), profile_out)


@lab.command()
@click.option('--alpha', type=float, default=0.0, show_default=True)
@click.option('--m', 'm', type=int, default=1, show_default=True)
@click.option('--r', 'r', type=int, default=2, show_default=True, help='Tree depth')
@click.option('--x0', type=float, default=None, help='Root position (random when omitted)')
@click.option('--rule', type=click.Choice(POLYA_RULES), default='literal', show_default=True,
              help='literal: m left children everywhere; parent-edge: m - 1 below right edges')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False))
@handle_errors
def tree(alpha, m, r, x0, rule, seed, out):
    """Sample a depth-r Pólya-point tree as JSON"""
    sample = sample_polya_point_tree(model_constants(alpha), m, r, x0=x0, seed=seed, rule=rule)
    _write_json(sample.to_dict(), out)


# -- chains --------------------------------------------------------------------

@lab.group()
def chain():
    """Inhomogeneous Markov chains"""


@chain.command()
@click.option('--rho', default='1', show_default=True, help='Rate ρ(n): c, c*n^-a or c*(1+1/n)')
@click.option('--tau', default='1', show_default=True, help='Rate τ(n), same forms')
@click.option('--steps', type=int, default=100000, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--suffix', type=float, default=0.5, show_default=True, help='Fraction of steps counted')
@click.option('--json', 'as_json', is_flag=True, help='Print the full report as JSON')
@click.option('--out', type=click.Path(dir_okay=False), help='Write the JSON report to a file')
@click.pass_obj
@handle_errors
def slow(log, rho, tau, steps, seed, suffix, as_json, out):
    """Occupancy of the slow birth-death chain against its limit law"""
    cfg = SlowChainConfig(rho=parse_rate(rho), tau=parse_rate(tau), steps=steps, seed=seed,
                          suffix_fraction=suffix)
    log.log(f"⛓️  Slow chain: rho={cfg.rho} tau={cfg.tau} steps={steps}", 'slow')
    occupancy = simulate_slow_chain(cfg)
    log.log("✅ Chain simulated", 'slow')
    report = {'occupancy': {str(k): v for k, v in occupancy.frequencies.items()}}
    if cfg.rho.limit > 0 and cfg.tau.limit > 0:
        stationary = stationary_birth_death(cfg.rho.limit, cfg.tau.limit)
        report['lambda'] = stationary.lam
        report['tv_to_stationary'] = occupancy.tv_to(stationary.numeric)
        report['stationary'] = stationary.numeric.tolist()
    if out:
        _write_json(report, out)
    if as_json:
        _write_json(report, None)
    elif not out:
        for state, frequency in sorted(occupancy.frequencies.items()):
            click.echo(f"state {state}: {frequency:.6f}")
        if 'lambda' in report:
            click.echo(f"lambda={report['lambda']:.6g} tv_to_stationary={report['tv_to_stationary']:.6g}")



@chain.command()
@click.option('--p', 'p', default='0.5', show_default=True, help='Rate p(n): c, c*n^-a or c*(1+1/n)')
@click.option('--K', 'K', type=int, default=1, show_default=True)
@click.option('--m', 'm', type=int, default=1, show_default=True)
@click.option('--steps', type=int, default=10000, show_default=True)
@click.option('--replicas', type=int, default=100, show_default=True)
@click.option('--n0', type=int, default=1, show_default=True, help='Starting index')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False))
@click.pass_obj
@handle_errors
def martingale(log, p, K, m, steps, replicas, n0, seed, out):
    """Mean trajectory of the ±1/−m counter and its increment check"""
    cfg = MartingaleConfig(p=parse_rate(p), K=K, m=m, steps=steps, seed=seed, n0=n0)
    log.log(f"⛓️  Martingale counter: p={cfg.p} K={K} m={m} steps={steps} x {replicas}", 'martingale')
    ensemble, states, increments = simulate_martingale_ensemble(cfg, replicas, record_increments=True)
    log.log("✅ Ensemble simulated", 'martingale')
    _write_json({
        'n': ensemble.n.tolist(),
        'mean': ensemble.mean.tolist(),
        'stderr': ensemble.stderr.tolist(),
        'increment_check': martingale_increment_check(states, increments),
    }, out)


@lab.command()
@click.option('--steps', type=int, default=128, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False))
@handle_errors
def oscillator(steps, seed, out):
    """Exact two-state chain whose law oscillates while P_n -> I"""
    _write_json(oscillator_demo(steps, seed).to_dict(), out)


@lab.command()
@click.option('--rho', type=float, default=1.0, show_default=True)
@click.option('--tau', type=float, default=1.0, show_default=True)
@click.option('--cutoff', type=int, default=None, help='Largest state (automatic when omitted)')
@click.option('--out', type=click.Path(dir_okay=False))
@handle_errors
def stationary(rho, tau, cutoff, out):
    """Stationary law of the limit slow chain, numeric and closed form"""
    _write_json(stationary_birth_death(rho, tau, cutoff=cutoff).to_dict(), out)


# -- experiments ---------------------------------------------------------------

def experiment_options(func: Callable) -> Callable:
    options = [
        click.option('--model', default=None, help='classical, sequential or a preset (ba, mixed, uniform)'),
        click.option('--alpha', type=float, default=None),
        click.option('--m', 'm', type=int, default=None),
        click.option('--ngrid', default=None, help='Comma-separated sizes, e.g. 1e3,1e4,1e5'),
        click.option('--replicas', type=int, default=None),
        click.option('--seed', type=int, default=None),
        click.option('--workers', type=int, default=None),
        click.option('--out', type=click.Path(dir_okay=False), default=None,
                     help='Output path stem; writes .csv and .json'),
        click.option('--config', 'config_file', type=click.Path(exists=True, dir_okay=False), default=None,
                     help='key=value (or YAML) file mirroring these flags'),
        click.option('--config-dir', type=click.Path(file_okay=False), default=str(DEFAULT_CONFIG_DIR),
                     show_default=True),
        click.option('--param', 'extra', multiple=True, help='Experiment parameter key=value (repeatable)'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def run_experiment(log: LabLog, kind: str, flags: Dict[str, Any], specific: Dict[str, Any]):
    config_file = flags.pop('config_file')
    manager = LabConfigManager(flags.pop('config_dir'), log=log)
    overrides = dict(flags)
    for item in overrides.pop('extra', ()):
        key, _, value = item.partition('=')
        overrides[key.strip()] = value
    overrides.update({k: v for k, v in specific.items() if v is not None})
    settings = manager.settings_for(kind, config_file=config_file, overrides=overrides)
    cfg = ExperimentConfig.from_settings(settings)

    suite = ExperimentSuite(log)
    table = suite.run(kind, cfg)
    suite.print_summary(table)
    out = settings.get('out')
    if out:
        suite.save_results(table, out)
    else:
        click.echo(table.to_csv(), nl=False)


@lab.group()
def xp():
    """Monte Carlo experiments (CSV with header n,stat,estimate,stderr,replicas)"""


@xp.command()
@experiment_options
@click.option('--sentence', default=None, help='First-order sentence')
@click.option('--locality-radius', type=int, default=None, help='Evaluate on sampled r-balls (approximate)')
@click.option('--locality-samples', type=int, default=None)
@click.pass_obj
@handle_errors
def sentence(log, sentence, locality_radius, locality_samples, **flags):
    """P(G_n ⊨ sentence) per size"""
    run_experiment(log, 'sentence', flags, {'sentence': sentence, 'locality_radius': locality_radius,
                                            'locality_samples': locality_samples})


@xp.command()
@experiment_options
@click.option('--l', 'l', type=int, default=None, help='Cycle length')
@click.pass_obj
@handle_errors
def cyclerate(log, l, **flags):
    """Per-step rate of new cycles of length l"""
    run_experiment(log, 'cyclerate', flags, {'l': l})


@xp.command()
@experiment_options
@click.option('--ks', default=None, help='Comma-separated vertices')
@click.pass_obj
@handle_errors
def degrees(log, ks, **flags):
    """Mean and variance of D_n(k)"""
    run_experiment(log, 'degrees', flags, {'ks': ks})


@xp.command()
@experiment_options
@click.option('--r', 'r', type=int, default=None, help='Ball radius')
@click.option('--samples', type=int, default=None, help='Roots per replica and size')
@click.option('--tree-rule', type=click.Choice(POLYA_RULES), default=None,
              help='Left-child rule for the limit trees')
@click.pass_obj
@handle_errors
def locallimit(log, r, samples, tree_rule, **flags):
    """TV distance to the Pólya-point tree neighbourhood law"""
    run_experiment(log, 'locallimit', flags, {'r': r, 'samples': samples, 'tree_rule': tree_rule})


@xp.command()
@experiment_options
@click.option('--r', 'r', type=int, default=None, help='Neighbourhood radius')
@click.pass_obj
@handle_errors
def profile(log, r, **flags):
    """Census of cycle components per canonical class"""
    run_experiment(log, 'profile', flags, {'r': r})


# -- housekeeping --------------------------------------------------------------

@lab.command()
@click.option('--config-dir', type=click.Path(file_okay=False), default=str(DEFAULT_CONFIG_DIR),
              show_default=True)
@click.pass_obj
@handle_errors
def configs(log, config_dir):
    """Write the default experiment YAML files and index"""
    create_experiment_configs(config_dir, log=log)
    log.log(f"Configuration system ready: {', '.join(EXPERIMENT_KINDS)}")


@lab.command(name='check-prereqs')
@click.pass_obj
def check_prereqs(log):
    """Check that the numerical and parsing dependencies import"""
    log.log("🔍 Checking prerequisites...")
    missing = []
    for module, hint in (('numpy', 'numpy'), ('scipy', 'scipy'), ('networkx', 'networkx'),
                         ('lark', 'lark'), ('yaml', 'pyyaml'), ('jinja2', 'jinja2'), ('rich', 'rich')):
        try:
            __import__(module)
            log.log(f"   ✅ {module}")
        except ImportError:
            log.log(f"   ❌ {module} - run: pip install {hint}")
            missing.append(module)
    if not DEFAULT_CONFIG_DIR.exists():
        log.warning(f"{DEFAULT_CONFIG_DIR} missing - run: python scripts/lab_cli.py configs")
    sys.exit(1 if missing else 0)


if __name__ == '__main__':
    lab()
