# cli_runner.py
"""Linha de comando do laboratório: um subcomando por experimento.

Uso:
    python cli_runner.py derive --n 3 --alpha 1 --beta 3
    python cli_runner.py cover --k 0 --format csv --output resultados/cover.csv
    python cli_runner.py levels --phi seed --derivative 3 --k-range 20,60
    python cli_runner.py sharpness --config experimentos/sharpness.env

Parâmetros vêm de um arquivo `chave = valor` (--config) e das flags, que têm
precedência. Todo artefato traz o checksum da configuração resolvida.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
from dotenv import dotenv_values

import settings
from curve_geometry import (
    CallableFn,
    OscSmoothFn,
    PolynomialFn,
    SimpleCurve,
    affine_weight,
    jacobian_constant,
    offspring_jacobian,
    perturbed_monomial,
    rolle_determinant,
    sample_simplex_points,
    torsion,
    torsion_constant,
    vandermonde_factor,
)
from errors import ConfigError, LabError
from extended_real import ExtendedReal
from level_set_cover import build_cover, cover_rows, growth_exponent, level_rows, verify_first_variation
from osc_symbolic import leading_exponent, nth_derivative, seed, to_terms_text
from restriction_experiments import (
    DEEP_DELTA_GRID,
    DEFAULT_DELTA_GRID,
    ExponentPair,
    dyadic_restriction_sum,
    knapp_draws,
    knapp_membership,
    knapp_norm_scale,
    knapp_profile,
    knapp_rhs_exponent,
    sharpness_test,
)

logger = logging.getLogger(__name__)


# ============ Parâmetros ============
def _float_list(value: str) -> list[float]:
    return [float(x) for x in str(value).split(',') if x.strip()]


def _int_list(value: str) -> list[int]:
    return [int(x) for x in str(value).split(',') if x.strip()]


PARAM_TYPES: dict[str, Callable] = {
    'n': int,
    'alpha': float,
    'beta': float,
    'rho': float,
    'eps': float,
    'p': float,
    'q': float,
    'delta': float,
    'delta_grid': _float_list,
    'grid': str,
    'k': int,
    'r': float,
    'k_range': _int_list,
    'resolution': float,
    'seed': int,
    'phi': str,
    'm': float,
    'derivative': int,
    'coefficients': _float_list,
    'domain': _float_list,
    'samples': int,
    'draws': int,
    'level': float,
    'amplitude': float,
    'smoothness': float,
}

TOPICS = {
    'derive': 'symbolic derivatives',
    'torsion': 'torsion and affine weight',
    'cover': 'level-set cover',
    'variation': 'level-set cover',
    'levels': 'level-set cover / dyadic decomposition',
    'knapp': 'knapp example',
    'sharpness': 'knapp example / integral asymptotics',
    'dyadic-sum': 'dyadic decomposition',
    'jacobian': 'offspring jacobian',
}

# obrigatórios e padrões por comando
COMMANDS: dict[str, tuple[tuple[str, ...], dict]] = {
    'derive': (('n', 'alpha', 'beta'), {}),
    'torsion': (('n',), {'phi': 'seed', 'alpha': '1', 'beta': '2', 'domain': '0.05,1', 'samples': '100', 'eps': '0'}),
    'cover': ((), {'phi': 'sine', 'm': '1', 'alpha': '1', 'beta': '2', 'derivative': '0', 'domain': '0,1', 'resolution': '1e-3'}),
    'variation': (('r',), {'phi': 'sine', 'm': '20', 'alpha': '1', 'beta': '2', 'derivative': '0', 'domain': '0,1', 'resolution': '1e-4'}),
    'levels': (('k_range',), {'phi': 'sine', 'm': '1', 'alpha': '1', 'beta': '2', 'derivative': '0', 'domain': '0,1', 'resolution': '1e-3'}),
    'knapp': (('n', 'alpha', 'delta'), {'beta': '2', 'draws': '1000'}),
    'sharpness': (('n', 'alpha', 'beta'), {'grid': 'default'}),
    'dyadic-sum': (('n', 'alpha', 'beta', 'p', 'q'), {'eps': '0', 'resolution': '1e-3', 'domain': '0,1'}),
    'jacobian': (('n',), {'samples': '10000', 'level': '0.75', 'amplitude': '0.2', 'domain': '0,2'}),
}

RANDOM_COMMANDS = {'torsion', 'knapp', 'jacobian'}


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    output: Path | None = None
    format: str = 'csv'

    def output_path(self) -> Path:
        return self.output or Path(settings.OUTPUT_DIR) / f"{self.command}.{self.format}"


def normalize_key(key: str) -> str:
    return key.strip().lower().replace('-', '_')


def load_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Arquivo `chave = valor` (mesmo formato do .env)"""
    if not Path(path).is_file():
        raise ConfigError([f"arquivo de configuração '{path}' não encontrado"])
    return {normalize_key(k): v for k, v in dotenv_values(path).items() if v is not None}


def validate_params(command: str, raw: dict[str, str]) -> tuple[dict, list[str]]:
    """Converte e valida os parâmetros; devolve (params, erros)"""
    errors = []
    if command not in COMMANDS:
        return {}, [f"comando '{command}' desconhecido"]
    required, defaults = COMMANDS[command]
    merged = {**defaults, **{normalize_key(k): v for k, v in raw.items() if v is not None}}
    if command in RANDOM_COMMANDS:
        merged.setdefault('seed', str(settings.DEFAULT_SEED))

    params = {}
    for key, value in merged.items():
        if key not in PARAM_TYPES:
            errors.append(f"parâmetro '{key}' desconhecido")
            continue
        try:
            params[key] = PARAM_TYPES[key](value)
        except (TypeError, ValueError):
            errors.append(f"parâmetro '{key}' inválido: {value!r}")

    for key in required:
        if key not in merged:
            errors.append(f"parâmetro obrigatório '{key}' ausente")
    if errors:
        return params, errors

    n = params.get('n')
    if n is not None and not 2 <= n <= 8:
        errors.append("n deve estar entre 2 e 8")
    for key in ('alpha', 'beta', 'resolution', 'delta', 'm'):
        if key in params and not params[key] > 0:
            errors.append(f"{key} deve ser positivo")
    if 'delta' in params and not params['delta'] <= 0.5:
        errors.append("delta deve estar em (0, 0.5]")
    for key in ('p', 'q'):
        if key in params and params[key] < 1:
            errors.append(f"{key} deve ser >= 1")
    for key in ('samples', 'draws'):
        if key in params and params[key] < 1:
            errors.append(f"{key} deve ser >= 1")
    if 'derivative' in params and params['derivative'] < 0:
        errors.append("derivative deve ser >= 0")
    if 'domain' in params:
        dom = params['domain']
        if len(dom) != 2 or not dom[0] < dom[1]:
            errors.append("domain deve ser 'a,b' com a < b")
    if 'phi' in params and params['phi'] not in ('sine', 'seed', 'polynomial'):
        errors.append("phi deve ser sine, seed ou polynomial")
    if params.get('phi') == 'polynomial' and not params.get('coefficients'):
        errors.append("phi polynomial exige coefficients")
    if command == 'cover' and ('k' in params) == ('r' in params):
        errors.append("cover exige exatamente um de k ou r")
    if 'r' in params and not params['r'] > 0:
        errors.append("r deve ser positivo")
    if 'k_range' in params:
        kr = params['k_range']
        if len(kr) != 2 or kr[0] > kr[1]:
            errors.append("k_range deve ser 'k_lo,k_hi' com k_lo <= k_hi")
    if 'grid' in params and params['grid'] not in ('default', 'deep'):
        errors.append("grid deve ser default ou deep")
    if 'delta_grid' in params:
        grid = params['delta_grid']
        if len(grid) < 2 or any(not 0 < d <= 0.3 for d in grid):
            errors.append("delta_grid precisa de >= 2 pontos em (0, 0.3]")
    if command in ('sharpness',) and params.get('beta', 0) <= params.get('alpha', 0):
        errors.append("sharpness exige beta > alpha")
    if 'smoothness' in params and n is not None and not params['smoothness'] > n:
        errors.append("smoothness deve exceder n")
    return params, errors


def config_checksum(command: str, params: dict) -> str:
    canonical = json.dumps({'command': command, 'params': params}, sort_keys=True)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


# ============ Construção de phi ============
def sine_fn(m: float) -> CallableFn:
    """phi(t) = sin(2 pi m t)"""
    w = 2 * math.pi * m
    return CallableFn(lambda k, t: w ** k * np.sin(w * t + k * math.pi / 2))


def build_phi(params: dict):
    kind = params['phi']
    if kind == 'sine':
        return sine_fn(params['m'])
    if kind == 'polynomial':
        return PolynomialFn(params['coefficients'])
    return OscSmoothFn(nth_derivative(seed(params['alpha'], params['beta']), params.get('derivative', 0)))


# ============ Comandos ============
def run_derive(params: dict, rng) -> tuple[list[dict], dict]:
    f = nth_derivative(seed(params['alpha'], params['beta']), params['n'])
    rows = []
    for poly, kind in ((f.P, 'sin'), (f.Q, 'cos')):
        for c, e in poly.terms:
            rows.append({'kind': kind, 'coefficient': c, 'a': e.a, 'b': e.b, 'c': e.c,
                         'exponent': e.value(f.alpha, f.beta)})
    lead = leading_exponent(f)
    summary = {
        'terms': len(rows),
        'leading_exponent': [lead.a, lead.b, lead.c],
        'degree': lead.value(f.alpha, f.beta),
        'terms_text': to_terms_text(f),
    }
    logger.info(f"derivada de ordem {params['n']}: {len(rows)} termos, expoente líder {summary['leading_exponent']}")
    return rows, summary


def _curve(params: dict) -> SimpleCurve:
    return SimpleCurve(params['n'], build_phi(params), tuple(params['domain']))


def run_torsion(params: dict, rng) -> tuple[list[dict], dict]:
    curve = _curve(params)
    phi_n = curve.phi.derivative(curve.n)
    K = torsion_constant(curve.n)
    a, b = curve.domain
    rows = []
    for t in np.sort(rng.uniform(a, b, params['samples'])):
        tau = torsion(curve, t)
        rows.append({'t': t, 'torsion': tau, 'K_phi_n': K * phi_n.deriv(0, t),
                     'weight': affine_weight(curve, t, params['eps'])})
    return rows, {'K_n': K, 'samples': len(rows)}


def run_cover(params: dict, rng) -> tuple[list[dict], dict]:
    phi = build_phi(params)
    r = params['r'] if 'r' in params else 2.0 ** (-params['k'])
    cover = build_cover(phi, tuple(params['domain']), r, params['resolution'])
    logger.info(f"cobertura no nível r={r}: N={cover.count}")
    return cover_rows(cover, params.get('k')), {'r': r, 'N': cover.count, 'coarse_pairs': cover.coarse_pairs}


def run_levels(params: dict, rng) -> tuple[list[dict], dict]:
    report = growth_exponent(build_phi(params), tuple(params['domain']), tuple(params['k_range']), params['resolution'])
    return level_rows(report.levels), {'slope': report.slope, 'gaps': report.gaps}


def run_variation(params: dict, rng) -> tuple[list[dict], dict]:
    report = verify_first_variation(build_phi(params), tuple(params['domain']), params['r'], params['resolution'])
    row = {
        'r': report.r, 'N': report.N, 'N_prime': report.N_prime, 'level_prime': report.level_prime,
        'applicable': report.applicable, 'holds': report.holds,
        'raw_N': report.raw_N, 'raw_N_prime': report.raw_N_prime,
    }
    return [row], dict(row)


def run_knapp(params: dict, rng) -> tuple[list[dict], dict]:
    n, alpha, delta = params['n'], params['alpha'], params['delta']
    prof = knapp_profile(n, alpha, delta)
    curve = SimpleCurve(n, OscSmoothFn(seed(alpha, params['beta'])), (0.0, 1.0))
    draws = knapp_draws(prof, params['draws'], rng)
    members = [knapp_membership(curve, prof, float(t)) for t in draws]
    summary = {
        'delta': delta,
        'draws': len(members),
        'all_members': all(members),
        'scales': [*prof.poly_scales, prof.last_scale],
    }
    if 'p' in params:
        pair = ExponentPair(params['p'], params.get('q', 1.0), n)
        ex = knapp_rhs_exponent(prof, pair)
        summary.update({'poly_exp': ex.poly_exp, 'exp_coeff': ex.exp_coeff, 'p_is_one': ex.degenerate,
                        'norm_scale': knapp_norm_scale(prof, pair)})
    rows = [{'t': float(t), 'member': m} for t, m in zip(draws, members)]
    logger.info(f"knapp delta={delta}: {sum(members)}/{len(members)} pontos na caixa")
    return rows, summary


def run_sharpness(params: dict, rng) -> tuple[list[dict], dict]:
    if 'delta_grid' in params:
        grid = params['delta_grid']
    else:
        grid = DEEP_DELTA_GRID if params['grid'] == 'deep' else DEFAULT_DELTA_GRID
    report = sharpness_test(params['n'], params['alpha'], params['beta'], grid)
    summary = {
        'rho': report.rho,
        'ratio_slope': report.ratio_slope,
        'predicted_slope': report.predicted_slope,
        'verdict': report.verdict,
        'prediction': report.prediction,
        'J_values': report.J_values,
    }
    return report.rows(), summary


def run_dyadic_sum(params: dict, rng) -> tuple[list[dict], dict]:
    n = params['n']
    phi_n = OscSmoothFn(nth_derivative(seed(params['alpha'], params['beta']), n))
    pair = ExponentPair(params['p'], params['q'], n, params['eps'])
    k_range = tuple(params['k_range']) if 'k_range' in params else None
    report = dyadic_restriction_sum(
        phi_n, n, pair, k_range, params['resolution'], tuple(params['domain']), params.get('smoothness'),
    )
    summary = {
        'k0': report.k0,
        'tail_ratio': report.tail_ratio,
        'verdict': report.verdict,
        'condition_limit': report.condition.holds_limit,
        'condition_finite': report.condition.holds_finite,
        'gaps': report.gaps,
        'on_endline': pair.on_endline,
        'in_open_range': pair.in_open_range,
    }
    return report.rows(), summary


def run_jacobian(params: dict, rng) -> tuple[list[dict], dict]:
    n = params['n']
    curve = SimpleCurve(n, perturbed_monomial(n, params['level'], params['amplitude']), tuple(params['domain']))
    C_n = jacobian_constant(n)
    rows = []
    for p in sample_simplex_points(curve, params['samples'], rng):
        det = rolle_determinant(curve, p)
        v = vandermonde_factor(p.h)
        J = offspring_jacobian(curve, p)
        row = {'t': p.t, **{f"h{j + 2}": h for j, h in enumerate(p.h)}}
        row.update({'det': det, 'v': v, 'ratio': abs(det) / v if v else None, 'J': J, 'bound': C_n * v})
        rows.append(row)
    ratios = [r['ratio'] for r in rows if r['ratio'] is not None]
    summary = {
        'C_n': C_n,
        'ratio_min': min(ratios) if ratios else None,
        'ratio_max': max(ratios) if ratios else None,
        'bound_holds': all(r['J'] >= r['bound'] * (1 - 1e-9) for r in rows),
    }
    return rows, summary


RUNNERS = {
    'derive': run_derive,
    'torsion': run_torsion,
    'cover': run_cover,
    'variation': run_variation,
    'levels': run_levels,
    'knapp': run_knapp,
    'sharpness': run_sharpness,
    'dyadic-sum': run_dyadic_sum,
    'jacobian': run_jacobian,
}


# ============ Artefatos ============
def _json_default(obj):
    if isinstance(obj, ExtendedReal):
        return obj.to_json()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"tipo não serializável: {type(obj).__name__}")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(config: ExperimentConfig, checksum: str, rows: list[dict]) -> str:
    buffer = io.StringIO()
    buffer.write(f"# checksum = {checksum}\n")
    buffer.write(f"# topic = {TOPICS[config.command]}\n")
    buffer.write(f"# command = {config.command}\n")
    for key in sorted(config.params):
        buffer.write(f"# {key} = {json.dumps(config.params[key])}\n")
    pd.DataFrame(rows).to_csv(buffer, index=False, lineterminator='\n')
    return buffer.getvalue()


def render_json(config: ExperimentConfig, checksum: str, rows: list[dict], summary: dict) -> str:
    payload = {
        'config': {'command': config.command, 'params': config.params, 'checksum': checksum,
                   'topic': TOPICS[config.command]},
        'summary': summary,
        'rows': rows,
    }
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + '\n'


def run(config: ExperimentConfig) -> int:
    """Executa o experimento e grava o artefato; devolve o status de saída"""
    try:
        params, errors = validate_params(config.command, config.params)
        if errors:
            raise ConfigError(errors)
        if config.format not in ('csv', 'json'):
            raise ConfigError([f"formato '{config.format}' inválido (csv ou json)"])
        config.params = params
        checksum = config_checksum(config.command, params)
        rng = np.random.default_rng(params.get('seed', settings.DEFAULT_SEED))
        rows, summary = RUNNERS[config.command](params, rng)

        path = config.output_path()
        if config.format == 'json':
            _atomic_write(path, render_json(config, checksum, rows, summary))
        else:
            _atomic_write(path, render_csv(config, checksum, rows))
        logger.info(f"{config.command}: {len(rows)} linhas gravadas em {path}")
        return 0
    except ConfigError as e:
        logger.error(f"configuração inválida: {e}")
        print(f"erro de configuração: {e}", file=sys.stderr)
        return 2
    except LabError as e:
        logger.exception(f"falha em {e.operation}")
        print(f"erro em {e.operation}: {e}", file=sys.stderr)
        return 1


# ============ argparse ============
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Laboratório de restrição de Fourier em curvas oscilantes.')
    parser.add_argument('--log-level', default=None, help='nível de logging (padrão: LAB_LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, help=TOPICS[name])
        cmd.add_argument('--config', default=None, help='arquivo chave = valor')
        cmd.add_argument('--output', default=None)
        cmd.add_argument('--format', default='csv', choices=('csv', 'json'))
        for key in PARAM_TYPES:
            cmd.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    return parser


def parse_config(argv: list[str] | None = None) -> tuple[ExperimentConfig, str | None]:
    args = build_parser().parse_args(argv)
    raw: dict[str, str] = {}
    if args.config:
        raw.update(load_config_file(args.config))
    for key in PARAM_TYPES:
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    output = Path(args.output) if args.output else None
    return ExperimentConfig(args.command, raw, output, args.format), args.log_level


def main(argv: list[str] | None = None) -> int:
    try:
        config, log_level = parse_config(argv)
    except ConfigError as e:
        print(f"erro de configuração: {e}", file=sys.stderr)
        return 2
    settings.configure_logging(log_level)
    return run(config)


if __name__ == '__main__':
    sys.exit(main())
