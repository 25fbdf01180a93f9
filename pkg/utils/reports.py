"""Plot-ready CSV files and JSON reports written by the commands."""
import json
import math
import os

import numpy as np

from utils.helpers import mhz_to_rad_ns, rad_ns_to_mhz

_FMT = '%.12g'


def _savetxt(path, header, columns):
    data = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    np.savetxt(path, data, fmt=_FMT, delimiter=',', header=header, comments='')
    return path


def write_pulse_csv(path, times, values, prefix='u'):
    """`t_ns,u_1,...` (pixels) or `t_ns,s_1,...` (subpixels), amplitudes in MHz."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    header = ','.join(['t_ns'] + [f'{prefix}_{k + 1}' for k in range(values.shape[1])])
    return _savetxt(path, header, [times] + [rad_ns_to_mhz(values[:, k]) for k in range(values.shape[1])])


def read_pulse_csv(path):
    """(times in ns, amplitudes in rad/ns) from a pulse CSV."""
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    return data[:, 0], mhz_to_rad_ns(data[:, 1:])


def write_photon_csv(path, report, fitted=False):
    branches = report.fitted_branches if fitted else report.branches
    by_label = {series.label: series.photon_number for series in branches}
    return _savetxt(path, 't_ns,n_ground,n_excited', [report.times, by_label['ground'], by_label['excited']])


def write_history_csv(path, history):
    rows = [[r.iteration, r.phi, r.phi0, r.phi_p, r.grad_inf_norm, r.step_len, r.rk_steps] for r in history]
    columns = list(zip(*rows)) if rows else [[] for _ in range(7)]
    return _savetxt(path, 'iter,phi,phi0,phi_p,grad_inf_norm,step_len,rk_steps', columns)


def write_benchmark_csv(path, result):
    rows = result.rows
    return _savetxt(path, 'd,t_expm_ms,t_rk_ms,n_rk,trace_dist',
                    [[r.dim for r in rows], [r.t_expm_ms for r in rows], [r.t_rk_ms for r in rows],
                     [r.n_rk for r in rows], [r.trace_dist for r in rows]])


def write_sweep_csv(path, result):
    points = result.points
    return _savetxt(path, 'p_norm,horizon_ns,final_ground,final_excited,failed,stalled',
                    [[p.p_norm for p in points], [p.horizon for p in points], [p.final_ground for p in points],
                     [p.final_excited for p in points], [int(p.failed) for p in points],
                     [int(p.stalled) for p in points]])


def _clean(value):
    # JSON has no NaN/inf
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def report_to_dict(report):
    scenario = report.scenario
    return {
        'mode': report.mode.value if report.mode else 'simulate',
        'p_norm': scenario.p_norm,
        'horizon_ns': scenario.horizon,
        'fock_dim': scenario.model.fock_dim,
        'eps_one_photon_mhz': rad_ns_to_mhz(report.eps_one_photon),
        'calibration_method': report.calibration_method,
        'phi0': report.phi0,
        'phi_p': report.phi_p,
        'final_photons': report.final_photons,
        'max_photons': report.max_photons,
        'fitted_final_photons': {s.label: s.final_photon for s in report.fitted_branches},
        'truncation_leak': {s.label: s.truncation_leak for s in report.branches},
        'passive_monotonic': report.passive_monotonic,
        'iterations': len(report.history) - 1 if report.history else 0,
        'rk_steps': report.rk_steps,
        'rk_steps_per_subpixel': report.rk_steps / (len(report.branches) * max(len(report.times) - 1, 1)),
        'stalled': report.stalled,
        'wall_time_s': report.wall_time,
    }


def calibration_to_dict(result, reference_mhz=None):
    data = {
        'method': result.method.value,
        'eps_one_photon_mhz': rad_ns_to_mhz(result.eps_one_photon),
        'residual': result.residual,
    }
    if reference_mhz:
        data['reference_mhz'] = reference_mhz
        data['deviation_vs_reference'] = rad_ns_to_mhz(result.eps_one_photon) / reference_mhz - 1.0
    return data


def sweep_to_dict(result):
    return {
        'speed_limits_ns': {repr(p): t for p, t in result.speed_limits.items()},
        'alpha': _clean(result.alpha),
        'alpha_stderr': _clean(result.alpha_stderr),
        'prefactor_ns': _clean(result.prefactor),
        'monotonic': result.monotonic,
    }


def benchmark_to_dict(result):
    return {
        'expm_slope': _clean(result.expm_slope),
        'expm_slope_stderr': _clean(result.expm_slope_stderr),
        'rk_slope': _clean(result.rk_slope),
        'rk_slope_stderr': _clean(result.rk_slope_stderr),
        'max_trace_dist': max((r.trace_dist for r in result.rows), default=0.0),
    }


def write_json(path, data):
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump({k: _clean(v) for k, v in data.items()}, fh, indent=2, sort_keys=True)
        fh.write('\n')
    return path


def write_manifest(output_dir, manifest):
    return write_json(os.path.join(output_dir, 'manifest.json'), manifest.to_dict())
