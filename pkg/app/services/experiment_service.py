"""
Preset datasets and the reproduce targets.

Every target writes CSVs (and SVGs when plotting) through a ManifestRecorder,
which lists them in manifest.json.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.models import (
    FrequencyGrid,
    NormVariant,
    SampleSet,
    SolveConfig,
    Spectrum,
    SweepRecord,
    Verdict,
    ZeroModePolicy,
)
from app.services.critical_service import CriticalService
from app.services.diagnostics_service import DiagnosticsService, Window
from app.services.grid_service import GridService
from app.services.io_service import IOService, ManifestRecorder
from app.services.lfp_service import LfpService
from app.services.plot_service import PlotService
from app.services.solver_service import SolverService

logger = logging.getLogger(__name__)

SWEEP_HEADER = ['alpha', 'M', 'lambda', 'tau', 'classification', 'q_alpha', 'max_residual']
CRITICAL_HEADER = ['sigma', 'value', 'scaled_value', 'verdict']
TRAJECTORY_HEADER = ['t', 'max_residual', 'energy']
RBF_HEADER = ['sigma', 'q_riemann', 'q_quadrature', 'local_slope', 'quadrature_status']
CONVERGENCE_HEADER = ['M_a', 'M_b', 'sup_difference']

# Desk-scale experiment settings
SINGLE_POINT = {'band_limit': 10_000, 'full_band_limit': 1_000_000, 'mesh': 0.01, 'lam': 1.0,
                'alphas': (0.5, 1.0, 2.0, 3.0), 'half_width': 2.0, 'points': 4001}
ONE_D = {'band_limit': 1000, 'mesh': 0.1, 'lam': 0.5, 'alphas': (0.5, 1.5, 3.0, 10.0),
         'band_limits': (250, 500, 1000)}
TWO_D = {'band_limit': 100, 'mesh': 0.1, 'lam': 0.2, 'alphas': (1.0, 1.9, 4.0, 10.0),
         'band_limits': (25, 50, 100), 'slice_x2': 0.5}
CRITICAL = {'dims': (1, 2, 3), 'sigma_limit': 1e-4, 'alphas': (0.5, 1.0, 2.0),
            'sigmas': (1e-1, 1e-2, 1e-3, 1e-4)}
RBF = {'alphas': (0.5, 2.0), 'sigmas': (0.1, 0.05, 0.025, 0.0125)}
LFP = {'band_limit': 64, 'mesh': 0.1, 'tol': 1e-6, 'steps': 100_000}
FIELD_POINTS_1D = 2001
SLICE_POINTS = 1001
HEATMAP_SIDE = 64


def two_point_1d() -> SampleSet:
    """(-0.5, 0.9) and (0.5, 0.9)"""
    return SampleSet(points=np.array([[-0.5], [0.5]]), labels=np.array([0.9, 0.9]))


def grid_20_2d() -> SampleSet:
    """5 x 4 lattice x1 in {-2..2}, x2 in {-1.5, -0.5, 0.5, 1.5}, every label 0.5"""
    x1, x2 = np.meshgrid([-2.0, -1.0, 0.0, 1.0, 2.0], [-1.5, -0.5, 0.5, 1.5], indexing='ij')
    points = np.stack([x1.reshape(-1), x2.reshape(-1)], axis=1)
    return SampleSet(points=points, labels=np.full(points.shape[0], 0.5))


PRESETS = {'1d': two_point_1d, '2d': grid_20_2d}


def preset_samples(name: str) -> SampleSet:
    return PRESETS[name]()


def _alpha_tag(alpha: float) -> str:
    return f'{alpha:g}'.replace('.', 'p')


class ExperimentService:
    """Writers shared by the subcommands plus the reproduce targets"""

    @staticmethod
    def write_sweep(recorder: ManifestRecorder, name: str, records: Sequence[SweepRecord]) -> str:
        path = IOService.write_rows(recorder.output_path(name), SWEEP_HEADER, (r.as_row() for r in records))
        return recorder.add_output(path)

    @staticmethod
    def write_convergence(recorder: ManifestRecorder, name: str, table) -> str:
        rows = [
            [a, b, table.difference(a, b)]
            for i, a in enumerate(table.band_limits) for b in table.band_limits[i + 1:]
        ]
        return recorder.add_output(IOService.write_rows(recorder.output_path(name), CONVERGENCE_HEADER, rows))

    @staticmethod
    def field_points(samples: SampleSet, window: Optional[Window] = None) -> np.ndarray:
        window = window or DiagnosticsService.default_window(samples)
        if samples.dim == 1:
            return DiagnosticsService.window_grid(window, FIELD_POINTS_1D)
        return DiagnosticsService.window_grid(window, HEATMAP_SIDE ** samples.dim)

    @staticmethod
    def slice_points(samples: SampleSet, x2: float) -> np.ndarray:
        window = DiagnosticsService.default_window(samples)
        x1 = np.linspace(window.lower[0], window.upper[0], SLICE_POINTS)
        return np.stack([x1, np.full_like(x1, x2)], axis=1)

    @staticmethod
    def write_solution(recorder: ManifestRecorder, prefix: str, spectrum: Spectrum, samples: SampleSet,
                       plot: bool = False, timestamp: bool = True, title: str = '') -> Dict[str, np.ndarray]:
        """Spectrum CSV, field CSV over the evaluation window and optional figures"""
        recorder.add_output(IOService.write_spectrum(recorder.output_path(f'{prefix}_spectrum.csv'), spectrum))
        points = ExperimentService.field_points(samples)
        values = GridService.evaluate_field(spectrum, points)
        recorder.add_output(IOService.write_field(recorder.output_path(f'{prefix}_field.csv'), points, values))
        if plot:
            ExperimentService.plot_solution(recorder, prefix, spectrum, samples, points, values, timestamp, title)
        return {'points': points, 'values': values}

    @staticmethod
    def plot_solution(recorder: ManifestRecorder, prefix: str, spectrum: Spectrum, samples: SampleSet,
                      points: np.ndarray, values: np.ndarray, timestamp: bool, title: str) -> None:
        if samples.dim == 1:
            path = PlotService.line_plot(
                recorder.output_path(f'{prefix}_field.svg'), [(points[:, 0], values, 'h')], 'x', 'h(x)',
                title=title, markers=(samples.points[:, 0], samples.labels), timestamp=timestamp,
            )
            recorder.add_output(path)
            return
        if samples.dim == 2:
            side = int(round(math.sqrt(points.shape[0])))
            x_axis = points[::side, 0]
            y_axis = points[:side, 1]
            recorder.add_output(PlotService.heatmap(
                recorder.output_path(f'{prefix}_heatmap.svg'), x_axis, y_axis, values.reshape(side, side),
                title=title, markers=samples.points, timestamp=timestamp,
            ))
            line = ExperimentService.slice_points(samples, TWO_D['slice_x2'])
            recorder.add_output(PlotService.line_plot(
                recorder.output_path(f'{prefix}_slice.svg'),
                [(line[:, 0], GridService.evaluate_field(spectrum, line), 'h')],
                'x1', f"h(x1, {TWO_D['slice_x2']:g})", title=title, timestamp=timestamp,
            ))

    @staticmethod
    def plot_fields(recorder: ManifestRecorder, name: str, samples: SampleSet, spectra: Dict[str, Spectrum],
                    timestamp: bool, title: str) -> None:
        """Overlay of several solutions: full field in 1-D, the x2 slice in 2-D"""
        if samples.dim == 1:
            points = ExperimentService.field_points(samples)
            markers = (samples.points[:, 0], samples.labels)
            xlabel, ylabel = 'x', 'h(x)'
        else:
            points = ExperimentService.slice_points(samples, TWO_D['slice_x2'])
            on_slice = np.isclose(samples.points[:, 1], TWO_D['slice_x2'])
            markers = (samples.points[on_slice, 0], samples.labels[on_slice])
            xlabel, ylabel = 'x1', f"h(x1, {TWO_D['slice_x2']:g})"
        series = [(points[:, 0], GridService.evaluate_field(s, points), label) for label, s in spectra.items()]
        recorder.add_output(PlotService.line_plot(
            recorder.output_path(name), series, xlabel, ylabel, title=title, markers=markers, timestamp=timestamp,
        ))

    @staticmethod
    def critical_rows(dim: int, alpha: float, classification) -> List[list]:
        return [
            [sigma, value, value * sigma ** (alpha - dim), classification.verdict.value]
            for sigma, value in classification.evidence
        ]

    @staticmethod
    def fig1(recorder: ManifestRecorder, full_scale: bool = False, plot: bool = False,
             timestamp: bool = True) -> Dict[float, float]:
        """Single point at the origin, closed form, one field per alpha"""
        settings = SINGLE_POINT
        band_limit = settings['full_band_limit'] if full_scale else settings['band_limit']
        x = np.linspace(-settings['half_width'], settings['half_width'], settings['points'])
        series = []
        rows = []
        origin = {}
        for alpha in settings['alphas']:
            solution = SolverService.solve_single_point_analytic(band_limit, settings['mesh'], alpha, settings['lam'])
            values = solution(x)
            origin[alpha] = solution.value_at_origin
            rows.extend([alpha, xi, v] for xi, v in zip(x, values))
            series.append((x, values, f'alpha={alpha:g}'))
        recorder.add_output(IOService.write_rows(recorder.output_path('fig1_fields.csv'), ['alpha', 'x1', 'h'], rows))
        if plot:
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('fig1.svg'), series, 'x', 'h(x)',
                title=f"single point, M={band_limit}, lambda={settings['lam']:g}", timestamp=timestamp,
            ))
        return origin

    @staticmethod
    def fig2(recorder: ManifestRecorder, plot: bool = False, timestamp: bool = True) -> Dict[str, object]:
        """alpha = 10 at increasing band limits in 1-D and 2-D"""
        results = {}
        for tag, samples, settings in (('1d', two_point_1d(), ONE_D), ('2d', grid_20_2d(), TWO_D)):
            alpha = 10.0
            config = SolveConfig(alpha=alpha, lam=settings['lam'])
            records = DiagnosticsService.sweep_bandlimit(
                samples, alpha, settings['band_limits'], settings['mesh'], settings['lam'],
            )
            ExperimentService.write_sweep(recorder, f'fig2_{tag}_sweep.csv', records)
            table = DiagnosticsService.convergence_in_bandlimit(
                samples, config, settings['band_limits'], settings['mesh'],
            )
            ExperimentService.write_convergence(recorder, f'fig2_{tag}_convergence.csv', table)
            if plot:
                spectra = {
                    f'M={m}': SolverService.solve_general(FrequencyGrid(samples.dim, m, settings['mesh']), samples, config)
                    for m in settings['band_limits']
                }
                ExperimentService.plot_fields(recorder, f'fig2_{tag}.svg', samples, spectra, timestamp,
                                              f'alpha=10, {samples.n} points in {samples.dim}-D')
            results[tag] = table
        return results

    @staticmethod
    def fig3(recorder: ManifestRecorder, plot: bool = False, timestamp: bool = True) -> Dict[str, List[SweepRecord]]:
        """Fixed band limit, alpha on both sides of d"""
        results = {}
        for tag, samples, settings, name in (
            ('1d', two_point_1d(), ONE_D, 'fig3_sweep.csv'),
            ('2d', grid_20_2d(), TWO_D, 'fig3_2d_sweep.csv'),
        ):
            records = []
            spectra = {}
            for alpha in settings['alphas']:
                spectrum, record = DiagnosticsService.solve_and_diagnose(
                    samples, alpha, settings['band_limit'], settings['mesh'], settings['lam'],
                )
                records.append(record)
                spectra[f'alpha={alpha:g}'] = spectrum
                if plot and samples.dim == 2:
                    points = ExperimentService.field_points(samples)
                    ExperimentService.plot_solution(
                        recorder, f'fig3_2d_alpha{_alpha_tag(alpha)}', spectrum, samples, points,
                        GridService.evaluate_field(spectrum, points), timestamp, f'alpha={alpha:g}',
                    )
            ExperimentService.write_sweep(recorder, name, records)
            if plot:
                ExperimentService.plot_fields(recorder, f'fig3_{tag}.svg', samples, spectra, timestamp,
                                              f"M={settings['band_limit']}, lambda={settings['lam']:g}")
            results[tag] = records
        return results

    @staticmethod
    def critical_tables(recorder: ManifestRecorder, plot: bool = False, timestamp: bool = True) -> Dict[str, object]:
        """Critical constants, the limit trichotomy and the RBF norm decay"""
        constants = []
        for dim in CRITICAL['dims']:
            exact = CriticalService.critical_constant(dim)
            limit = CriticalService.gaussian_sobolev_norm(CRITICAL['sigma_limit'], dim, dim, NormVariant.BRACKET)
            constants.append([dim, exact, limit, abs(limit - exact) / exact])
        recorder.add_output(IOService.write_rows(
            recorder.output_path('critical_constants.csv'), ['dim', 'c_d', 'limit_value', 'relative_error'], constants,
        ))

        verdicts = {}
        series = []
        for alpha in CRITICAL['alphas']:
            result = CriticalService.limit_sweep(1, alpha, CRITICAL['sigmas'])
            verdicts[alpha] = result
            recorder.add_output(IOService.write_rows(
                recorder.output_path(f'critical_alpha{_alpha_tag(alpha)}.csv'), CRITICAL_HEADER,
                ExperimentService.critical_rows(1, alpha, result),
            ))
            series.append((np.array(CRITICAL['sigmas']), np.array([v for _, v in result.evidence]), f'alpha={alpha:g}'))
        recorder.add_output(IOService.write_rows(
            recorder.output_path('critical_trichotomy.csv'),
            ['alpha', 'verdict', 'expected_verdict', 'slope', 'expected_slope', 'limit_value'],
            ([a, r.verdict.value, ExperimentService.expected_verdict(1, a).value, r.slope, 1.0 - a, r.limit_value]
             for a, r in verdicts.items()),
        ))

        studies = {}
        samples = two_point_1d()
        for alpha in RBF['alphas']:
            study = CriticalService.rbf_norm_decay_study(samples, alpha, RBF['sigmas'])
            studies[alpha] = study
            recorder.add_output(IOService.write_rows(
                recorder.output_path(f'rbf_decay_alpha{_alpha_tag(alpha)}.csv'), RBF_HEADER,
                (r.as_row() for r in study.rows),
            ))
        if plot:
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('critical.svg'), series, 'sigma', 'norm', title='d=1 bracket norm',
                logx=True, logy=True, timestamp=timestamp,
            ))
            recorder.add_output(PlotService.line_plot(
                recorder.output_path('rbf_decay.svg'),
                [(np.array(s.sigmas), np.array(s.values), f'alpha={a:g}') for a, s in studies.items()],
                'sigma', 'Q', title='Gaussian RBF interpolants', logx=True, logy=True, timestamp=timestamp,
            ))
        return {'constants': constants, 'verdicts': verdicts, 'studies': studies}

    @staticmethod
    def lfp_demo(recorder: ManifestRecorder, plot: bool = False, timestamp: bool = True) -> Dict[str, object]:
        """Single point and two point runs of the flow against their minimum-norm limits"""
        grid = FrequencyGrid(1, LFP['band_limit'], LFP['mesh'])
        kernel = LfpService.build_kernel(grid, zero_mode_policy=ZeroModePolicy.CAP)
        single = SampleSet(points=np.array([[0.0]]), labels=np.array([1.0]))
        reports = {
            'single': LfpService.lfp_equivalence_check(single, kernel, tol=1e-8),
            'two_point': LfpService.lfp_equivalence_check(two_point_1d(), kernel, tol=LFP['tol']),
        }
        recorder.add_output(IOService.write_rows(
            recorder.output_path('lfp_equivalence.csv'),
            ['case', 'max_coefficient_difference', 'tolerance', 'final_residual', 'steps', 'passed'],
            ([name, r.max_coefficient_difference, r.tolerance, r.final_residual, r.steps, r.passed]
             for name, r in reports.items()),
        ))

        samples = two_point_1d()
        dt = 0.9 * LfpService.max_stable_dt(kernel, samples.n)
        trajectory = LfpService.lfp_evolve(LfpService.initial_state(grid, samples), kernel, samples, dt,
                                           LFP['steps'], checkpoint_every=LFP['steps'] // 1000)
        ExperimentService.write_trajectory(recorder, 'lfp_trajectory.csv', trajectory)
        recorder.add_output(IOService.write_spectrum(recorder.output_path('lfp_spectrum.csv'),
                                                     trajectory.final.spectrum))
        if plot:
            ExperimentService.plot_trajectory(recorder, 'lfp_trajectory.svg', trajectory, timestamp)
        return {'reports': reports, 'trajectory': trajectory}

    @staticmethod
    def write_trajectory(recorder: ManifestRecorder, name: str, trajectory) -> str:
        rows = ([c.time, c.max_residual, c.energy] for c in trajectory.checkpoints)
        return recorder.add_output(IOService.write_rows(recorder.output_path(name), TRAJECTORY_HEADER, rows))

    @staticmethod
    def plot_trajectory(recorder: ManifestRecorder, name: str, trajectory, timestamp: bool) -> str:
        times = np.array([c.time for c in trajectory.checkpoints])
        residual = np.array([c.max_residual for c in trajectory.checkpoints])
        return recorder.add_output(PlotService.line_plot(
            recorder.output_path(name), [(times, np.maximum(residual, 1e-300), 'max |u|')], 't', 'max residual',
            title='linear frequency principle flow', logy=True, timestamp=timestamp,
        ))

    @staticmethod
    def expected_verdict(dim: int, alpha: float) -> Verdict:
        if alpha < dim:
            return Verdict.TO_ZERO
        if alpha > dim:
            return Verdict.DIVERGES
        return Verdict.FINITE_LIMIT
