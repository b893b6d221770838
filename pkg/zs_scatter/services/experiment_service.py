"""
Experiment runners: continuous-spectrum scans, convergence order, energy and
invariant conservation, discrete-spectrum errors and the Parseval balance.

Usage:
    from zs_scatter.schemas import ExperimentCommand, ExperimentConfig
    from zs_scatter.services.experiment_service import ExperimentService

    config = ExperimentConfig(command=ExperimentCommand.ORDER, nodes=[1024, 2048])
    report = ExperimentService().run(config)
"""

import logging
import math
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ConfigError, DomainError, NoDiscreteSpectrum, NumericError, OverflowDetected
from ..numerics.metrics import (
    approximation_order,
    continuous_energy,
    jost_deviation,
    loglog_slope,
    min_grid_points,
    mse,
    parseval_check,
    relative_error,
)
from ..numerics.oracle import exact_ab, exact_eigenvalues, exact_energies, exact_jost_vector, exact_residuals
from ..numerics.potentials import ChirpedSechParams, SignalGrid, chirped_sech, load_signal
from ..numerics.scattering import ScatteringResult, b_bidirectional, propagate, residual, scan_continuous
from ..numerics.schemes import SchemeId
from ..schemas.experiment import ExperimentCommand, ExperimentConfig, ExperimentReport

logger = logging.getLogger(__name__)

ORACLE = "ORACLE"
# Deviations below this are roundoff; the order is not defined there
ORDER_FLOOR = 1e-13


class ExperimentService:
    """Runs the experiments described by an ExperimentConfig."""

    def __init__(self):
        self._signals: Dict[Tuple, SignalGrid] = {}

    def run(self, config: ExperimentConfig) -> ExperimentReport:
        """Dispatch on the configured command."""
        runners = {
            ExperimentCommand.SCAN: self.run_scan,
            ExperimentCommand.ORDER: self.run_order,
            ExperimentCommand.ENERGY: self.run_energy,
            ExperimentCommand.DISCRETE: self.run_discrete,
            ExperimentCommand.PARSEVAL: self.run_parseval,
        }
        logger.info(f"Running {config.command.value} experiment")
        started = time.perf_counter()
        report = runners[config.command](config)
        logger.info(
            f"{config.command.value} finished with {len(report.rows)} rows in {time.perf_counter() - started:.2f}s"
        )
        return report

    # ========== SHARED HELPERS ==========

    def signal(self, config: ExperimentConfig, nodes: int, params: Optional[ChirpedSechParams] = None) -> SignalGrid:
        """Chirped secant on the configured interval (or the signal file), cached per grid."""
        if config.signal_file is not None:
            key: Tuple = ("file", str(config.signal_file), config.sigma)
            if key not in self._signals:
                self._signals[key] = load_signal(config.signal_file, config.sigma)
            return self._signals[key]
        params = params or config.params
        key = (params.amplitude, params.chirp, config.length, nodes, config.sigma)
        if key not in self._signals:
            self._signals[key] = chirped_sech(params, config.length, nodes, config.sigma)
        return self._signals[key]

    def _grid_sizes(self, config: ExperimentConfig) -> List[int]:
        if config.signal_file is not None:
            return [self.signal(config, 0).nodes]
        return config.nodes

    @staticmethod
    def _require_oracle(config: ExperimentConfig):
        if config.signal_file is not None:
            raise ConfigError(f"{config.command.value} compares against the chirped-secant oracle; drop --signal-file")

    @staticmethod
    def _require_anomalous(config: ExperimentConfig):
        if config.sigma != 1:
            raise DomainError(f"{config.command.value} is only defined for sigma=1")

    def _scan(
        self, config: ExperimentConfig, signal: SignalGrid, scheme: SchemeId, report: ExperimentReport
    ) -> List[ScatteringResult]:
        started = time.perf_counter()
        results = scan_continuous(
            signal, config.xi_grid, scheme, parallel=config.threads != 1, threads=config.threads
        )
        elapsed = time.perf_counter() - started
        report.wall_clock[scheme.name] = report.wall_clock.get(scheme.name, 0.0) + elapsed
        report.add(scheme.name, signal.nodes, "wall_clock_s", elapsed)
        logger.info(f"{scheme.name} scan of {len(results)} points at M={signal.nodes} took {elapsed:.2f}s")
        return results

    # ========== EXPERIMENTS ==========

    def run_order(self, config: ExperimentConfig) -> ExperimentReport:
        """
        Approximation order per (scheme, xi) from two grids.

        The deviation is the Euclidean norm of the final Jost vector minus
        the exact one rebuilt from the oracle a, b at the same point.

        Raises:
            ConfigError: M is not a list of exactly two grid sizes
        """
        self._require_oracle(config)
        if len(config.nodes) != 2:
            raise ConfigError(f"order needs exactly two M values, got {config.nodes}")
        report = ExperimentReport(config=config)
        params = config.params
        coarse, fine = config.nodes

        for scheme in config.schemes:
            deviations = []
            taus = []
            for nodes in (coarse, fine):
                signal = self.signal(config, nodes)
                results = self._scan(config, signal, scheme, report)
                exact = exact_jost_vector(config.xi_grid, results[0].t_end, params, config.sigma)
                devs = np.array(
                    [jost_deviation(r.jost_vector(), e) if r.ok else np.nan for r, e in zip(results, exact)]
                )
                for xi, dev in zip(config.xi_grid, devs):
                    report.add(scheme.name, nodes, "deviation", dev, xi)
                deviations.append(devs)
                taus.append(signal.tau)

            orders = []
            undefined = 0
            for xi, dev1, dev2 in zip(config.xi_grid, *deviations):
                if not (dev1 > ORDER_FLOOR and dev2 > ORDER_FLOOR):
                    undefined += 1
                    report.add(scheme.name, fine, "order", math.nan, xi)
                    continue
                m = approximation_order(dev1, dev2, taus[0], taus[1])
                orders.append(m)
                report.add(scheme.name, fine, "order", m, xi)
            if undefined:
                logger.warning(f"{scheme.name}: order undefined at {undefined} points (deviation at roundoff)")
            median = float(np.median(orders)) if orders else math.nan
            report.add(scheme.name, fine, "median_order", median)
            logger.info(f"{scheme.name} median order {median:.3f}")
        return report

    def run_scan(self, config: ExperimentConfig) -> ExperimentReport:
        """MSE of a and b against the oracle per (scheme, M), plus the M_min marker and log-log slopes."""
        report = ExperimentReport(config=config)
        xi = config.xi_grid
        oracle = None if config.signal_file is not None else exact_ab(xi, config.params, config.sigma)
        sizes = self._grid_sizes(config)

        if oracle is not None:
            q_max = config.params.amplitude
            m_min = min_grid_points(config.length, float(np.max(np.abs(xi))), q_max)
            report.add(ORACLE, 0, "m_min", m_min)

        for scheme in config.schemes:
            mse_a = []
            for nodes in sizes:
                signal = self.signal(config, nodes)
                results = self._scan(config, signal, scheme, report)
                a = np.array([r.a for r in results])
                b = np.array([r.b for r in results])
                if oracle is None:
                    for x, ai, bi in zip(xi, a, b):
                        report.add(scheme.name, signal.nodes, "re_a", ai.real, x)
                        report.add(scheme.name, signal.nodes, "im_a", ai.imag, x)
                        report.add(scheme.name, signal.nodes, "re_b", bi.real, x)
                        report.add(scheme.name, signal.nodes, "im_b", bi.imag, x)
                    continue
                ok = np.isfinite(a) & np.isfinite(b)
                if not ok.any():
                    raise OverflowDetected(f"every xi point failed for {scheme.name} at M={nodes}")
                error_a = mse(a[ok], np.asarray(oracle.a)[ok])
                error_b = mse(b[ok], np.asarray(oracle.b)[ok])
                mse_a.append(error_a)
                report.add(scheme.name, nodes, "mse_a", error_a)
                report.add(scheme.name, nodes, "mse_b", error_b)
                report.add(scheme.name, nodes, "failed_points", np.count_nonzero(~ok))

            if oracle is not None and len(sizes) >= 2:
                resolved = [(m, e) for m, e in zip(sizes, mse_a) if m >= m_min]
                fit = resolved if len(resolved) >= 2 else list(zip(sizes, mse_a))
                try:
                    slope = loglog_slope([m for m, _ in fit], [e for _, e in fit])
                except DomainError:
                    slope = math.nan
                report.add(scheme.name, sizes[-1], "mse_a_slope", slope)
        return report

    def run_energy(self, config: ExperimentConfig) -> ExperimentReport:
        """
        Invariant deviation |H - 1| per xi and the E_c error per (scheme, M).

        H = |a|^2 + sigma |b|^2 on the real axis; E_c is compared with its
        closed form only for sigma = 1.
        """
        report = ExperimentReport(config=config)
        xi = config.xi_grid
        e_c_exact = None
        if config.signal_file is None and config.sigma == 1:
            _, _, e_c_exact = exact_energies(config.params, 1)

        for scheme in config.schemes:
            for nodes in self._grid_sizes(config):
                signal = self.signal(config, nodes)
                results = self._scan(config, signal, scheme, report)
                deviation = np.array([abs(r.quadratic_invariant - 1) for r in results])
                for x, dev in zip(xi, deviation):
                    report.add(scheme.name, signal.nodes, "h_deviation", dev, x)
                report.add(scheme.name, signal.nodes, "max_h_deviation", np.nanmax(deviation))

                if config.xi_points >= 2:
                    a = np.array([r.a for r in results])
                    e_c = continuous_energy(a, xi)
                    report.add(scheme.name, signal.nodes, "e_c_numeric", e_c)
                    if e_c_exact is not None:
                        report.add(scheme.name, signal.nodes, "e_c_error", relative_error(e_c, e_c_exact))
        return report

    def run_discrete(self, config: ExperimentConfig) -> ExperimentReport:
        """
        Errors of a(zeta_0), b(zeta_0) and r_0 at the largest eigenvalue.

        The eigenvalues come from the closed form; no search is done. In an
        amplitude sweep, amplitudes without eigenvalues are skipped and
        numeric failures are recorded as NaN.

        Raises:
            NoDiscreteSpectrum: a single amplitude has no eigenvalues
        """
        self._require_oracle(config)
        self._require_anomalous(config)
        report = ExperimentReport(config=config)
        sweep = config.amplitude_sweep is not None
        amplitudes = config.amplitude_sweep if sweep else [config.amplitude]

        for amplitude in amplitudes:
            params = ChirpedSechParams(amplitude, config.chirp)
            eigenvalues = exact_eigenvalues(params)
            if len(eigenvalues) == 0:
                if not sweep:
                    raise NoDiscreteSpectrum(f"A={amplitude}, C={config.chirp} has no discrete spectrum")
                logger.warning(f"A={amplitude} has no discrete spectrum, skipped")
                continue
            zeta0 = complex(eigenvalues[0])
            b_exact = complex(exact_ab(zeta0, params, 1).b)
            r_exact = complex(exact_residuals(params)[0])
            eta = zeta0.imag

            for scheme in config.schemes:
                for nodes in config.nodes:
                    signal = self.signal(config, nodes, params)
                    report.add(scheme.name, nodes, "amplitude", amplitude, eta)
                    try:
                        a0 = propagate(signal, zeta0, scheme).a
                        b0 = b_bidirectional(signal, zeta0, scheme)
                        r0 = residual(signal, zeta0, scheme, config.levels)
                    except NumericError as e:
                        if not sweep:
                            raise
                        logger.warning(f"{scheme.name} failed at A={amplitude}, M={nodes}: {e}")
                        a0 = b0 = r0 = complex(math.nan, math.nan)
                    report.add(scheme.name, nodes, "abs_a0", abs(a0), eta)
                    report.add(scheme.name, nodes, "error_b0", relative_error(b0, b_exact), eta)
                    report.add(scheme.name, nodes, "error_r0", relative_error(r0, r_exact), eta)
                    logger.debug(f"{scheme.name} A={amplitude} M={nodes}: |a0|={abs(a0):.3e}")
        return report

    def run_parseval(self, config: ExperimentConfig) -> ExperimentReport:
        """
        Residual of E_c + 4 sum eta_k = C0 per (scheme, M).

        With oracle_only the continuous energy comes from the exact a on the
        xi grid and no scheme is run.
        """
        self._require_oracle(config)
        self._require_anomalous(config)
        report = ExperimentReport(config=config)
        params = config.params
        xi = config.xi_grid
        eigenvalues = exact_eigenvalues(params)
        _, e_d, _ = exact_energies(params, 1)

        if config.oracle_only:
            for nodes in config.nodes:
                signal = self.signal(config, nodes)
                e_c = continuous_energy(np.asarray(exact_ab(xi, params, 1).a), xi)
                self._parseval_rows(report, ORACLE, signal, e_c, e_d, eigenvalues)
            return report

        for scheme in config.schemes:
            for nodes in config.nodes:
                signal = self.signal(config, nodes)
                results = self._scan(config, signal, scheme, report)
                e_c = continuous_energy(np.array([r.a for r in results]), xi)
                self._parseval_rows(report, scheme.name, signal, e_c, e_d, eigenvalues)
        return report

    @staticmethod
    def _parseval_rows(report: ExperimentReport, name: str, signal: SignalGrid, e_c, e_d, eigenvalues):
        report.add(name, signal.nodes, "e_c_numeric", e_c)
        report.add(name, signal.nodes, "e_d_exact", e_d)
        report.add(name, signal.nodes, "c0", signal.energy())
        report.add(name, signal.nodes, "parseval_residual", parseval_check(signal, e_c, eigenvalues))
