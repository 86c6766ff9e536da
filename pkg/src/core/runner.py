"""
Experiment runner that dispatches a validated configuration to the
samplers, estimators and bound calculators and writes the reports.
"""

import time
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .. import __version__
from ..analysis.bounds import (
    BoundInputs,
    bound_report,
    estimate_curvature_constants,
    final_distance_bound,
    lyapunov_exit_bound,
    proposal_contraction_factor,
    rejection_bound,
    step_planner,
)
from ..analysis.estimators import (
    estimate_contraction_rate,
    estimate_dimension_profile,
    estimate_exit_probability,
    estimate_rejection_curve,
    fit_exit_constant,
    fit_power_law,
    fit_scaling_exponent,
    minus_norm_moments,
    stream_seed,
    wasserstein_1d,
)
from ..config.settings import (
    LOGS_DIR,
    SHOW_PROGRESS_BAR,
    TPS_DEFAULT_ALPHA,
    TPS_DEFAULT_POTENTIAL,
    UNSPECIFIED_CONSTANTS,
)
from ..models.quadratic import exact_quadratic_variance, make_quadratic_model
from ..models.tps import make_tps_model
from ..sampling.core_mh import ProposalKind, ProposalSpec, TargetModel, grad_U, run_chain
from ..sampling.coupling import CoupledState, proposal_coupling_distance, run_coupled_chain
from ..utils.file_utils import emit_results, write_sidecar
from ..utils.logger import get_logger, setup_logging
from ..utils.random_streams import derive_stream
from .experiment_config import ExperimentConfig

logger = get_logger(__name__)

EXPECTED_EXPONENTS = {ProposalKind.OU: 0.5, ProposalKind.SEMI_IMPLICIT: 1.5, ProposalKind.EXPLICIT_EULER: None}
DEFAULT_TPS_GRID = [0.02, 0.04, 0.08, 0.16]
DEFAULT_TPS_LEVELS = [3, 4, 5, 6, 7, 8]


def build_model(section: Dict[str, Any]) -> Tuple[TargetModel, Dict[str, Any]]:
    """
    Build the target model described by a `model` config section.

    Returns:
        (TargetModel, exact constants fragment; empty when none are known)
    """
    kind = section.get("kind")
    if kind == "quadratic":
        return make_quadratic_model(int(section["d"]), section["b"])
    if kind == "zero":
        return make_quadratic_model(int(section["d"]), 0.0)
    if kind == "tps":
        model = make_tps_model(
            m=int(section["m"]),
            ell=int(section.get("ell", 1)),
            a=section.get("start", ()),
            b=section.get("end", ()),
            potential=section.get("potential", TPS_DEFAULT_POTENTIAL),
            alpha=float(section.get("alpha", TPS_DEFAULT_ALPHA)),
            q=section.get("q"),
        )
        return model, {}
    raise ValueError(f"Unknown model kind: {kind!r}")


class ExperimentRunner:
    """Runs one experiment and writes its CSV/JSON records and the metadata sidecar."""

    def __init__(self, config: ExperimentConfig, verbose: bool = False):
        self.config = config
        self.verbose = verbose
        self.records: List[Dict[str, Any]] = []
        self.summary: Dict[str, Any] = {}
        self.violations: List[str] = []
        self._model: Optional[TargetModel] = None
        self._fragment: Dict[str, Any] = {}

    # ------------------------------------------------------------------
    # shared helpers
    # ------------------------------------------------------------------

    @property
    def model(self) -> TargetModel:
        if self._model is None:
            self._model, self._fragment = build_model(self.config.model)
            logger.info(f"🧮 Model: {self._model.name}")
        return self._model

    @property
    def kind(self) -> ProposalKind:
        return ProposalKind.parse(self.config.proposal.get("kind", "semi_implicit"))

    def _steps(self) -> List[float]:
        proposal = self.config.proposal
        if "h_grid" in proposal:
            return [float(h) for h in proposal["h_grid"]]
        return [float(proposal["h"])]

    def _point(self, key: str, default: float = 0.0) -> np.ndarray:
        value = self.config.run.get(key)
        if value is None:
            return np.full(self.model.d, default)
        return np.broadcast_to(np.asarray(value, dtype=float), (self.model.d,)).copy()

    def _run_value(self, key: str, default=None):
        return self.config.run.get(key, default)

    def _equilibrated_point(self, model: TargetModel, stream_index: int) -> np.ndarray:
        """Standard normal start moved by a short semi-implicit chain."""
        rng = derive_stream(self.config.seed, stream_index)
        start = rng.standard_normal(model.d)
        steps = int(self._run_value("equilibration_steps", 200))
        if steps < 1:
            return start
        spec = ProposalSpec(ProposalKind.SEMI_IMPLICIT, float(self._run_value("equilibration_h", 0.05)))
        return run_chain(spec, model, start, steps, rng).final_state

    def bound_inputs(self, h: float, radius: Optional[float] = None) -> Optional[BoundInputs]:
        """Constants from the model fragment, overridden by the `constants` section."""
        model = self.model
        if radius is None:
            configured = self._run_value("R", 1.0)
            radius = float(configured[0] if isinstance(configured, list) else configured)
        overrides = dict(self.config.constants)
        merged: Dict[str, Any] = {k: self._fragment.get(k) for k in ("K", "M_R", "N_R", "C", "p")}
        for key in ("K", "M_R", "N_R", "C", "p"):
            if key in overrides:
                merged[key] = overrides[key]
        heuristic = []
        if merged["M_R"] is None and model.d <= 2 and model.v_hess_apply is not None:
            curvature = estimate_curvature_constants(model, radius)
            merged["M_R"], merged["N_R"] = curvature["M_R"], curvature["N_R"]
            heuristic += ["M_R", "N_R"]
        if merged["C"] is None:
            return None
        moments = overrides.get("moments")
        moments = {int(k): float(v) for k, v in moments.items()} if moments else minus_norm_moments(model.space)
        unspecified = dict(UNSPECIFIED_CONSTANTS)
        unspecified.update(overrides.get("unspecified", {}))
        return BoundInputs(
            K=merged["K"], M_R=merged["M_R"], N_R=merged["N_R"], C=merged["C"], p=merged["p"] or (0, 0, 0, 0),
            moments=moments, R=radius, h=h, unspecified=unspecified,
            heuristic=tuple(heuristic),
        )

    def _rejection_ceiling(self, inputs: Optional[BoundInputs], x: np.ndarray) -> Optional[float]:
        if inputs is None:
            return None
        try:
            if self.kind is ProposalKind.OU:
                return rejection_bound(inputs, "ou_p2zero", float(self.model.space.minus(x)))
            if self.kind is ProposalKind.SEMI_IMPLICIT:
                grad_norm = float(self.model.space.minus(grad_U(self.model, x)))
                return rejection_bound(inputs, "semi_implicit", grad_u_norm=grad_norm)
        except ValueError as e:
            logger.debug(f"No rejection bound: {e}")
        return None

    # ------------------------------------------------------------------
    # experiments
    # ------------------------------------------------------------------

    def _run_sample(self) -> None:
        model = self.model
        spec = ProposalSpec(self.kind, self._steps()[0])
        n = int(self._run_value("n_steps", 10_000))
        burn_in = int(self._run_value("burn_in", n // 10))
        b = self.config.model.get("b")
        exact = self.config.model.get("kind") == "quadratic" and model.d == 1
        chain = run_chain(spec, model, self._point("x0"), n, derive_stream(self.config.seed, 0),
                          store_trajectory=exact, burn_in=burn_in)
        for i in range(model.d):
            record = {"coordinate": i, "mean": float(chain.mean[i]), "variance": float(chain.variance[i])}
            if self.config.model.get("kind") == "quadratic":
                coeffs = np.broadcast_to(np.asarray(b, dtype=float), (model.d,))
                record["exact_variance"] = exact_quadratic_variance(float(coeffs[i]))
            self.records.append(record)
        self.summary.update({
            "acceptance_rate": chain.acceptance_rate,
            "max_minus_norm": chain.max_minus_norm,
            "n_steps": n,
            "burn_in": burn_in,
        })
        if exact:
            samples = chain.trajectory[burn_in + 1:, 0]
            reference = derive_stream(self.config.seed, 1).normal(
                0.0, np.sqrt(exact_quadratic_variance(float(np.ravel(b)[0]))), samples.size)
            self.summary["wasserstein_to_exact"] = wasserstein_1d(samples, reference)
            self.summary["wasserstein_note"] = "1D W1 also bounds the truncated distance W_{d_R} from above"
        logger.info(f"✅ Acceptance rate {chain.acceptance_rate:.4f}")

    def _run_couple(self) -> None:
        model = self.model
        spec = ProposalSpec(self.kind, self._steps()[0])
        x0 = self._point("x0", 0.5)
        x_tilde = self._point("x_tilde", -0.5)
        n = int(self._run_value("n_steps", 1000))
        radius = self._run_value("R")
        report = run_coupled_chain(spec, model, CoupledState(x0, x_tilde), n, derive_stream(self.config.seed, 0),
                                   radius=float(radius) if radius is not None else None)
        for k, distance in enumerate(report.distances):
            ratio = None
            if k > 0 and report.distances[k - 1] > 0:
                ratio = float(distance / report.distances[k - 1])
            self.records.append({"step": k, "distance": float(distance), "ratio": ratio})
        d0 = float(model.space.minus(x0 - x_tilde))
        self.summary.update({
            "events": report.event_counts,
            "mean_ratio": report.mean_ratio,
            "ratio_std_error": report.ratio_std_error,
            "coalescence_step": report.coalescence_step,
            "exit_step": report.exit_step,
            "decomposition_bound": report.decomposition_bound,
        })
        if d0 > 0:
            self.summary["proposal_distance_ratio"] = proposal_coupling_distance(spec, model, x0, x_tilde) / d0
            n_samples = self._run_value("n_samples")
            if n_samples:
                estimate = estimate_contraction_rate(spec, model, x0, x_tilde, int(n_samples),
                                                     derive_stream(self.config.seed, 1))
                self.summary.update({"one_step_ratio": estimate.value, "one_step_std_error": estimate.std_error,
                                     "one_step_events": estimate.extra["events"]})
        inputs = self.bound_inputs(spec.h)
        if inputs is not None and inputs.K is not None and inputs.M_R is not None:
            self.summary["proposal_contraction_convex"] = proposal_contraction_factor(inputs, "convex")
        logger.info(f"🔗 Coupled run: mean ratio {report.mean_ratio:.6f} ± {report.ratio_std_error:.1e}")

    def _run_scaling(self) -> None:
        model = self.model
        grid = self._steps()
        x = self._point("x0") if "x0" in self.config.run else self._equilibrated_point(model, 0)
        n_samples = int(self._run_value("n_samples", 100_000))
        estimates = estimate_rejection_curve(self.kind, model, x, grid, n_samples,
                                             derive_stream(self.config.seed, 1))
        for h, estimate in zip(grid, estimates):
            inputs = self.bound_inputs(h)
            self.records.append({
                "h": h, "estimate": estimate.value, "std_error": estimate.std_error,
                "bound": self._rejection_ceiling(inputs, x),
            })
        fit = fit_power_law(grid, [e.value for e in estimates], [e.std_error for e in estimates])
        for record, used in zip(self.records, fit.used):
            record["used_in_fit"] = bool(used)
        self.summary.update({
            "slope": fit.slope, "intercept": fit.intercept,
            "expected_exponent": EXPECTED_EXPONENTS[self.kind],
            "x_minus_norm": float(model.space.minus(x)),
        })
        logger.info(f"📈 Fitted rejection exponent {fit.slope:.4f}")

    def _run_bounds(self) -> None:
        model = self.model
        x = self._point("x0")
        x_norm = float(model.space.minus(x))
        grad_norm = float(model.space.minus(grad_U(model, x)))
        n = int(self._run_value("n_steps", 0))
        w0 = float(self._run_value("w0", 1.0))
        grad_sup = self.config.constants.get("grad_u_sup")
        for h in self._steps():
            inputs = self.bound_inputs(h)
            if inputs is None:
                raise ValueError("Model has no growth constants; supply a `constants` section")
            report = bound_report(inputs, self.kind, x_norm=x_norm, grad_u_norm=grad_norm, n=n, w0=w0,
                                  model=model, grad_u_sup=None if grad_sup is None else float(grad_sup))
            for record in report.to_records():
                self.records.append({"h": h, **record})
            self.summary["inputs"] = {k: v for k, v in report.inputs.items() if k != "h"}
        if "K_raw" in self._fragment:
            self.summary["K_raw"] = self._fragment["K_raw"]

    def _run_plan(self) -> None:
        planner = self.config.planner
        epsilons = planner["epsilon"] if isinstance(planner["epsilon"], list) else [planner["epsilon"]]
        K = float(planner["K"])
        unspecified = dict(UNSPECIFIED_CONSTANTS)
        unspecified.update(self.config.constants.get("unspecified", {}))
        d_bar = float(planner.get("D_bar", unspecified["D_bar"]))
        C = float(planner.get("C", unspecified["C_main"]))
        q = float(planner.get("q", unspecified["q_main"]))
        for epsilon in epsilons:
            result = step_planner(float(epsilon), K, d_bar, C, q)
            record = {"epsilon": float(epsilon), "feasible": result.feasible, "R": result.R, "h": result.h,
                      "n": result.n, "violated": result.violated, "replay": None}
            if result.feasible:
                inputs = BoundInputs(K=K, R=result.R, h=result.h, unspecified={**unspecified, "D_bar": d_bar})
                replay = final_distance_bound(inputs, result.n)
                record["replay"] = replay
                if not replay < float(epsilon):
                    self.violations.append(f"planner replay {replay} >= epsilon {epsilon}")
            record.update({f"check_{k}": v for k, v in result.checks.items()})
            self.records.append(record)
        self.summary.update({"K": K, "D_bar": d_bar, "C": C, "q": q})

    def _run_exit(self) -> None:
        model = self.model
        spec = ProposalSpec(self.kind, self._steps()[0])
        x0 = self._point("x0")
        radii = self._run_value("R", 4.0)
        radii = radii if isinstance(radii, list) else [radii]
        n_steps = int(self._run_value("n_steps", 1000))
        n_replicas = int(self._run_value("n_replicas", 1000))
        x_norm = float(model.space.minus(x0))
        for index, R in enumerate(radii):
            R = float(R)
            estimate = estimate_exit_probability(spec, model, x0, R, n_steps, n_replicas,
                                                 derive_stream(self.config.seed, index))
            record = {"R": R, "estimate": estimate.value, "std_error": estimate.std_error,
                      "bound_raw": None, "bound": None, "fitted_D": None}
            inputs = self.bound_inputs(spec.h, radius=R)
            if inputs is not None and inputs.K is not None:
                bound = lyapunov_exit_bound(inputs, x_norm, n_steps, radius=R)
                record.update({"bound_raw": bound.raw, "bound": bound.clipped,
                               "fitted_D": fit_exit_constant(estimate.value, inputs.K, x_norm, R, n_steps, spec.h)})
            self.records.append(record)
            logger.info(f"🚪 R={R}: exit probability {estimate.value:.4f} ± {estimate.std_error:.1e}")

    def _run_tps_demo(self) -> None:
        section = dict(self.config.model) or {"kind": "tps"}
        section.setdefault("kind", "tps")
        levels = [int(m) for m in self._run_value("levels", DEFAULT_TPS_LEVELS)]
        scaling_level = int(self._run_value("scaling_level", 5))
        grid = [float(h) for h in self.config.proposal.get("h_grid", DEFAULT_TPS_GRID)]
        h_dimension = float(self._run_value("h_dimension", 0.05))
        n_samples = int(self._run_value("n_samples", 100_000))

        scaling_model, _ = build_model({**section, "m": scaling_level})
        x = self._equilibrated_point(scaling_model, 0)
        for index, kind in enumerate((ProposalKind.OU, ProposalKind.SEMI_IMPLICIT)):
            fit = fit_scaling_exponent(kind, scaling_model, x, grid, n_samples, derive_stream(self.config.seed, 1 + index))
            for record in fit.to_records():
                self.records.append({"sweep": "scaling", "kind": kind.value, "m": scaling_level,
                                     "d": scaling_model.d, **record})
            self.summary[f"slope_{kind.value}"] = fit.slope

        models, points = [], []
        for m in tqdm(levels, desc="Building TPS models", disable=not SHOW_PROGRESS_BAR):
            model, _ = build_model({**section, "m": m})
            models.append(model)
            points.append(self._equilibrated_point(model, 100 + m))
        profile = estimate_dimension_profile(ProposalKind.SEMI_IMPLICIT, h_dimension, models, points, n_samples,
                                             stream_seed(derive_stream(self.config.seed, 3)))
        for m, d, estimate in zip(levels, profile.dimensions, profile.estimates):
            self.records.append({"sweep": "dimension", "kind": ProposalKind.SEMI_IMPLICIT.value, "m": m, "d": d,
                                 "h": h_dimension, "estimate": estimate.value, "std_error": estimate.std_error})
        self.summary["dimension_ratio"] = profile.ratio

    # ------------------------------------------------------------------

    def run(self) -> int:
        """
        Run the experiment and write its reports.

        Returns:
            0 when every computation completed and all preconditions held, 1 otherwise
        """
        config = self.config
        out_dir = config.output_dir
        setup_logging(self.verbose, out_dir / LOGS_DIR / f"{config.experiment}.log")
        logger.info(f"🚀 Running experiment '{config.experiment}' with seed {config.seed}")
        start = time.time()
        complete = False
        error = None
        handler = getattr(self, "_run_" + config.experiment.replace("-", "_"))
        try:
            handler()
            complete = True
        except Exception as e:
            error = f"{type(e).__name__}: {e}"
            logger.error(f"❌ Experiment '{config.experiment}' failed: {error}")

        status = 0 if complete and not self.violations else 1
        if self.violations:
            for violation in self.violations:
                logger.warning(f"⚠️  {violation}")

        try:
            emit_results(out_dir, config.experiment, self.records, config.formats,
                         header={"config": config.resolved(), "summary": self.summary})
            write_sidecar(out_dir, config.experiment, {
                "experiment": config.experiment,
                "version": __version__,
                "seed": config.seed,
                "config": config.resolved(),
                "summary": self.summary,
                "violations": self.violations,
                "error": error,
                "runtime_seconds": round(time.time() - start, 3),
            }, complete=complete and not self.violations)
        except OSError as e:
            logger.error(f"❌ Could not write reports to {out_dir}: {e}")
            return 1

        logger.info("=" * 50)
        logger.info(f"{'✅' if status == 0 else '❌'} Experiment '{config.experiment}' finished with status {status}")
        logger.info(f"Reports saved to: {out_dir}")
        logger.info("=" * 50)
        return status


def run_experiment(config: ExperimentConfig, verbose: bool = False) -> int:
    return ExperimentRunner(config, verbose).run()
