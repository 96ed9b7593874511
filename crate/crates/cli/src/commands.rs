use std::io::Write;
use std::path::{Path, PathBuf};

use heatobs::certificate::{certify, Certificate, OperatingRadius, TrajectoryBounds};
use heatobs::kernel::{refined_design, KernelDesign, KernelNorms, KernelParams, RefinementReport, DEFAULT_MAX_NODES};
use heatobs::sim::{
    audit_trajectory, error_norms, estimated_steps, simulate_pair, t_level_audit, AuditReport, PlantStats,
    SimConfig, TLevelAudit, Trajectory,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BoundsSpec, Config, DesignA, ErrorScale, Model};
use crate::svg::{Chart, Series};
use crate::Failure;

/// Snapshots kept when `record_stride` is not given.
const TARGET_SNAPSHOTS: usize = 500;

pub struct Ctx {
    pub cfg: Config,
    pub model: Model,
    pub out: PathBuf,
    pub refine: bool,
    pub workers: Option<usize>,
    pub seed: u64,
}

/// Write through a temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::config(e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn opt(v: Option<impl ToString>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct KernelReport<'a> {
    params: KernelParams,
    n: usize,
    p10: f64,
    norms: &'a KernelNorms,
    refinement: Option<&'a RefinementReport>,
}

/// Outcome of one co-simulation with its audits.
struct SimRun {
    traj: Trajectory,
    cert: Option<Certificate>,
    audit: AuditReport,
    t_level: Option<TLevelAudit>,
    within_region: Option<bool>,
    bounds_covered: Option<bool>,
    failures: usize,
}

#[derive(Serialize)]
struct SimSummary<'a> {
    scenario: &'a str,
    params: KernelParams,
    seed: u64,
    initial_h1: f64,
    /// `|ṽ_o|_{H¹} ≤ ω*`.
    within_region: Option<bool>,
    /// Measured plant bounds stay below the certified ones.
    bounds_covered: Option<bool>,
    measured_bounds: TrajectoryBounds,
    steps: usize,
    dt_min: f64,
    failures: usize,
    audit: &'a AuditReport,
    t_level: Option<&'a TLevelAudit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub a: f64,
    pub sigma: f64,
    pub feasible: bool,
    pub omega_star: Option<f64>,
    pub omega_capped: Option<bool>,
    pub sigma_star: Option<f64>,
    pub kernel_nodes: usize,
    pub fitted_h1_rate: Option<f64>,
    pub bound_violations: Option<usize>,
    pub certificate: Certificate,
}

#[derive(Serialize)]
struct Argmax {
    sigma: f64,
    sigma_star: f64,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    scenario: &'a str,
    a: f64,
    bounds: TrajectoryBounds,
    operating_radius: OperatingRadius,
    feasible_rows: usize,
    argmax: Option<Argmax>,
    rows: Vec<SweepRowBrief>,
}

#[derive(Serialize)]
struct SweepRowBrief {
    sigma: f64,
    feasible: bool,
    omega_star: Option<f64>,
    sigma_star: Option<f64>,
    fitted_h1_rate: Option<f64>,
    bound_violations: Option<usize>,
}

impl Ctx {
    fn plant_ic(&self, n: usize) -> Vec<f64> {
        self.cfg.initial.plant.sample(n)
    }

    /// Design diffusivity; `auto` takes the midrange of `α` over the value
    /// range of the plant's initial data, which bounds the plant for all time.
    fn design_a(&self) -> Result<f64, Failure> {
        match self.cfg.design.a {
            DesignA::Value(a) => Ok(a),
            DesignA::Keyword(_) => {
                let v = self.plant_ic(self.cfg.grid.sim_nodes);
                let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let m = self.model.diffusivity();
                if !m.contains(lo) || !m.contains(hi) {
                    return Err(Failure::config(format!("plant data [{lo}, {hi}] leave the model's validity interval")));
                }
                let alphas: Vec<f64> = (0..=1024).map(|k| m.alpha(lo + (hi - lo) * k as f64 / 1024.0)).collect();
                let amin = alphas.iter().copied().fold(f64::INFINITY, f64::min);
                let amax = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(0.5 * (amin + amax))
            }
        }
    }

    fn params(&self, sigma: f64) -> Result<KernelParams, Failure> {
        Ok(KernelParams::new(self.design_a()?, sigma)?)
    }

    /// Design whose norms feed the certificate.
    fn norm_design(&self, params: KernelParams) -> Result<(KernelDesign, Option<RefinementReport>), Failure> {
        let n = self.cfg.grid.kernel_nodes;
        if self.refine {
            let (d, r) = refined_design(params, n, DEFAULT_MAX_NODES)?;
            Ok((d, Some(r)))
        } else {
            Ok((KernelDesign::build(params, n)?, None))
        }
    }

    /// Plant-only pilot run for simulated bounds. The plant does not see the
    /// observer, so identical initial data suffice.
    fn pilot(&self, params: KernelParams) -> Result<Option<PlantStats>, Failure> {
        let BoundsSpec::Simulated { pilot_t_end, .. } = self.cfg.bounds else {
            return Ok(None);
        };
        let n = self.cfg.grid.sim_nodes;
        let gains = heatobs::kernel::compute_gains(params, n)?;
        let v0 = self.plant_ic(n);
        let cfg = SimConfig {
            n,
            cfl: self.cfg.grid.cfl,
            t_end: pilot_t_end,
            record_stride: usize::MAX,
            plant_ic: v0.clone(),
            observer_ic: v0,
        };
        Ok(Some(simulate_pair(&cfg, self.model.diffusivity(), &gains, None)?.plant))
    }

    fn bounds(&self, a: f64, pilot: Option<&PlantStats>) -> Result<TrajectoryBounds, Failure> {
        let model = self.model.diffusivity();
        let b = match self.cfg.bounds {
            BoundsSpec::User { m_v, vx_inf, vxx_inf, delta1, delta2 } => TrajectoryBounds {
                m_v,
                vx_inf,
                vxx_inf,
                delta1,
                delta2,
                source: heatobs::certificate::BoundsSource::User,
            },
            BoundsSpec::Conservative { m_v, vx_inf, vxx_inf } => {
                let m_v = m_v.unwrap_or_else(|| {
                    self.plant_ic(self.cfg.grid.sim_nodes).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
                });
                TrajectoryBounds::conservative(model, a, m_v, vx_inf, vxx_inf)?
            }
            BoundsSpec::Simulated { inflation, .. } => {
                pilot.expect("pilot run for simulated bounds").bounds(model, a, inflation)?
            }
        };
        b.validate()?;
        Ok(b)
    }

    pub fn kernel(&self) -> Result<(), Failure> {
        let params = self.params(self.cfg.design.sigma)?;
        let (d, report) = self.norm_design(params)?;
        let mut buf = Vec::new();
        d.p.write_csv(&mut buf).map_err(|e| Failure::io(&self.out, e))?;
        write_atomic(&self.out.join("kernel.csv"), &buf)?;
        buf.clear();
        d.gains.write_csv(&mut buf).map_err(|e| Failure::io(&self.out, e))?;
        write_atomic(&self.out.join("gains.csv"), &buf)?;
        write_json(
            &self.out.join("norms.json"),
            &KernelReport { params, n: d.p.n(), p10: d.gains.p10, norms: &d.norms, refinement: report.as_ref() },
        )?;
        println!("kernel: a = {}, sigma = {}, n = {}, p10 = {}", params.a(), params.sigma(), d.p.n(), d.gains.p10);
        Ok(())
    }

    pub fn certify(&self) -> Result<(), Failure> {
        let params = self.params(self.cfg.design.sigma)?;
        let (d, _) = self.norm_design(params)?;
        let pilot = self.pilot(params)?;
        let bounds = self.bounds(params.a(), pilot.as_ref())?;
        let cert = certify(params, &d.norms, &bounds, self.model.diffusivity(), self.cfg.certify.operating_radius)?;
        write_json(&self.out.join("certificate.json"), &cert)?;
        let m = cert.conditions.base;
        if !cert.feasible {
            return Err(Failure::Infeasible(format!(
                "small-gain margins {:.3e}, {:.3e}, {:.3e}",
                m[0], m[1], m[2]
            )));
        }
        let w = cert.omega_star.expect("feasible certificate has a radius");
        println!(
            "certify: feasible, omega* = {}{}, sigma* = {} at radius {}",
            w.value,
            if w.capped { " (cap)" } else { "" },
            opt(cert.sigma_star),
            opt(cert.omega_op)
        );
        Ok(())
    }

    fn run_simulation(
        &self,
        params: KernelParams,
        norms: &KernelNorms,
        bounds: Option<&TrajectoryBounds>,
    ) -> Result<SimRun, Failure> {
        let g = &self.cfg.grid;
        let model = self.model.diffusivity();
        let design = KernelDesign::build(params, g.sim_nodes)?;
        let v0 = self.plant_ic(g.sim_nodes);
        let mut e = self.cfg.initial.error.shape(self.seed).build(&design.p, design.gains.p10)?;

        let cert_max = match bounds {
            Some(b) if self.cfg.simulate.certify => Some(certify(params, norms, b, model, OperatingRadius::Max)?),
            _ => None,
        };
        let omega = cert_max.as_ref().and_then(|c| c.omega_star).map(|w| w.value);
        if let Some(scale) = self.cfg.initial.scale {
            let target = match scale {
                ErrorScale::H1(h) => h,
                ErrorScale::OmegaFraction(f) => {
                    f * omega.ok_or_else(|| Failure::Infeasible("error scaled to omega* but no feasible certificate".into()))?
                }
            };
            let h = error_norms(&e)?.h1;
            if h.is_nan() || h <= 0.0 {
                return Err(Failure::config("cannot rescale a zero initial error"));
            }
            e.iter_mut().for_each(|x| *x *= target / h);
        }
        let vh: Vec<f64> = v0.iter().zip(&e).map(|(a, b)| a - b).collect();
        let mut cfg = SimConfig {
            n: g.sim_nodes,
            cfl: g.cfl,
            t_end: g.t_end,
            record_stride: 1,
            plant_ic: v0,
            observer_ic: vh,
        };
        cfg.record_stride = match g.record_stride {
            Some(s) => s,
            None => {
                let amax = cfg.plant_ic.iter().chain(&cfg.observer_ic).map(|&r| model.alpha(r)).fold(0.0, f64::max);
                (estimated_steps(&cfg, amax) / TARGET_SNAPSHOTS).max(1)
            }
        };
        let mut traj = simulate_pair(&cfg, model, &design.gains, None)?;
        let h0 = traj.initial_h1();

        let cert = match (&cert_max, bounds) {
            (Some(c), Some(b)) if c.feasible => {
                Some(certify(params, norms, b, model, OperatingRadius::Value(h0))?)
            }
            (Some(c), _) => Some(c.clone()),
            _ => None,
        };
        if let Some(c) = &cert {
            traj.attach_bound(c);
        }
        let audit = audit_trajectory(&traj, &design)?;
        let t_level = match (self.model.material(), &cert) {
            (Some(m), Some(c)) if c.feasible => Some(t_level_audit(&traj, m, c, 1)?),
            _ => None,
        };
        let bounds_covered = match bounds {
            Some(b) => {
                let m = traj.plant.bounds(model, params.a(), 1.0)?;
                Some(
                    m.delta1 <= b.delta1 && m.delta2 <= b.delta2 && m.vx_inf <= b.vx_inf && m.vxx_inf <= b.vxx_inf,
                )
            }
            None => None,
        };
        let failures = audit.failures(self.cfg.simulate.mass_tol) + t_level.as_ref().map_or(0, |t| t.violations);
        Ok(SimRun { within_region: omega.map(|w| h0 <= w), traj, cert, audit, t_level, bounds_covered, failures })
    }

    pub fn simulate(&self) -> Result<(), Failure> {
        let params = self.params(self.cfg.design.sigma)?;
        let (bounds, norms) = if self.cfg.simulate.certify {
            let (d, _) = self.norm_design(params)?;
            let pilot = self.pilot(params)?;
            (Some(self.bounds(params.a(), pilot.as_ref())?), d.norms)
        } else {
            (None, KernelNorms::zero())
        };
        let run = self.run_simulation(params, &norms, bounds.as_ref())?;
        let tr = &run.traj;

        let mut buf = Vec::new();
        tr.write_csv(&mut buf).map_err(|e| Failure::io(&self.out, e))?;
        write_atomic(&self.out.join("trajectory.csv"), &buf)?;
        if let Some(every) = self.cfg.simulate.snapshot_every {
            buf.clear();
            tr.write_snapshots_csv(&mut buf, every).map_err(|e| Failure::io(&self.out, e))?;
            write_atomic(&self.out.join("snapshots.csv"), &buf)?;
        }
        if let Some(c) = &run.cert {
            write_json(&self.out.join("certificate.json"), c)?;
        }
        let measured = tr.plant.bounds(self.model.diffusivity(), params.a(), 1.0)?;
        write_json(
            &self.out.join("audit.json"),
            &SimSummary {
                scenario: &self.cfg.scenario,
                params,
                seed: self.seed,
                initial_h1: tr.initial_h1(),
                within_region: run.within_region,
                bounds_covered: run.bounds_covered,
                measured_bounds: measured,
                steps: tr.steps,
                dt_min: tr.dt_min,
                failures: run.failures,
                audit: &run.audit,
                t_level: run.t_level.as_ref(),
            },
        )?;
        let pts = |v: &[f64]| tr.times.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
        let mut series = vec![Series::new("|e|_H1", pts(&tr.err_h1)), Series::new("|e|_L2", pts(&tr.err_l2))];
        if let Some(b) = &tr.bound {
            series.push(Series::new("certified bound", pts(b)).dashed());
        }
        let chart = Chart {
            title: format!("observer error, {}", self.cfg.scenario),
            x_label: "t".into(),
            y_label: "norm".into(),
            log_x: false,
            log_y: true,
            series,
        };
        write_atomic(&self.out.join("norms.svg"), chart.render().as_bytes())?;

        let a = &run.audit;
        println!(
            "simulate: |e0|_H1 = {:.4e}, converged at {}, transformed L2 rate {}, bound violations {}, failures {}",
            tr.initial_h1(),
            a.converged_at.map_or("never".into(), |t| format!("t = {t:.3}")),
            opt(a.transformed_l2_rate.map(|f| f.rate)),
            opt(a.h1_bound_violations),
            run.failures
        );
        if run.failures > 0 {
            return Err(Failure::Audit(run.failures));
        }
        Ok(())
    }

    fn sweep_row(
        &self,
        index: usize,
        params: KernelParams,
        bounds: &TrajectoryBounds,
        radius: OperatingRadius,
        simulate: bool,
        rows_dir: &Path,
    ) -> Result<SweepRow, Failure> {
        let (d, _) = self.norm_design(params)?;
        let cert = certify(params, &d.norms, bounds, self.model.diffusivity(), radius)?;
        let (mut rate, mut viol) = (None, None);
        if simulate && cert.feasible {
            let run = self.run_simulation(params, &d.norms, Some(bounds))?;
            rate = run.audit.h1_rate.map(|f| f.rate);
            viol = run.audit.h1_bound_violations;
        }
        let row = SweepRow {
            index,
            a: params.a(),
            sigma: params.sigma(),
            feasible: cert.feasible,
            omega_star: cert.omega_star.map(|w| w.value),
            omega_capped: cert.omega_star.map(|w| w.capped),
            sigma_star: cert.sigma_star,
            kernel_nodes: d.p.n(),
            fitted_h1_rate: rate,
            bound_violations: viol,
            certificate: cert,
        };
        write_json(&rows_dir.join(format!("row_{index:03}.json")), &row)?;
        Ok(row)
    }

    pub fn sweep(&self) -> Result<(), Failure> {
        let spec = self
            .cfg
            .sweep
            .as_ref()
            .ok_or_else(|| Failure::config("config has no \"sweep\" section"))?;
        let sigmas = spec.sigmas.values()?;
        if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Failure::config("sweep sigmas must be positive"));
        }
        let a = self.design_a()?;
        let pilot = self.pilot(self.params(sigmas[0])?)?;
        let bounds = self.bounds(a, pilot.as_ref())?;
        let rows_dir = self.out.join("rows");
        std::fs::create_dir_all(&rows_dir).map_err(|e| Failure::io(&rows_dir, e))?;

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.unwrap_or(0))
            .build()
            .map_err(|e| Failure::config(e.to_string()))?;
        let results: Vec<Result<SweepRow, Failure>> = pool.install(|| {
            sigmas
                .par_iter()
                .enumerate()
                .map(|(k, &s)| {
                    let params = KernelParams::new(a, s)?;
                    self.sweep_row(k, params, &bounds, spec.operating_radius, spec.simulate, &rows_dir)
                })
                .collect()
        });
        let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

        let mut csv = String::from("a,sigma,feasible,omega_star,omega_capped,sigma_star,fitted_h1_rate,bound_violations\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.a,
                r.sigma,
                r.feasible,
                opt(r.omega_star),
                opt(r.omega_capped),
                opt(r.sigma_star),
                opt(r.fitted_h1_rate),
                opt(r.bound_violations)
            ));
        }
        write_atomic(&self.out.join("sweep.csv"), csv.as_bytes())?;

        // first maximiser wins ties
        let argmax = rows
            .iter()
            .filter_map(|r| r.sigma_star.map(|s| (r.sigma, s)))
            .fold(None::<(f64, f64)>, |best, (sg, ss)| match best {
                Some((_, b)) if b >= ss => best,
                _ => Some((sg, ss)),
            })
            .map(|(sigma, sigma_star)| Argmax { sigma, sigma_star });
        let feasible_rows = rows.iter().filter(|r| r.feasible).count();
        write_json(
            &self.out.join("summary.json"),
            &SweepSummary {
                scenario: &self.cfg.scenario,
                a,
                bounds,
                operating_radius: spec.operating_radius,
                feasible_rows,
                argmax: argmax.as_ref().map(|m| Argmax { sigma: m.sigma, sigma_star: m.sigma_star }),
                rows: rows
                    .iter()
                    .map(|r| SweepRowBrief {
                        sigma: r.sigma,
                        feasible: r.feasible,
                        omega_star: r.omega_star,
                        sigma_star: r.sigma_star,
                        fitted_h1_rate: r.fitted_h1_rate,
                        bound_violations: r.bound_violations,
                    })
                    .collect(),
            },
        )?;

        let curve = |f: fn(&SweepRow) -> Option<f64>| rows.iter().filter_map(|r| f(r).map(|v| (r.sigma, v))).collect();
        let mut series = vec![
            Series::new("certified sigma*", curve(|r| r.sigma_star)),
            Series::new("sigma (linear rate)", rows.iter().map(|r| (r.sigma, r.sigma)).collect()).dashed(),
        ];
        if spec.simulate {
            series.push(Series::new("fitted H1 rate", curve(|r| r.fitted_h1_rate)));
        }
        let log_x = sigmas.iter().all(|s| *s > 0.0);
        let chart = Chart {
            title: format!("decay rate vs gain, {}", self.cfg.scenario),
            x_label: "sigma".into(),
            y_label: "rate".into(),
            log_x,
            log_y: false,
            series,
        };
        write_atomic(&self.out.join("sweep.svg"), chart.render().as_bytes())?;

        match &argmax {
            Some(m) => println!(
                "sweep: {feasible_rows}/{} feasible rows, best certified rate {} at sigma = {}",
                rows.len(),
                m.sigma_star,
                m.sigma
            ),
            None => {
                return Err(Failure::Infeasible(format!("all {} sweep rows are infeasible", rows.len())));
            }
        }
        Ok(())
    }
}
