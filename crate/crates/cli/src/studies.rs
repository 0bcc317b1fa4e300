//! Per-point evaluation of every study.

use std::sync::Arc;

use polaron_core::asymptotics::{
    energy_expansion, e_n_sum_with, log_coefficient, lhy_sum, DispersionModel, EnOptions, ExpansionBreakdown,
    ExpansionOptions, ScatteringInputs, VnModel,
};
use polaron_core::eig::{dense_eigs, lanczos_lowest, reduced_levels, ReducedOptions};
use polaron_core::io::{fmt17, RadialTable};
use polaron_core::lattice::{IVec3, TWO_PI};
use polaron_core::operators::{dressing_residual, TopShellReduction};
use polaron_core::renorm::counterterms;
use polaron_core::scattering::{free_space_scattering_length_with_tol, solve_torus_scattering, PotentialSpec};
use polaron_core::{hbf_operator, Error, LinearOperator, ModelParams, MomentumLattice, Result, SectorBasis};

use crate::config::{Study, StudyConfig};

/// Sectors up to this size are diagonalized densely in the spectrum study.
const DENSE_SPECTRUM: usize = 1500;
const LANCZOS_BUDGET: usize = 50_000;

/// One grid point: the axis values a study varies over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub lambda_2pi: f64,
    pub kappa_2pi: f64,
    pub n_max: usize,
    pub n: f64,
    pub a_v: f64,
    pub a_w: f64,
    pub p_total: IVec3,
    pub cutoff_2pi: f64,
}

impl Point {
    /// Human-readable identification of the point, used in the manifest.
    pub fn label(&self, study: Study) -> String {
        let p = self.p_total;
        match study {
            Study::ScatteringRate => format!("n={}", self.n),
            Study::RenormFlow => format!(
                "lambda_2pi={},kappa_2pi={},n_max={},a_v={},a_w={}",
                self.lambda_2pi, self.kappa_2pi, self.n_max, self.a_v, self.a_w
            ),
            Study::SpectrumGaps | Study::WeylIdentity => format!(
                "lambda_2pi={},kappa_2pi={},n_max={},a_v={},a_w={},p_total=[{},{},{}]",
                self.lambda_2pi, self.kappa_2pi, self.n_max, self.a_v, self.a_w, p[0], p[1], p[2]
            ),
            Study::LogTerm => format!("N={},a_v={},a_w={}", self.n, self.a_v, self.a_w),
            Study::Lhy => format!("cutoff_2pi={},a_v={}", self.cutoff_2pi, self.a_v),
            Study::Expansion => format!("N={},a_v={},a_w={}", self.n, self.a_v, self.a_w),
        }
    }

    fn params(&self) -> ModelParams {
        ModelParams::new(self.a_v, self.a_w, TWO_PI * self.lambda_2pi, TWO_PI * self.kappa_2pi, self.n_max)
            .with_total_momentum(self.p_total)
    }
}

fn or_scalar<T: Copy>(axis: &[T], scalar: T) -> Vec<T> {
    if axis.is_empty() {
        vec![scalar]
    } else {
        axis.to_vec()
    }
}

/// Cartesian product of the axes the study uses, in a fixed nesting order
/// (first axis outermost).
pub fn grid_points(cfg: &StudyConfig, study: Study) -> Vec<Point> {
    let g = &cfg.grid;
    let m = &cfg.model;
    let base = Point {
        lambda_2pi: f64::NAN,
        kappa_2pi: m.kappa_2pi,
        n_max: 0,
        n: f64::NAN,
        a_v: m.a_v,
        a_w: m.a_w,
        p_total: m.p_total,
        cutoff_2pi: f64::NAN,
    };
    let a_v = or_scalar(&g.a_v, m.a_v);
    let a_w = or_scalar(&g.a_w, m.a_w);
    let kappa = or_scalar(&g.kappa_2pi, m.kappa_2pi);
    let p_total = or_scalar(&g.p_total, m.p_total);
    let mut out = Vec::new();
    match study {
        Study::ScatteringRate => {
            for &n in &g.n {
                out.push(Point { n, ..base });
            }
        }
        Study::RenormFlow | Study::SpectrumGaps | Study::WeylIdentity => {
            for &lambda_2pi in &g.lambda_2pi {
                for &kappa_2pi in &kappa {
                    for &n_max in &g.n_max {
                        for &p in &p_total {
                            for &av in &a_v {
                                for &aw in &a_w {
                                    out.push(Point {
                                        lambda_2pi,
                                        kappa_2pi,
                                        n_max,
                                        p_total: p,
                                        a_v: av,
                                        a_w: aw,
                                        ..base
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Study::LogTerm | Study::Expansion => {
            for &n in &g.n {
                for &av in &a_v {
                    for &aw in &a_w {
                        out.push(Point { n, a_v: av, a_w: aw, ..base });
                    }
                }
            }
        }
        Study::Lhy => {
            for &c in &g.cutoff_2pi {
                for &av in &a_v {
                    out.push(Point { cutoff_2pi: c, a_v: av, ..base });
                }
            }
        }
    }
    out
}

pub fn header(study: Study) -> Vec<&'static str> {
    match study {
        Study::ScatteringRate => vec![
            "n",
            "lattice_points",
            "cg_iterations",
            "residual_norm",
            "scaled_torus_length",
            "free_length",
            "abs_error",
        ],
        Study::RenormFlow => vec!["lambda", "kappa", "n_max", "e0", "e1", "e2", "E1", "E2", "e0_minus_E_total"],
        Study::SpectrumGaps => vec![
            "lambda",
            "kappa",
            "n_max",
            "px",
            "py",
            "pz",
            "dim",
            "method",
            "level",
            "eigenvalue",
            "gap_to_ground",
            "residual_norm",
        ],
        Study::WeylIdentity => vec![
            "lambda",
            "kappa",
            "n_max",
            "a_w",
            "px",
            "py",
            "pz",
            "modes",
            "dim",
            "keep_shells",
            "residual",
            "h_max",
            "relative_residual",
        ],
        Study::LogTerm => vec!["N", "a_v", "a_w", "cutoff", "E_N", "E_2N", "slope", "target", "ratio"],
        Study::Lhy => vec!["a_v", "cutoff", "sum", "sum_doubled", "increment"],
        Study::Expansion => {
            let mut h = vec!["a_v", "a_w"];
            h.extend(ExpansionBreakdown::CSV_HEADER.split(','));
            h
        }
    }
}

pub type Row = Vec<String>;

/// Evaluates one grid point. Errors keep their core classification so the
/// caller can map them to exit codes.
pub fn evaluate(cfg: &StudyConfig, study: Study, pt: &Point) -> Result<Vec<Row>> {
    match study {
        Study::ScatteringRate => scattering_point(cfg, pt),
        Study::RenormFlow => flow_point(cfg, pt),
        Study::SpectrumGaps => spectrum_point(cfg, pt),
        Study::WeylIdentity => weyl_point(cfg, pt),
        Study::LogTerm => log_point(cfg, pt),
        Study::Lhy => lhy_point(pt),
        Study::Expansion => expansion_point(cfg, pt),
    }
}

fn i(x: impl ToString) -> String {
    x.to_string()
}

/// The configured potential at unit scale.
pub fn potential(cfg: &StudyConfig) -> Result<PotentialSpec> {
    let p = &cfg.potential;
    let v = match p.kind.as_str() {
        "gaussian" => PotentialSpec::gaussian(p.amplitude, p.range),
        "compact_bump" => PotentialSpec::compact_bump(p.amplitude, p.range),
        "tabulated" => {
            let path = p.table.as_ref().ok_or_else(|| Error::contract("tabulated potential without a table"))?;
            PotentialSpec::tabulated(RadialTable::read(path)?, p.amplitude, p.range)
        }
        other => return Err(Error::contract(format!("unknown potential kind `{other}`"))),
    };
    v.validate()?;
    Ok(v)
}

fn scattering_point(cfg: &StudyConfig, pt: &Point) -> Result<Vec<Row>> {
    let v = potential(cfg)?;
    let r_max = cfg.potential.r_max.unwrap_or(v.effective_range() + 1.0);
    let free = free_space_scattering_length_with_tol(&v, cfg.potential.radial_points, r_max, cfg.tolerances.radial)?;
    if !(pt.n >= 1.0) {
        return Err(Error::domain(format!("rescaling factor must be >= 1, got {}", pt.n)));
    }
    let lattice = Arc::new(MomentumLattice::build(cfg.potential.cutoff_factor * pt.n / cfg.potential.range)?);
    let sol = solve_torus_scattering(&v.scaled(pt.n), lattice, cfg.tolerances.scattering)?;
    let scaled = pt.n * sol.torus_length;
    Ok(vec![vec![
        fmt17(pt.n),
        i(sol.lattice.len()),
        i(sol.iterations),
        fmt17(sol.residual_norm),
        fmt17(scaled),
        fmt17(free),
        fmt17((scaled - free).abs()),
    ]])
}

fn flow_point(cfg: &StudyConfig, pt: &Point) -> Result<Vec<Row>> {
    let params = pt.params();
    params.validate_gross()?;
    let lattice = Arc::new(MomentumLattice::build(params.lambda)?);
    let red = TopShellReduction::new(lattice, &params)?;
    let levels = reduced_levels(&red, &ReducedOptions::new(3, cfg.tolerances.eig, cfg.seed))?;
    let ct = counterterms(&params)?;
    let e = &levels.eigenvalues;
    Ok(vec![vec![
        fmt17(params.lambda),
        fmt17(params.kappa),
        i(params.n_max),
        fmt17(e[0]),
        fmt17(e[1]),
        fmt17(e[2]),
        fmt17(ct.e1),
        fmt17(ct.e2),
        fmt17(e[0] - ct.e_total),
    ]])
}

fn spectrum_point(cfg: &StudyConfig, pt: &Point) -> Result<Vec<Row>> {
    let params = pt.params();
    let lattice = Arc::new(MomentumLattice::build(params.lambda)?);
    let basis = Arc::new(SectorBasis::enumerate(lattice, params.n_max, params.p_total)?);
    let op = hbf_operator(basis, &params)?;
    let dim = op.dim();
    let k = cfg.model.levels.min(dim);
    let (rep, method) = if dim <= DENSE_SPECTRUM {
        (dense_eigs(&op.to_dense()?, k)?, "dense")
    } else {
        let rep = lanczos_lowest(&op, k, cfg.tolerances.eig, LANCZOS_BUDGET, cfg.seed)?;
        if !rep.converged {
            return Err(Error::NonConvergence {
                iterations: rep.iterations,
                residual: rep.residual_norms.iter().fold(0.0, |a: f64, &b| a.max(b)),
            });
        }
        (rep, "lanczos")
    };
    let p = params.p_total;
    let e0 = rep.eigenvalues[0];
    Ok(rep
        .eigenvalues
        .iter()
        .zip(&rep.residual_norms)
        .enumerate()
        .map(|(level, (&e, &r))| {
            vec![
                fmt17(params.lambda),
                fmt17(params.kappa),
                i(params.n_max),
                i(p[0]),
                i(p[1]),
                i(p[2]),
                i(dim),
                i(method),
                i(level),
                fmt17(e),
                fmt17(e - e0),
                fmt17(r),
            ]
        })
        .collect())
}

fn weyl_point(cfg: &StudyConfig, pt: &Point) -> Result<Vec<Row>> {
    let params = pt.params();
    let lattice = Arc::new(MomentumLattice::build(params.lambda)?);
    let modes = lattice.len();
    let basis = Arc::new(SectorBasis::enumerate(lattice, params.n_max, params.p_total)?);
    let dim = basis.len();
    let keep = cfg.model.keep_shells.unwrap_or(params.n_max.saturating_sub(2));
    let (err, scale) = dressing_residual(basis, &params, keep)?;
    let p = params.p_total;
    Ok(vec![vec![
        fmt17(params.lambda),
        fmt17(params.kappa),
        i(params.n_max),
        fmt17(params.a_w),
        i(p[0]),
        i(p[1]),
        i(p[2]),
        i(modes),
        i(dim),
        i(keep),
        fmt17(err),
        fmt17(scale),
        fmt17(err / scale),
    ]])
}

fn en_options(cfg: &StudyConfig) -> EnOptions {
    let dispersion = match cfg.model.dispersion.as_str() {
        "free" => DispersionModel::Free,
        _ => DispersionModel::Bogoliubov,
    };
    EnOptions {
        dispersion,
        ..EnOptions::default()
    }
}

fn log_point(cfg: &StudyConfig, pt: &Point) -> Result<Vec<Row>> {
    let params = ModelParams::new(pt.a_v, pt.a_w, f64::INFINITY, TWO_PI * pt.kappa_2pi, 1);
    let opts = en_options(cfg);
    let e_n = e_n_sum_with(pt.n, &params, VnModel::CoulombTail, pt.n.sqrt(), &opts)?;
    let e_2n = e_n_sum_with(2.0 * pt.n, &params, VnModel::CoulombTail, (2.0 * pt.n).sqrt(), &opts)?;
    let slope = (e_2n - e_n) / std::f64::consts::LN_2;
    let target = log_coefficient(pt.a_w);
    Ok(vec![vec![
        fmt17(pt.n),
        fmt17(pt.a_v),
        fmt17(pt.a_w),
        fmt17(pt.n.sqrt()),
        fmt17(e_n),
        fmt17(e_2n),
        fmt17(slope),
        fmt17(target),
        fmt17(slope / target),
    ]])
}

fn lhy_point(pt: &Point) -> Result<Vec<Row>> {
    let c = TWO_PI * pt.cutoff_2pi;
    let s = lhy_sum(pt.a_v, c)?;
    let s2 = lhy_sum(pt.a_v, 2.0 * c)?;
    Ok(vec![vec![fmt17(pt.a_v), fmt17(c), fmt17(s), fmt17(s2), fmt17(s2 - s)]])
}

fn expansion_point(cfg: &StudyConfig, pt: &Point) -> Result<Vec<Row>> {
    let params = ModelParams::new(pt.a_v, pt.a_w, f64::INFINITY, TWO_PI * pt.kappa_2pi, 1);
    let opts = ExpansionOptions {
        alpha: cfg.model.alpha,
        en: en_options(cfg),
        ..ExpansionOptions::default()
    };
    let b = energy_expansion(pt.n, &params, &ScatteringInputs::exact(&params), &opts)?;
    let mut row = vec![fmt17(pt.a_v), fmt17(pt.a_w)];
    row.extend(b.csv_row().split(',').map(str::to_string));
    Ok(vec![row])
}
