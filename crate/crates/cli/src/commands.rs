use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use cubic_lab::arith::parse_rational;
use cubic_lab::counting::{asymptotic_compare, count_naive, count_scaled, count_solutions, smallest_solution, SearchOutcome};
use cubic_lab::exponents::{psi_requirement, theorem_h14, threshold_profile, ExponentSystem};
use cubic_lab::expsums::{bootstrap_grid, gauss_sum, shrinking_survey, weyl_bound_probe, Alpha, MinorArcProbe, WeylProbe};
use cubic_lab::invariants::{delta, delta_phi, psi_good_report, rank_census, CensusProfile};
use cubic_lab::io::{parse_polynomial, polynomial_to_value};
use cubic_lab::lattice::IntBox;
use cubic_lab::local::{local_report, ncc_certify, threshold_delta, NccStatus};
use cubic_lab::major_arcs::{
    build_box, real_point, singular_integral, singular_integral_box, singular_integral_coarea, singular_series,
    slice_volume, slice_volume_at, IntegralOptions, PointMode, RealPointResult,
};
use cubic_lab::poly::normalize;
use cubic_lab::{Config, Symmetrized};
use num_rational::BigRational;

use crate::{Cli, Command, CountArgs, ExponentArgs, IntegralArgs, Method, PolyArg, Probe};

pub struct Output {
    pub json: Value,
    pub csv: Option<String>,
    pub negative: bool,
}

impl Output {
    fn new(v: impl Serialize) -> Result<Output> {
        Ok(Output {
            json: serde_json::to_value(v)?,
            csv: None,
            negative: false,
        })
    }

    fn negative_if(mut self, negative: bool) -> Output {
        self.negative = negative;
        self
    }

    fn with_csv(mut self, csv: String) -> Output {
        self.csv = Some(csv);
        self
    }
}

fn load(arg: &PolyArg) -> Result<Symmetrized> {
    let text = std::fs::read_to_string(&arg.path).with_context(|| format!("field `poly`: reading {}", arg.path.display()))?;
    parse_polynomial(&text).with_context(|| format!("polynomial {}", file_name(&arg.path)))
}

fn file_name(p: &Path) -> String {
    p.display().to_string()
}

fn rational(field: &str, s: &str) -> Result<BigRational> {
    parse_rational(s).map_err(|e| anyhow!("field `{field}`: {e}"))
}

fn optional_psi(s: &Option<String>) -> Result<Option<BigRational>> {
    match s.as_deref() {
        None | Some("inf") | Some("infinity") => Ok(None),
        Some(v) => rational("psi", v).map(Some),
    }
}

fn corners(field_lo: &str, lo: &[f64], hi: &[f64], n: usize) -> Result<()> {
    if lo.len() != n || hi.len() != n {
        bail!("field `{field_lo}`: box corners need {n} coordinates each, got {} and {}", lo.len(), hi.len());
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    let mut cfg = Config::from_env();
    if let Some(b) = g.budget {
        cfg = cfg.with_budget(b);
    }
    match &cli.command {
        Command::Analyze(p) => analyze(p),
        Command::Ncc { poly, p0 } => {
            let phi = load(poly)?.original();
            let cert = ncc_certify(&phi, *p0, &cfg)?;
            let violated = matches!(cert.status, NccStatus::Violation { .. });
            Ok(Output::new(cert)?.negative_if(violated))
        }
        Command::Densities { poly, p, p0, k_max } => Output::new(local_report(&load(poly)?.original(), *p, *p0, *k_max, &cfg)?),
        Command::Series { poly, p0 } => Output::new(singular_series(&load(poly)?.original(), *p0, None, &cfg)?),
        Command::Integral(a) => integral(a, g.seed),
        Command::Count(a) => count(a, &cfg, g.seed),
        Command::Search { poly, max_shell } => {
            let r = smallest_solution(&load(poly)?.original(), *max_shell, &cfg)?;
            let none = matches!(r.outcome, SearchOutcome::Exhausted { .. });
            Ok(Output::new(r)?.negative_if(none))
        }
        Command::Exponents(a) => exponents(a),
        Command::Census { poly, h, p, h_max, constant } => {
            let c = load(poly)?.poly.cubic_part();
            match h_max {
                Some(hm) => {
                    let profile = CensusProfile::default_for(c.n());
                    let r = psi_good_report(&c, *hm, profile, *constant, &cfg)?;
                    let consistent = r.consistent;
                    Ok(Output::new(r)?.negative_if(!consistent))
                }
                None => {
                    let r = rank_census(&c, *h, *p, &cfg)?;
                    let mut csv = String::from("rank,count\n");
                    for (rank, count) in &r.counts {
                        csv.push_str(&format!("{rank},{count}\n"));
                    }
                    Ok(Output::new(r)?.with_csv(csv))
                }
            }
        }
        Command::Probe(p) => probe(p, &cfg, g.seed),
        Command::Replay { .. } => unreachable!("replay is handled before dispatch"),
    }
}

fn analyze(p: &PolyArg) -> Result<Output> {
    let sym = load(p)?;
    let phi = &sym.poly;
    let (kind, threshold) = threshold_delta(&sym.original());
    let norm = match normalize(phi) {
        Ok(nm) => json!({
            "c111": nm.c111.to_string(),
            "height": nm.height.to_string(),
            "transform": nm.transform.iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "poly": polynomial_to_value(&nm.poly),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let dc = delta(phi);
    Output::new(json!({
        "n": phi.n(),
        "scale": sym.scale,
        "homogeneous": phi.is_homogeneous(),
        "height": phi.height().to_string(),
        "kind": kind,
        "degenerate": dc.is_degenerate(),
        "delta_C": dc,
        "delta_phi": delta_phi(phi),
        "threshold_delta": threshold,
        "normalization": norm,
    }))
}

fn integral(a: &IntegralArgs, seed: u64) -> Result<Output> {
    if !(a.z > 0.0) {
        bail!("field `Z`: must be positive");
    }
    let opts = IntegralOptions {
        abs_tol: a.tol,
        seed,
        ..IntegralOptions::default()
    };
    let sym = load(&a.poly)?;
    if a.from_point {
        let c = sym.poly.cubic_part();
        let mode = a.h.map_or(PointMode::NVariable, PointMode::HInvariant);
        let pt = match real_point(&c, mode)? {
            RealPointResult::IntegerSolution { x } => {
                return Output::new(json!({ "integer_solution": x.iter().map(|v| v.to_string()).collect::<Vec<_>>() }))
            }
            RealPointResult::Point(pt) => pt,
        };
        let bx = build_box(&c, &pt)?;
        let est = singular_integral_box(&bx, a.z, &opts)?;
        let volume = if a.volume { Some(slice_volume(&bx, &opts)?) } else { None };
        return Output::new(json!({ "point": pt, "box": bx, "integral": est, "volume": volume }));
    }
    let phi = sym.original();
    corners("lo", &a.lo, &a.hi, phi.n())?;
    let est = match a.method {
        Method::Auto => singular_integral(&phi, &a.lo, &a.hi, a.z, &opts)?,
        Method::Coarea => singular_integral_coarea(&phi, &a.lo, &a.hi, a.z, &opts)?,
    };
    let volume = if a.volume { Some(slice_volume_at(&phi, &a.lo, &a.hi, 0.0, &opts)?) } else { None };
    Output::new(json!({ "lo": a.lo, "hi": a.hi, "integral": est, "volume": volume }))
}

fn count(a: &CountArgs, cfg: &Config, seed: u64) -> Result<Output> {
    let phi = load(&a.poly)?.original();
    let n = phi.n();
    if !a.compare.is_empty() {
        corners("lo", &a.lo, &a.hi, n)?;
        let opts = IntegralOptions {
            seed,
            ..IntegralOptions::default()
        };
        let table = asymptotic_compare(&phi, &a.lo, &a.hi, &a.compare, a.p0, a.u, cfg, &opts)?;
        let csv = table.csv();
        return Ok(Output::new(table)?.with_csv(csv));
    }
    let p = a.p.ok_or_else(|| anyhow!("field `P`: required unless --compare is given"))?;
    let result = if a.lo.is_empty() && a.hi.is_empty() {
        if p < 0.0 || p.fract() != 0.0 {
            bail!("field `P`: the cube [-P, P]^n needs a non-negative integer");
        }
        count_solutions(&phi, &IntBox::cube(n, p as i64), cfg)?
    } else {
        corners("lo", &a.lo, &a.hi, n)?;
        count_scaled(&phi, &a.lo, &a.hi, p, cfg)?
    };
    let mut v = serde_json::to_value(&result)?;
    if a.naive {
        let naive = count_naive(&phi, &result.region, cfg)?;
        v["naive"] = json!(naive);
        v["agree"] = json!(naive == result.count);
    }
    Output::new(v)
}

fn exponents(a: &ExponentArgs) -> Result<Output> {
    if a.theorem.is_some() {
        if a.n_from > a.n_to {
            bail!("field `n_from`: exceeds n_to");
        }
        let t = theorem_h14(a.n_from, a.n_to);
        let holds = t.holds_on_range;
        return Ok(Output::new(t)?.negative_if(!holds));
    }
    let psi = optional_psi(&a.psi)?;
    let delta = a.delta.as_deref().map(|d| rational("delta", d)).transpose()?;
    let sys = ExponentSystem::concrete(a.t, a.n, psi, delta)?;
    let report = sys.report(a.n);
    let failed = !report.all_pass();
    let mut v = json!({ "T": a.t, "n": a.n, "report": report, "psi": psi_requirement(&sys, a.n) });
    let mut out_csv = None;
    if !a.thresholds.is_empty() {
        let grid = a.thresholds.iter().map(|r| rational("thresholds", r)).collect::<Result<Vec<_>>>()?;
        let prof = threshold_profile(&sys, a.n, &grid);
        out_csv = Some(prof.csv());
        v["thresholds"] = serde_json::to_value(&prof)?;
    }
    let mut out = Output::new(v)?.negative_if(failed);
    out.csv = out_csv;
    Ok(out)
}

fn probe(p: &Probe, cfg: &Config, seed: u64) -> Result<Output> {
    match p {
        Probe::Minor { q, a, theta, p, h, height } => Output::new(MinorArcProbe::new(*q, *a, *theta, *p, *h, *height)?),
        Probe::Weyl { poly, q, a, theta, p, psi } => {
            let phi = load(poly)?.original();
            let alpha = Alpha::new(*a, *q, *theta)?;
            let r = weyl_bound_probe(&phi, &alpha, *p, *psi, cfg)?;
            let csv = format!("{}\n{}\n", WeylProbe::CSV_HEADER, r.csv_row());
            Ok(Output::new(r)?.with_csv(csv))
        }
        Probe::Gauss { poly, q, a } => {
            let s = gauss_sum(&load(poly)?.original(), *q, *a, cfg)?;
            let discrepancy = s.discrepancy();
            let mut v = serde_json::to_value(&s)?;
            v["discrepancy"] = json!(discrepancy);
            Output::new(v)
        }
        Probe::Bootstrap { q_max, m_max } => {
            let g = bootstrap_grid(*q_max, *m_max);
            let found = !g.counterexamples.is_empty();
            Ok(Output::new(g)?.negative_if(found))
        }
        Probe::Shrinking { n, z, a, trials } => {
            if !(*z > 0.0 && *z <= 1.0) {
                bail!("field `Z`: need 0 < Z <= 1");
            }
            let s = shrinking_survey(*n, *a, *z, *trials, seed, cfg)?;
            let mut csv = String::from("trial,ratio\n");
            for (i, r) in s.ratios.iter().enumerate() {
                csv.push_str(&format!("{i},{r}\n"));
            }
            Ok(Output::new(s)?.with_csv(csv))
        }
    }
}
