//! One function per subcommand; each writes its artifacts and returns a
//! JSON summary for the manifest.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thermoflow::coding::{
    alpha, alpha_perp, beta, fit_contraction_exponent, itinerary, round_trip, system_hash, telescoping_check,
    ContractionRate, FlowPoint, ItineraryOptions, SuspensionSystem, UOptions,
};
use thermoflow::realization::{
    deformed_cocycle_check, holonomy_derivative, realize, rho_equals_one_check, verify_radon_nikodym,
    RealizeOptions, RnReport,
};
use thermoflow::sft::format_word;
use thermoflow::thermo::{
    find_rho_with, gibbs_with, pressure_partition_sum, transfer_spectral_pressure_with, RhoOptions, SolverOptions,
    MIXING_SEARCH,
};
use thermoflow::volume::{
    analytic_pair, conformal_residual, invariant_volume_demo, DemoOptions, GridScalarField, GridVectorField,
    PoissonOptions,
};
use thermoflow::{Error, Result};

use crate::config::ExperimentConfig;
use crate::output::Output;

pub struct Outcome {
    pub summary: Value,
    pub system_hash: Option<String>,
}

fn outcome(summary: Value) -> Outcome {
    Outcome {
        summary,
        system_hash: None,
    }
}

fn with_system(summary: Value, sys: &SuspensionSystem) -> Outcome {
    Outcome {
        summary,
        system_hash: Some(system_hash(&sys.config)),
    }
}

fn solver(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: cfg.tol.unwrap_or(SolverOptions::default().tol),
        max_iter: cfg.max_power_iters,
    }
}

fn rng(cfg: &ExperimentConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn random_points(sys: &SuspensionSystem, rng: &mut ChaCha8Rng, n: usize) -> Vec<FlowPoint> {
    (0..n)
        .map(|_| sys.point_from_unit([rng.gen(), rng.gen(), rng.gen()]))
        .collect()
}

fn realize_options(cfg: &ExperimentConfig) -> RealizeOptions {
    RealizeOptions {
        depth: cfg.depth,
        cells: cfg.cells,
        half_length: cfg.half_length,
        ..Default::default()
    }
}

fn e17(x: f64) -> String {
    format!("{x:.17e}")
}

fn point_cols(p: &FlowPoint) -> String {
    let x = p.x.to_f64();
    format!("{},{},{}", e17(x[0]), e17(x[1]), e17(p.h))
}

/// Summary statistics of per-sample errors; failures are counted apart.
fn stats(errors: &[f64], failures: usize) -> Value {
    let n = errors.len();
    let max = errors.iter().cloned().fold(0.0, f64::max);
    let mean = if n == 0 { f64::NAN } else { errors.iter().sum::<f64>() / n as f64 };
    json!({ "evaluated": n, "failures": failures, "max": max, "mean": mean })
}

pub fn sft(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let a = cfg.matrix()?;
    let words = a.enumerate_words(cfg.word_length)?;
    let mut csv = String::new();
    for w in &words {
        csv.push_str(&format_word(w));
        csv.push('\n');
    }
    out.text("words.csv", &csv)?;
    out.text("matrix.txt", &a.to_text())?;
    let summary = json!({
        "size": a.size(),
        "word_length": cfg.word_length,
        "word_count": words.len(),
        "mixing_exponent": a.mixing_exponent(MIXING_SEARCH),
    });
    out.json("sft.json", &summary)?;
    Ok(outcome(summary))
}

pub fn pressure(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let a = cfg.matrix()?;
    let g = cfg.potential(&a, 0.0)?;
    let spectral = transfer_spectral_pressure_with(&a, &g, solver(cfg))?;
    let sum = pressure_partition_sum(&a, &g, cfg.partition_sum_length)?;
    let mut csv = String::from("method,value,depth,error_bound\n");
    for e in [&spectral, &sum] {
        let method = serde_json::to_value(e.method)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            method.as_str().unwrap_or_default(),
            e17(e.value),
            e.depth,
            e17(e.error_bound)
        ));
    }
    out.text("pressure.csv", &csv)?;
    out.text("potential.csv", &g.to_csv())?;
    Ok(outcome(json!({ "spectral": spectral, "partition_sum": sum })))
}

pub fn rho(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let a = cfg.matrix()?;
    let g = cfg.potential(&a, 1.0)?;
    let opts = RhoOptions {
        tol: cfg.tol.unwrap_or(RhoOptions::default().tol),
        solver: SolverOptions {
            max_iter: cfg.max_power_iters,
            ..RhoOptions::default().solver
        },
        ..Default::default()
    };
    let r = find_rho_with(&a, &g, opts)?;
    out.json("rho.json", &r)?;
    out.text("potential.csv", &g.to_csv())?;
    Ok(outcome(serde_json::to_value(r)?))
}

pub fn gibbs(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let a = cfg.matrix()?;
    let g = cfg.potential(&a, 0.0)?;
    let data = gibbs_with(&a, &g, solver(cfg))?;
    let export = data.export(cfg.gibbs_depth)?;
    out.json("gibbs.json", &export)?;
    out.text("potential.csv", &g.to_csv())?;
    Ok(outcome(json!({ "pressure": data.pressure, "depth": cfg.gibbs_depth })))
}

pub fn partition(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let report = part.verify(64);
    out.json("partition.json", &part)?;
    out.json("markov.json", &report)?;
    out.text("matrix.txt", &part.a.to_text())?;
    let summary = json!({
        "rectangles": part.len(),
        "level": part.level,
        "mixing_exponent": part.mixing_exponent,
        "lambda_u": part.lambda_u,
        "stable_defect": report.stable_defect,
        "unstable_defect": report.unstable_defect,
        "tiling_ok": report.tiling_ok,
    });
    Ok(with_system(summary, &sys))
}

pub fn code(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let pts = random_points(&sys, &mut rng(cfg), cfg.samples);
    let m = cfg.itinerary_length;
    let trips: Vec<_> = pts.par_iter().map(|&p| round_trip(&sys, &part, p, m)).collect::<Result<_>>()?;
    let mut csv = String::from("x,y,h,rect,projection,pi_a,radius,error\n");
    for t in &trips {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            point_cols(&t.p),
            t.rect + 1,
            e17(t.projection),
            e17(t.pi_a),
            e17(t.radius),
            e17(t.error)
        ));
    }
    out.text("code.csv", &csv)?;
    let it = itinerary(&sys, &part, pts[0], m, ItineraryOptions::default())?;
    out.text("itinerary.csv", &it.to_csv())?;
    let mut trace = String::from("t,alpha,alpha_perp,beta\n");
    for j in 0..=40 {
        let t = 0.25 * j as f64;
        trace.push_str(&format!(
            "{},{},{},{}\n",
            e17(t),
            e17(alpha(&sys, pts[0], t)),
            e17(alpha_perp(&sys, pts[0], t)),
            e17(beta(&sys, pts[0], t))
        ));
    }
    out.text("cocycles.csv", &trace)?;
    let exponent = fit_contraction_exponent(&sys, &part, &pts, 4..=16.min(m))?;
    let errors: Vec<f64> = trips.iter().map(|t| t.error).collect();
    let summary = json!({
        "length": m,
        "round_trip": stats(&errors, 0),
        "contraction_exponent": exponent,
        "log_lambda_u": sys.base.log_lambda(),
    });
    out.json("code.json", &summary)?;
    Ok(with_system(summary, &sys))
}

pub fn realize_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let f = cfg.observable()?;
    let fam = realize(&sys, &part, f.as_ref(), realize_options(cfg))?;
    let pts = random_points(&sys, &mut rng(cfg), cfg.segments);
    let segs = pts.iter().map(|&p| fam.measure_at(p)).collect::<Result<Vec<_>>>()?;
    let export = fam.export(&segs);
    out.json("family.json", &export.header)?;
    out.text("masses.csv", &export.csv)?;
    let summary = json!({
        "rho": fam.rho(),
        "depth": cfg.depth,
        "cells": cfg.cells,
        "segments": segs.len(),
        "f_a_variation": fam.fa.variation,
    });
    Ok(with_system(summary, &sys))
}

pub fn verify_rn(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let f = cfg.observable()?;
    let fam = realize(&sys, &part, f.as_ref(), realize_options(cfg))?;
    let mut r = rng(cfg);
    let t_max = cfg.max_returns * sys.roof_bounds().0;
    let cases: Vec<(FlowPoint, f64)> = random_points(&sys, &mut r, cfg.samples)
        .into_iter()
        .map(|p| (p, r.gen::<f64>() * t_max))
        .collect();
    let results: Vec<Result<RnReport>> = cases.par_iter().map(|&(p, t)| verify_radon_nikodym(&fam, p, t)).collect();
    let mut csv = format!("{}\n", RnReport::csv_header());
    let mut fails = String::from("x,y,h,t,error\n");
    let mut errors = Vec::new();
    for ((p, t), res) in cases.iter().zip(results) {
        match res {
            Ok(rep) => {
                csv.push_str(&rep.csv_row());
                csv.push('\n');
                errors.push(rep.rel_err);
            }
            Err(e) => fails.push_str(&format!("{},{},\"{e}\"\n", point_cols(p), e17(*t))),
        }
    }
    out.text("radon_nikodym.csv", &csv)?;
    out.text("radon_nikodym_failures.csv", &fails)?;
    let summary = json!({ "rho": fam.rho(), "rel_err": stats(&errors, cases.len() - errors.len()) });
    Ok(with_system(summary, &sys))
}

pub fn verify_holonomy(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let f = cfg.observable()?;
    let fam = realize(&sys, &part, f.as_ref(), realize_options(cfg))?;
    let mut r = rng(cfg);
    let reach = 0.3 * part.radii[0];
    let (eu, es) = (sys.base.e_u, sys.base.e_s);
    let pairs: Vec<(FlowPoint, FlowPoint)> = random_points(&sys, &mut r, cfg.samples)
        .into_iter()
        .map(|p| {
            let (du, ds) = (reach * (2.0 * r.gen::<f64>() - 1.0), reach * (2.0 * r.gen::<f64>() - 1.0));
            let q = FlowPoint {
                x: p.x.add([du * eu[0] + ds * es[0], du * eu[1] + ds * es[1]]),
                h: p.h + 0.02 * (2.0 * r.gen::<f64>() - 1.0),
            };
            (p, q)
        })
        .collect();
    let results: Vec<_> = pairs.par_iter().map(|&(p, q)| holonomy_derivative(&fam, p, q)).collect();
    let mut csv = String::from("x,y,h,qx,qy,qh,estimate,expected,rel_err\n");
    let mut errors = Vec::new();
    for res in results.into_iter().flatten() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            point_cols(&res.p),
            point_cols(&res.q),
            e17(res.estimate),
            e17(res.expected),
            e17(res.rel_err)
        ));
        errors.push(res.rel_err);
    }
    out.text("holonomy.csv", &csv)?;
    let summary = json!({ "rho": fam.rho(), "rel_err": stats(&errors, pairs.len() - errors.len()) });
    Ok(with_system(summary, &sys))
}

pub fn verify_telescoping(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let f = cfg.observable()?;
    let mut r = rng(cfg);
    let cases: Vec<(FlowPoint, usize)> = random_points(&sys, &mut r, cfg.samples)
        .into_iter()
        .map(|p| (p, r.gen_range(0..=cfg.telescoping_max_m)))
        .collect();
    let opts = UOptions::default();
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(p, m)| telescoping_check(&sys, &part, f.as_ref(), p, m, &opts))
        .collect();
    let mut csv = String::from("x,y,h,m,t,lhs,rhs,residual\n");
    let mut errors = Vec::new();
    for res in results.into_iter().flatten() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            point_cols(&res.p),
            res.m,
            e17(res.t),
            e17(res.lhs),
            e17(res.rhs),
            e17(res.residual)
        ));
        errors.push(res.residual);
    }
    out.text("telescoping.csv", &csv)?;
    let summary = json!({ "residual": stats(&errors, cases.len() - errors.len()) });
    Ok(with_system(summary, &sys))
}

pub fn verify_deformed(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let fam = realize(&sys, &part, &ContractionRate, realize_options(cfg))?;
    let mut r = rng(cfg);
    let t_max = cfg.max_returns * sys.roof_bounds().0;
    let cases: Vec<(FlowPoint, f64)> = random_points(&sys, &mut r, cfg.samples)
        .into_iter()
        .map(|p| (p, r.gen::<f64>() * t_max))
        .collect();
    let results: Vec<_> = cases.par_iter().map(|&(p, t)| (p, deformed_cocycle_check(&fam, p, t))).collect();
    let mut csv = String::from("x,y,h,t,alpha,alpha_perp_deformed,residual,relative\n");
    let mut errors = Vec::new();
    for (p, res) in results {
        if let Ok(d) = res {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                point_cols(&p),
                e17(d.t),
                e17(d.alpha),
                e17(d.alpha_perp_deformed),
                e17(d.residual),
                e17(d.relative)
            ));
            errors.push(d.relative);
        }
    }
    out.text("deformed_cocycle.csv", &csv)?;
    let summary = json!({ "rho": fam.rho(), "relative": stats(&errors, cases.len() - errors.len()) });
    Ok(with_system(summary, &sys))
}

pub fn verify_rho_one(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome> {
    let sys = cfg.system()?;
    let part = cfg.partition(&sys)?;
    let rep = rho_equals_one_check(&sys, &part, cfg.depth, &UOptions::default())?;
    out.json("rho_one.json", &rep)?;
    Ok(with_system(serde_json::to_value(rep)?, &sys))
}

pub fn volume(cfg: &ExperimentConfig, x0: Option<PathBuf>, h0: Option<PathBuf>, out: &mut Output) -> Result<Outcome> {
    let dims = vec![cfg.grid; cfg.dim];
    let (x0, h0) = match (x0, h0) {
        (Some(x), Some(h)) => (GridVectorField::read(&x)?, GridScalarField::read(&h)?),
        (None, None) => analytic_pair(&dims)?,
        _ => return Err(Error::Parameter("--x0 and --h0 must be given together".into())),
    };
    let opts = DemoOptions {
        ks: cfg.ks.clone(),
        poisson: PoissonOptions {
            tol: cfg.tol.unwrap_or(PoissonOptions::default().tol),
            ..Default::default()
        },
        ..Default::default()
    };
    let report = invariant_volume_demo(&x0, &h0, &opts)?;
    out.text("volume.csv", &report.to_csv())?;
    out.json("volume.json", &report)?;
    x0.write(&out.dir().join("x0"))?;
    h0.write(&out.dir().join("h0"))?;
    for name in ["x0.bin", "x0.json", "h0.bin", "h0.json"] {
        out.record(name)?;
    }
    // Second-order check of the conformal rule on the analytic pair.
    let mut table = String::from("grid,residual,ratio\n");
    let mut prev: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut m = 16;
    while m <= cfg.grid.max(32) {
        let (x, h) = analytic_pair(&vec![m; cfg.dim])?;
        let res = conformal_residual(&x, &h)?.sup_norm();
        let ratio = prev.map_or(f64::NAN, |p| p / res);
        if prev.is_some() {
            ratios.push(ratio);
        }
        table.push_str(&format!("{m},{},{}\n", e17(res), e17(ratio)));
        prev = Some(res);
        m *= 2;
    }
    out.text("conformal_refinement.csv", &table)?;
    let last = report.rows.last();
    Ok(outcome(json!({
        "dims": report.dims,
        "consistency_residual": report.consistency_residual,
        "final_divergence": last.map(|r| r.divergence),
        "final_c1_distance": last.map(|r| r.c1_distance),
        "refinement_ratios": ratios,
    })))
}
