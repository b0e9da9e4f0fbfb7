//! The five computation subcommands. Each builds its inputs from the
//! effective config, calls the core library once, and hands the result to
//! the output layer. Levels are addressed by 2j everywhere.

use std::collections::BTreeMap;

use r3lambda::exact_partition::partition_level;
use r3lambda::kinetic::{custom_spectrum, kernel, radial_spectrum, Spectrum};
use r3lambda::resummation::{resum as resum_levels, ResumReport, SpectrumSource};
use r3lambda::toda::{
    condensate as condensate_fd, default_step, partition_with_source, toda_times, SourceSpectrum,
};
use r3lambda::{HalfInt, ModelParams, KernelParams, PartitionResult};
use serde::Serialize;

use crate::config::{ParamsConfig, RunConfig};
use crate::output::{emit, float_cell, int_cell, CsvTable};
use crate::CliError;

/// Spectrum for the requested level: the table entry when a table was
/// given (missing levels are an input error, never a silent fallback),
/// the radial eigenvalues otherwise.
fn level_spectrum(
    cfg: &RunConfig,
    j: HalfInt,
    params: &ModelParams,
) -> Result<(Spectrum, &'static str), CliError> {
    match &cfg.spectrum_table {
        Some(table) => {
            let omegas = table.get(&j.twice()).ok_or_else(|| {
                CliError::Config(format!(
                    "spectrum_table: no entry for level 2j = {}",
                    j.twice()
                ))
            })?;
            Ok((custom_spectrum(j, omegas)?, "table"))
        }
        None => Ok((radial_spectrum(j, params), "radial")),
    }
}

#[derive(Serialize)]
struct KernelRow {
    twice_k: i64,
    twice_l: i64,
    value: f64,
}

#[derive(Serialize)]
struct GroupRow {
    start: usize,
    len: usize,
    omega: f64,
}

#[derive(Serialize)]
struct SpectrumBody {
    twice_j: u32,
    params: ParamsConfig,
    spectrum_source: &'static str,
    kernel: Vec<KernelRow>,
    omegas: Vec<f64>,
    multiplicity_groups: Vec<GroupRow>,
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.params.to_model()?;
    let j = HalfInt::from_twice(cfg.twice_j);
    let kern = kernel(j, &params);
    let mut rows = Vec::new();
    for tk in j.twice_m_values() {
        for tl in j.twice_m_values() {
            rows.push(KernelRow {
                twice_k: tk,
                twice_l: tl,
                value: kern.value(tk, tl),
            });
        }
    }
    let (s, source) = level_spectrum(cfg, j, &params)?;
    let groups: Vec<GroupRow> = s
        .groups()
        .iter()
        .map(|&g| GroupRow {
            start: g.start,
            len: g.len,
            omega: s.group_value(g),
        })
        .collect();

    let mut csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                "kernel".into(),
                int_cell(r.twice_k),
                int_cell(r.twice_l),
                float_cell(r.value),
            ]
        })
        .collect();
    for (i, w) in s.omegas().iter().enumerate() {
        csv_rows.push(vec!["omega".into(), int_cell(i), String::new(), float_cell(*w)]);
    }
    for g in &groups {
        csv_rows.push(vec![
            "group".into(),
            int_cell(g.start),
            int_cell(g.len),
            float_cell(g.omega),
        ]);
    }
    let csv = CsvTable {
        header: vec!["kind", "index_a", "index_b", "value"],
        rows: csv_rows,
    };

    let body = SpectrumBody {
        twice_j: cfg.twice_j,
        params: cfg.params.clone(),
        spectrum_source: source,
        kernel: rows,
        omegas: s.omegas().to_vec(),
        multiplicity_groups: groups,
    };
    emit(cfg, body, Some(csv))
}

#[derive(Serialize)]
struct ZlevelBody {
    twice_j: u32,
    params: ParamsConfig,
    spectrum_source: &'static str,
    omegas: Vec<f64>,
    /// Signed natural log of Z_j; absent only if the sign were not +1,
    /// which the engine treats as a hard error upstream.
    ln_z: Option<f64>,
    result: PartitionResult,
}

pub fn zlevel(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.params.to_model()?;
    let j = HalfInt::from_twice(cfg.twice_j);
    let (s, source) = level_spectrum(cfg, j, &params)?;
    let kp = KernelParams::from_model(j, params.g2, params.lambda)?;
    let result = partition_level(&s, &kp, j, params.g2, params.lambda, cfg.policy.to_policy(cfg.eps0))?;

    let d = &result.diagnostics;
    let csv = CsvTable {
        header: vec!["field", "value"],
        rows: vec![
            vec!["twice_j".into(), int_cell(cfg.twice_j)],
            vec!["ln_z".into(), float_cell(result.log_z.signed_ln().unwrap_or(f64::NAN))],
            vec!["log_n_ln_abs".into(), float_cell(result.log_n.log_abs)],
            vec!["log_det_f_ln_abs".into(), float_cell(result.log_det_f.log_abs)],
            vec!["log_vdm_sq_ln_abs".into(), float_cell(result.log_vdm_sq.log_abs)],
            vec!["policy_used".into(), format!("{:?}", result.policy_used)],
            vec!["f_matrix_cond_1norm".into(), float_cell(d.f_matrix_cond_1norm)],
            vec!["extended_precision_used".into(), d.extended_precision_used.to_string()],
        ],
    };

    let body = ZlevelBody {
        twice_j: cfg.twice_j,
        params: cfg.params.clone(),
        spectrum_source: source,
        omegas: s.omegas().to_vec(),
        ln_z: result.log_z.signed_ln(),
        result,
    };
    emit(cfg, body, Some(csv))
}

#[derive(Serialize)]
struct ResumBody {
    params: ParamsConfig,
    spectrum_source: &'static str,
    report: ResumReport,
}

pub fn resum(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.params.to_model()?;
    let j_max = HalfInt::from_twice(cfg.twice_j_max);
    let (source, label) = match &cfg.spectrum_table {
        Some(table) => {
            let missing: Vec<u32> = (0..=cfg.twice_j_max)
                .filter(|tj| !table.contains_key(tj))
                .collect();
            if !missing.is_empty() {
                return Err(CliError::Config(format!(
                    "spectrum_table: missing levels 2j = {missing:?} below the cutoff"
                )));
            }
            let table: BTreeMap<u32, Vec<f64>> = table.clone();
            (SpectrumSource::CustomTable(table), "table")
        }
        None => (SpectrumSource::Radial, "radial"),
    };
    let report = resum_levels(&params, j_max, &source)?;

    let csv = CsvTable {
        header: vec!["twice_j", "increment", "partial_sum"],
        rows: report
            .twice_j
            .iter()
            .zip(report.increments.iter().zip(&report.partial_sums))
            .map(|(tj, (inc, ps))| vec![int_cell(tj), float_cell(*inc), float_cell(*ps)])
            .collect(),
    };

    let body = ResumBody {
        params: cfg.params.clone(),
        spectrum_source: label,
        report,
    };
    emit(cfg, body, Some(csv))
}

#[derive(Serialize)]
struct TodaBody {
    twice_j: u32,
    params: ParamsConfig,
    spectrum_source: &'static str,
    sigmas: Vec<f64>,
    t: Vec<f64>,
    t_bar: Vec<f64>,
    ln_z: Option<f64>,
    ln_z_sourced: Option<f64>,
    result: PartitionResult,
    result_sourced: PartitionResult,
}

pub fn toda(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.params.to_model()?;
    let j = HalfInt::from_twice(cfg.twice_j);
    let (s, source) = level_spectrum(cfg, j, &params)?;
    let sigmas = match &cfg.sigmas {
        Some(v) => {
            if v.len() != s.len() {
                return Err(CliError::Config(format!(
                    "sigmas: level 2j = {} needs {} entries, got {}",
                    cfg.twice_j,
                    s.len(),
                    v.len()
                )));
            }
            v.clone()
        }
        None => vec![0.0; s.len()],
    };
    let src = SourceSpectrum::new(sigmas.clone())?;
    let times = toda_times(&s, &src, cfg.n_times)?;
    let kp = KernelParams::from_model(j, params.g2, params.lambda)?;
    let policy = cfg.policy.to_policy(cfg.eps0);
    let plain = partition_level(&s, &kp, j, params.g2, params.lambda, policy)?;
    let sourced = partition_with_source(&s, &src, &kp, j, params.g2, params.lambda, policy)?;

    let mut csv_rows: Vec<Vec<String>> = Vec::new();
    for (i, v) in times.t.iter().enumerate() {
        csv_rows.push(vec!["t".into(), int_cell(i + 1), float_cell(*v)]);
    }
    for (i, v) in times.t_bar.iter().enumerate() {
        csv_rows.push(vec!["t_bar".into(), int_cell(i + 1), float_cell(*v)]);
    }
    csv_rows.push(vec![
        "ln_z".into(),
        String::new(),
        float_cell(plain.log_z.signed_ln().unwrap_or(f64::NAN)),
    ]);
    csv_rows.push(vec![
        "ln_z_sourced".into(),
        String::new(),
        float_cell(sourced.log_z.signed_ln().unwrap_or(f64::NAN)),
    ]);
    let csv = CsvTable {
        header: vec!["quantity", "n", "value"],
        rows: csv_rows,
    };

    let body = TodaBody {
        twice_j: cfg.twice_j,
        params: cfg.params.clone(),
        spectrum_source: source,
        sigmas,
        t: times.t,
        t_bar: times.t_bar,
        ln_z: plain.log_z.signed_ln(),
        ln_z_sourced: sourced.log_z.signed_ln(),
        result: plain,
        result_sourced: sourced,
    };
    emit(cfg, body, Some(csv))
}

#[derive(Serialize)]
struct CondensateBody {
    twice_j: u32,
    params: ParamsConfig,
    spectrum_source: &'static str,
    h: f64,
    value: f64,
    /// Step-halving residual of the finite differencing; does not include
    /// the error of the underlying partition evaluations.
    richardson_error: f64,
}

pub fn condensate(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.params.to_model()?;
    let j = HalfInt::from_twice(cfg.twice_j);
    let (s, source) = level_spectrum(cfg, j, &params)?;
    let kp = KernelParams::from_model(j, params.g2, params.lambda)?;
    let h = cfg.step.unwrap_or_else(|| default_step(&s));
    let est = condensate_fd(&s, &kp, j, params.g2, params.lambda, h)?;

    let csv = CsvTable {
        header: vec!["field", "value"],
        rows: vec![
            vec!["twice_j".into(), int_cell(cfg.twice_j)],
            vec!["h".into(), float_cell(est.h)],
            vec!["value".into(), float_cell(est.value)],
            vec!["richardson_error".into(), float_cell(est.richardson_error)],
        ],
    };
    let body = CondensateBody {
        twice_j: cfg.twice_j,
        params: cfg.params.clone(),
        spectrum_source: source,
        h: est.h,
        value: est.value,
        richardson_error: est.richardson_error,
    };
    emit(cfg, body, Some(csv))
}
