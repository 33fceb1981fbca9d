//! Per-sample simulation records and their CSV form.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crashlab_core::doe::{DOE_HEADER, FEATURE_NAMES};
use crashlab_core::fmt::sig;
use crashlab_core::{
    build_rom, extract_metrics, forming_feasibility, reference_oracle, CrashMetrics, CrashTrace, DesignPoint,
    Orientation,
};
use crashlab_ml::Dataset;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{DataSource, RunConfig};
use crate::error::{PipelineError, Result};

/// Columns appended to the DOE columns in simulation and dataset CSVs.
pub const RESULT_COLUMNS: &str = "formed,knockdown,feasibility_score,cle,ea_J,intrusion_mm,decel_mps2";

/// Digits written for every real in result CSVs.
pub const CSV_DIGITS: usize = 9;

/// Offset separating the noise stream from other consumers of the run seed.
const NOISE_SEED_TAG: u64 = 0x6e6f_6973_6500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Cle,
    Ea,
    Intrusion,
    Decel,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::Cle, Target::Ea, Target::Intrusion, Target::Decel];

    /// Short name used in file names and configs.
    pub fn name(self) -> &'static str {
        match self {
            Self::Cle => "cle",
            Self::Ea => "ea",
            Self::Intrusion => "intrusion",
            Self::Decel => "decel",
        }
    }

    /// Column header, with units.
    pub fn column(self) -> &'static str {
        match self {
            Self::Cle => "cle",
            Self::Ea => "ea_J",
            Self::Intrusion => "intrusion_mm",
            Self::Decel => "decel_mps2",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn of(self, m: &CrashMetrics<f64>) -> f64 {
        match self {
            Self::Cle => m.cle,
            Self::Ea => m.ea,
            Self::Intrusion => m.intrusion,
            Self::Decel => m.deceleration,
        }
    }
}

/// Outcome of one DOE row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub sample_id: usize,
    pub point: DesignPoint,
    pub formed: bool,
    pub knockdown: f64,
    pub feasibility_score: f64,
    /// Present exactly when `formed`.
    pub metrics: Option<CrashMetrics<f64>>,
}

/// Runs the forming gate and, for formed designs, the crash model or the
/// reference equations. Also returns the trace in surrogate mode.
pub fn simulate_sample(
    cfg: &RunConfig,
    sample_id: usize,
    point: &DesignPoint,
) -> Result<(SimRecord, Option<CrashTrace>)> {
    let fail = |e: &dyn std::fmt::Display| PipelineError::sample("simulate", sample_id, e);
    let outcome = forming_feasibility(point, &cfg.forming, &cfg.geometry).map_err(|e| fail(&e))?;
    let formed = outcome.feasible || !cfg.forming_gate;
    let mut record = SimRecord {
        sample_id,
        point: *point,
        formed,
        knockdown: outcome.knockdown,
        feasibility_score: outcome.feasibility_score,
        metrics: None,
    };
    if !formed {
        return Ok((record, None));
    }
    let mut trace = None;
    let metrics = match cfg.data_source {
        DataSource::Surrogate => {
            let tr = surrogate_trace(cfg, sample_id, point)?;
            let m = extract_metrics(&tr).map_err(|e| fail(&e))?;
            trace = Some(tr);
            m
        }
        DataSource::Oracle => reference_oracle(point).map_err(|e| fail(&e))?,
        DataSource::OracleNoisy => {
            let m = reference_oracle(point).map_err(|e| fail(&e))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(NOISE_SEED_TAG));
            rng.set_stream(sample_id as u64);
            let mut noisy = |v: f64| {
                let z: f64 = StandardNormal.sample(&mut rng);
                v * (1.0 + cfg.noise_rel * z)
            };
            CrashMetrics {
                cle: noisy(m.cle),
                ea: noisy(m.ea),
                intrusion: noisy(m.intrusion),
                deceleration: noisy(m.deceleration),
            }
        }
    };
    record.metrics = Some(metrics);
    Ok((record, trace))
}

/// Crash-model trace of one design, ignoring the forming verdict (the
/// knockdown still applies).
pub fn surrogate_trace(cfg: &RunConfig, sample_id: usize, point: &DesignPoint) -> Result<CrashTrace> {
    let fail = |e: &dyn std::fmt::Display| PipelineError::sample("simulate", sample_id, e);
    let mut outcome = forming_feasibility(point, &cfg.forming, &cfg.geometry).map_err(|e| fail(&e))?;
    outcome.feasible = true;
    let rom = build_rom(point, &outcome, &cfg.material, &cfg.geometry, &cfg.rom).map_err(|e| fail(&e))?;
    crashlab_core::crashsim::integrate_with(&rom, &cfg.solver).map_err(|e| fail(&e))
}

pub fn csv_header() -> String {
    format!("{DOE_HEADER},{RESULT_COLUMNS}")
}

fn write_row<W: Write>(sink: &mut W, r: &SimRecord) -> std::io::Result<()> {
    let p = &r.point;
    let metrics = match &r.metrics {
        Some(m) => Target::ALL.map(|t| sig(t.of(m), CSV_DIGITS)).join(","),
        None => ",,,".to_string(),
    };
    writeln!(
        sink,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.sample_id,
        p.n_layers,
        sig(p.thickness, 6),
        p.orientation,
        sig(p.punch_velocity, 6),
        sig(p.layer_temp, 6),
        sig(p.tool_temp, 6),
        sig(p.air_temp, 6),
        u8::from(r.formed),
        sig(r.knockdown, CSV_DIGITS),
        sig(r.feasibility_score, CSV_DIGITS),
        metrics
    )
}

/// Writes `records` in the given order under [`csv_header`].
pub fn write_records<'a, W: Write>(
    mut sink: W,
    records: impl IntoIterator<Item = &'a SimRecord>,
) -> std::io::Result<()> {
    writeln!(sink, "{}", csv_header())?;
    for r in records {
        write_row(&mut sink, r)?;
    }
    Ok(())
}

/// Parses a file written by [`write_records`]. `what` names the file in errors.
pub fn read_records<R: BufRead>(source: R, what: &str) -> Result<Vec<SimRecord>> {
    let bad = |line: usize, m: String| PipelineError::stage("read", format!("{what} line {line}: {m}"));
    let mut lines = source.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| bad(1, e.to_string()))?,
        None => return Err(bad(1, "empty file".into())),
    };
    if header.trim() != csv_header() {
        return Err(bad(1, format!("expected header `{}`", csv_header())));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let line = line.map_err(|e| bad(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 15 {
            return Err(bad(n, format!("expected 15 fields, found {}", f.len())));
        }
        let real = |j: usize| -> Result<f64> {
            f[j].parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(n, format!("field {} = `{}` is not a number", j + 1, f[j])))
        };
        let int = |j: usize| -> Result<usize> {
            f[j].parse()
                .map_err(|_| bad(n, format!("field {} = `{}` is not an integer", j + 1, f[j])))
        };
        let orientation =
            Orientation::from_label(f[3]).ok_or_else(|| bad(n, format!("unknown orientation `{}`", f[3])))?;
        let formed = match f[8] {
            "1" => true,
            "0" => false,
            s => return Err(bad(n, format!("formed = `{s}` is not 0 or 1"))),
        };
        let metrics = if formed {
            Some(CrashMetrics {
                cle: real(11)?,
                ea: real(12)?,
                intrusion: real(13)?,
                deceleration: real(14)?,
            })
        } else if f[11..].iter().any(|s| !s.is_empty()) {
            return Err(bad(n, "metrics given for an unformed sample".into()));
        } else {
            None
        };
        out.push(SimRecord {
            sample_id: int(0)?,
            point: DesignPoint {
                n_layers: int(1)? as u32,
                thickness: real(2)?,
                orientation,
                punch_velocity: real(4)?,
                layer_temp: real(5)?,
                tool_temp: real(6)?,
                air_temp: real(7)?,
            },
            formed,
            knockdown: real(9)?,
            feasibility_score: real(10)?,
            metrics,
        });
    }
    Ok(out)
}

/// Learning table over formed records: the seven design features and one
/// column per target, plus the sample id of each row.
pub fn ml_dataset(records: &[SimRecord]) -> Result<(Dataset, Vec<usize>)> {
    let formed: Vec<&SimRecord> = records.iter().filter(|r| r.formed).collect();
    let mut x = Array2::zeros((formed.len(), FEATURE_NAMES.len()));
    let mut targets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, r) in formed.iter().enumerate() {
        for (j, v) in r.point.features().into_iter().enumerate() {
            x[[i, j]] = v;
        }
        let m = r.metrics.as_ref().expect("formed records carry metrics");
        for t in Target::ALL {
            targets.entry(t.name().to_string()).or_default().push(t.of(m));
        }
    }
    if formed.is_empty() {
        for t in Target::ALL {
            targets.insert(t.name().to_string(), Vec::new());
        }
    }
    let ds = Dataset::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), x, targets)
        .map_err(|e| PipelineError::stage("dataset", e))?;
    Ok((ds, formed.iter().map(|r| r.sample_id).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let cfg = RunConfig {
            data_source: DataSource::Oracle,
            ..RunConfig::default()
        };
        let doe = crashlab_core::lhs_sample(&cfg.space, 12, 3)
            .unwrap()
            .canonical()
            .unwrap();
        let recs: Vec<SimRecord> = doe
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| simulate_sample(&cfg, i, p).unwrap().0)
            .collect();
        assert!(recs.iter().any(|r| !r.formed));
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let back = read_records(&buf[..], "test").unwrap();
        let mut again = Vec::new();
        write_records(&mut again, &back).unwrap();
        assert_eq!(buf, again);
        assert_eq!(back.len(), 12);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.point, b.point);
            assert_eq!(a.formed, b.formed);
        }
    }

    #[test]
    fn noise_depends_on_sample_not_order() {
        let cfg = RunConfig {
            data_source: DataSource::OracleNoisy,
            forming_gate: false,
            ..RunConfig::default()
        };
        let doe = crashlab_core::lhs_sample(&cfg.space, 4, 1).unwrap();
        let p = doe.points[2];
        let a = simulate_sample(&cfg, 7, &p).unwrap().0.metrics.unwrap();
        let b = simulate_sample(&cfg, 7, &p).unwrap().0.metrics.unwrap();
        let c = simulate_sample(&cfg, 8, &p).unwrap().0.metrics.unwrap();
        let clean = reference_oracle(&p).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.ea / clean.ea - 1.0).abs() < 0.06);
    }

    #[test]
    fn rejects_malformed_rows() {
        let h = csv_header();
        for body in [
            "0,8,0.25,A,5,300,120,20,2,1,0,,,,",
            "0,8,0.25,C,5,300,120,20,0,1,0,,,,",
            "0,8,0.25,A,5,300,120,20,0,1,0,1,2,3,4",
        ] {
            let text = format!("{h}\n{body}\n");
            assert!(read_records(text.as_bytes(), "t").is_err(), "{body}");
        }
        assert!(read_records("x\n".as_bytes(), "t").is_err());
    }
}
