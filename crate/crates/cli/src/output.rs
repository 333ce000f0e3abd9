//! CSV output, JSON metadata sidecar and optional gnuplot script.

use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Map, Value};

use schroeder_tails::{density, offspring, poincare, schroeder, simulate, spectral};

use crate::config::RunConfig;

/// Axis layout of the plot script.
pub struct Plot {
    xlabel: &'static str,
    ylabel: &'static str,
    log: bool,
    /// (column, title) pairs plotted against column 1
    series: Vec<(usize, &'static str)>,
}

impl Plot {
    pub fn linear(xlabel: &'static str, ylabel: &'static str) -> Self {
        Self {
            xlabel,
            ylabel,
            log: false,
            series: vec![(2, ylabel)],
        }
    }

    pub fn log_log(xlabel: &'static str, ylabel: &'static str) -> Self {
        Self {
            log: true,
            ..Self::linear(xlabel, ylabel)
        }
    }

    pub fn compare() -> Self {
        Self {
            xlabel: "x",
            ylabel: "p(x)",
            log: true,
            series: vec![(2, "iteration"), (3, "fourier"), (4, "x^alpha V(x)")],
        }
    }

    fn script(&self, csv_name: &str) -> String {
        let mut s = String::new();
        s.push_str("set datafile separator ','\n");
        if self.log {
            s.push_str("set logscale xy\n");
        }
        s.push_str(&format!("set xlabel '{}'\nset ylabel '{}'\n", self.xlabel, self.ylabel));
        s.push_str("set key left top\n");
        let parts: Vec<String> = self
            .series
            .iter()
            .enumerate()
            .map(|(i, (col, title))| {
                let file = if i == 0 { format!("'{csv_name}'") } else { "''".into() };
                format!("{file} using 1:{col} skip 1 with lines title '{title}'")
            })
            .collect();
        s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
        s
    }
}

#[derive(Default)]
pub struct Report {
    pub csv: String,
    pub meta: Map<String, Value>,
    pub plot: Option<Plot>,
}

fn tolerances() -> Value {
    json!({
        "normalization": offspring::NORMALIZATION_TOLERANCE,
        "coefficient_cap": offspring::DEFAULT_COEFFICIENT_CAP,
        "exact_prefix": offspring::EXACT_PREFIX,
        "phi_direct_radius": schroeder::DIRECT_RADIUS,
        "phi_series_tolerance_f64": schroeder::series_tolerance::<f64>(),
        "phi_max_order": schroeder::MAX_ADAPTIVE_ORDER,
        "pi_remainder_tolerance_f64": poincare::remainder_tolerance::<f64>(),
        "pi_cancellation_limit": poincare::CANCELLATION_LIMIT,
        "pi_max_order": poincare::MAX_ADAPTIVE_ORDER,
        "kstar_phi_argument_limit": spectral::PHI_ARGUMENT_LIMIT,
        "spectral_cutoff_f64": spectral::spectral_cutoff::<f64>(),
        "aliasing_threshold": spectral::ALIASING_THRESHOLD,
        "imag_residue_limit": spectral::IMAG_RESIDUE_LIMIT,
        "fourier_threshold": density::FourierQuadrature::default().threshold,
        "fourier_y_limit": density::FourierQuadrature::default().y_max,
        "negative_density_allowance": density::NEGATIVE_ALLOWANCE,
        "ks_coverage_tolerance": simulate::COVERAGE_TOLERANCE,
        "population_cap": simulate::DEFAULT_POPULATION_CAP,
    })
}

impl Report {
    pub fn finish(
        self,
        command: &str,
        cfg: &RunConfig,
        elapsed: Duration,
        out: Option<&Path>,
        emit_plot: bool,
    ) -> io::Result<()> {
        let Some(path) = out else {
            io::stdout().lock().write_all(self.csv.as_bytes())?;
            return Ok(());
        };
        std::fs::write(path, &self.csv)?;
        let meta = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "diagnostics": self.meta,
            "tolerances": tolerances(),
            "elapsed_seconds": elapsed.as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&meta).expect("metadata is valid json");
        std::fs::write(path.with_extension("json"), text + "\n")?;
        if emit_plot {
            let plot = self.plot.unwrap_or_else(|| Plot::linear("column 1", "column 2"));
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out.csv");
            std::fs::write(path.with_extension("gp"), plot.script(name))?;
        }
        Ok(())
    }
}
