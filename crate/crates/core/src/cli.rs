//! Command-line surface. Each subcommand maps onto one library operation and
//! returns an [`Envelope`]; the binary only parses, renders and writes.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{self, SweepFamily};
use crate::dynamics::{self, ErrorTriplet};
use crate::error::{Error, Result};
use crate::oracle;
use crate::output::{Cell, Envelope, Format};
use crate::regions;

#[derive(Debug, Parser)]
#[command(
    name = "relay-tree",
    version,
    about = "Error dynamics of binary relay trees with failing sensors"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Seed for the Monte Carlo simulator.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct InitialArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub q0: f64,
}

impl InitialArgs {
    fn triplet(&self) -> Result<ErrorTriplet> {
        ErrorTriplet::in_domain(self.alpha0, self.beta0, self.q0)
    }

    fn echo(&self, env: Envelope) -> Envelope {
        env.param("alpha0", self.alpha0)
            .param("beta0", self.beta0)
            .param("q0", self.q0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Failure,
    Error,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level-by-level trajectory of (alpha, beta, q) with region labels.
    Trajectory {
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        levels: u32,
    },
    /// Upper boundaries of B1 and R_U on a uniform alpha grid.
    Boundaries {
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Region label of a single state.
    Classify {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
    },
    /// Bounds on log2(1/P_N), from L0 or from an initial state.
    Bounds {
        #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["alpha0", "beta0", "q0"])]
        l0: Option<f64>,
        #[arg(long, allow_negative_numbers = true, requires_all = ["beta0", "q0"])]
        alpha0: Option<f64>,
        #[arg(long, allow_negative_numbers = true, requires_all = ["alpha0", "q0"])]
        beta0: Option<f64>,
        #[arg(long, allow_negative_numbers = true, requires_all = ["alpha0", "beta0"])]
        q0: Option<f64>,
        #[arg(long)]
        n: u64,
    },
    /// Smallest N = 4^m whose lower bound guarantees P_N <= epsilon.
    SolveN {
        #[arg(long, allow_negative_numbers = true)]
        l0: f64,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
    /// Exact enumeration oracles against the recursion, per level.
    Oracle {
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        height: u32,
        /// Profile cap for the distribution enumerator.
        #[arg(long, default_value_t = oracle::DEFAULT_PROFILE_CAP)]
        cap: usize,
        /// Emit the root profile distribution instead of the per-level table.
        #[arg(long)]
        profiles: bool,
    },
    /// Message-level Monte Carlo estimate of the root errors.
    Simulate {
        #[command(flatten)]
        initial: InitialArgs,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        trials: u64,
    },
    /// Root behaviour for eta_N = c / N^p.
    Sweep {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        /// Comma-separated powers of two.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u64>,
    },
}

const L_NOTE: &str = "L = alpha + beta, twice the total error probability under equal priors";

fn rules_text(rules: &[dynamics::FusionRule]) -> String {
    rules.iter().map(|r| r.name()).collect::<Vec<_>>().join(";")
}

pub fn cmd_trajectory(initial: InitialArgs, levels: u32) -> Result<Envelope> {
    let path = dynamics::trajectory(initial.triplet()?, levels)?;
    let mut env = initial
        .echo(Envelope::new(
            "trajectory",
            &["level", "alpha", "beta", "q", "L", "region", "rule"],
        ))
        .param("levels", levels)
        .note(L_NOTE);
    for r in path {
        env.push(vec![
            r.level.into(),
            r.state.alpha.into(),
            r.state.beta.into(),
            r.state.q.into(),
            r.total_l.into(),
            r.region.map(|l| l.name()).unwrap_or("undefined").into(),
            r.rule_used.map(|u| u.name()).into(),
        ]);
    }
    Ok(env)
}

pub fn cmd_boundaries(q: f64, grid: usize) -> Result<Envelope> {
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be at least 1".into()));
    }
    let mut env = Envelope::new("boundaries", &["alpha", "b1_beta", "ru_beta"])
        .param("q", q)
        .param("grid", grid as u64);
    for i in 0..grid {
        let alpha = if grid == 1 {
            0.0
        } else {
            i as f64 / (grid - 1) as f64
        };
        env.push(vec![
            alpha.into(),
            regions::b1_boundary_beta(alpha, q)?.into(),
            regions::ru_boundary_beta(alpha, q)?.into(),
        ]);
    }
    Ok(env)
}

pub fn cmd_classify(alpha: f64, beta: f64, q: f64) -> Result<Envelope> {
    let state = ErrorTriplet::new(alpha, beta, q)?;
    let label = regions::classify(state)?;
    let mut env = Envelope::new("classify", &["alpha", "beta", "q", "region", "in_r"])
        .param("alpha", alpha)
        .param("beta", beta)
        .param("q", q);
    env.push(vec![
        alpha.into(),
        beta.into(),
        q.into(),
        label.name().into(),
        label.in_invariant_region().into(),
    ]);
    Ok(env)
}

pub fn cmd_bounds(l0: Option<f64>, initial: Option<InitialArgs>, n: u64) -> Result<Envelope> {
    let columns = [
        "n",
        "height",
        "parity",
        "L0",
        "lower",
        "upper",
        "actual",
        "initial_in_r",
    ];
    let (env, report, l0) = match (l0, initial) {
        (Some(l0), None) => (
            Envelope::new("bounds", &columns).param("l0", l0),
            bounds::bounds_report_from_l0(l0, n)?,
            l0,
        ),
        (None, Some(init)) => {
            let state = init.triplet()?;
            (
                init.echo(Envelope::new("bounds", &columns)),
                bounds::bounds_report(state, n)?,
                state.total_error(),
            )
        }
        _ => {
            return Err(Error::InvalidParameter(
                "give either --l0 or all of --alpha0 --beta0 --q0".into(),
            ))
        }
    };
    let mut env = env
        .param("n", n)
        .note("bounds are on log2(1/P_N), P_N = alpha + beta at the root");
    env.push(vec![
        report.n_sensors.into(),
        report.height.into(),
        report.parity.name().into(),
        l0.into(),
        report.lower_log2_inv_p.into(),
        report.upper_log2_inv_p.into(),
        report.actual_log2_inv_p.into(),
        report.initial_in_r.into(),
    ]);
    Ok(env)
}

pub fn cmd_solve_n(l0: f64, epsilon: f64) -> Result<Envelope> {
    let n = bounds::min_sensors_for_error(l0, epsilon)?;
    let (lower, _) = bounds::theorem1_bounds(l0, n)?;
    let mut env = Envelope::new(
        "solve-n",
        &["L0", "epsilon", "n", "height", "lower", "target"],
    )
    .param("l0", l0)
    .param("epsilon", epsilon);
    env.push(vec![
        l0.into(),
        epsilon.into(),
        n.into(),
        bounds::height_of(n)?.into(),
        lower.into(),
        (1.0 / epsilon).log2().into(),
    ]);
    Ok(env)
}

pub fn cmd_oracle(
    initial: InitialArgs,
    height: u32,
    cap: usize,
    profiles: bool,
) -> Result<Envelope> {
    let state = initial.triplet()?;
    if profiles {
        let dist = oracle::exact_root_statistics_with_cap(state, height, cap)?;
        let mut env = initial
            .echo(Envelope::new(
                "oracle",
                &["kind", "alpha", "beta", "weight"],
            ))
            .param("height", height)
            .param("cap", cap as u64)
            .param("profiles", true);
        env.push(vec![
            "no_data".into(),
            Cell::Null,
            Cell::Null,
            dist.p_no_data.into(),
        ]);
        for p in &dist.profiles {
            env.push(vec![
                "profile".into(),
                p.alpha.into(),
                p.beta.into(),
                p.weight.into(),
            ]);
        }
        return Ok(env);
    }

    let path = dynamics::trajectory(state, height)?;
    let mut env = initial
        .echo(Envelope::new(
            "oracle",
            &[
                "level",
                "rule",
                "alpha_recursion",
                "beta_recursion",
                "q_recursion",
                "alpha_messages",
                "beta_messages",
                "p_no_data_messages",
                "profile_count",
                "alpha_profiles",
                "beta_profiles",
                "p_no_data_profiles",
            ],
        ))
        .param("height", height)
        .param("cap", cap as u64)
        .param("profiles", false);
    let mut feasible = true;
    for rec in &path {
        let msg = oracle::exact_message_statistics(state, rec.level)?;
        let dist = if feasible {
            match oracle::exact_root_statistics_with_cap(state, rec.level, cap) {
                Ok(d) => Some(d),
                Err(Error::EnumerationInfeasible { .. } | Error::HeightTooLarge(..)) => {
                    feasible = false;
                    None
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let mean = dist.as_ref().and_then(|d| d.conditional_mean());
        env.push(vec![
            rec.level.into(),
            rec.rule_used.map(|r| r.name()).into(),
            rec.state.alpha.into(),
            rec.state.beta.into(),
            rec.state.q.into(),
            msg.alpha.into(),
            msg.beta.into(),
            msg.p_no_data.into(),
            dist.as_ref().map(|d| d.len() as u64).into(),
            mean.map(|m| m.0).into(),
            mean.map(|m| m.1).into(),
            dist.as_ref().map(|d| d.p_no_data).into(),
        ]);
    }
    Ok(env)
}

pub fn cmd_simulate(initial: InitialArgs, height: u32, trials: u64, seed: u64) -> Result<Envelope> {
    let state = initial.triplet()?;
    let report = oracle::simulate_monte_carlo(state, height, trials, seed)?;
    let exact = oracle::exact_message_statistics(state, height)?;
    let mut env = initial
        .echo(Envelope::new(
            "simulate",
            &[
                "trials",
                "seed",
                "alpha_hat",
                "alpha_stderr",
                "beta_hat",
                "beta_stderr",
                "total_error_hat",
                "no_data_h0",
                "no_data_h1",
                "alpha_exact",
                "beta_exact",
                "rules",
            ],
        ))
        .param("height", height)
        .param("trials", trials)
        .param("seed", seed)
        .note("total_error_hat = (alpha_hat + beta_hat) / 2; no-data trials are excluded");
    env.push(vec![
        report.trials_per_hypothesis.into(),
        // u64 seeds above i64::MAX keep their bits as text
        Cell::Text(report.seed.to_string()),
        report.alpha_hat.into(),
        report.alpha_stderr.into(),
        report.beta_hat.into(),
        report.beta_stderr.into(),
        report.total_error_hat().into(),
        report.no_data_h0.into(),
        report.no_data_h1.into(),
        exact.alpha.into(),
        exact.beta.into(),
        rules_text(&report.level_rules).into(),
    ]);
    Ok(env)
}

pub fn cmd_sweep(family: FamilyArg, c: f64, p: f64, n_list: &[u64]) -> Result<Envelope> {
    let family = match family {
        FamilyArg::Failure => SweepFamily::Failure,
        FamilyArg::Error => SweepFamily::Error,
    };
    let rows = bounds::asymptotic_sweep(family, c, p, n_list)?;
    let list = n_list
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(";");
    let base = Envelope::new("sweep", &[])
        .param("family", family.name())
        .param("c", c)
        .param("p", p)
        .param("n_list", list)
        .param("threshold", family.threshold());
    let mut env = match family {
        SweepFamily::Failure => Envelope {
            columns: ["n", "eta", "q0", "q_root"].map(String::from).to_vec(),
            ..base
        },
        SweepFamily::Error => Envelope {
            columns: ["n", "eta", "L0", "parity", "lower", "upper"]
                .map(String::from)
                .to_vec(),
            ..base
        },
    };
    for r in rows {
        let row = match family {
            SweepFamily::Failure => vec![r.n.into(), r.eta.into(), r.base.into(), r.q_root.into()],
            SweepFamily::Error => vec![
                r.n.into(),
                r.eta.into(),
                r.base.into(),
                bounds::Parity::of(bounds::height_of(r.n)?).name().into(),
                r.lower_log2_inv_p.into(),
                r.upper_log2_inv_p.into(),
            ],
        };
        env.push(row);
    }
    Ok(env)
}

impl Cli {
    /// Runs the parsed command and renders it in the requested format.
    pub fn execute(&self) -> Result<String> {
        let env = match &self.command {
            Command::Trajectory { initial, levels } => cmd_trajectory(*initial, *levels)?,
            Command::Boundaries { q, grid } => cmd_boundaries(*q, *grid)?,
            Command::Classify { alpha, beta, q } => cmd_classify(*alpha, *beta, *q)?,
            Command::Bounds {
                l0,
                alpha0,
                beta0,
                q0,
                n,
            } => {
                let initial = match (alpha0, beta0, q0) {
                    (Some(a), Some(b), Some(q)) => Some(InitialArgs {
                        alpha0: *a,
                        beta0: *b,
                        q0: *q,
                    }),
                    _ => None,
                };
                cmd_bounds(*l0, initial, *n)?
            }
            Command::SolveN { l0, epsilon } => cmd_solve_n(*l0, *epsilon)?,
            Command::Oracle {
                initial,
                height,
                cap,
                profiles,
            } => cmd_oracle(*initial, *height, *cap, *profiles)?,
            Command::Simulate {
                initial,
                height,
                trials,
            } => cmd_simulate(*initial, *height, *trials, self.seed)?,
            Command::Sweep {
                family,
                c,
                p,
                n_list,
            } => cmd_sweep(*family, *c, *p, n_list)?,
        };
        Ok(env.render(self.format))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<String> {
        Cli::try_parse_from(std::iter::once("relay-tree").chain(args.iter().copied()))
            .expect("arguments parse")
            .execute()
    }

    #[test]
    fn trajectory_rows() {
        let out = run(&[
            "trajectory",
            "--alpha0",
            "0.1",
            "--beta0",
            "0.2",
            "--q0",
            "0.5",
            "--levels",
            "3",
        ])
        .unwrap();
        let lines: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], "level,alpha,beta,q,L,region,rule");
        assert_eq!(lines.len(), 5);
        // b1 ends at 0.179 and R_U at 0.180 for alpha = 0.1, q = 0.5
        assert!(lines[1].starts_with("0,") && lines[1].ends_with(",u_outside_r,"));
        assert!(lines[2].ends_with(",or"));

        let out = run(&[
            "trajectory",
            "--alpha0",
            "0.1",
            "--beta0",
            "0.2",
            "--q0",
            "0.5",
            "--levels",
            "0",
        ])
        .unwrap();
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 2);
    }

    #[test]
    fn domain_gate() {
        let err = run(&[
            "trajectory",
            "--alpha0",
            "0.6",
            "--beta0",
            "0.5",
            "--q0",
            "0.1",
            "--levels",
            "3",
        ])
        .unwrap_err();
        assert!(err.to_string().starts_with("alpha+beta must be < 1"));
    }

    #[test]
    fn boundaries_grid() {
        let out = run(&["boundaries", "--q", "0", "--grid", "3"]).unwrap();
        let rows: Vec<Vec<f64>> = out
            .lines()
            .skip(2)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1][0], 0.5);
        assert!((rows[1][1] - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((rows[1][2] - (-0.5 + 2.0 * 0.5f64.sqrt())).abs() < 1e-15);
        assert_eq!((rows[2][1], rows[2][2]), (1.0, 1.0));
        assert!(run(&["boundaries", "--q", "1"]).is_err());
    }

    #[test]
    fn bounds_json() {
        let out = run(&["--format", "json", "bounds", "--l0", "0.3", "--n", "4"]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let row = &v["rows"][0];
        assert!((row["lower"].as_f64().unwrap() - 1.473_93).abs() < 1e-5);
        assert!((row["upper"].as_f64().unwrap() - 4.473_93).abs() < 1e-5);
        assert!(row["actual"].is_null());
    }

    #[test]
    fn solve_n_values() {
        let v = |eps: &str| -> u64 {
            let out = run(&[
                "--format",
                "json",
                "solve-n",
                "--l0",
                "0.3",
                "--epsilon",
                eps,
            ])
            .unwrap();
            let v: serde_json::Value = serde_json::from_str(&out).unwrap();
            v["rows"][0]["n"].as_u64().unwrap()
        };
        assert_eq!(v("0.3"), 1);
        assert_eq!(v("0.29"), 16);
    }

    #[test]
    fn sweep_needs_powers_of_two() {
        assert!(
            run(&["sweep", "--family", "failure", "--c", "1", "--p", "1", "--n-list", "4,6"])
                .is_err()
        );
        let out = run(&[
            "sweep", "--family", "error", "--c", "1", "--p", "0.25", "--n-list", "4,8",
        ])
        .unwrap();
        assert!(out.contains("n,eta,L0,parity,lower,upper"));
    }
}
