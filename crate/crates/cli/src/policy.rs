use std::num::NonZeroUsize;
use std::path::PathBuf;

use abkem_auth::policy::{
    compile_msp, count_satisfying, decode_msp, parse_policy, AttributeSet, MspProgram, PolicyFormula, Roster,
};
use abkem_auth::suite::{Bls12Suite, MockSuite, PairingSuite, SuiteId};
use abkem_auth::wire::{self, SuiteCodec};
use clap::{Args, Subcommand};

use crate::error::CliError;
use crate::files::{self, SuiteChoice};

#[derive(Subcommand, Debug)]
pub enum PolicyCmd {
    /// Print the span program for a policy.
    Compile {
        #[command(flatten)]
        source: PolicyText,
        /// Also write the binary encoding used inside challenges.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Params file whose group order the binary encoding uses
        /// (default: BLS12-381).
        #[arg(long, requires = "out")]
        params: Option<PathBuf>,
    },
    /// Evaluate a policy against an attribute set.
    Check {
        #[command(flatten)]
        source: PolicyText,
        #[arg(long, value_delimiter = ',', default_value = "")]
        attrs: Vec<String>,
    },
    /// Count roster users satisfying a policy and compare with a threshold.
    Anonymity {
        #[command(flatten)]
        source: PolicyText,
        /// Lines of `user_id: attr1,attr2`.
        #[arg(long)]
        roster: PathBuf,
        #[arg(long = "r")]
        r: NonZeroUsize,
    },
}

/// A policy given inline or read from a file.
#[derive(Args, Debug)]
pub struct PolicyText {
    #[arg(required_unless_present = "file", conflicts_with = "file")]
    policy: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
}

impl PolicyText {
    pub fn load(&self) -> Result<PolicyFormula, CliError> {
        let text = match (&self.policy, &self.file) {
            (Some(p), _) => p.clone(),
            (None, Some(path)) => files::read_text(path)?,
            (None, None) => return Err(CliError::Usage("no policy given".into())),
        };
        Ok(parse_policy(text.trim())?)
    }
}

pub fn run(cmd: PolicyCmd, choice: Option<SuiteChoice>) -> Result<(), CliError> {
    match cmd {
        PolicyCmd::Compile { source, out, params } => {
            let f = source.load()?;
            let msp = compile_msp(&f);
            println!("policy: {f}");
            print!("{}", render_msp(&msp));
            if let Some(out) = out {
                let bytes = match &params {
                    None => wire::encode(&Bls12Suite::new(), &msp),
                    Some(path) => match files::params_suite(path, choice)? {
                        SuiteId::Mock => encode_under::<MockSuite>(path, &msp)?,
                        SuiteId::Bls12_381 => encode_under::<Bls12Suite>(path, &msp)?,
                    },
                };
                files::write(&out, &bytes, false)?;
                println!("wrote {} bytes to {}", bytes.len(), out.display());
            }
            Ok(())
        }
        PolicyCmd::Check { source, attrs } => {
            let f = source.load()?;
            let attrs = AttributeSet::new(attrs.iter().map(|a| a.trim()).filter(|a| !a.is_empty()))?;
            println!("{}", check_report(&f, &attrs));
            Ok(())
        }
        PolicyCmd::Anonymity { source, roster, r } => {
            let f = source.load()?;
            let roster: Roster = files::read_text(&roster)?.parse()?;
            println!("{}", anonymity_report(&f, &roster, r));
            Ok(())
        }
    }
}

fn encode_under<S: SuiteCodec>(params: &std::path::Path, msp: &MspProgram) -> Result<Vec<u8>, CliError> {
    let params = files::load_params::<S>(params)?;
    Ok(wire::encode(params.suite(), msp))
}

pub fn render_msp(msp: &MspProgram) -> String {
    let width = msp.labels().iter().map(String::len).max().unwrap_or(0);
    let mut out = format!("msp: {} rows x {} columns\n", msp.rows(), msp.cols());
    for i in 0..msp.rows() {
        let row: Vec<String> = msp.row(i).iter().map(ToString::to_string).collect();
        out += &format!("  {:>2}  {:<width$}  ({})\n", i + 1, msp.label(i), row.join(", "));
    }
    out
}

fn check_report(f: &PolicyFormula, attrs: &AttributeSet) -> String {
    if !f.satisfied_by(attrs) {
        return format!("not satisfied by {attrs}");
    }
    let msp = compile_msp(f);
    let suite = Bls12Suite::new();
    let rows = decode_msp(&msp, attrs, suite.modulus())
        .map(|a| a.indices().iter().map(|&i| format!("{} ({})", i + 1, msp.label(i))).collect::<Vec<_>>().join(", "))
        .unwrap_or_default();
    format!("satisfied by {attrs} using rows {rows}")
}

fn anonymity_report(f: &PolicyFormula, roster: &Roster, r: NonZeroUsize) -> String {
    let count = count_satisfying(f, roster);
    let verdict = if count >= r.get() { "pass" } else { "fail" };
    format!("{verdict}: {count} of {} roster users satisfy the policy (r = {r})", roster.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_leaf_and_renders_its_rows() {
        let msp = compile_msp(&parse_policy("A AND B").unwrap());
        let text = render_msp(&msp);
        assert!(text.starts_with("msp: 2 rows x 2 columns"));
        assert!(text.contains("A  (1, 1)"), "{text}");
        assert!(text.contains("B  (0, -1)"), "{text}");
    }

    #[test]
    fn check_lists_the_rows_used() {
        let f = parse_policy("A OR B").unwrap();
        assert_eq!(check_report(&f, &"B".parse().unwrap()), "satisfied by {B} using rows 2 (B)");
        assert_eq!(check_report(&f, &"C".parse().unwrap()), "not satisfied by {C}");
    }

    #[test]
    fn anonymity_report_counts() {
        let roster: Roster = "u1: A\nu2: A,B\nu3: B".parse().unwrap();
        let f = parse_policy("A").unwrap();
        assert_eq!(anonymity_report(&f, &roster, NonZeroUsize::new(2).unwrap()), "pass: 2 of 3 roster users satisfy the policy (r = 2)");
        assert!(anonymity_report(&f, &roster, NonZeroUsize::new(3).unwrap()).starts_with("fail: 2 of 3"));
    }
}
