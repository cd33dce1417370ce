//! `abkem`: authority administration, policy tooling, and the
//! authentication server and client.

mod authority;
mod demo;
mod error;
mod files;
mod net;
mod policy;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::{CliError, EXIT_OK, EXIT_USAGE};
use files::SuiteChoice;

#[derive(Parser, Debug)]
#[command(name = "abkem", version, about = "Attribute-based anonymous authentication")]
struct Cli {
    /// Pairing suite. Defaults to production; the mock suite is insecure and
    /// is only used when named here.
    #[arg(long, global = true, value_enum)]
    suite: Option<SuiteChoice>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Master keys, attribute keys and the revocation list.
    #[command(subcommand)]
    Authority(authority::AuthorityCmd),
    /// Compile and evaluate access policies.
    #[command(subcommand)]
    Policy(policy::PolicyCmd),
    /// Accept logins over TCP.
    Serve(net::ServeArgs),
    /// Authenticate to a server.
    Login(net::LoginArgs),
    /// Run authority, server and client in one process on the mock suite.
    Demo(demo::DemoArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Authority(cmd) => authority::run(cmd, cli.suite),
        Command::Policy(cmd) => policy::run(cmd, cli.suite),
        Command::Serve(args) => net::serve(args, cli.suite),
        Command::Login(args) => net::login(args, cli.suite),
        Command::Demo(args) => demo::run(args, cli.suite),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors, which is taken by rejections here
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK } as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("abkem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
