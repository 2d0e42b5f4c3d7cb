//! Command line workflows and the local audit server.

pub mod args;
pub mod commands;
pub mod server;

use std::io::{self, Write};
use std::net::SocketAddr;

use anyhow::{bail, Result};

use crate::args::{Cli, Command, ServeArgs};

pub fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match cli.command {
        Command::Train(a) => commands::train(&a, &mut out)?,
        Command::Recognize(a) => commands::recognize(&a, io::stdin(), &mut out)?,
        Command::Highlight(a) => commands::highlight_texts(&a, io::stdin(), &mut out)?,
        Command::Evaluate(a) => commands::evaluate(&a, &mut out)?,
        Command::Grid(a) => drop(commands::grid(&a, &mut out)?),
        Command::Stats(a) => commands::stats(&a, &mut out)?,
        Command::Diff(a) => drop(commands::diff(&a, &mut out)?),
        Command::Serve(a) => serve(&a)?,
    }
    out.flush()?;
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<()> {
    if !args.host.is_loopback() && !args.allow_remote {
        bail!("refusing to bind non-loopback address {} without --allow-remote", args.host);
    }
    let state = match &args.model {
        Some(dir) => server::AppState::with_model(commands::load_model_dir(dir)?, Some(dir.clone()), args.backend),
        None => server::AppState::new(args.backend),
    };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(server::serve(state, SocketAddr::new(args.host, args.port)))
}
