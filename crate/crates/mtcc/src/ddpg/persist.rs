//! Plain-text checkpoints.
//!
//! Layout, line oriented, whitespace separated, floats printed with Rust's
//! shortest round-trip formatting:
//!
//! ```text
//! mtcc-checkpoint v1
//! variant <mtcc-pc|rd-pc|pc-wo-as>
//! followers <n> state_dim <d> hidden <h1> <h2> action_range <a_min> <a_max>
//! agent <i>
//! net <actor|critic|target_actor|target_critic>
//! layer <out> <in>
//! <out lines of in weights, row-major>
//! bias: one line of <out> values
//! ```
//!
//! Optimizer moments and exploration state are not stored; a loaded
//! checkpoint evaluates exactly and can be fine-tuned with fresh optimizer
//! state.

use std::fmt::Write as _;
use std::path::Path;

use super::agent::{DdpgAgent, Hyper};
use super::mlp::{Actor, Critic, Linear};
use super::Variant;
use crate::{Error, Result};

pub struct Checkpoint {
    pub variant: Variant,
    pub state_dim: usize,
    pub hidden: (usize, usize),
    pub action_range: (f64, f64),
    pub agents: Vec<DdpgAgent>,
}

fn write_layer(out: &mut String, l: &Linear) {
    let _ = writeln!(out, "layer {} {}", l.out_dim, l.in_dim);
    for row in l.w.chunks(l.in_dim) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    let line: Vec<String> = l.b.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "{}", line.join(" "));
}

fn write_net(out: &mut String, name: &str, layers: [&Linear; 3]) {
    let _ = writeln!(out, "net {name}");
    for l in layers {
        write_layer(out, l);
    }
}

pub fn save_checkpoint(path: &Path, variant: Variant, hyper: &Hyper, agents: &[DdpgAgent]) -> Result<()> {
    let first = agents.first().ok_or_else(|| Error::invalid("no agents to checkpoint"))?;
    let mut out = String::new();
    let _ = writeln!(out, "mtcc-checkpoint v1");
    let _ = writeln!(out, "variant {variant}");
    let _ = writeln!(
        out,
        "followers {} state_dim {} hidden {} {} action_range {} {}",
        agents.len(),
        first.state_dim(),
        hyper.hidden1,
        hyper.hidden2,
        first.actor.a_min,
        first.actor.a_max
    );
    for (i, agent) in agents.iter().enumerate() {
        let _ = writeln!(out, "agent {i}");
        write_net(&mut out, "actor", [&agent.actor.l1, &agent.actor.l2, &agent.actor.l3]);
        write_net(&mut out, "critic", [&agent.critic.l1, &agent.critic.l2, &agent.critic.l3]);
        write_net(
            &mut out,
            "target_actor",
            [&agent.target_actor.l1, &agent.target_actor.l2, &agent.target_actor.l3],
        );
        write_net(
            &mut out,
            "target_critic",
            [&agent.target_critic.l1, &agent.target_critic.l2, &agent.target_critic.l3],
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    n: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.n += 1;
        self.inner
            .next()
            .ok_or_else(|| Error::Data(format!("checkpoint truncated at line {}", self.n)))
    }
}

fn parse_floats(line: &str, expect: usize, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        line.split_whitespace().map(str::parse::<f64>).collect();
    let vals = vals.map_err(|e| Error::Data(format!("bad float in {what}: {e}")))?;
    if vals.len() != expect {
        return Err(Error::Data(format!("{what}: expected {expect} values, got {}", vals.len())));
    }
    Ok(vals)
}

fn read_layer(lines: &mut Lines) -> Result<Linear> {
    let header = lines.next()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "layer" {
        return Err(Error::Data(format!("expected layer header, got '{header}'")));
    }
    let out_dim: usize = parts[1].parse().map_err(|_| Error::Data("bad out_dim".into()))?;
    let in_dim: usize = parts[2].parse().map_err(|_| Error::Data("bad in_dim".into()))?;
    let mut w = Vec::with_capacity(out_dim * in_dim);
    for _ in 0..out_dim {
        w.extend(parse_floats(lines.next()?, in_dim, "weight row")?);
    }
    let b = parse_floats(lines.next()?, out_dim, "bias")?;
    Ok(Linear { w, b, in_dim, out_dim })
}

fn read_net(lines: &mut Lines, expect_name: &str) -> Result<[Linear; 3]> {
    let header = lines.next()?;
    if header != format!("net {expect_name}") {
        return Err(Error::Data(format!("expected 'net {expect_name}', got '{header}'")));
    }
    Ok([read_layer(lines)?, read_layer(lines)?, read_layer(lines)?])
}

pub fn load_checkpoint(path: &Path, hyper: &Hyper) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = Lines { inner: text.lines(), n: 0 };
    if lines.next()? != "mtcc-checkpoint v1" {
        return Err(Error::Data("not a v1 checkpoint".into()));
    }
    let variant_line = lines.next()?;
    let variant = Variant::parse(
        variant_line
            .strip_prefix("variant ")
            .ok_or_else(|| Error::Data("missing variant line".into()))?,
    )?;
    let meta = lines.next()?;
    let parts: Vec<&str> = meta.split_whitespace().collect();
    if parts.len() != 10 {
        return Err(Error::Data(format!("bad meta line '{meta}'")));
    }
    let followers: usize = parts[1].parse().map_err(|_| Error::Data("bad followers".into()))?;
    let state_dim: usize = parts[3].parse().map_err(|_| Error::Data("bad state_dim".into()))?;
    let h1: usize = parts[5].parse().map_err(|_| Error::Data("bad hidden".into()))?;
    let h2: usize = parts[6].parse().map_err(|_| Error::Data("bad hidden".into()))?;
    let a_min: f64 = parts[8].parse().map_err(|_| Error::Data("bad action range".into()))?;
    let a_max: f64 = parts[9].parse().map_err(|_| Error::Data("bad action range".into()))?;

    let mut load_hyper = *hyper;
    load_hyper.hidden1 = h1;
    load_hyper.hidden2 = h2;
    let mut agents = Vec::with_capacity(followers);
    for i in 0..followers {
        let header = lines.next()?;
        if header != format!("agent {i}") {
            return Err(Error::Data(format!("expected 'agent {i}', got '{header}'")));
        }
        let mk_actor = |l: [Linear; 3]| Actor {
            l1: l[0].clone(),
            l2: l[1].clone(),
            l3: l[2].clone(),
            a_min,
            a_max,
        };
        let mk_critic =
            |l: [Linear; 3]| Critic { l1: l[0].clone(), l2: l[1].clone(), l3: l[2].clone() };
        let actor = mk_actor(read_net(&mut lines, "actor")?);
        let critic = mk_critic(read_net(&mut lines, "critic")?);
        let target_actor = mk_actor(read_net(&mut lines, "target_actor")?);
        let target_critic = mk_critic(read_net(&mut lines, "target_critic")?);
        if actor.l1.in_dim != state_dim || critic.l1.in_dim != state_dim {
            return Err(Error::Data("layer dims disagree with state_dim".into()));
        }
        agents.push(DdpgAgent::from_networks(
            actor,
            critic,
            target_actor,
            target_critic,
            &load_hyper,
        ));
    }
    Ok(Checkpoint { variant, state_dim, hidden: (h1, h2), action_range: (a_min, a_max), agents })
}
