//! Graphviz DOT renderings of nets, pilots and parser control-flow graphs.

use std::fmt::Write as _;

use crate::ell::Pcfg;
use crate::net::{MachineNet, StateId};
use crate::pilot::Pilot;

/// Escapes text for a double-quoted DOT string.
fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Escapes text for a field of a record-shaped node.
fn record_field(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if matches!(c, '{' | '}' | '|' | '<' | '>' | '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn state_nodes(out: &mut String, net: &MachineNet, indent: &str) {
    for m in &net.machines {
        let _ = writeln!(out, "{indent}subgraph {} {{", quote(&format!("cluster_{}", net.nt_name(m.owner))));
        let _ = writeln!(out, "{indent}  label={};", quote(&format!("M_{}", net.nt_name(m.owner))));
        let start = quote(&format!("start_{}", net.nt_name(m.owner)));
        let _ = writeln!(out, "{indent}  {start} [shape=point];");
        for q in 0..m.num_states {
            let s = StateId { nt: m.owner, q };
            let shape = if m.is_final(q) { "doublecircle" } else { "circle" };
            let _ = writeln!(out, "{indent}  {} [shape={shape}];", quote(&net.state_name(s)));
        }
        let _ = writeln!(
            out,
            "{indent}  {start} -> {};",
            quote(&net.state_name(net.initial(m.owner)))
        );
        for (&(p, x), &r) in &m.delta {
            let _ = writeln!(
                out,
                "{indent}  {} -> {} [label={}];",
                quote(&net.state_name(StateId { nt: m.owner, q: p })),
                quote(&net.state_name(StateId { nt: m.owner, q: r })),
                quote(net.sym_name(x))
            );
        }
        let _ = writeln!(out, "{indent}}}");
    }
}

/// One cluster per machine; final states are double circles.
pub fn net_to_dot(net: &MachineNet) -> String {
    let mut out = String::from("digraph net {\n  rankdir=LR;\n");
    state_nodes(&mut out, net, "  ");
    out.push_str("}\n");
    out
}

/// M-states as two-compartment records (base above closure); convergent
/// transitions drawn as double lines.
pub fn pilot_to_dot(net: &MachineNet, pilot: &Pilot, name: &str) -> String {
    let convergent = pilot.convergent_edges();
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n  node [shape=record];\n", quote(name));
    for (i, m) in pilot.mstates.iter().enumerate() {
        let fmt = |it: &mut dyn Iterator<Item = (&StateId, &crate::net::LaSet)>| {
            it.map(|(s, la)| record_field(&format!("{} {}", net.state_name(*s), net.la_string(la))))
                .collect::<Vec<_>>()
                .join("\\n")
        };
        let base = fmt(&mut m.base(net));
        let clos = fmt(&mut m.closure_part(net));
        let members = if pilot.merged_from[i].len() > 1 {
            format!(
                " ({})",
                pilot.merged_from[i].iter().map(|j| format!("I{j}")).collect::<Vec<_>>().join(",")
            )
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "  I{i} [label=\"{{I{i}{}|{base}|{clos}}}\"];",
            record_field(&members)
        );
    }
    for (&(i, x), &j) in &pilot.theta {
        let style = if convergent.contains(&(i, x)) {
            ", color=\"black:black\""
        } else {
            ""
        };
        let _ = writeln!(out, "  I{i} -> I{j} [label={}{style}];", quote(net.sym_name(x)));
    }
    out.push_str("}\n");
    out
}

/// The net plus dashed call edges labelled by guide sets, and a prospect
/// label on every final state.
pub fn pcfg_to_dot(net: &MachineNet, pcfg: &Pcfg) -> String {
    let mut out = String::from("digraph pcfg {\n  rankdir=LR;\n");
    state_nodes(&mut out, net, "  ");
    for s in net.states() {
        if net.is_final(s) {
            let _ = writeln!(
                out,
                "  {} [xlabel={}];",
                quote(&net.state_name(s)),
                quote(&format!("-> {{{}}}", net.la_string(pcfg.prospect(s))))
            );
        }
    }
    for c in &pcfg.calls {
        let _ = writeln!(
            out,
            "  {} -> {} [style=dashed, label={}];",
            quote(&net.state_name(c.from)),
            quote(&net.state_name(c.to)),
            quote(&format!("{{{}}}", net.la_string(&c.guide)))
        );
    }
    out.push_str("}\n");
    out
}
