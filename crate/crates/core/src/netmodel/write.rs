use super::Network;
use std::fmt::Write;

/// A file value `v` with `v / base == pu` exactly, when one exists nearby.
fn file_value(pu: f64, base: f64) -> f64 {
    if !pu.is_finite() {
        return pu;
    }
    let guess = pu * base;
    let mut up = guess;
    let mut down = guess;
    for _ in 0..8 {
        if up / base == pu {
            return up;
        }
        if down / base == pu {
            return down;
        }
        up = up.next_up();
        down = down.next_down();
    }
    guess
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "Inf".into()
    } else if v == f64::NEG_INFINITY {
        "-Inf".into()
    } else {
        format!("{v}")
    }
}

/// Serialize to the matrix-style case format read by [`super::parse_case`].
pub fn write_case(net: &Network) -> String {
    let base = net.base_mva;
    let adj = net.adjacency();
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "function mpc = {}", net.name);
    let _ = writeln!(w, "mpc.version = '2';");
    let _ = writeln!(w, "mpc.baseMVA = {};", num(base));

    let _ = writeln!(w, "\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    let _ = writeln!(w, "mpc.bus = [");
    for (k, b) in net.buses.iter().enumerate() {
        let demand: num_complex::Complex64 = adj.loads[k].iter().map(|&l| net.loads[l].demand).sum();
        let shunt: num_complex::Complex64 = adj.shunts[k].iter().map(|&s| net.shunts[s].admittance).sum();
        let kind = if b.in_service { if b.kind == 4 { 1 } else { b.kind } } else { 4 };
        let row = [
            b.id as f64,
            kind as f64,
            file_value(demand.re, base),
            file_value(demand.im, base),
            file_value(shunt.re, base),
            file_value(shunt.im, base),
            b.area,
            b.vm,
            b.va_deg,
            b.base_kv,
            b.zone,
            b.v_max,
            b.v_min,
        ];
        write_row(w, &row);
    }
    let _ = writeln!(w, "];");

    let _ = writeln!(w, "\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin");
    let _ = writeln!(w, "mpc.gen = [");
    for g in &net.generators {
        let row = [
            g.bus as f64,
            g.pg_mw,
            g.qg_mvar,
            file_value(g.q_max, base),
            file_value(g.q_min, base),
            g.vg,
            g.mbase,
            if g.in_service { 1.0 } else { 0.0 },
            file_value(g.p_max, base),
            file_value(g.p_min, base),
        ];
        write_row(w, &row);
    }
    let _ = writeln!(w, "];");

    let _ = writeln!(w, "\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax");
    let _ = writeln!(w, "mpc.branch = [");
    for br in &net.branches {
        let row = [
            br.from_bus as f64,
            br.to_bus as f64,
            br.r,
            br.x,
            br.b,
            br.rating.map_or(0.0, |r| file_value(r, base)),
            br.rate_b,
            br.rate_c,
            br.tap_ratio,
            br.shift_deg,
            if br.in_service { 1.0 } else { 0.0 },
            br.angmin_deg,
            br.angmax_deg,
        ];
        write_row(w, &row);
    }
    let _ = writeln!(w, "];");

    if !net.generators.is_empty() {
        let _ = writeln!(w, "\n%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0");
        let _ = writeln!(w, "mpc.gencost = [");
        for g in &net.generators {
            write_row(w, &[2.0, 0.0, 0.0, 3.0, g.cost_c2, g.cost_c1, g.cost_c0]);
        }
        let _ = writeln!(w, "];");
    }
    out
}

fn write_row(w: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
    let _ = writeln!(w, "\t{};", cells.join("\t"));
}
