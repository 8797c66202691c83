use super::{Branch, Bus, Complex, Generator, Load, Network, NetworkError, Shunt};
use std::collections::HashMap;

/// Injection bounds at or beyond this magnitude (MW or MVAr) are unbounded.
pub(crate) const INFINITE_BOUND: f64 = 1e9;

struct Row {
    line: usize,
    values: Vec<f64>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> NetworkError {
    NetworkError::Parse { line, msg: msg.into() }
}

fn parse_number(tok: &str, line: usize) -> Result<f64, NetworkError> {
    let v: f64 = tok.parse().map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))?;
    if v.is_nan() {
        return Err(parse_err(line, "NaN is not a valid entry"));
    }
    Ok(v)
}

fn strip_comment(line: &str) -> &str {
    line.split('%').next().unwrap_or("")
}

fn push_rows(body: &str, line: usize, rows: &mut Vec<Row>) -> Result<(), NetworkError> {
    for chunk in body.split(';') {
        let toks: Vec<&str> = chunk.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if toks.is_empty() {
            continue;
        }
        let values = toks.iter().map(|t| parse_number(t, line)).collect::<Result<Vec<_>, _>>()?;
        rows.push(Row { line, values });
    }
    Ok(())
}

/// Scan the text for `name = value;` scalars and `mpc.name = [ ... ];` tables.
fn scan(text: &str) -> Result<(Option<String>, HashMap<String, (usize, f64)>, HashMap<String, Vec<Row>>), NetworkError> {
    let mut name = None;
    let mut scalars = HashMap::new();
    let mut tables: HashMap<String, Vec<Row>> = HashMap::new();
    let mut open: Option<(String, usize, Vec<Row>)> = None;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some((_, _, rows)) = open.as_mut() {
            let (body, closes) = match line.find(']') {
                Some(p) => (&line[..p], true),
                None => (line, false),
            };
            push_rows(body, line_no, rows)?;
            if closes {
                let (table, _, rows) = open.take().expect("open table");
                tables.insert(table, rows);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("function") {
            if let Some((_, n)) = rest.split_once('=') {
                name = Some(n.trim().trim_end_matches(';').to_string());
            }
            continue;
        }
        let Some((lhs, rhs)) = line.split_once('=') else {
            continue;
        };
        let key = lhs.trim().trim_start_matches("mpc.").to_string();
        let rhs = rhs.trim();
        if let Some(body) = rhs.strip_prefix('[') {
            if tables.contains_key(&key) {
                return Err(parse_err(line_no, format!("table `{key}` defined twice")));
            }
            open = Some((key, line_no, Vec::new()));
            // Data may start on the opening line.
            let rest = body.trim();
            if !rest.is_empty() {
                let (body, closes) = match rest.find(']') {
                    Some(p) => (&rest[..p], true),
                    None => (rest, false),
                };
                let (_, _, rows) = open.as_mut().expect("just opened");
                push_rows(body, line_no, rows)?;
                if closes {
                    let (table, _, rows) = open.take().expect("open table");
                    tables.insert(table, rows);
                }
            }
        } else if rhs.starts_with('{') || rhs.starts_with('\'') {
            // cell arrays and strings carry nothing we model
        } else if let Ok(v) = rhs.trim_end_matches(';').trim().parse::<f64>() {
            scalars.insert(key, (line_no, v));
        }
    }
    if let Some((table, line, _)) = open {
        return Err(parse_err(line, format!("table `{table}` is never closed")));
    }
    Ok((name, scalars, tables))
}

fn require<'a>(tables: &'a HashMap<String, Vec<Row>>, key: &str, cols: usize) -> Result<&'a [Row], NetworkError> {
    let rows = tables.get(key).ok_or_else(|| parse_err(0, format!("missing `{key}` table")))?;
    for r in rows {
        if r.values.len() < cols {
            return Err(parse_err(
                r.line,
                format!("`{key}` row has {} columns, expected at least {cols}", r.values.len()),
            ));
        }
    }
    Ok(rows)
}

fn as_id(v: f64, line: usize) -> Result<usize, NetworkError> {
    if v >= 0.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(parse_err(line, format!("`{v}` is not a valid id")))
    }
}

fn injection_bound(mw: f64, base: f64) -> f64 {
    if mw >= INFINITE_BOUND {
        f64::INFINITY
    } else if mw <= -INFINITE_BOUND {
        f64::NEG_INFINITY
    } else {
        mw / base
    }
}

/// Parse a matrix-style case file into a validated per-unit network.
pub fn parse_case(text: &str) -> Result<Network, NetworkError> {
    let (name, scalars, tables) = scan(text)?;
    let &(base_line, base_mva) = scalars.get("baseMVA").ok_or_else(|| parse_err(0, "missing baseMVA"))?;
    if !(base_mva.is_finite() && base_mva > 0.0) {
        return Err(parse_err(base_line, "baseMVA must be positive"));
    }

    let mut buses = Vec::new();
    let mut loads = Vec::new();
    let mut shunts = Vec::new();
    for r in require(&tables, "bus", 13)? {
        let v = &r.values;
        let id = as_id(v[0], r.line)?;
        let kind = v[1];
        if !(1.0..=4.0).contains(&kind) || kind.fract() != 0.0 {
            return Err(parse_err(r.line, format!("bus type `{kind}` not in 1..4")));
        }
        let in_service = kind != 4.0;
        buses.push(Bus {
            id,
            kind: kind as u8,
            v_min: v[12],
            v_max: v[11],
            in_service,
            area: v[6],
            vm: v[7],
            va_deg: v[8],
            base_kv: v[9],
            zone: v[10],
        });
        if v[2] != 0.0 || v[3] != 0.0 {
            loads.push(Load {
                id: loads.len() + 1,
                bus: id,
                demand: Complex::new(v[2] / base_mva, v[3] / base_mva),
                priority: 1.0,
                in_service,
            });
        }
        if v[4] != 0.0 || v[5] != 0.0 {
            shunts.push(Shunt {
                id: shunts.len() + 1,
                bus: id,
                admittance: Complex::new(v[4] / base_mva, v[5] / base_mva),
                in_service,
            });
        }
    }

    let mut generators = Vec::new();
    for r in require(&tables, "gen", 10)? {
        let v = &r.values;
        generators.push(Generator {
            id: generators.len() + 1,
            bus: as_id(v[0], r.line)?,
            p_min: injection_bound(v[9], base_mva),
            p_max: injection_bound(v[8], base_mva),
            q_min: injection_bound(v[4], base_mva),
            q_max: injection_bound(v[3], base_mva),
            cost_c0: 0.0,
            cost_c1: 0.0,
            cost_c2: 0.0,
            in_service: v[7] > 0.0,
            pg_mw: v[1],
            qg_mvar: v[2],
            vg: v[5],
            mbase: v[6],
        });
    }

    if let Some(rows) = tables.get("gencost") {
        for (g, r) in generators.iter_mut().zip(rows) {
            let v = &r.values;
            if v.len() < 4 {
                return Err(parse_err(r.line, "gencost row needs model, startup, shutdown, n"));
            }
            if v[0] != 2.0 {
                continue; // piecewise-linear costs are not modelled
            }
            let n = as_id(v[3], r.line)?;
            if v.len() < 4 + n {
                return Err(parse_err(r.line, format!("gencost row declares {n} coefficients")));
            }
            let coeffs = &v[4..4 + n];
            let at = |k: usize| if k < n { coeffs[n - 1 - k] } else { 0.0 };
            g.cost_c0 = at(0);
            g.cost_c1 = at(1);
            g.cost_c2 = at(2);
        }
    }

    let mut branches = Vec::new();
    for r in require(&tables, "branch", 11)? {
        let v = &r.values;
        let id = branches.len() + 1;
        let (amin, amax) = if v.len() >= 13 { (v[11], v[12]) } else { (0.0, 0.0) };
        let rating = if v[5] == 0.0 { None } else { Some(v[5] / base_mva) };
        let mut br = Branch::from_raw(
            id,
            as_id(v[0], r.line)?,
            as_id(v[1], r.line)?,
            v[2],
            v[3],
            v[4],
            rating,
            v[8],
            v[9],
            amin,
            amax,
        )
        .map_err(|e| match e {
            NetworkError::ZeroImpedance(_) => parse_err(r.line, "zero series impedance"),
            other => other,
        })?;
        br.rate_b = v[6];
        br.rate_c = v[7];
        br.in_service = v[10] > 0.0;
        branches.push(br);
    }

    let net = Network {
        name: name.unwrap_or_else(|| "case".to_string()),
        base_mva,
        buses,
        branches,
        generators,
        loads,
        shunts,
    };
    net.validate()?;
    Ok(net)
}
