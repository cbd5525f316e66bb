use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use uctk_core::corey::{char_speeds, classify_umbilic, umbilic_point, viscosity_ratios};
use uctk_core::hugoniot::{trace_hugoniot, HugoniotBranch};
use uctk_core::simulator::{extract_wave_groups, simulate as run_simulation, PlateauOptions, SimConfig};
use uctk_core::tw::{connection_search, connection_search_near, sweep_near_line, verify_connection, FieldSpec, SearchOptions, SweepOptions};
use uctk_core::uc_identity::{self, build_surface_identity, BoundaryTag, Side};
use uctk_core::{FluidParams, InvariantLine, ShockTriple, State, Vertex, ViscosityMode};

use crate::json::{self, SCHEMA_VERSION};
use crate::{Format, Matrix, ModelArgs, ValidationError};

impl ModelArgs {
    pub fn params(&self) -> anyhow::Result<FluidParams> {
        let [mw, mo, mg] = self.mu;
        Ok(FluidParams::new(mw, mo, mg, self.c_ow, self.c_og)?)
    }
}

impl From<Matrix> for ViscosityMode {
    fn from(m: Matrix) -> Self {
        match m {
            Matrix::Identity => ViscosityMode::Identity,
            Matrix::Capillarity => ViscosityMode::Capillarity,
        }
    }
}

/// Write `text` to `out`, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn document(kind: &str, params: &FluidParams, body: Value) -> Value {
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "params": params,
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    doc
}

fn state_json(u: State) -> Value {
    json!([u.sw, u.so])
}

fn parse_state(v: [f64; 2]) -> anyhow::Result<State> {
    Ok(State::new(v[0], v[1])?)
}

fn parse_line(name: &str, p: FluidParams) -> anyhow::Result<InvariantLine> {
    let vertex: Vertex = name.parse()?;
    Ok(InvariantLine::new(vertex, p))
}

pub fn model(args: &ModelArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let p = args.params()?;
    let u = umbilic_point(&p);
    let (ls, lf) = char_speeds(u, &p);
    let lines: Vec<Value> = Vertex::ALL
        .iter()
        .map(|&v| {
            let line = InvariantLine::new(v, p);
            json!({
                "vertex": v.name(),
                "far_end": v.far_end_name(),
                "nu": line.nu,
                "vertex_state": state_json(line.vertex_state()),
                "far_end_state": state_json(line.far_end()),
                "distinguished_states": line.distinguished_states(),
            })
        })
        .collect();
    let doc = document(
        "model",
        &p,
        json!({
            "classification": classify_umbilic(&p).to_string(),
            "umbilic": state_json(u),
            "lambda_u": 0.5 * (ls + lf),
            "eigenvalue_gap": lf - ls,
            "viscosity_ratios": viscosity_ratios(&p),
            "lines": lines,
        }),
    );
    emit(out, &json::to_string(&doc)?)
}

fn hugoniot_csv(branches: &[HugoniotBranch]) -> anyhow::Result<String> {
    let mut s = String::from("branch,sw,so,sigma,tag\n");
    for (b, branch) in branches.iter().enumerate() {
        for pt in &branch.points {
            let tag = serde_json::to_value(pt.tag)?;
            s.push_str(&format!(
                "{b},{},{},{},{}\n",
                json::float(pt.state.sw),
                json::float(pt.state.so),
                json::float(pt.sigma),
                tag.as_str().unwrap_or_default()
            ));
        }
    }
    Ok(s)
}

pub fn hugoniot(args: &ModelArgs, base: [f64; 2], resolution: usize, format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    let p = args.params()?;
    let um = parse_state(base)?;
    if resolution < 8 {
        return Err(ValidationError(format!("resolution {resolution} is too coarse (minimum 8)")).into());
    }
    let branches = trace_hugoniot(um, &p, resolution);
    let text = match format {
        Format::Csv => hugoniot_csv(&branches)?,
        Format::Json => {
            let rows: Vec<Value> = branches
                .iter()
                .map(|b| {
                    let pts: Vec<Value> = b.points.iter().map(|pt| json!([pt.state.sw, pt.state.so, pt.sigma])).collect();
                    let tags: Vec<Value> = b.points.iter().map(|pt| json!(pt.tag)).collect();
                    json!({ "points": pts, "tags": tags })
                })
                .collect();
            json::to_string(&document("hugoniot", &p, json!({ "base": state_json(um), "branches": rows })))?
        }
    };
    emit(out, &text)
}

pub fn uc_interval(args: &ModelArgs, line: &str, s_m: f64, out: Option<&Path>) -> anyhow::Result<()> {
    let p = args.params()?;
    let line = parse_line(line, p)?;
    let iv = uc_identity::uc_interval(&line, s_m)?;
    let doc = document(
        "uc_interval",
        &p,
        json!({
            "line": line.vertex.name(),
            "nu": line.nu,
            "s_m": iv.s_m,
            "s_s": iv.s_s,
            "s_f": iv.s_f,
            "case": iv.case,
            "sigma_range": [line.shock_speed(iv.s_f, s_m), line.shock_speed(iv.s_s, s_m)],
            "right_state": state_json(line.embed(s_m)),
            "left_states": [state_json(line.embed(iv.s_f)), state_json(line.embed(iv.s_s))],
        }),
    );
    emit(out, &json::to_string(&doc)?)
}

fn triple_row(t: &ShockTriple) -> Value {
    json!([t.minus.sw, t.minus.so, t.plus.sw, t.plus.so, t.sigma])
}

#[derive(Serialize, Default)]
struct BoundaryJson {
    minus: Vec<[f64; 3]>,
    plus: Vec<[f64; 3]>,
}

pub fn uc_surface(
    args: &ModelArgs,
    matrix: Matrix,
    line: &str,
    samples: usize,
    step_along: f64,
    step_across: f64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let p = args.params()?;
    let line = parse_line(line, p)?;
    let mut boundaries: BTreeMap<&'static str, BoundaryJson> = BTreeMap::new();
    let (interior, extra) = match matrix {
        Matrix::Identity => {
            if samples < 2 {
                return Err(ValidationError("at least two right-state samples are needed".into()).into());
            }
            let surf = build_surface_identity(&line, samples);
            let mut rows = Vec::new();
            for pair in &surf.curves {
                let plus = line.embed(pair.s_m);
                for m in &pair.minus {
                    rows.push(json!([m.state.sw, m.state.so, plus.sw, plus.so, m.sigma]));
                }
            }
            for curve in &surf.boundaries {
                let entry = boundaries.entry(curve.tag.name()).or_default();
                let pts: Vec<[f64; 3]> = curve.points.iter().map(|q| [q.state.sw, q.state.so, q.sigma]).collect();
                match curve.side {
                    Side::Minus => entry.minus = pts,
                    Side::Plus => entry.plus = pts,
                }
            }
            (rows, json!({ "right_state_samples": samples }))
        }
        Matrix::Capillarity => {
            for (name, h) in [("step-along", step_along), ("step-across", step_across)] {
                if !(h > 0.0 && h < 0.5) {
                    return Err(ValidationError(format!("{name} must lie in (0, 0.5)")).into());
                }
            }
            let spec = FieldSpec::new(p, ViscosityMode::Capillarity);
            let mut opts = SweepOptions::along_line(&line, step_along, step_across);
            opts.search.connection.richardson = false;
            opts.search.connection.delta = 1e-6;
            let surf = sweep_near_line(&line, &spec, &opts)?;
            let rows = surf.interior().map(triple_row).collect();
            for tag in BoundaryTag::ALL {
                let Some(points) = surf.boundaries.get(&tag) else { continue };
                if points.is_empty() {
                    continue;
                }
                let entry = boundaries.entry(tag.name()).or_default();
                entry.minus = points.iter().map(|b| [b.minus.sw, b.minus.so, b.sigma]).collect();
                entry.plus = points.iter().map(|b| [b.plus.sw, b.plus.so, b.sigma]).collect();
            }
            (
                rows,
                json!({
                    "step_along": step_along,
                    "step_across": step_across,
                    "multi_valued_nodes": surf.multi_valued(),
                }),
            )
        }
    };
    let mut body = json!({
        "matrix": ViscosityMode::from(matrix),
        "line": line.vertex.name(),
        "nu": line.nu,
        "umbilic": state_json(umbilic_point(&p)),
        "interior": interior,
        "boundaries": boundaries,
    });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    emit(out, &json::to_string(&document("uc_surface", &p, body))?)
}

pub fn connect(
    args: &ModelArgs,
    left: [f64; 2],
    sigma_bracket: Option<[f64; 2]>,
    matrix: Matrix,
    delta: f64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let p = args.params()?;
    let ul = parse_state(left)?;
    if !(delta > 0.0) {
        return Err(ValidationError("delta must be positive".into()).into());
    }
    let spec = FieldSpec::new(p, matrix.into());
    let mut opts = SearchOptions::default();
    opts.connection.delta = delta;
    let found = match sigma_bracket {
        Some([a, b]) => {
            if !(b > a) {
                return Err(ValidationError(format!("empty speed bracket [{a}, {b}]")).into());
            }
            connection_search_near(ul, 0.5 * (a + b), 0.5 * (b - a), &spec, &opts)?
        }
        None => connection_search(ul, &spec, &opts)?,
    };
    let (ls, lf) = char_speeds(ul, &p);
    let rows: Vec<Value> = found
        .iter()
        .map(|t| {
            let residual = verify_connection(t, &spec, &opts.connection).map(|d| d.norm()).ok();
            json!({
                "minus": state_json(t.minus),
                "plus": state_json(t.plus),
                "sigma": t.sigma,
                "tag": t.tag,
                "rh_residual": t.rh_norm(&p),
                "crossing_margin": t.crossing_margin(&p),
                "section_residual": residual,
            })
        })
        .collect();
    let doc = document(
        "connections",
        &p,
        json!({
            "matrix": spec.mode,
            "left": state_json(ul),
            "characteristic_speeds": [ls, lf],
            "connections": rows,
        }),
    );
    emit(out, &json::to_string(&doc)?)
}

/// Contents of a `simulate --config` file.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationFile {
    pub mu: [f64; 3],
    #[serde(default = "unit")]
    pub c_ow: f64,
    #[serde(default = "unit")]
    pub c_og: f64,
    pub simulation: SimConfig,
}

fn unit() -> f64 {
    1.0
}

pub fn load_simulation(path: &Path) -> anyhow::Result<SimulationFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SimulationFile = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text)?,
        _ => toml::from_str(&text)?,
    };
    Ok(file)
}

pub fn simulate(config: &Path, csv: Option<&Path>, out: Option<&Path>) -> anyhow::Result<()> {
    let file = load_simulation(config)?;
    let [mw, mo, mg] = file.mu;
    let p = FluidParams::new(mw, mo, mg, file.c_ow, file.c_og)?;
    file.simulation.validate()?;
    let profile = run_simulation(&file.simulation, &p)?;
    if let Some(path) = csv {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(f);
        profile.write_csv(&mut w)?;
        w.flush()?;
    }
    let waves = extract_wave_groups(&profile, profile.last(), &PlateauOptions::default());
    let plateaus: Vec<Value> = waves
        .plateaus
        .iter()
        .map(|pl| {
            let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
            json!({ "state": state_json(pl.state), "v_range": [finite(pl.v_range.0), finite(pl.v_range.1)] })
        })
        .collect();
    let groups: Vec<Value> = waves.groups.iter().map(|g| json!([g.0, g.1])).collect();
    let doc = document(
        "simulation",
        &p,
        json!({
            "config": file.simulation,
            "t_final": profile.times[profile.last()],
            "nodes": profile.x.len(),
            "plateaus": plateaus,
            "groups": groups,
        }),
    );
    emit(out, &json::to_string(&doc)?)
}
