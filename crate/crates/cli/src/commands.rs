//! Subcommands and their routing to the engine.

use crate::dsl::{Session, Value};
use crate::report::{Item, Report};
use clap::Subcommand;
use serde_json::{json, Value as Json};
use std::time::Instant;
use varpois::complexes::{cohomology_dim, reduce_closed, SkewArray};
use varpois::diffalg::LocalFunctional;
use varpois::diffop::{dieudonne_det, row_echelon, Det, MatDiffOp, RowOp};
use varpois::lampoly::LamPoly;
use varpois::lenard::{run_hierarchy, verify_involution};
use varpois::polydiff::{sigma_space, solve_skew_equation, KDiffOp};
use varpois::pva::{check_compatible, check_jacobi, check_skewadjoint, LambdaBracket, TripleWitness};
use varpois::{Error, Result};

/// Operands are names defined in the session file or inline expressions.
#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Jacobi identity of the bracket given by H.
    CheckJacobi {
        #[arg(long = "H")]
        h: String,
    },
    /// Compatibility of two Poisson structures.
    CheckCompat {
        #[arg(long = "A")]
        a: String,
        #[arg(long = "B")]
        b: String,
    },
    /// Dimension of the k-th variational Poisson cohomology of a quasiconstant K.
    Cohomology {
        #[arg(long = "K")]
        op: String,
        #[arg(long = "k")]
        k: usize,
    },
    /// Split a closed array P into δ_K Q + R with R in the bottom level.
    Reduce {
        #[arg(long = "K")]
        op: String,
        /// Arity 0: an element of V. Arity 1: a row [[P_1, …, P_l]] with d standing for λ.
        #[arg(long = "P")]
        p: String,
        #[arg(long, default_value_t = 1)]
        arity: usize,
    },
    /// Lenard–Magri recursion K δh_{n+1} = H δh_n.
    Lenard {
        #[arg(long = "H")]
        h: String,
        #[arg(long = "K")]
        k: String,
        #[arg(long)]
        seed: String,
        #[arg(long, default_value_t = 3)]
        steps: usize,
    },
    /// Row echelon form of a matrix differential operator.
    Echelon {
        #[arg(long = "M")]
        m: String,
    },
    /// Dieudonné determinant (c, degree).
    Det {
        #[arg(long = "M")]
        m: String,
    },
    /// Skewsymmetric solutions of the k-th kernel problem for K*.
    Sigma {
        #[arg(long = "K")]
        op: String,
        #[arg(long = "k")]
        k: usize,
    },
    /// Solve 2⟨K∘P⟩⁻ = S for a skewsymmetric S (k = 1, matrices with d standing for λ).
    SolveSkew {
        #[arg(long = "K")]
        op: String,
        /// A session file defining S, or an inline matrix.
        #[arg(long = "S")]
        s: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckJacobi { .. } => "check-jacobi",
            Command::CheckCompat { .. } => "check-compat",
            Command::Cohomology { .. } => "cohomology",
            Command::Reduce { .. } => "reduce",
            Command::Lenard { .. } => "lenard",
            Command::Echelon { .. } => "echelon",
            Command::Det { .. } => "det",
            Command::Sigma { .. } => "sigma",
            Command::SolveSkew { .. } => "solve-skew",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub degree_bound: Option<u32>,
}

/// Run one command; engine errors become `error` items.
pub fn dispatch(cmd: &Command, session: &Session, opts: &Options) -> Report {
    let start = Instant::now();
    let mut report = Report::new(cmd.name());
    if let Err(e) = run(cmd, session, opts, &mut report) {
        report.push(Item::error(error_name(&e), e));
    }
    report.timing_ms = start.elapsed().as_millis() as u64;
    report
}

fn error_name(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Arity { .. } => "arity",
        _ => "engine",
    }
}

fn matrix(session: &Session, report: &mut Report, name: &str, src: &str) -> Result<MatDiffOp> {
    let m = session.resolve(src)?.to_matrix();
    report.input(name, Value::Matrix(m.clone()));
    Ok(m)
}

fn bracket(session: &Session, report: &mut Report, name: &str, src: &str) -> Result<LambdaBracket> {
    let m = matrix(session, report, name, src)?;
    if m.rows() != session.config.ell {
        return Err(Error::ShapeMismatch(format!(
            "{name} is {}x{} but the session has {} variables",
            m.rows(),
            m.cols(),
            session.config.ell
        )));
    }
    LambdaBracket::new(m)
}

fn triple_json(w: &TripleWitness) -> Json {
    json!({ "triple": [w.triple.0 + 1, w.triple.1 + 1, w.triple.2 + 1], "residual": w.residual.to_string() })
}

/// Skewadjointness and Jacobi as two items; the second is skipped when the first fails.
fn poisson_items(report: &mut Report, label: &str, hb: &LambdaBracket) -> Result<bool> {
    let skew = check_skewadjoint(hb);
    let adj = hb.op().adjoint();
    report.push(Item::verdict(&format!("{label}.skewadjoint"), skew, || json!({ "adjoint": adj.to_string() })));
    if !skew {
        return Ok(false);
    }
    let v = check_jacobi(hb)?;
    report.push(Item::verdict(&format!("{label}.jacobi"), v.holds, || {
        v.witness.as_ref().map(triple_json).unwrap_or(Json::Null)
    }));
    Ok(v.holds)
}

fn det_json(d: &Det) -> Json {
    match d {
        Det::Zero => json!({ "c": "0", "degree": null }),
        Det::Value { c, d } => json!({ "c": c.to_string(), "degree": d }),
    }
}

fn row_op_string(op: &RowOp) -> String {
    match op {
        RowOp::Swap(a, b) => format!("swap rows {} and {}", a + 1, b + 1),
        RowOp::AddMultiple { target, source, op } => format!("row {} += ({op}) * row {}", target + 1, source + 1),
    }
}

/// Arity 0 or 1 array from an expression; for arity 1, d stands for λ.
fn skew_array(v: &Value, ell: usize, arity: usize) -> Result<SkewArray> {
    match arity {
        0 => {
            let f = v
                .to_poly()
                .ok_or_else(|| Error::ShapeMismatch("an arity-0 array is an element of V, without d".into()))?;
            Ok(SkewArray::scalar(ell, f))
        }
        1 => {
            let m = v.to_matrix();
            if m.rows() != 1 || m.cols() != ell {
                return Err(Error::ShapeMismatch(format!("an arity-1 array is a row of {ell} entries")));
            }
            let entries: Vec<(Vec<usize>, LamPoly)> = (0..ell).map(|i| (vec![i], m.get(0, i).symbol(1, 0))).collect();
            SkewArray::from_entries(ell, 1, entries)
        }
        _ => Err(Error::ShapeMismatch("the command line accepts arrays of arity 0 or 1".into())),
    }
}

fn space_items(report: &mut Report, dim: usize, expected: u64, flagged: bool, basis: Vec<String>) {
    let dim_item = if flagged { Item::flagged("dim", dim) } else { Item::ok("dim", dim) };
    report.push(dim_item);
    report.push(Item::ok("expected", expected));
    report.push(Item::ok("flagged_lower_bound", flagged));
    report.push(Item::ok("basis_representatives", basis));
}

fn run(cmd: &Command, session: &Session, opts: &Options, report: &mut Report) -> Result<()> {
    match cmd {
        Command::CheckJacobi { h } => {
            let hb = bracket(session, report, "H", h)?;
            poisson_items(report, "H", &hb)?;
        }
        Command::CheckCompat { a, b } => {
            let ha = bracket(session, report, "A", a)?;
            let hb = bracket(session, report, "B", b)?;
            let pa = poisson_items(report, "A", &ha)?;
            let pb = poisson_items(report, "B", &hb)?;
            if pa && pb {
                let v = check_compatible(&ha, &hb)?;
                report.push(Item::verdict("compatible", v.holds, || {
                    v.witness.as_ref().map(triple_json).unwrap_or(Json::Null)
                }));
            }
        }
        Command::Cohomology { op, k } => {
            let kop = matrix(session, report, "K", op)?;
            report.input("k", k);
            let r = cohomology_dim(&kop, *k, opts.degree_bound)?;
            space_items(
                report,
                r.dim as usize,
                r.expected,
                r.flagged_lower_bound,
                r.basis.iter().map(|b| b.to_string()).collect(),
            );
        }
        Command::Reduce { op, p, arity } => {
            let kop = matrix(session, report, "K", op)?;
            let pv = session.resolve(p)?;
            let arr = skew_array(&pv, session.config.ell, *arity)?;
            report.input("P", &arr);
            let (q, r) = reduce_closed(&arr, &kop)?;
            report.push(Item::ok("Q", q.to_string()));
            report.push(Item::ok("R", r.to_string()));
        }
        Command::Lenard { h, k, seed, steps } => {
            let hb = bracket(session, report, "H", h)?;
            let kb = bracket(session, report, "K", k)?;
            let sv = session.resolve(seed)?;
            let h0 = sv.to_poly().ok_or_else(|| Error::ShapeMismatch("the seed density is an element of V".into()))?;
            report.input("seed", &h0);
            report.input("steps", steps);
            let st = match run_hierarchy(&hb, &kb, LocalFunctional(h0), *steps) {
                Ok(st) => st,
                Err(Error::NotPoisson(why)) => {
                    report.push(Item::fail("poisson_pair", false, why));
                    return Ok(());
                }
                Err(e) => return Err(e),
            };
            report.push(Item::ok("poisson_pair", true));
            let densities: Vec<String> = st.densities.iter().map(|d| d.0.to_string()).collect();
            report.push(Item::ok("densities", densities));
            for (n, ok) in st.certificates.iter().enumerate() {
                let name = format!("certificate[{n}]");
                report.push(Item::verdict(&name, *ok, || json!(format!("K δh_{} ≠ H δh_{n}", n + 1))));
            }
            let inv = verify_involution(&st)?;
            let all = inv.all();
            let value = json!({ "under_H": inv.under_h, "under_K": inv.under_k });
            if all {
                report.push(Item::ok("involution", value));
            } else {
                report.push(Item::fail("involution", value.clone(), value));
            }
            report.push(Item::ok("kernel", st.kernel_note()));
            if let Some(ob) = &st.obstruction {
                let w = json!({
                    "step": ob.step,
                    "reason": ob.error.to_string(),
                    "H_delta_h": ob.witness.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                });
                report.push(Item::fail("obstruction", ob.step, w));
            }
        }
        Command::Echelon { m } => {
            let mm = matrix(session, report, "M", m)?;
            let (e, ops) = row_echelon(&mm)?;
            report.push(Item::ok("echelon", Value::Matrix(e).to_string()));
            report.push(Item::ok("row_ops", ops.iter().map(row_op_string).collect::<Vec<_>>()));
        }
        Command::Det { m } => {
            let mm = matrix(session, report, "M", m)?;
            report.push(Item::ok("det", det_json(&dieudonne_det(&mm)?)));
        }
        Command::Sigma { op, k } => {
            let kop = matrix(session, report, "K", op)?;
            report.input("k", k);
            let s = sigma_space(&kop, *k, opts.degree_bound)?;
            space_items(
                report,
                s.basis.len(),
                s.expected,
                s.flagged_lower_bound,
                s.basis.iter().map(|b| b.to_string()).collect(),
            );
        }
        Command::SolveSkew { op, s } => {
            let kop = matrix(session, report, "K", op)?;
            let sm = skew_rhs(session, s)?;
            report.input("S", Value::Matrix(sm.clone()));
            let p = solve_skew_equation(&kop, &KDiffOp::from_matrix(&sm)?, opts.degree_bound)?;
            report.push(Item::ok("P", Value::Matrix(p.to_matrix()?).to_string()));
        }
    }
    Ok(())
}

/// `--S` names a file with a definition of S (or a single definition), else an inline matrix.
fn skew_rhs(session: &Session, arg: &str) -> Result<MatDiffOp> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        let src = std::fs::read_to_string(path).map_err(|e| Error::ShapeMismatch(format!("cannot read {arg}: {e}")))?;
        let s = crate::dsl::parse_session_with(&src, session.clone())?;
        let v = s.get("S").or_else(|| s.defs.last().map(|(_, v)| v));
        return v.map(|v| v.to_matrix()).ok_or_else(|| Error::ShapeMismatch(format!("{arg} defines nothing")));
    }
    Ok(session.resolve(arg)?.to_matrix())
}
