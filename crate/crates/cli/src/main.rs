//! `structdiag`: structural fault diagnosis analyses over JSON model
//! files. Every command loads a model, runs one analysis, and prints a
//! deterministic table, JSON document, or CSV.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use output::{
    braced, csv_rows, json, num, table, DetectRecord, DmRecord, FusionRecord, IsolateRecord,
    MatrixRecord, ResidualRecord, ResidualReport, RgRecord, SetRecord,
};
use structdiag_core::{
    brute_force_msos, brute_force_mstar, brute_force_mtes, brute_force_rg, brute_force_tes,
    computation_order, derive_residuals, detectable_faults, dm_decompose, faults_of, find_irg,
    find_msos, find_mtes, find_rg, isolability, isolability_matrix, min_variance_fusion, mstar,
    BipartiteStructure, EquationSet, Error, FaultSignature, LinearResidual, LinearStaticModel,
    ModelFile, OperatorRegistry, RgResult, StructuralModel, TestabilityOperator,
};

#[derive(Parser)]
#[command(
    name = "structdiag",
    version,
    about = "Structural model-based fault diagnosis analyses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Coarse Dulmage-Mendelsohn decomposition of the model
    Dm {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Enumerate all minimal structurally overdetermined sets
    Mso {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Enumerate the minimal test equation supports and their test supports
    Mtes {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Enumerate all residual generation sets under an operator
    Rg {
        model: PathBuf,
        #[arg(long, default_value = "plus")]
        operator: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Enumerate the irreducible residual generation sets
    Irg {
        model: PathBuf,
        #[arg(long, default_value = "plus")]
        operator: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// List the structurally detectable faults
    Detect {
        model: PathBuf,
        #[arg(long, default_value = "plus")]
        operator: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Isolability of one fault mode from another (all single-fault pairs
    /// when --from/--wrt are omitted)
    Isolate {
        model: PathBuf,
        #[arg(long, default_value = "plus")]
        operator: String,
        /// Comma-separated fault mode, e.g. `f3`
        #[arg(long, requires = "wrt")]
        from: Option<String>,
        /// Comma-separated fault mode, e.g. `f1,f2`
        #[arg(long, requires = "from")]
        wrt: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Derive linear residuals by back-substitution, optionally fusing them
    Residual {
        model: PathBuf,
        /// Equation set to derive from, e.g. `--set e1,e2,e5`; repeatable.
        /// Defaults to every back-substitution computable MSO set.
        #[arg(long = "set")]
        sets: Vec<String>,
        /// Fuse all derived residuals sensitive to this fault
        #[arg(long)]
        fuse: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run every enumerator against its brute-force counterpart
    OracleCheck {
        model: PathBuf,
        #[arg(long, env = "STRUCTDIAG_ORACLE_BOUND", default_value_t = 16)]
        oracle_bound: usize,
    },
}

struct Failure {
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((text, mismatches)) => {
            print!("{text}");
            if mismatches {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(String, bool), Failure> {
    let registry = OperatorRegistry::builtin();
    let out = match command {
        Command::Dm { model, format } => cmd_dm(&load(&model)?.1, format)?,
        Command::Mso { model, format } => cmd_mso(&load(&model)?.1, format)?,
        Command::Mtes { model, format } => cmd_mtes(&load(&model)?.1, format)?,
        Command::Rg {
            model,
            operator,
            format,
        } => cmd_rg(&load(&model)?.1, registry.get(&operator)?, format, false)?,
        Command::Irg {
            model,
            operator,
            format,
        } => cmd_rg(&load(&model)?.1, registry.get(&operator)?, format, true)?,
        Command::Detect {
            model,
            operator,
            format,
        } => cmd_detect(&load(&model)?.1, registry.get(&operator)?, format)?,
        Command::Isolate {
            model,
            operator,
            from,
            wrt,
            format,
        } => cmd_isolate(
            &load(&model)?.1,
            registry.get(&operator)?,
            from.as_deref(),
            wrt.as_deref(),
            format,
        )?,
        Command::Residual {
            model,
            sets,
            fuse,
            format,
        } => {
            let (file, structural) = load(&model)?;
            cmd_residual(&file, &structural, &sets, fuse.as_deref(), format)?
        }
        Command::OracleCheck {
            model,
            oracle_bound,
        } => return cmd_oracle_check(&load(&model)?.1, &registry, oracle_bound),
    };
    Ok((out, false))
}

fn load(path: &Path) -> Result<(ModelFile, StructuralModel), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        message: format!("cannot read {}: {e}", path.display()),
        code: 2,
    })?;
    let file = ModelFile::from_json(&text).map_err(Failure::from)?;
    let model = StructuralModel::from_file(&file).map_err(Failure::from)?;
    Ok((file, model))
}

fn ids(set: &EquationSet) -> Vec<String> {
    set.iter().map(str::to_string).collect()
}

fn fault_ids(sig: &FaultSignature) -> Vec<String> {
    sig.iter().map(str::to_string).collect()
}

fn parse_mode(text: &str) -> FaultSignature {
    FaultSignature::new(
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string),
    )
}

fn parse_set(text: &str) -> EquationSet {
    EquationSet::new(
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string),
    )
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_dm(model: &StructuralModel, format: Format) -> Result<String, Failure> {
    let dm = dm_decompose(model, &model.all_equations())?;
    Ok(match format {
        Format::Json => json(&DmRecord {
            m_plus: ids(&dm.m_plus),
            m_zero: ids(&dm.m_zero),
            m_minus: ids(&dm.m_minus),
            x_plus: dm.x_plus.clone(),
            x_zero: dm.x_zero.clone(),
            x_minus: dm.x_minus.clone(),
        }),
        Format::Csv => csv_rows(
            &["part", "equations", "unknowns"],
            &[
                vec![
                    "M-".into(),
                    dm.m_minus.members().join(","),
                    dm.x_minus.join(","),
                ],
                vec![
                    "M0".into(),
                    dm.m_zero.members().join(","),
                    dm.x_zero.join(","),
                ],
                vec![
                    "M+".into(),
                    dm.m_plus.members().join(","),
                    dm.x_plus.join(","),
                ],
            ],
        ),
        Format::Table => {
            let rows = vec![
                vec!["M-".into(), dm.m_minus.to_string(), braced(&dm.x_minus)],
                vec!["M0".into(), dm.m_zero.to_string(), braced(&dm.x_zero)],
                vec!["M+".into(), dm.m_plus.to_string(), braced(&dm.x_plus)],
            ];
            let mut out = table(&["part", "equations", "unknowns"], &rows);
            // Bi-adjacency grid permuted to the block-triangular order.
            let mut row_order: Vec<String> = Vec::new();
            for part in [&dm.m_minus, &dm.m_zero, &dm.m_plus] {
                row_order.extend(part.iter().map(str::to_string));
            }
            let mut col_order: Vec<String> = Vec::new();
            for part in [&dm.x_minus, &dm.x_zero, &dm.x_plus] {
                col_order.extend(part.iter().cloned());
            }
            let mut edges = Vec::new();
            for eq in model.equations() {
                for inc in eq.incidences() {
                    edges.push((eq.id().to_string(), inc.var.clone()));
                }
            }
            let grid = BipartiteStructure::new(row_order, col_order, &edges)
                .map_err(Failure::from)?
                .render_grid();
            if !grid.is_empty() {
                out.push('\n');
                out.push_str(&grid);
            }
            out
        }
    })
}

fn cmd_mso(model: &StructuralModel, format: Format) -> Result<String, Failure> {
    let msos = find_msos(model, &model.all_equations())?;
    let signatures: Vec<FaultSignature> = msos
        .iter()
        .map(|s| faults_of(model, s))
        .collect::<Result<_, _>>()?;
    Ok(match format {
        Format::Json => json(
            &msos
                .iter()
                .zip(&signatures)
                .map(|(s, f)| SetRecord {
                    set: ids(s),
                    signature: fault_ids(f),
                })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => csv_rows(
            &["set", "signature"],
            &msos
                .iter()
                .zip(&signatures)
                .map(|(s, f)| vec![s.members().join(","), f.members().join(",")])
                .collect::<Vec<_>>(),
        ),
        Format::Table => table(
            &["MSO set", "fault signature"],
            &msos
                .iter()
                .zip(&signatures)
                .map(|(s, f)| vec![s.to_string(), f.to_string()])
                .collect::<Vec<_>>(),
        ),
    })
}

fn cmd_mtes(model: &StructuralModel, format: Format) -> Result<String, Failure> {
    let mtes = find_mtes(model)?;
    let supports: Vec<FaultSignature> = mtes
        .iter()
        .map(|s| faults_of(model, s))
        .collect::<Result<_, _>>()?;
    Ok(match format {
        Format::Json => json(
            &mtes
                .iter()
                .zip(&supports)
                .map(|(s, f)| SetRecord {
                    set: ids(s),
                    signature: fault_ids(f),
                })
                .collect::<Vec<_>>(),
        ),
        Format::Csv => csv_rows(
            &["set", "signature"],
            &mtes
                .iter()
                .zip(&supports)
                .map(|(s, f)| vec![s.members().join(","), f.members().join(",")])
                .collect::<Vec<_>>(),
        ),
        Format::Table => table(
            &["MTES", "test support"],
            &mtes
                .iter()
                .zip(&supports)
                .map(|(s, f)| vec![s.to_string(), f.to_string()])
                .collect::<Vec<_>>(),
        ),
    })
}

fn cmd_rg(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
    format: Format,
    irreducible_only: bool,
) -> Result<String, Failure> {
    let mut results: Vec<RgResult> = find_irg(&find_rg(model, op)?)?;
    if irreducible_only {
        results.retain(|r| r.irreducible);
    }
    Ok(match (format, irreducible_only) {
        (Format::Json, _) => json(
            &results
                .iter()
                .map(|r| RgRecord {
                    set: ids(&r.set),
                    signature: fault_ids(&r.signature),
                    irreducible: r.irreducible,
                    redundancy: r.redundancy,
                })
                .collect::<Vec<_>>(),
        ),
        (Format::Csv, _) => csv_rows(
            &["set", "signature", "redundancy", "irreducible"],
            &results
                .iter()
                .map(|r| {
                    vec![
                        r.set.members().join(","),
                        r.signature.members().join(","),
                        r.redundancy.to_string(),
                        r.irreducible.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
        (Format::Table, true) => table(
            &["IRG set", "fault signature"],
            &results
                .iter()
                .map(|r| vec![r.set.to_string(), r.signature.to_string()])
                .collect::<Vec<_>>(),
        ),
        (Format::Table, false) => table(
            &["RG set", "fault signature", "redundancy", "irreducible"],
            &results
                .iter()
                .map(|r| {
                    vec![
                        r.set.to_string(),
                        r.signature.to_string(),
                        r.redundancy.to_string(),
                        r.irreducible.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    })
}

fn cmd_detect(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
    format: Format,
) -> Result<String, Failure> {
    let detectable = detectable_faults(model, op)?;
    Ok(match format {
        Format::Json => json(&DetectRecord {
            operator: op.name().to_string(),
            detectable: fault_ids(&detectable),
        }),
        Format::Csv => csv_rows(
            &["fault"],
            &detectable
                .iter()
                .map(|f| vec![f.to_string()])
                .collect::<Vec<_>>(),
        ),
        Format::Table => table(
            &["detectable fault"],
            &detectable
                .iter()
                .map(|f| vec![f.to_string()])
                .collect::<Vec<_>>(),
        ),
    })
}

fn cmd_isolate(
    model: &StructuralModel,
    op: &dyn TestabilityOperator,
    from: Option<&str>,
    wrt: Option<&str>,
    format: Format,
) -> Result<String, Failure> {
    if let (Some(from), Some(wrt)) = (from, wrt) {
        let verdict = isolability(model, op, &parse_mode(from), &parse_mode(wrt))?;
        return Ok(match format {
            Format::Json => json(&IsolateRecord {
                from: fault_ids(&verdict.from_mode),
                wrt: fault_ids(&verdict.wrt_mode),
                isolable: verdict.isolable,
                witness: verdict.witness.clone(),
            }),
            Format::Csv => csv_rows(
                &["from", "wrt", "isolable", "witness"],
                &[vec![
                    verdict.from_mode.members().join(","),
                    verdict.wrt_mode.members().join(","),
                    verdict.isolable.to_string(),
                    verdict.witness.clone().unwrap_or_default(),
                ]],
            ),
            Format::Table => table(
                &["from", "wrt", "isolable", "witness"],
                &[vec![
                    verdict.from_mode.to_string(),
                    verdict.wrt_mode.to_string(),
                    verdict.isolable.to_string(),
                    verdict.witness.clone().unwrap_or_else(|| "-".into()),
                ]],
            ),
        });
    }

    let matrix = isolability_matrix(model, op)?;
    Ok(match format {
        Format::Json => json(&MatrixRecord {
            faults: matrix.faults.clone(),
            isolable: matrix.grid.clone(),
        }),
        Format::Csv => {
            let mut rows = Vec::new();
            for (i, fi) in matrix.faults.iter().enumerate() {
                for (j, fj) in matrix.faults.iter().enumerate() {
                    rows.push(vec![
                        fi.clone(),
                        fj.clone(),
                        matrix.grid[i][j].to_string(),
                    ]);
                }
            }
            csv_rows(&["from", "wrt", "isolable"], &rows)
        }
        Format::Table => {
            let mut headers: Vec<&str> = vec!["from\\wrt"];
            headers.extend(matrix.faults.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = matrix
                .faults
                .iter()
                .enumerate()
                .map(|(i, fi)| {
                    let mut row = vec![fi.clone()];
                    row.extend(
                        matrix.grid[i]
                            .iter()
                            .map(|&b| if b { "X".into() } else { "-".into() }),
                    );
                    row
                })
                .collect();
            table(&headers, &rows)
        }
    })
}

fn cmd_residual(
    file: &ModelFile,
    model: &StructuralModel,
    sets: &[String],
    fuse: Option<&str>,
    format: Format,
) -> Result<String, Failure> {
    let block = file.linear.as_ref().ok_or_else(|| Failure {
        message: "model file has no linear block".to_string(),
        code: 2,
    })?;
    let lin = LinearStaticModel::new(model, block)?;

    let chosen: Vec<EquationSet> = if sets.is_empty() {
        let msos = find_msos(model, &model.all_equations())?;
        let mut out = Vec::new();
        for s in msos {
            if computation_order(model, &s).is_ok() {
                out.push(s);
            }
        }
        out
    } else {
        sets.iter().map(|s| parse_set(s)).collect()
    };

    let mut derived: Vec<(EquationSet, String, LinearResidual)> = Vec::new();
    for set in &chosen {
        let order = computation_order(model, set)?;
        for (eq, residual) in derive_residuals(&lin, &order)? {
            derived.push((set.clone(), eq, residual));
        }
    }

    let mut records: Vec<ResidualRecord> = derived
        .iter()
        .map(|(set, eq, r)| ResidualRecord {
            set: ids(set),
            residual_equation: eq.clone(),
            expression: r.known_expression(),
            sensitivity: r.sensitivity_expression(),
            variance: r.variance,
        })
        .collect();
    records.sort_by(|a, b| (&a.set, &a.residual_equation).cmp(&(&b.set, &b.residual_equation)));

    let fusion = match fuse {
        None => None,
        Some(fault) => {
            let sensitive: Vec<LinearResidual> = derived
                .iter()
                .filter(|(_, _, r)| r.fault_gain(fault).map(|g| !num::Zero::is_zero(g)) == Some(true))
                .map(|(_, _, r)| r.normalized_to(fault))
                .collect::<Result<_, _>>()?;
            if sensitive.len() < 2 {
                return Err(Failure {
                    message: format!(
                        "fusion needs at least two residuals sensitive to `{fault}`, found {}",
                        sensitive.len()
                    ),
                    code: 1,
                });
            }
            let fusion = min_variance_fusion(&sensitive, fault, lin.noise_cov())?;
            Some(FusionRecord {
                target_fault: fault.to_string(),
                weights: fusion.weights.clone(),
                variance: fusion.variance,
                residual_covariance: fusion.residual_covariance.clone(),
                expression: fusion.fused.known_expression(),
                sensitivity: fusion.fused.sensitivity_expression(),
            })
        }
    };

    Ok(match format {
        Format::Json => json(&ResidualReport {
            residuals: records,
            fusion,
        }),
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.set.join(","),
                        r.residual_equation.clone(),
                        r.expression.clone(),
                        r.sensitivity.clone(),
                        num(r.variance),
                    ]
                })
                .collect();
            if let Some(f) = &fusion {
                rows.push(vec![
                    "(fused)".into(),
                    String::new(),
                    f.expression.clone(),
                    f.sensitivity.clone(),
                    num(f.variance),
                ]);
            }
            csv_rows(
                &["set", "residual", "value", "sensitivity", "variance"],
                &rows,
            )
        }
        Format::Table => {
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        braced(&r.set),
                        r.residual_equation.clone(),
                        r.expression.clone(),
                        r.sensitivity.clone(),
                        num(r.variance),
                    ]
                })
                .collect();
            let mut out = table(&["set", "residual", "value", "sensitivity", "variance"], &rows);
            if let Some(f) = &fusion {
                out.push('\n');
                out.push_str(&format!("fusion target: {}\n", f.target_fault));
                out.push_str(&format!(
                    "weights: [{}]\n",
                    f.weights.iter().map(|w| num(*w)).collect::<Vec<_>>().join(", ")
                ));
                out.push_str(&format!("variance: {}\n", num(f.variance)));
                out.push_str(&format!(
                    "residual covariance: [{}]\n",
                    f.residual_covariance
                        .iter()
                        .map(|row| format!(
                            "[{}]",
                            row.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
                        ))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
                out.push_str(&format!("fused value: {}\n", f.expression));
                out.push_str(&format!("fused sensitivity: {}\n", f.sensitivity));
            }
            out
        }
    })
}

fn cmd_oracle_check(
    model: &StructuralModel,
    registry: &OperatorRegistry,
    bound: usize,
) -> Result<(String, bool), Failure> {
    let mut out = String::new();
    let mut mismatches = 0usize;
    let mut report = |line: String, ok: bool, out: &mut String| {
        if !ok {
            mismatches += 1;
        }
        out.push_str(&line);
        out.push('\n');
    };

    for name in registry.names().collect::<Vec<_>>() {
        let op = registry.get(name)?;
        let fast = mstar(model, &model.all_equations(), op)?;
        let brute = brute_force_mstar(model, &model.all_equations(), op, bound)?;
        let ok = fast == brute;
        report(
            if ok {
                format!("mstar[{name}] vs exhaustive union: ok")
            } else {
                format!("mstar[{name}] vs exhaustive union: MISMATCH ({fast} vs {brute})")
            },
            ok,
            &mut out,
        );

        let fast_rg = find_rg(model, op)?;
        let brute_rg = brute_force_rg(model, op, bound)?;
        let ok = fast_rg == brute_rg;
        report(
            if ok {
                format!("find_rg[{name}] vs exhaustive grouping: ok")
            } else {
                format!(
                    "find_rg[{name}] vs exhaustive grouping: MISMATCH ({} vs {} results)",
                    fast_rg.len(),
                    brute_rg.len()
                )
            },
            ok,
            &mut out,
        );
    }

    let fast_mso = find_msos(model, &model.all_equations())?;
    let brute_mso = brute_force_msos(model, &model.all_equations(), bound)?;
    let ok = fast_mso == brute_mso;
    report(
        if ok {
            "find_msos vs exhaustive minimality: ok".to_string()
        } else {
            format!(
                "find_msos vs exhaustive minimality: MISMATCH ({} vs {} sets)",
                fast_mso.len(),
                brute_mso.len()
            )
        },
        ok,
        &mut out,
    );

    let tes_via_rg: Vec<(EquationSet, FaultSignature)> =
        find_rg(model, registry.get("plus")?)?
            .into_iter()
            .map(|r| (r.set, r.signature))
            .collect();
    let brute_tes = brute_force_tes(model, bound)?;
    let ok = tes_via_rg == brute_tes;
    report(
        if ok {
            "tes via plus-operator recursion vs exhaustive maximality: ok".to_string()
        } else {
            format!(
                "tes via plus-operator recursion vs exhaustive maximality: MISMATCH ({} vs {} sets)",
                tes_via_rg.len(),
                brute_tes.len()
            )
        },
        ok,
        &mut out,
    );

    let fast_mtes = find_mtes(model)?;
    let brute_mtes = brute_force_mtes(model, bound)?;
    let ok = fast_mtes == brute_mtes;
    report(
        if ok {
            "find_mtes vs exhaustive minimality: ok".to_string()
        } else {
            format!(
                "find_mtes vs exhaustive minimality: MISMATCH ({} vs {} sets)",
                fast_mtes.len(),
                brute_mtes.len()
            )
        },
        ok,
        &mut out,
    );

    if mismatches == 0 {
        out.push_str("all checks passed\n");
    } else {
        out.push_str(&format!("{mismatches} check(s) mismatched\n"));
    }
    Ok((out, mismatches > 0))
}
