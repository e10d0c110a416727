use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use isogeny_lgp_core::cm::{abc_factorization, classify_prime_power_cm, FieldFlags, ImagQuadDisc};
use isogeny_lgp_core::exceptional::{
    classify_xk, normalize_to_r, search_maximal_exceptional_2adic, uplift_sweep, SearchOptions,
    XKVerdict, XKWitness,
};
use isogeny_lgp_core::fixtures::{parse_group_records, read_fixture, GroupRecord};
use isogeny_lgp_core::frobdata::{find_witness, parse_ap_file, FrobRecord};
use isogeny_lgp_core::genus::{
    assemble_q_exception_list, fiber_product, genus_of, x0_product, GenusData,
};
use isogeny_lgp_core::grp::{classify, DEFAULT_CAP};
use isogeny_lgp_core::mat2::MatLiteral;
use isogeny_lgp_core::verify::{check_names, run_selected, VerifyOptions};
use isogeny_lgp_core::{Error, MatGroup, PrimePowerModulus};

#[derive(Parser)]
#[command(
    name = "isogeny-lgp",
    version,
    about = "Exceptional subgroups of GL_2 and the local-global principle for cyclic isogenies"
)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Element cap for group closures.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal exceptional subgroups of GL_2(Z/2^n Z) up to conjugacy.
    Exc2 {
        #[arg(long)]
        n: u32,
        /// Keep only groups with surjective determinant.
        #[arg(long)]
        det_surjective: bool,
        /// Permit searches at n >= 6.
        #[arg(long)]
        allow_long: bool,
    },
    /// Classify <X> K(l^(2m+1)), or sweep over every X when --x is absent.
    Liftexc {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        m: u32,
        /// Matrix literal `[[a,b],[c,d]]`.
        #[arg(long)]
        x: Option<String>,
    },
    /// Genus of X_G for fixture groups, or of X_0(N).
    Genus {
        #[arg(long, conflicts_with = "x0", required_unless_present = "x0")]
        fixture: Option<String>,
        #[arg(long)]
        x0: Option<u64>,
    },
    /// Genus of the fiber product of fixture groups at distinct primes.
    Fiber {
        #[arg(long, value_delimiter = ',', required = true)]
        fixtures: Vec<String>,
    },
    /// Levels N with rational points giving local-global exceptions.
    AssembleQList,
    /// CM Cartan case analysis.
    Cm {
        #[command(subcommand)]
        command: CmCommand,
    },
    /// Search Frobenius traces for a witness against l^n-isogenies.
    Frob {
        #[arg(long)]
        file: String,
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        exp: u32,
    },
    /// Run the property checks and print a pass/fail ledger.
    Verify {
        /// Samples per sampled family.
        #[arg(long, default_value_t = VerifyOptions::default().samples)]
        samples: usize,
        /// Random subgroups for the genus integrality check.
        #[arg(long, default_value_t = VerifyOptions::default().random_groups)]
        random_groups: usize,
        /// Run only these checks (comma-separated short names).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

#[derive(Args)]
struct CmField {
    #[arg(long, allow_hyphen_values = true)]
    disc: i64,
    /// Comma-separated `key=value` field facts.
    #[arg(long, default_value = "")]
    flags: String,
}

#[derive(Subcommand)]
enum CmCommand {
    /// Case analysis for a single prime power.
    Classify {
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        field: CmField,
    },
    /// Split N into A * B * C.
    Abc {
        #[arg(long = "N")]
        big_n: u64,
        #[command(flatten)]
        field: CmField,
    },
}

/// A command's outcome: rendered output and whether its checks passed.
struct Report {
    text: String,
    ok: bool,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { text, ok: true }
    }
}

fn emit<T: Serialize>(
    json: bool,
    value: &T,
    human: impl FnOnce() -> String,
) -> Result<String, Error> {
    if json {
        serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))
    } else {
        Ok(human())
    }
}

#[derive(Serialize)]
struct GroupRow {
    prime: u64,
    exponent: u32,
    gl2_level: u64,
    genus: u64,
    det_surjective: bool,
    order: usize,
    generators: Vec<[[i64; 2]; 2]>,
}

fn group_row(g: &MatGroup) -> Result<GroupRow, Error> {
    let md = g.modulus();
    let rep = classify(g);
    Ok(GroupRow {
        prime: md.prime(),
        exponent: md.exponent(),
        gl2_level: md.prime().pow(rep.gl2_level),
        genus: genus_of(g)?.genus,
        det_surjective: rep.det_surjective,
        order: g.order(),
        generators: GroupRecord::from_group(&g.with_small_generators()).generators,
    })
}

#[derive(Serialize)]
struct GenusRow {
    level: u64,
    index: u64,
    e2: u64,
    e3: u64,
    cusps: u64,
    genus: u64,
}

impl From<GenusData> for GenusRow {
    fn from(d: GenusData) -> Self {
        GenusRow {
            level: d.level,
            index: d.index_mu,
            e2: d.e2,
            e3: d.e3,
            cusps: d.cusps,
            genus: d.genus,
        }
    }
}

fn genus_table(rows: &[GenusRow]) -> String {
    let mut s = String::from("level  index  e2  e3  cusps  genus\n");
    for r in rows {
        s += &format!(
            "{:>5}  {:>5}  {:>2}  {:>2}  {:>5}  {:>5}\n",
            r.level, r.index, r.e2, r.e3, r.cusps, r.genus
        );
    }
    s
}

fn fixture_groups(name: &str, cap: usize) -> Result<Vec<MatGroup>, Error> {
    parse_group_records(&read_fixture(name)?)?
        .iter()
        .map(|r| MatGroup::closure_capped(r.modulus()?, &r.matrices()?, cap))
        .collect()
}

/// Rough single-core time for the 2-adic search.
fn estimate_seconds(n: u32) -> f64 {
    20.0 * 13f64.powi(n as i32 - 6)
}

fn exc2(cli: &Cli, n: u32, det_surjective: bool, allow_long: bool) -> Result<Report, Error> {
    if n >= 6 && !allow_long {
        return Err(Error::Invalid(format!(
            "n = {n} needs --allow-long (estimated {:.0} s on one core)",
            estimate_seconds(n)
        )));
    }
    let opts = SearchOptions {
        cap: cli.cap,
        det_surjective_only: det_surjective,
    };
    let groups = search_maximal_exceptional_2adic(n, &opts)?;
    let rows: Vec<GroupRow> = groups.iter().map(group_row).collect::<Result<_, _>>()?;
    let text = emit(cli.json, &rows, || {
        let mut s = format!("{} maximal exceptional classes mod 2^{n}\n", rows.len());
        s += "level  genus  det-surjective  order  generators\n";
        for r in &rows {
            let gens: Vec<String> = r
                .generators
                .iter()
                .map(|g| MatLiteral(*g).to_string())
                .collect();
            s += &format!(
                "{:>5}  {:>5}  {:>14}  {:>5}  {}\n",
                r.gl2_level,
                r.genus,
                r.det_surjective,
                r.order,
                gens.join(" ")
            );
        }
        s
    })?;
    Ok(Report::ok(text))
}

#[derive(Serialize)]
struct XKReport {
    x: [[i64; 2]; 2],
    verdict: XKVerdict,
    diagonals_opposite: bool,
    witness_line: Option<(u64, u64)>,
    witness_element: Option<[[i64; 2]; 2]>,
    conjugator_into_r: Option<[[i64; 2]; 2]>,
}

fn liftexc(cli: &Cli, ell: u64, m: u32, x: Option<&str>) -> Result<Report, Error> {
    let Some(x) = x else {
        let s = uplift_sweep(ell, m)?;
        let ok = s.passed();
        let text = emit(cli.json, &s, || {
            format!(
                "{} candidates: {} Borel, {} lift-exceptional, {} nonsquare discriminant\n\
                 criterion failures: {}\nnormalization failures: {}\n",
                s.examined,
                s.borel,
                s.lift_exceptional,
                s.disc_violation,
                s.criterion_failures.len(),
                s.normalization_failures.len()
            )
        })?;
        return Ok(Report { text, ok });
    };
    let md = PrimePowerModulus::new(ell, 2 * m + 1)?;
    let lit: MatLiteral = x.parse()?;
    let mat = lit.to_mat(md);
    let c = classify_xk(&mat, ell, m)?;
    let conj = if c.verdict == XKVerdict::LiftExceptional {
        Some(MatLiteral::from_mat(&normalize_to_r(&mat, ell, m)?.0).0)
    } else {
        None
    };
    let report = XKReport {
        x: MatLiteral::from_mat(&mat).0,
        verdict: c.verdict,
        diagonals_opposite: c.diagonals_opposite,
        witness_line: match &c.witness {
            Some(XKWitness::Line(l)) => Some(l.rep()),
            _ => None,
        },
        witness_element: match &c.witness {
            Some(XKWitness::Element(e)) => Some(MatLiteral::from_mat(e).0),
            _ => None,
        },
        conjugator_into_r: conj,
    };
    let text = emit(cli.json, &report, || {
        let mut s = format!(
            "X = {}\nverdict: {:?}\ndiagonals opposite: {}\n",
            MatLiteral(report.x),
            c.verdict,
            c.diagonals_opposite
        );
        if let Some((a, b)) = report.witness_line {
            s += &format!("common line: ({a},{b})\n");
        }
        if let Some(e) = report.witness_element {
            s += &format!("nonsquare discriminant: {}\n", MatLiteral(e));
        }
        if let Some(p) = report.conjugator_into_r {
            s += &format!("conjugates into R by {}\n", MatLiteral(p));
        }
        s
    })?;
    Ok(Report::ok(text))
}

fn genus_cmd(cli: &Cli, fixture: Option<&str>, x0: Option<u64>) -> Result<Report, Error> {
    let rows: Vec<GenusRow> = match (fixture, x0) {
        (_, Some(n)) => vec![x0_product(n)?.genus()?.into()],
        (Some(f), None) => fixture_groups(f, cli.cap)?
            .iter()
            .map(|g| genus_of(g).map(GenusRow::from))
            .collect::<Result<_, _>>()?,
        (None, None) => return Err(Error::Invalid("one of --fixture, --x0 is required".into())),
    };
    Ok(Report::ok(emit(cli.json, &rows, || genus_table(&rows))?))
}

fn fiber(cli: &Cli, fixtures: &[String]) -> Result<Report, Error> {
    let mut groups = Vec::new();
    for f in fixtures {
        groups.extend(fixture_groups(f, cli.cap)?);
    }
    let row: GenusRow = fiber_product(&groups)?.genus()?.into();
    Ok(Report::ok(emit(cli.json, &row, || {
        genus_table(std::slice::from_ref(&row))
    })?))
}

fn q_list(cli: &Cli) -> Result<Report, Error> {
    let rep = assemble_q_exception_list(&isogeny_lgp_core::fixtures::table1())?;
    let text = emit(cli.json, &rep, || {
        let mut s = String::from("surviving fiber products (genus <= 1):\n");
        for e in rep.g_times_x0.iter().chain(&rep.h_times_x0) {
            s += &format!(
                "  {} x {}: level {}, genus {}\n",
                e.left, e.right, e.level, e.genus
            );
        }
        let min_gh = rep.g_times_h.iter().map(|e| e.genus).min();
        s += &format!(
            "G x H products: {}, minimum genus {:?}\n",
            rep.g_times_h.len(),
            min_gh
        );
        let list: Vec<String> = rep.list.iter().map(u64::to_string).collect();
        s += &format!("N = {{{}}}\n", list.join(", "));
        s
    })?;
    Ok(Report::ok(text))
}

fn cm(cli: &Cli, command: &CmCommand) -> Result<Report, Error> {
    match command {
        CmCommand::Classify { ell, n, field } => {
            let d = ImagQuadDisc::new(field.disc)?;
            let rep = classify_prime_power_cm(*ell, *n, d, &FieldFlags::parse(&field.flags)?)?;
            let text = emit(cli.json, &rep, || {
                let mut s = format!(
                    "l^n = {}^{}, d_F = {}: {:?}, case {:?}, verdict {:?}\nindex bound {} (per splitting {}, l^(n/4) = {:.3})\n",
                    rep.ell,
                    rep.n,
                    d.value(),
                    rep.splitting,
                    rep.case,
                    rep.verdict,
                    rep.index_bound,
                    rep.refined_bound,
                    rep.quarter_bound
                );
                if let Some(i) = rep.exhaustive_index {
                    s += &format!("exhaustive index {i}\n");
                }
                s
            })?;
            Ok(Report::ok(text))
        }
        CmCommand::Abc { big_n, field } => {
            let d = ImagQuadDisc::new(field.disc)?;
            let f = abc_factorization(*big_n, d, &FieldFlags::parse(&field.flags)?)?;
            let text = emit(cli.json, &f, || {
                format!(
                    "N = {} = A {} * B {} * C {}; A <= {}: {}\n",
                    big_n,
                    f.a,
                    f.b,
                    f.c,
                    f.a_bound,
                    f.a_within_bound()
                )
            })?;
            Ok(Report::ok(text))
        }
    }
}

#[derive(Serialize)]
struct FrobReport {
    prime: u64,
    exponent: u32,
    records: usize,
    witness: Option<FrobRecord>,
}

fn frob(cli: &Cli, file: &str, prime: u64, exp: u32) -> Result<Report, Error> {
    let md = PrimePowerModulus::new(prime, exp)?;
    let recs: Vec<FrobRecord> = parse_ap_file(&read_fixture(file)?)?
        .into_iter()
        .filter(|r| r.p != prime)
        .collect();
    let rep = FrobReport {
        prime,
        exponent: exp,
        records: recs.len(),
        witness: find_witness(&recs, md)?,
    };
    let text = emit(cli.json, &rep, || match rep.witness {
        Some(w) => format!("witness mod {md}: p = {}, a_p = {}\n", w.p, w.a_p),
        None => format!("no witness mod {md} among {} records\n", rep.records),
    })?;
    Ok(Report::ok(text))
}

fn verify(
    cli: &Cli,
    samples: usize,
    random_groups: usize,
    only: &[String],
) -> Result<Report, Error> {
    let known = check_names();
    if let Some(bad) = only.iter().find(|o| !known.contains(&o.as_str())) {
        return Err(Error::Invalid(format!(
            "unknown check {bad:?}; known: {}",
            known.join(", ")
        )));
    }
    let opts = VerifyOptions {
        samples,
        random_groups,
        ..VerifyOptions::default()
    };
    let json = cli.json;
    let checks = run_selected(&opts, only, |c| {
        if !json {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            println!("{verdict}  {} [{:.1} s]: {}", c.name, c.seconds, c.detail);
        }
    });
    let ok = checks.iter().all(|c| c.passed);
    let passed = checks.iter().filter(|c| c.passed).count();
    let text = emit(json, &checks, || {
        format!("{passed}/{} checks passed\n", checks.len())
    })?;
    Ok(Report { text, ok })
}

fn dispatch(cli: &Cli) -> Result<Report, Error> {
    match &cli.command {
        Command::Exc2 {
            n,
            det_surjective,
            allow_long,
        } => exc2(cli, *n, *det_surjective, *allow_long),
        Command::Liftexc { ell, m, x } => liftexc(cli, *ell, *m, x.as_deref()),
        Command::Genus { fixture, x0 } => genus_cmd(cli, fixture.as_deref(), *x0),
        Command::Fiber { fixtures } => fiber(cli, fixtures),
        Command::AssembleQList => q_list(cli),
        Command::Cm { command } => cm(cli, command),
        Command::Frob { file, prime, exp } => frob(cli, file, *prime, *exp),
        Command::Verify {
            samples,
            random_groups,
            only,
        } => verify(cli, *samples, *random_groups, only),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Capacity { .. } | Error::Consistency(_) | Error::LiftFailure(_) | Error::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0
            || rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .is_err()
        {
            eprintln!("error: invalid --threads {t}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(rep) => {
            let mut out = std::io::stdout().lock();
            let written = out.write_all(rep.text.as_bytes()).and_then(|_| {
                if cli.json {
                    writeln!(out)
                } else {
                    Ok(())
                }
            });
            if let Err(e) = written {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            }
            if rep.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Capacity {
                checkpoint: Some(c),
                ..
            } = &e
            {
                eprintln!("checkpoint: {c}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
