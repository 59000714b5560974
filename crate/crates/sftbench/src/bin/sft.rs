//! `sft` — command-line surface over the workbench library. Thin by design:
//! every subcommand parses arguments, calls one or two library operations,
//! prints a stable one-line result, and (when `--out` is given) writes the
//! JSON artifact plus a run manifest next to it, atomically.
//!
//! Exit codes: 0 success, 1 exhaustive "no result", 2 input error,
//! 3 consistency error, 4 budget exhausted.

use clap::{Parser, Subcommand};
use sftbench::acceptor::{build_acceptor, WordAcceptor};
use sftbench::aperiodic;
use sftbench::ball::ball;
use sftbench::error::{exit_code, Error, Result};
use sftbench::growth;
use sftbench::manifest::RunManifest;
use sftbench::presentation::parse_presentation;
use sftbench::rewrite::{kb_complete, RewritingSystem, DEFAULT_MAX_LEN, DEFAULT_MAX_RULES};
use sftbench::shelling;
use sftbench::shift::SearchOutcome;
use sftbench::wang;
use sftbench::word::Word;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Node-budget override for searches, in nodes.
const BUDGET_ENV: &str = "SFT_BUDGET";

#[derive(Parser)]
#[command(
    name = "sft",
    version,
    about = "Workbench for subshifts of finite type on finitely generated groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Group presentations: completion, normal forms, balls, acceptors, growth.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Wang tiles and Turing machines: compilation, searches, decoding, rendering.
    #[command(subcommand)]
    Tile(TileCmd),
    /// Shelling labels, atlases, consistency checks, translation constants.
    #[command(subcommand)]
    Shell(ShellCmd),
    /// Levels, divergence graphs, Δ sequences, populations, matchings, stabilizers.
    #[command(subcommand)]
    Aperiodic(AperiodicCmd),
}

#[derive(Subcommand)]
enum GroupCmd {
    /// Complete the presentation into a confluent shortlex rewriting system.
    Complete {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_RULES)]
        max_rules: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a word to its shortlex normal form.
    Reduce {
        file: PathBuf,
        #[arg(long = "word")]
        word: String,
    },
    /// Enumerate the ball of a given radius in the Cayley graph.
    Ball {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the shortlex word acceptor.
    Acceptor {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the exponential growth rate λ of the group.
    Growth { file: PathBuf },
    /// Classify acceptor states by growth (maximal / submaximal / finite).
    Classify { file: PathBuf },
}

#[derive(Subcommand)]
enum TileCmd {
    /// Compile a Turing machine into a seeded Wang tile set.
    CompileTm {
        tm: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for an n×n tiling (seeded sets require their seed by default).
    Square {
        tiles: PathBuf,
        #[arg(long)]
        n: usize,
        /// Force the seed requirement off even for a seeded set.
        #[arg(long)]
        ignore_seed: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a w×h torus tiling (periodic in both directions).
    Torus {
        tiles: PathBuf,
        #[arg(long)]
        w: usize,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode a seeded tiling back into the machine run it embeds.
    Decode {
        tiles: PathBuf,
        #[arg(long)]
        tm: PathBuf,
        #[arg(long)]
        tiling: PathBuf,
    },
    /// Render a tiling as ASCII (stdout) and optionally SVG.
    Render {
        tiles: PathBuf,
        #[arg(long)]
        tiling: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ShellCmd {
    /// Label a ball with per-vertex (ð, state, parent) shelling data.
    Label {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Extract the shelling subshift as an atlas of local charts.
    Atlas {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        rule_radius: u32,
        #[arg(long)]
        sample: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derive the height function from ð and check label consistency.
    Check {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
    },
    /// Translation constant of the height function under a move.
    Translate {
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        radius: u32,
        #[arg(long = "move")]
        mv: String,
    },
}

#[derive(Subcommand)]
enum AperiodicCmd {
    /// Slice a labeled ball into height levels with their maximal-state parts.
    Levels {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
    },
    /// Divergence graph of one level; prints its connectivity.
    Divergence {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        /// Closeness threshold; defaults to ⌈2δ⌉ for the group.
        #[arg(long)]
        threshold: Option<u32>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the Beatty-difference sequence Δ for α = log_q λ.
    Delta {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 2)]
        q: u32,
        /// Inclusive index range, e.g. 0..6.
        #[arg(long, default_value = "0..6")]
        range: String,
    },
    /// Assign bounded populations to the maximal vertices of every level.
    Populate {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long, default_value_t = aperiodic::DEFAULT_DENSITY)]
        rho: f64,
        #[arg(long, default_value_t = aperiodic::DEFAULT_POP_BOUND)]
        n_bound: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match one level's children into the next level's villager slots.
    Match {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 1)]
        delta_i: i64,
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = 3)]
        depth: u32,
        #[arg(long)]
        threshold: Option<u32>,
        #[arg(long, default_value_t = 3)]
        margin: u32,
        #[arg(long, default_value_t = aperiodic::DEFAULT_DENSITY)]
        rho: f64,
        #[arg(long, default_value_t = aperiodic::DEFAULT_POP_BOUND)]
        n_bound: u32,
    },
    /// Check a lineage (comma-separated vertex words, one per level).
    Lineage {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        #[arg(long)]
        vertices: String,
    },
    /// Report label/population preservation, C, and Δ-contradictions per move.
    Stabilizers {
        file: PathBuf,
        #[arg(long)]
        radius: u32,
        /// Comma-separated moves; `e` denotes the identity.
        #[arg(long)]
        moves: String,
        #[arg(long, default_value_t = 3.0)]
        lambda: f64,
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long, default_value_t = aperiodic::DEFAULT_DENSITY)]
        rho: f64,
        #[arg(long, default_value_t = aperiodic::DEFAULT_POP_BOUND)]
        n_bound: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

fn budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(wang::DEFAULT_TILE_BUDGET)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

/// Write atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
    };
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Write the artifact and its manifest (path + ".manifest.json").
fn emit(out: &Path, bytes: &[u8], manifest: &mut RunManifest) -> Result<()> {
    write_atomic(out, bytes)?;
    manifest.output_bytes(&out.display().to_string(), bytes);
    let mpath = PathBuf::from(format!("{}.manifest.json", out.display()));
    write_atomic(&mpath, manifest.to_json()?.as_bytes())?;
    Ok(())
}

fn load_system(path: &Path) -> Result<RewritingSystem> {
    let pres = parse_presentation(&read(path)?)?;
    kb_complete(&pres, DEFAULT_MAX_RULES, DEFAULT_MAX_LEN)
}

fn classified_acceptor(rs: &RewritingSystem) -> Result<WordAcceptor> {
    growth::classify_states(&build_acceptor(rs)?, growth::CLASSIFY_TOL)
}

/// Parse a word, expanding `x^3` to `xxx` (single-character generator names).
fn parse_move(rs: &RewritingSystem, text: &str) -> Result<Word> {
    let text = text.trim();
    if text == "e" || text.is_empty() {
        return Ok(Word::new());
    }
    let mut expanded = String::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if i + 1 < chars.len() && chars[i + 1] == '^' {
            let mut j = i + 2;
            let mut digits = String::new();
            while j < chars.len() && chars[j].is_ascii_digit() {
                digits.push(chars[j]);
                j += 1;
            }
            let n: usize = digits
                .parse()
                .map_err(|_| Error::Input(format!("bad exponent in move '{text}'")))?;
            for _ in 0..n {
                expanded.push(c);
            }
            i = j;
        } else {
            expanded.push(c);
            i += 1;
        }
    }
    rs.presentation.parse_word(&expanded)
}

fn parse_inclusive_range(text: &str) -> Result<(i64, i64)> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| Error::Input(format!("range '{text}' is not of the form a..b")))?;
    let lo: i64 = a
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("bad range start '{a}'")))?;
    let hi: i64 = b
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("bad range end '{b}'")))?;
    if hi < lo {
        return Err(Error::Input(format!("empty range '{text}'")));
    }
    Ok((lo, hi))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct TilingFile {
    w: usize,
    h: usize,
    /// Rows of tile ids, bottom row first.
    rows: Vec<Vec<usize>>,
}

fn load_tiling(path: &Path, ts: &wang::TileSet) -> Result<TilingFile> {
    let t: TilingFile = serde_json::from_str(&read(path)?)?;
    if t.rows.len() != t.h || t.rows.iter().any(|r| r.len() != t.w) {
        return Err(Error::Input("tiling dimensions do not match its rows".into()));
    }
    if t.rows.iter().flatten().any(|&id| id >= ts.tiles.len()) {
        return Err(Error::Consistency(
            "tiling references tile ids outside the tile set".into(),
        ));
    }
    Ok(t)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Group(c) => run_group(c),
        Cmd::Tile(c) => run_tile(c),
        Cmd::Shell(c) => run_shell(c),
        Cmd::Aperiodic(c) => run_aperiodic(c),
    }
}

// ---------------------------------------------------------------------------
// group
// ---------------------------------------------------------------------------

fn run_group(cmd: GroupCmd) -> Result<i32> {
    match cmd {
        GroupCmd::Complete {
            file,
            max_rules,
            max_len,
            out,
        } => {
            let pres = parse_presentation(&read(&file)?)?;
            let rs = kb_complete(&pres, max_rules, max_len)?;
            println!("confluent: {} rules", rs.rules.len());
            if let Some(out) = out {
                let mut m = RunManifest::new("group complete");
                m.input_file(&file)?
                    .param("max_rules", max_rules)
                    .param("max_len", max_len);
                let rules: Vec<[String; 2]> = rs
                    .rules
                    .iter()
                    .map(|(l, r)| {
                        [
                            pres.word_to_string(l),
                            pres.word_to_string(r),
                        ]
                    })
                    .collect();
                let json = serde_json::to_string_pretty(&serde_json::json!({
                    "generators": pres.generators,
                    "rules": rules,
                }))?;
                emit(&out, json.as_bytes(), &mut m)?;
            }
            Ok(exit_code::SUCCESS)
        }
        GroupCmd::Reduce { file, word } => {
            let rs = load_system(&file)?;
            let w = parse_move(&rs, &word)?;
            let nf = rs.reduce(&w)?;
            println!("{}", rs.presentation.word_to_string(&nf));
            Ok(exit_code::SUCCESS)
        }
        GroupCmd::Ball { file, radius, out } => {
            let rs = load_system(&file)?;
            let b = ball(&rs, radius)?;
            println!(
                "vertices: {} (spheres: {})",
                b.vertices.len(),
                b.sphere_sizes()
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            if let Some(out) = out {
                let mut m = RunManifest::new("group ball");
                m.input_file(&file)?.param("radius", radius);
                let verts: Vec<String> = b
                    .vertices
                    .iter()
                    .map(|v| rs.presentation.word_to_string(v))
                    .collect();
                let json = serde_json::to_string_pretty(&serde_json::json!({
                    "radius": radius,
                    "vertices": verts,
                }))?;
                emit(&out, json.as_bytes(), &mut m)?;
            }
            Ok(exit_code::SUCCESS)
        }
        GroupCmd::Acceptor { file, out, dot } => {
            let rs = load_system(&file)?;
            let acc = build_acceptor(&rs)?;
            println!("states: {}", acc.states);
            if let Some(out) = out {
                let mut m = RunManifest::new("group acceptor");
                m.input_file(&file)?;
                let json = serde_json::to_string_pretty(&acc.to_json())?;
                emit(&out, json.as_bytes(), &mut m)?;
            }
            if let Some(dot) = dot {
                write_atomic(&dot, acc.to_dot().as_bytes())?;
            }
            Ok(exit_code::SUCCESS)
        }
        GroupCmd::Growth { file } => {
            let rs = load_system(&file)?;
            let acc = build_acceptor(&rs)?;
            let lambda = growth::growth_rate(&acc, growth::DEFAULT_TOL)?;
            println!("{lambda:.9}");
            Ok(exit_code::SUCCESS)
        }
        GroupCmd::Classify { file } => {
            let rs = load_system(&file)?;
            let acc = classified_acceptor(&rs)?;
            let lambda = acc.lambda.unwrap_or(1.0);
            println!("lambda: {lambda:.9}");
            for (i, class) in acc.growth_class.iter().enumerate() {
                println!("state {i}: {class:?}");
            }
            Ok(exit_code::SUCCESS)
        }
    }
}

// ---------------------------------------------------------------------------
// tile
// ---------------------------------------------------------------------------

fn outcome_to_exit(
    outcome: SearchOutcome<Vec<Vec<usize>>>,
    out: Option<PathBuf>,
    manifest: &mut RunManifest,
) -> Result<i32> {
    match outcome {
        SearchOutcome::Found(rows) => {
            let (h, w) = (rows.len(), rows[0].len());
            println!("FOUND {w}x{h}");
            if let Some(out) = out {
                let json = serde_json::to_string_pretty(&TilingFile { w, h, rows })?;
                emit(&out, json.as_bytes(), manifest)?;
            }
            Ok(exit_code::SUCCESS)
        }
        SearchOutcome::None => {
            println!("NONE (exhaustive)");
            Ok(exit_code::NONE)
        }
        SearchOutcome::Budget => Err(Error::Budget(
            "search budget ran out before the question was settled".into(),
        )),
    }
}

fn run_tile(cmd: TileCmd) -> Result<i32> {
    match cmd {
        TileCmd::CompileTm { tm, out } => {
            let machine = wang::TuringMachine::from_json(&read(&tm)?)?;
            let ts = wang::compile_tm(&machine)?;
            println!("tiles: {} colors: {}", ts.tiles.len(), ts.colors.len());
            if let Some(out) = out {
                let mut m = RunManifest::new("tile compile-tm");
                m.input_file(&tm)?;
                emit(&out, ts.to_json()?.as_bytes(), &mut m)?;
            }
            Ok(exit_code::SUCCESS)
        }
        TileCmd::Square {
            tiles,
            n,
            ignore_seed,
            out,
        } => {
            let ts = wang::TileSet::from_json(&read(&tiles)?)?;
            let require_seed = ts.seeded && !ignore_seed;
            let mut m = RunManifest::new("tile square");
            m.input_file(&tiles)?
                .param("n", n)
                .param("require_seed", require_seed);
            let outcome = wang::tile_square(&ts, n, require_seed, budget())?;
            outcome_to_exit(outcome, out, &mut m)
        }
        TileCmd::Torus { tiles, w, h, out } => {
            let ts = wang::TileSet::from_json(&read(&tiles)?)?;
            let mut m = RunManifest::new("tile torus");
            m.input_file(&tiles)?.param("w", w).param("h", h);
            let outcome = wang::tile_torus(&ts, w, h, budget())?;
            outcome_to_exit(outcome, out, &mut m)
        }
        TileCmd::Decode { tiles, tm, tiling } => {
            let ts = wang::TileSet::from_json(&read(&tiles)?)?;
            let machine = wang::TuringMachine::from_json(&read(&tm)?)?;
            let t = load_tiling(&tiling, &ts)?;
            if !wang::verify_square(&ts, &t.rows) {
                return Err(Error::Consistency(
                    "tiling violates the tile set's adjacency".into(),
                ));
            }
            let configs = wang::decode_run(&ts, &machine, &t.rows)?;
            for (step, c) in configs.iter().enumerate() {
                let tape: Vec<String> = c
                    .tape
                    .iter()
                    .map(|(cell, sym)| format!("{cell}:{sym}"))
                    .collect();
                println!(
                    "step {step}: state {} head {} tape {{{}}}",
                    c.state,
                    c.head,
                    tape.join(", ")
                );
            }
            Ok(exit_code::SUCCESS)
        }
        TileCmd::Render { tiles, tiling, svg } => {
            let ts = wang::TileSet::from_json(&read(&tiles)?)?;
            let t = load_tiling(&tiling, &ts)?;
            print!("{}", sftbench::render::ascii_tile_grid(&t.rows));
            if let Some(svg_path) = svg {
                let cells: Vec<Vec<[String; 4]>> = t
                    .rows
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|&id| {
                                let tile = &ts.tiles[id];
                                [
                                    tile.north.clone(),
                                    tile.east.clone(),
                                    tile.south.clone(),
                                    tile.west.clone(),
                                ]
                            })
                            .collect()
                    })
                    .collect();
                write_atomic(&svg_path, sftbench::render::svg_edge_grid(&cells).as_bytes())?;
            }
            Ok(exit_code::SUCCESS)
        }
    }
}

// ---------------------------------------------------------------------------
// shell
// ---------------------------------------------------------------------------

fn run_shell(cmd: ShellCmd) -> Result<i32> {
    match cmd {
        ShellCmd::Label {
            file,
            radius,
            out,
            dot,
        } => {
            let rs = load_system(&file)?;
            let acc = classified_acceptor(&rs)?;
            let patch = shelling::label_ball(&rs, &acc, radius)?;
            println!(
                "vertices: {} levels: 0..={}",
                patch.ball.vertices.len(),
                radius
            );
            if let Some(out) = out {
                let mut m = RunManifest::new("shell label");
                m.input_file(&file)?.param("radius", radius);
                let json = shelling::shelling_to_json(&rs.presentation, &patch)?;
                emit(&out, json.as_bytes(), &mut m)?;
            }
            if let Some(dot) = dot {
                write_atomic(
                    &dot,
                    shelling::shelling_to_dot(&rs.presentation, &patch).as_bytes(),
                )?;
            }
            Ok(exit_code::SUCCESS)
        }
        ShellCmd::Atlas {
            file,
            rule_radius,
            sample,
            out,
        } => {
            let rs = load_system(&file)?;
            let acc = classified_acceptor(&rs)?;
            let atlas = shelling::omega_s_atlas(&rs, &acc, rule_radius, sample)?;
            println!(
                "charts: {} (rule radius {rule_radius}, sampled at {sample})",
                atlas.spec.charts.len()
            );
            if let Some(out) = out {
                let mut m = RunManifest::new("shell atlas");
                m.input_file(&file)?
                    .param("rule_radius", rule_radius)
                    .param("sample", sample);
                let json = sftbench::shift::sft_to_json(&rs, &atlas.spec)?;
                emit(&out, json.as_bytes(), &mut m)?;
            }
            Ok(exit_code::SUCCESS)
        }
        ShellCmd::Check { file, radius } => {
            let rs = load_system(&file)?;
            let acc = classified_acceptor(&rs)?;
            let patch = shelling::label_ball(&rs, &acc, radius)?;
            let dh: Vec<Vec<i8>> = patch.labels.iter().map(|l| l.dh.clone()).collect();
            let h = shelling::integrate_h(&rs.presentation, &patch.ball, &dh, 0)?;
            if h != patch.h {
                return Err(Error::Consistency(
                    "integrated height disagrees with distance".into(),
                ));
            }
            println!("height integration: ok ({} vertices)", h.len());
            Ok(exit_code::SUCCESS)
        }
        ShellCmd::Translate { file, radius, mv } => {
            let rs = load_system(&file)?;
            let acc = classified_acceptor(&rs)?;
            let patch = shelling::label_ball(&rs, &acc, radius)?;
            let t = parse_move(&rs, &mv)?;
            let c = shelling::translation_constant(&rs, &patch.ball.vertices, &patch.h, &t)?;
            match c {
                Some(c) => {
                    println!("C={c}");
                    Ok(exit_code::SUCCESS)
                }
                None => {
                    println!("C=none");
                    Ok(exit_code::NONE)
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// aperiodic
// ---------------------------------------------------------------------------

struct LeveledBall {
    rs: RewritingSystem,
    acc: WordAcceptor,
    patch: shelling::ShellingPatch,
    levels: Vec<aperiodic::LevelSet>,
}

fn leveled_ball(file: &Path, radius: u32) -> Result<LeveledBall> {
    let rs = load_system(file)?;
    let acc = classified_acceptor(&rs)?;
    let patch = shelling::label_ball(&rs, &acc, radius)?;
    let levels = aperiodic::build_levels(&patch, &acc)?;
    Ok(LeveledBall {
        rs,
        acc,
        patch,
        levels,
    })
}

fn run_aperiodic(cmd: AperiodicCmd) -> Result<i32> {
    match cmd {
        AperiodicCmd::Levels { file, radius } => {
            let lb = leveled_ball(&file, radius)?;
            for l in &lb.levels {
                println!(
                    "level {}: size {} gplus {}{}",
                    l.index,
                    l.vertices.len(),
                    l.gplus.len(),
                    if l.gplus_empty() { " (empty)" } else { "" }
                );
            }
            Ok(exit_code::SUCCESS)
        }
        AperiodicCmd::Divergence {
            file,
            radius,
            level,
            depth,
            threshold,
            dot,
        } => {
            let lb = leveled_ball(&file, radius)?;
            let thr = threshold.unwrap_or_else(|| lb.rs.presentation.two_delta_ceil());
            let l = lb
                .levels
                .iter()
                .find(|l| l.index == level as i64)
                .ok_or_else(|| Error::Input(format!("no level {level} in this ball")))?;
            let dg = aperiodic::divergence_graph(&lb.rs, &lb.patch, l, depth, thr)?;
            let (connected, comps) = aperiodic::check_connected(&dg);
            println!(
                "vertices: {} edges: {} (D={depth}, threshold={thr}, {comps} component(s))",
                dg.vertices.len(),
                dg.edges.len()
            );
            println!("components: {}", if connected { "1" } else { ">1" });
            if let Some(dot) = dot {
                write_atomic(
                    &dot,
                    aperiodic::divergence_to_dot(&lb.rs.presentation, &lb.patch, &dg).as_bytes(),
                )?;
            }
            Ok(exit_code::SUCCESS)
        }
        AperiodicCmd::Delta { lambda, q, range } => {
            let (lo, hi) = parse_inclusive_range(&range)?;
            let len = (hi - lo + 1) as usize;
            let ds = aperiodic::delta_sequence(lambda, q, lo, len)?;
            println!(
                "{}",
                ds.values
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            Ok(exit_code::SUCCESS)
        }
        AperiodicCmd::Populate {
            file,
            radius,
            rho,
            n_bound,
            out,
        } => {
            let lb = leveled_ball(&file, radius)?;
            let pop = aperiodic::populate_levels(&lb.patch, &lb.levels, &lb.acc, rho, n_bound)?;
            for l in lb.levels.iter().filter(|l| !l.gplus_empty()) {
                let total: u32 = l.gplus.iter().map(|v| pop[v]).sum();
                println!(
                    "level {}: population {} over {} vertices (rho={rho}, N={n_bound})",
                    l.index,
                    total,
                    l.gplus.len()
                );
            }
            if let Some(out) = out {
                let mut m = RunManifest::new("aperiodic populate");
                m.input_file(&file)?
                    .param("radius", radius)
                    .param("rho", rho)
                    .param("n_bound", n_bound);
                let pops: std::collections::BTreeMap<String, u32> = pop
                    .iter()
                    .map(|(&v, &p)| {
                        (
                            lb.rs.presentation.word_to_string(&lb.patch.ball.vertices[v]),
                            p,
                        )
                    })
                    .collect();
                let json = serde_json::to_string_pretty(&pops)?;
                emit(&out, json.as_bytes(), &mut m)?;
            }
            Ok(exit_code::SUCCESS)
        }
        AperiodicCmd::Match {
            file,
            radius,
            level,
            delta_i,
            q,
            depth,
            threshold,
            margin,
            rho,
            n_bound,
        } => {
            let lb = leveled_ball(&file, radius)?;
            let thr = threshold.unwrap_or_else(|| lb.rs.presentation.two_delta_ceil());
            let pop = aperiodic::populate_levels(&lb.patch, &lb.levels, &lb.acc, rho, n_bound)?;
            let pos = lb
                .levels
                .iter()
                .position(|l| l.index == level as i64)
                .ok_or_else(|| Error::Input(format!("no level {level} in this ball")))?;
            if pos + 1 >= lb.levels.len() {
                return Err(Error::Input("no next level inside the ball".into()));
            }
            let dg = aperiodic::divergence_graph(&lb.rs, &lb.patch, &lb.levels[pos], depth, thr)?;
            let outcome = aperiodic::match_generations(
                &lb.patch,
                &pop,
                &dg,
                &lb.levels[pos + 1],
                delta_i,
                q,
                margin,
            )?;
            match outcome {
                aperiodic::MatchOutcome::Matched(m) => {
                    println!(
                        "matched: {} children into {} slots (imbalance {})",
                        m.pairs.len(),
                        m.slots.len(),
                        m.imbalance
                    );
                    Ok(exit_code::SUCCESS)
                }
                aperiodic::MatchOutcome::HallViolation {
                    children,
                    neighborhood,
                } => {
                    println!(
                        "HALL VIOLATION: {} children admit only {} slots",
                        children.len(),
                        neighborhood.len()
                    );
                    Ok(exit_code::NONE)
                }
            }
        }
        AperiodicCmd::Lineage {
            file,
            radius,
            vertices,
        } => {
            let lb = leveled_ball(&file, radius)?;
            let index = lb.patch.ball.index();
            let mut lineage = Vec::new();
            for tok in vertices.split(',') {
                let w = parse_move(&lb.rs, tok)?;
                let nf = lb.rs.reduce(&w)?;
                let v = index.get(nf.as_slice()).copied().ok_or_else(|| {
                    Error::Input(format!("vertex '{}' outside the ball", tok.trim()))
                })?;
                lineage.push(v);
            }
            let report = aperiodic::lineage_check(&lb.rs, &lb.patch, &lineage)?;
            println!(
                "steps: max {} bound {} | spread: {} | R: {}",
                report.max_step,
                report.step_bound,
                if report.spread_ok { "ok" } else { "violated" },
                report.measured_r
            );
            for v in &report.violations {
                println!("violation: {v}");
            }
            if report.ok() {
                Ok(exit_code::SUCCESS)
            } else {
                Ok(exit_code::CONSISTENCY)
            }
        }
        AperiodicCmd::Stabilizers {
            file,
            radius,
            moves,
            lambda,
            q,
            rho,
            n_bound,
        } => {
            let lb = leveled_ball(&file, radius)?;
            let pop = aperiodic::populate_levels(&lb.patch, &lb.levels, &lb.acc, rho, n_bound)?;
            let delta = aperiodic::delta_sequence(
                lambda,
                q,
                -(radius as i64),
                4 * radius as usize + 8,
            )?;
            let mvs: Vec<Word> = moves
                .split(',')
                .map(|t| parse_move(&lb.rs, t))
                .collect::<Result<_>>()?;
            let window: Vec<usize> = (0..lb.patch.ball.vertices.len()).collect();
            let pp = aperiodic::PopulatedPatch {
                patch: lb.patch,
                levels: lb.levels,
                delta,
                pop,
            };
            let reports = aperiodic::window_aperiodicity(&lb.rs, &pp, &window, &mvs)?;
            for r in &reports {
                let c = r
                    .c
                    .map(|c| format!("C={c}"))
                    .unwrap_or_else(|| "C=none".into());
                let tail = match r.contradiction {
                    Some((i, a, b)) => format!(" contradiction at level {i}: Δ={a} vs Δ={b}"),
                    None => String::new(),
                };
                println!(
                    "move {}: labels={} pop={} {}{}",
                    r.mv,
                    if r.label_preserving { "yes" } else { "no" },
                    if r.pop_preserving { "yes" } else { "no" },
                    c,
                    tail
                );
            }
            Ok(exit_code::SUCCESS)
        }
    }
}
