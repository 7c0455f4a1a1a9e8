//! UCI subprocess engine session.
//!
//! One session owns one engine process, strictly sequential: every `go`
//! is answered by exactly one `bestmove` before the next command goes
//! out. Parallelism comes from pools of independent sessions.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use puzzleforge_core::chess::{Move, Position};
use puzzleforge_core::engine::{
    AnalysisResult, Budget, Engine, EngineError, MoveEval, Score,
};

pub const DEFAULT_HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);
/// Upper bound on a single search; depth searches on hard positions can
/// run long, so this is deliberately generous.
const SEARCH_TIMEOUT: Duration = Duration::from_secs(600);

pub struct UciEngine {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    name: String,
    multipv_set: usize,
}

fn lost(msg: impl Into<String>) -> EngineError {
    EngineError::SessionLost(msg.into())
}

impl UciEngine {
    /// Spawns the engine binary and completes the `uci`/`isready`
    /// handshake within `handshake_timeout`.
    pub fn spawn(
        path: &Path,
        threads: u32,
        hash_mb: u32,
        handshake_timeout: Duration,
    ) -> Result<UciEngine, EngineError> {
        let mut child = Command::new(path)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| lost(format!("spawning {}: {e}", path.display())))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let (tx, lines) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                match line {
                    Ok(line) => {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });

        let mut engine = UciEngine {
            child,
            stdin,
            lines,
            name: path.display().to_string(),
            multipv_set: 1,
        };
        engine.send("uci")?;
        let deadline = Instant::now() + handshake_timeout;
        loop {
            let line = engine.recv_until(deadline, "uciok handshake")?;
            if let Some(rest) = line.strip_prefix("id name ") {
                engine.name = rest.to_string();
            }
            if line.trim() == "uciok" {
                break;
            }
        }
        engine.send(&format!("setoption name Threads value {threads}"))?;
        engine.send(&format!("setoption name Hash value {hash_mb}"))?;
        engine.sync(deadline)?;
        Ok(engine)
    }

    fn send(&mut self, command: &str) -> Result<(), EngineError> {
        writeln!(self.stdin, "{command}").map_err(|e| lost(format!("writing `{command}`: {e}")))
    }

    fn recv_until(&mut self, deadline: Instant, what: &str) -> Result<String, EngineError> {
        let now = Instant::now();
        if now >= deadline {
            return Err(lost(format!("timeout waiting for {what}")));
        }
        match self.lines.recv_timeout(deadline - now) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => Err(lost(format!("timeout waiting for {what}"))),
            Err(RecvTimeoutError::Disconnected) => {
                Err(lost(format!("engine exited while waiting for {what}")))
            }
        }
    }

    /// `isready`/`readyok` barrier.
    fn sync(&mut self, deadline: Instant) -> Result<(), EngineError> {
        self.send("isready")?;
        loop {
            if self.recv_until(deadline, "readyok")?.trim() == "readyok" {
                return Ok(());
            }
        }
    }

    fn set_multipv(&mut self, multipv: usize) -> Result<(), EngineError> {
        if multipv != self.multipv_set {
            self.send(&format!("setoption name MultiPV value {multipv}"))?;
            self.multipv_set = multipv;
        }
        Ok(())
    }

    fn go_command(budget: Budget, searchmoves: Option<Move>) -> String {
        let mut cmd = match budget {
            Budget::Depth(d) => format!("go depth {d}"),
            Budget::Nodes(n) => format!("go nodes {n}"),
            Budget::MoveTime(ms) => format!("go movetime {ms}"),
        };
        if let Some(mv) = searchmoves {
            cmd.push_str(&format!(" searchmoves {}", mv.uci()));
        }
        cmd
    }

    /// Issues `go` and collects the final info line per multipv index
    /// until `bestmove` arrives.
    fn search(
        &mut self,
        pos: &Position,
        multipv: usize,
        budget: Budget,
        searchmoves: Option<Move>,
    ) -> Result<Vec<MoveEval>, EngineError> {
        self.set_multipv(multipv)?;
        self.send(&format!("position fen {}", pos.to_fen()))?;
        self.send(&Self::go_command(budget, searchmoves))?;

        let deadline = Instant::now()
            + match budget {
                Budget::MoveTime(ms) => Duration::from_millis(ms) + Duration::from_secs(30),
                _ => SEARCH_TIMEOUT,
            };
        let mut latest: Vec<Option<MoveEval>> = vec![None; multipv];
        loop {
            let line = self.recv_until(deadline, "bestmove")?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.first() {
                Some(&"info") => {
                    if let Some((index, eval)) = parse_info(&tokens) {
                        if index >= 1 && index <= multipv {
                            latest[index - 1] = Some(eval);
                        }
                    }
                }
                Some(&"bestmove") => break,
                _ => {} // unknown chatter is skipped without error
            }
        }
        let mut evals: Vec<MoveEval> = latest.into_iter().flatten().collect();
        // Engines emit ranks in order, but re-sorting enforces the
        // winrate ordering contract regardless.
        evals.sort_by(|a, b| {
            b.winrate()
                .partial_cmp(&a.winrate())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if evals.is_empty() {
            return Err(lost("search produced no evaluations".to_string()));
        }
        Ok(evals)
    }
}

/// Extracts (multipv index, eval) from a tokenized `info` line. Lines
/// without score or pv (nps chatter and the like) return `None`.
fn parse_info(tokens: &[&str]) -> Option<(usize, MoveEval)> {
    let mut index = 1usize;
    let mut score = None;
    let mut pv: Vec<Move> = Vec::new();
    let mut i = 1;
    while i < tokens.len() {
        match tokens[i] {
            "multipv" => {
                index = tokens.get(i + 1)?.parse().ok()?;
                i += 2;
            }
            "score" => match (tokens.get(i + 1), tokens.get(i + 2)) {
                (Some(&"cp"), Some(v)) => {
                    score = Some(Score::Cp(v.parse().ok()?));
                    i += 3;
                }
                (Some(&"mate"), Some(v)) => {
                    score = Some(Score::from_uci_mate(v.parse().ok()?));
                    i += 3;
                }
                _ => return None,
            },
            "pv" => {
                pv = tokens[i + 1..]
                    .iter()
                    .map_while(|t| Move::from_uci(t))
                    .collect();
                break;
            }
            // Tokens with a single argument are skipped generically;
            // anything unknown advances one token.
            "depth" | "seldepth" | "time" | "nodes" | "nps" | "hashfull" | "tbhits"
            | "currmove" | "currmovenumber" => i += 2,
            _ => i += 1,
        }
    }
    let score = score?;
    let first = *pv.first()?;
    Some((
        index,
        MoveEval {
            mv: first,
            score,
            pv,
        },
    ))
}

impl Engine for UciEngine {
    fn analyze(
        &mut self,
        pos: &Position,
        multipv: usize,
        budget: Budget,
    ) -> Result<AnalysisResult, EngineError> {
        if pos.legal_moves().is_empty() {
            return Err(EngineError::NoLegalMoves { fen: pos.to_fen() });
        }
        let evals = self.search(pos, multipv, budget, None)?;
        Ok(AnalysisResult {
            fen: pos.to_fen(),
            budget,
            evals,
            engine: self.identity(),
        })
    }

    fn evaluate_move(
        &mut self,
        pos: &Position,
        mv: Move,
        budget: Budget,
    ) -> Result<MoveEval, EngineError> {
        let evals = self.search(pos, 1, budget, Some(mv))?;
        evals
            .into_iter()
            .find(|e| e.mv == mv)
            .ok_or_else(|| EngineError::ScriptMissingMove {
                fen: pos.to_fen(),
                mv: mv.uci(),
            })
    }

    fn identity(&self) -> String {
        self.name.clone()
    }
}

impl Drop for UciEngine {
    fn drop(&mut self) {
        let _ = self.send("quit");
        std::thread::sleep(Duration::from_millis(20));
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
