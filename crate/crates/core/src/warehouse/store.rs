use super::log::{parse_log, LogLine, SnapshotFile, LOG_FILE, SCHEMA_VERSION, SNAPSHOT_FILE};
use super::{
    stored_level, AuditDecision, Clock, DecisionRecord, Provenance, PushSetSizes, PushSets, StatsReport,
    StatsSummary, SystemClock, TimeWindow, Verdict, WarehouseError, WarehouseRecord, UNCLASSIFIED,
};
use crate::config::CategoryRegistry;
use crate::types::{AuditState, TicketRecord};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// Appends between snapshots.
    pub snapshot_every: usize,
    /// Categories known at decision time, used to mark auditor-assigned
    /// categories as new.
    pub registry: CategoryRegistry,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self {
            snapshot_every: 1000,
            registry: CategoryRegistry::shipped(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReceipt {
    pub id: String,
    pub version: u64,
    pub level: u8,
    /// False when an identical version was already stored.
    pub created: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueuePage {
    pub items: Vec<WarehouseRecord>,
    pub next_cursor: Option<String>,
}

#[derive(Debug, Default)]
struct State {
    versions: BTreeMap<String, Vec<WarehouseRecord>>,
    by_category: BTreeMap<String, BTreeSet<String>>,
    by_level: BTreeMap<u8, BTreeSet<String>>,
    by_state: BTreeMap<AuditState, BTreeSet<String>>,
    /// Pending records keyed by (first-ingest time, id).
    pending: BTreeSet<(u64, String)>,
    last_ts: u64,
}

fn category_key(r: &TicketRecord) -> String {
    r.category.clone().unwrap_or_else(|| UNCLASSIFIED.to_string())
}

impl State {
    fn latest(&self, id: &str) -> Option<&WarehouseRecord> {
        self.versions.get(id).and_then(|v| v.last())
    }

    fn unindex(&mut self, w: &WarehouseRecord) {
        let id = &w.record.id;
        if let Some(s) = self.by_category.get_mut(&category_key(&w.record)) {
            s.remove(id);
        }
        if let Some(s) = self.by_level.get_mut(&w.record.info_level) {
            s.remove(id);
        }
        if let Some(s) = self.by_state.get_mut(&w.record.audit_state) {
            s.remove(id);
        }
        self.pending.remove(&(w.first_ts, id.clone()));
    }

    fn index(&mut self, w: &WarehouseRecord) {
        let id = w.record.id.clone();
        self.by_category.entry(category_key(&w.record)).or_default().insert(id.clone());
        self.by_level.entry(w.record.info_level).or_default().insert(id.clone());
        self.by_state.entry(w.record.audit_state).or_default().insert(id.clone());
        if w.record.audit_state == AuditState::Pending {
            self.pending.insert((w.first_ts, id));
        }
    }

    /// Append a version in memory; versions must arrive in order.
    fn apply(&mut self, w: WarehouseRecord) -> Result<(), String> {
        let expected = self.versions.get(&w.record.id).map_or(1, |v| v.len() as u64 + 1);
        if w.version != expected {
            return Err(format!("{}: version {} where {} was expected", w.record.id, w.version, expected));
        }
        if let Some(prev) = self.latest(&w.record.id).cloned() {
            self.unindex(&prev);
        }
        self.index(&w);
        self.last_ts = self.last_ts.max(w.ts);
        self.versions.entry(w.record.id.clone()).or_default().push(w);
        Ok(())
    }

    fn replay(&mut self, lines: Vec<LogLine>, first_line_no: usize) -> Result<(), WarehouseError> {
        for (i, line) in lines.into_iter().enumerate() {
            self.apply(line.into()).map_err(|message| WarehouseError::Corrupt {
                line: first_line_no + i + 1,
                message,
            })?;
        }
        Ok(())
    }

    fn all_versions(&self) -> impl Iterator<Item = &WarehouseRecord> {
        self.versions.values().flatten()
    }

    fn latest_all(&self) -> impl Iterator<Item = &WarehouseRecord> {
        self.versions.values().filter_map(|v| v.last())
    }
}

#[derive(Debug)]
struct Disk {
    dir: PathBuf,
    file: File,
    log_len: u64,
    since_snapshot: usize,
}

/// Versioned ticket store. Readers see a consistent snapshot; writers are
/// serialized through one lock and each write is a single appended line.
pub struct Warehouse {
    state: RwLock<State>,
    disk: Mutex<Option<Disk>>,
    clock: Arc<dyn Clock>,
    opts: StoreOptions,
}

impl std::fmt::Debug for Warehouse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Warehouse").field("records", &self.len()).finish_non_exhaustive()
    }
}

impl Warehouse {
    /// Store that lives only in memory.
    pub fn in_memory(opts: StoreOptions, clock: Arc<dyn Clock>) -> Self {
        Self {
            state: RwLock::new(State::default()),
            disk: Mutex::new(None),
            clock,
            opts,
        }
    }

    pub fn in_memory_default() -> Self {
        Self::in_memory(StoreOptions::default(), Arc::new(SystemClock))
    }

    /// Open or create a store in `dir`, rebuilding state from the newest
    /// usable snapshot plus the log tail.
    pub fn open(dir: impl AsRef<Path>, opts: StoreOptions, clock: Arc<dyn Clock>) -> Result<Self, WarehouseError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let log_path = dir.join(LOG_FILE);
        let bytes = match fs::read(&log_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);

        let mut state = State::default();
        let snapshot = read_snapshot(&dir.join(SNAPSHOT_FILE)).filter(|s| s.log_len as usize <= complete);
        let start = match snapshot {
            Some(s) => {
                let n = s.records.len();
                state.replay(s.records, 0).map_err(|e| WarehouseError::Corrupt {
                    line: 0,
                    message: format!("snapshot: {e}"),
                })?;
                let first_line = bytes[..s.log_len as usize].iter().filter(|&&b| b == b'\n').count();
                debug_assert!(n >= first_line);
                (s.log_len as usize, first_line)
            }
            None => (0, 0),
        };
        let (tail, _) = parse_log(&bytes[start.0..complete], start.1)?;
        state.replay(tail, start.1)?;

        let file = OpenOptions::new().create(true).append(true).open(&log_path)?;
        if complete < bytes.len() {
            file.set_len(complete as u64)?;
        }
        Ok(Self {
            state: RwLock::new(state),
            disk: Mutex::new(Some(Disk {
                dir,
                file,
                log_len: complete as u64,
                since_snapshot: 0,
            })),
            clock,
            opts,
        })
    }

    pub fn registry(&self) -> &CategoryRegistry {
        &self.opts.registry
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().unwrap_or_else(|p| p.into_inner())
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, State> {
        self.state.write().unwrap_or_else(|p| p.into_inner())
    }

    fn next_ts(&self, state: &State) -> u64 {
        self.clock.now_ms().max(state.last_ts + 1)
    }

    /// Persist then apply. Called with the state write lock held.
    fn commit(&self, state: &mut State, w: WarehouseRecord) -> Result<(), WarehouseError> {
        let mut disk = self.disk.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(d) = disk.as_mut() {
            let mut line = serde_json::to_vec(&LogLine::from(&w)).map_err(|e| WarehouseError::StoreUnavailable(e.to_string()))?;
            line.push(b'\n');
            d.file.write_all(&line)?;
            d.file.flush()?;
            d.log_len += line.len() as u64;
            d.since_snapshot += 1;
        }
        state.apply(w).map_err(WarehouseError::StoreUnavailable)?;
        if let Some(d) = disk.as_mut() {
            if self.opts.snapshot_every > 0 && d.since_snapshot >= self.opts.snapshot_every {
                write_snapshot(d, state)?;
                d.since_snapshot = 0;
            }
        }
        Ok(())
    }

    /// Store `record` as a new version unless an identical version exists.
    /// Later versions may add information but never lower the level.
    pub fn ingest(&self, record: TicketRecord, provenance: Provenance) -> Result<IngestReceipt, WarehouseError> {
        self.store(record, provenance, false)
    }

    /// Like [`Warehouse::ingest`] but refuses a differing record under an
    /// existing id.
    pub fn submit(&self, record: TicketRecord, provenance: Provenance) -> Result<IngestReceipt, WarehouseError> {
        self.store(record, provenance, true)
    }

    fn store(&self, mut record: TicketRecord, provenance: Provenance, strict: bool) -> Result<IngestReceipt, WarehouseError> {
        if record.id.trim().is_empty() {
            return Err(WarehouseError::EmptyId);
        }
        record.info_level = stored_level(&record);
        let mut state = self.write();
        let (version, first_ts, history) = match state.versions.get(&record.id) {
            Some(versions) => {
                if let Some(same) = versions.iter().rev().find(|v| v.record == record) {
                    return Ok(IngestReceipt {
                        id: record.id,
                        version: same.version,
                        level: same.record.info_level,
                        created: false,
                    });
                }
                if strict {
                    return Err(WarehouseError::DuplicateId(record.id));
                }
                let last = versions.last().expect("non-empty version list");
                if record.info_level > last.record.info_level {
                    return Err(WarehouseError::LevelRegression {
                        id: record.id,
                        from: last.record.info_level,
                        to: record.info_level,
                    });
                }
                (last.version + 1, last.first_ts, last.audit_history.clone())
            }
            None => (1, 0, Vec::new()),
        };
        let ts = self.next_ts(&state);
        let receipt = IngestReceipt {
            id: record.id.clone(),
            version,
            level: record.info_level,
            created: true,
        };
        let w = WarehouseRecord {
            record,
            version,
            ts,
            first_ts: if version == 1 { ts } else { first_ts },
            provenance,
            audit_history: history,
        };
        self.commit(&mut state, w)?;
        Ok(receipt)
    }

    /// Apply an auditor's decision to the current version, producing the next one.
    pub fn audit_decide(&self, id: &str, decision: AuditDecision) -> Result<WarehouseRecord, WarehouseError> {
        if decision.auditor.trim().is_empty() {
            return Err(WarehouseError::InvalidDecision("auditor is empty".into()));
        }
        decision.supplied.validate()?;
        if decision.verdict == Verdict::Overturned && decision.supplied.is_empty() {
            return Err(WarehouseError::InvalidDecision(
                "an overturned verdict must supply corrected information".into(),
            ));
        }
        let mut state = self.write();
        let latest = state.latest(id).ok_or_else(|| WarehouseError::UnknownRecord(id.to_string()))?.clone();
        if let Some(given) = decision.version {
            if given != latest.version {
                return Err(WarehouseError::StaleVersion {
                    id: id.to_string(),
                    current: latest.version,
                    given,
                });
            }
        }

        let mut record = latest.record.clone();
        let s = &decision.supplied;
        if let Some(c) = &s.category {
            record.category = Some(c.clone());
            record.ticket_type = self.opts.registry.get(c).map(|info| info.ticket_type);
        }
        if let Some(f) = &s.fields {
            record.fields = f.clone();
        }
        if let Some(b) = &s.field_boxes {
            record.field_boxes = b.clone();
        }
        if let Some(e) = &s.entry {
            record.entry_subject = Some(e.clone());
        }
        record.audit_state = match decision.verdict {
            Verdict::Confirmed => AuditState::Confirmed,
            Verdict::Overturned => AuditState::Overturned,
        };
        record.info_level = stored_level(&record);
        if record.info_level > latest.record.info_level {
            return Err(WarehouseError::LevelRegression {
                id: id.to_string(),
                from: latest.record.info_level,
                to: record.info_level,
            });
        }

        let ts = self.next_ts(&state);
        let mut history = latest.audit_history.clone();
        history.push(DecisionRecord {
            new_category: s.category.as_ref().is_some_and(|c| !self.opts.registry.contains(c)),
            registry_digest: registry_digest(&self.opts.registry),
            machine_class_conf: latest.machine_class_conf(),
            auditor: decision.auditor,
            verdict: decision.verdict,
            supplied: decision.supplied,
            version: latest.version,
            ts,
        });
        let w = WarehouseRecord {
            record,
            version: latest.version + 1,
            ts,
            first_ts: latest.first_ts,
            provenance: Provenance::Manual,
            audit_history: history,
        };
        self.commit(&mut state, w.clone())?;
        Ok(w)
    }

    pub fn get(&self, id: &str) -> Option<WarehouseRecord> {
        self.read().latest(id).cloned()
    }

    pub fn get_version(&self, id: &str, version: u64) -> Option<WarehouseRecord> {
        let state = self.read();
        let versions = state.versions.get(id)?;
        versions.get(version.checked_sub(1)? as usize).cloned()
    }

    pub fn versions(&self, id: &str) -> Vec<WarehouseRecord> {
        self.read().versions.get(id).cloned().unwrap_or_default()
    }

    /// Number of distinct record ids.
    pub fn len(&self) -> usize {
        self.read().versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every stored version in (id, version) order.
    pub fn export(&self) -> Vec<WarehouseRecord> {
        self.read().all_versions().cloned().collect()
    }

    pub fn ids_by_category(&self, category: &str) -> BTreeSet<String> {
        self.read().by_category.get(category).cloned().unwrap_or_default()
    }

    pub fn ids_by_level(&self, level: u8) -> BTreeSet<String> {
        self.read().by_level.get(&level).cloned().unwrap_or_default()
    }

    pub fn ids_by_audit_state(&self, s: AuditState) -> BTreeSet<String> {
        self.read().by_state.get(&s).cloned().unwrap_or_default()
    }

    /// Audit-pending records oldest first, resuming after `cursor`.
    pub fn pending_queue(&self, limit: usize, cursor: Option<&str>) -> Result<QueuePage, WarehouseError> {
        let after = cursor.map(decode_cursor).transpose()?;
        let state = self.read();
        let mut iter = state
            .pending
            .iter()
            .filter(|k| after.as_ref().is_none_or(|a| *k > a))
            .peekable();
        let mut items = Vec::new();
        let mut last = None;
        while items.len() < limit {
            let Some(key) = iter.next() else { break };
            if let Some(w) = state.latest(&key.1) {
                items.push(w.clone());
                last = Some(key.clone());
            }
        }
        let next_cursor = match (iter.peek(), last) {
            (Some(_), Some(k)) => Some(encode_cursor(&k)),
            _ => None,
        };
        Ok(QueuePage { items, next_cursor })
    }

    /// Training candidates drawn from the latest decision on each record.
    pub fn select_push_sets(&self, tau_class: f64, scarce_min_count: usize) -> PushSets {
        let state = self.read();
        push_sets(&state, tau_class, scarce_min_count)
    }

    /// Counts over records first ingested inside `window`.
    pub fn stats_report(&self, window: TimeWindow, tau_class: f64, scarce_min_count: usize) -> StatsReport {
        let state = self.read();
        let sets = push_sets(&state, tau_class, scarce_min_count);
        let in_window: Vec<&WarehouseRecord> = state.latest_all().filter(|w| window.contains(w.first_ts)).collect();
        let ids: BTreeSet<&str> = in_window.iter().map(|w| w.record.id.as_str()).collect();

        let mut by_category = BTreeMap::new();
        let mut by_level: BTreeMap<u8, usize> = (1..=4).map(|l| (l, 0)).collect();
        let mut by_audit_state: BTreeMap<AuditState, usize> = [
            AuditState::None,
            AuditState::Pending,
            AuditState::Confirmed,
            AuditState::Overturned,
        ]
        .into_iter()
        .map(|s| (s, 0))
        .collect();
        let mut pending_by_category: BTreeMap<String, usize> = BTreeMap::new();
        for w in &in_window {
            *by_category.entry(category_key(&w.record)).or_insert(0) += 1;
            *by_level.entry(w.record.info_level).or_insert(0) += 1;
            *by_audit_state.entry(w.record.audit_state).or_insert(0) += 1;
            if w.record.audit_state == AuditState::Pending {
                *pending_by_category.entry(category_key(&w.record)).or_insert(0) += 1;
            }
        }
        let count_in = |v: &[String]| v.iter().filter(|id| ids.contains(id.as_str())).count();
        let audited = by_audit_state[&AuditState::Confirmed] + by_audit_state[&AuditState::Overturned];
        let summary = StatsSummary {
            pending_audit: by_audit_state[&AuditState::Pending],
            straight_through: by_audit_state[&AuditState::None],
            overturn_rate: (audited > 0).then(|| by_audit_state[&AuditState::Overturned] as f64 / audited as f64),
            scarce_categories: scarce_categories(&state, scarce_min_count),
            busiest_audit_category: pending_by_category
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .map(|(c, _)| c.clone()),
        };
        StatsReport {
            window,
            total: in_window.len(),
            by_category,
            by_level,
            by_audit_state,
            push_sets: PushSetSizes {
                error_prone: count_in(&sets.error_prone),
                unfamiliar: count_in(&sets.unfamiliar),
                scarce: count_in(&sets.scarce),
            },
            summary,
        }
    }

    /// Write a snapshot now (persistent stores only).
    pub fn snapshot(&self) -> Result<(), WarehouseError> {
        let state = self.write();
        let mut disk = self.disk.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(d) = disk.as_mut() {
            write_snapshot(d, &state)?;
            d.since_snapshot = 0;
        }
        Ok(())
    }
}

fn category_counts(state: &State) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for w in state.latest_all() {
        if let Some(c) = &w.record.category {
            *counts.entry(c.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

fn scarce_categories(state: &State, scarce_min_count: usize) -> Vec<String> {
    category_counts(state)
        .into_iter()
        .filter(|(_, n)| *n < scarce_min_count)
        .map(|(c, _)| c.to_string())
        .collect()
}

fn push_sets(state: &State, tau_class: f64, scarce_min_count: usize) -> PushSets {
    let mut sets = PushSets::default();
    for w in state.latest_all() {
        let Some(d) = w.audit_history.last() else { continue };
        let gated = d.machine_class_conf.is_some_and(|c| c >= tau_class);
        if gated && d.verdict == Verdict::Overturned {
            sets.error_prone.push(w.record.id.clone());
        } else if !gated && d.new_category {
            sets.unfamiliar.push(w.record.id.clone());
        }
    }
    let scarce: BTreeSet<String> = scarce_categories(state, scarce_min_count).into_iter().collect();
    sets.scarce = state
        .latest_all()
        .filter(|w| w.record.category.as_ref().is_some_and(|c| scarce.contains(c)))
        .map(|w| w.record.id.clone())
        .collect();
    sets
}

fn registry_digest(registry: &CategoryRegistry) -> String {
    let mut h = Sha256::new();
    for (name, _) in registry.iter() {
        h.update(name.as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn encode_cursor(key: &(u64, String)) -> String {
    URL_SAFE_NO_PAD.encode(format!("{}\n{}", key.0, key.1))
}

fn decode_cursor(cursor: &str) -> Result<(u64, String), WarehouseError> {
    let bytes = URL_SAFE_NO_PAD.decode(cursor).map_err(|_| WarehouseError::InvalidCursor)?;
    let text = String::from_utf8(bytes).map_err(|_| WarehouseError::InvalidCursor)?;
    let (ts, id) = text.split_once('\n').ok_or(WarehouseError::InvalidCursor)?;
    Ok((ts.parse().map_err(|_| WarehouseError::InvalidCursor)?, id.to_string()))
}

fn read_snapshot(path: &Path) -> Option<SnapshotFile> {
    let bytes = fs::read(path).ok()?;
    serde_json::from_slice::<SnapshotFile>(&bytes)
        .ok()
        .filter(|s| s.schema == SCHEMA_VERSION)
}

fn write_snapshot(d: &Disk, state: &State) -> Result<(), WarehouseError> {
    let snap = SnapshotFile {
        schema: SCHEMA_VERSION,
        log_len: d.log_len,
        records: state.all_versions().map(LogLine::from).collect(),
    };
    let tmp = d.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    let bytes = serde_json::to_vec(&snap).map_err(|e| WarehouseError::StoreUnavailable(e.to_string()))?;
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, d.dir.join(SNAPSHOT_FILE))?;
    Ok(())
}
