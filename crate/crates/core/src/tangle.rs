//! The Tangle DAG.
//!
//! Transactions get dense ids in issuance order, so every approval edge points
//! from a larger id to a smaller one and id order is a topological order.
//! Storage is a set of parallel arrays indexed by id; at 10^6 transactions and
//! beyond, the per-node footprint matters more than anything else here.
//!
//! A transaction is *issued* when it picks its parents and *revealed* one time
//! unit later. Only revealed transactions are visible: they are the only ones
//! that appear in approver lists, in the tip set and in cumulative weights.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};

/// Delay between issuing a transaction and it becoming visible.
pub const REVEAL_DELAY: f64 = 1.0;

const NOT_A_TIP: u32 = u32::MAX;
const INLINE_APPROVERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct TxId(u32);

impl TxId {
    pub const GENESIS: TxId = TxId(0);

    pub fn new(index: usize) -> Self {
        TxId(u32::try_from(index).expect("transaction index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Snapshot of one transaction's fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    pub id: TxId,
    pub issue_time: f64,
    pub reveal_time: f64,
    /// `None` only for the genesis. The two parents may coincide.
    pub parents: Option<[TxId; 2]>,
    /// Cached value; stale (left at 1) when the state does not maintain weights.
    pub cumulative_weight: u64,
    pub first_approval_time: Option<f64>,
    pub is_conflict_marker: bool,
    pub revealed: bool,
}

/// The fields the weight update touches, packed so that a sweep over the
/// past cone streams through one array.
#[derive(Debug, Clone, Copy)]
struct Link {
    parents: [TxId; 2],
    weight: u32,
    /// Equal to the state's epoch when visited by the current sweep.
    stamp: u32,
}

/// Approver list stored inline. Once it outgrows the inline slots the whole
/// list moves to the spill table and `slots[0]` holds its index there.
#[derive(Debug, Clone, Copy)]
struct ApproverList {
    len: u32,
    slots: [TxId; INLINE_APPROVERS],
}

impl ApproverList {
    const EMPTY: ApproverList = ApproverList { len: 0, slots: [TxId::GENESIS; INLINE_APPROVERS] };
}

#[derive(Debug, Clone)]
pub struct TangleState {
    issue_time: Vec<f64>,
    reveal_time: Vec<f64>,
    links: Vec<Link>,
    first_approval: Vec<Option<f64>>,
    revealed: Vec<bool>,
    conflict: Vec<bool>,
    approvers: Vec<ApproverList>,
    spill: Vec<Vec<TxId>>,
    tips: Vec<TxId>,
    tip_pos: Vec<u32>,
    pending: VecDeque<TxId>,
    revealed_count: usize,
    now: f64,
    maintain_weights: bool,
    epoch: u32,
}

impl TangleState {
    /// A Tangle holding only the genesis, revealed at time 0.
    pub fn new(maintain_weights: bool) -> Self {
        let mut state = TangleState {
            issue_time: Vec::new(),
            reveal_time: Vec::new(),
            links: Vec::new(),
            first_approval: Vec::new(),
            revealed: Vec::new(),
            conflict: Vec::new(),
            approvers: Vec::new(),
            spill: Vec::new(),
            tips: Vec::new(),
            tip_pos: Vec::new(),
            pending: VecDeque::new(),
            revealed_count: 0,
            now: 0.0,
            maintain_weights,
            epoch: 0,
        };
        state.push_node([TxId::GENESIS; 2], 0.0, 0.0);
        state.revealed[0] = true;
        state.revealed_count = 1;
        state.insert_tip(TxId::GENESIS);
        state
    }

    pub fn with_capacity(maintain_weights: bool, capacity: usize) -> Self {
        let mut state = Self::new(maintain_weights);
        state.reserve(capacity);
        state
    }

    pub fn reserve(&mut self, additional: usize) {
        self.issue_time.reserve(additional);
        self.reveal_time.reserve(additional);
        self.links.reserve(additional);
        self.first_approval.reserve(additional);
        self.revealed.reserve(additional);
        self.conflict.reserve(additional);
        self.approvers.reserve(additional);
        self.tip_pos.reserve(additional);
    }

    fn push_node(&mut self, parents: [TxId; 2], issue_time: f64, reveal_time: f64) -> TxId {
        let id = TxId::new(self.issue_time.len());
        self.issue_time.push(issue_time);
        self.reveal_time.push(reveal_time);
        self.links.push(Link { parents, weight: 1, stamp: 0 });
        self.first_approval.push(None);
        self.revealed.push(false);
        self.conflict.push(false);
        self.approvers.push(ApproverList::EMPTY);
        self.tip_pos.push(NOT_A_TIP);
        id
    }

    fn check(&self, id: TxId) -> Result<()> {
        if id.index() < self.issue_time.len() {
            Ok(())
        } else {
            Err(Error::UnknownTx(id))
        }
    }

    /// Issues an honest transaction approving `parents`. It is queued for
    /// reveal at `issue_time + 1` and stays invisible until then.
    pub fn add_transaction(&mut self, parents: [TxId; 2], issue_time: f64) -> Result<TxId> {
        if issue_time < self.now {
            return Err(Error::TimeWentBackwards { issue_time, now: self.now });
        }
        for &p in &parents {
            self.check(p)?;
            if !self.revealed[p.index()] || self.reveal_time[p.index()] > issue_time {
                return Err(Error::ParentNotRevealed { parent: p, issue_time });
            }
        }
        self.now = issue_time;
        let id = self.push_node(parents, issue_time, issue_time + REVEAL_DELAY);
        self.pending.push_back(id);
        Ok(id)
    }

    /// Issues a transaction that is kept out of the reveal queue. Its parents
    /// may themselves be private. It becomes visible only through [`reveal`].
    ///
    /// [`reveal`]: TangleState::reveal
    pub fn add_private_transaction(&mut self, parents: [TxId; 2], issue_time: f64) -> Result<TxId> {
        if issue_time < self.now {
            return Err(Error::TimeWentBackwards { issue_time, now: self.now });
        }
        for &p in &parents {
            self.check(p)?;
        }
        self.now = issue_time;
        Ok(self.push_node(parents, issue_time, issue_time + REVEAL_DELAY))
    }

    pub fn set_conflict_marker(&mut self, id: TxId, flag: bool) -> Result<()> {
        self.check(id)?;
        self.conflict[id.index()] = flag;
        Ok(())
    }

    /// Reveal time of the next queued honest transaction.
    pub fn next_reveal_time(&self) -> Option<f64> {
        self.pending.front().map(|id| self.reveal_time[id.index()])
    }

    /// Reveals the next queued honest transaction.
    pub fn reveal_next(&mut self) -> Option<TxId> {
        let id = self.pending.pop_front()?;
        self.reveal_unchecked(id);
        Some(id)
    }

    /// Reveals every queued transaction whose reveal time is at most `t`.
    pub fn reveal_due(&mut self, t: f64) -> usize {
        let mut n = 0;
        while self.next_reveal_time().is_some_and(|r| r <= t) {
            self.reveal_next();
            n += 1;
        }
        n
    }

    /// Reveals everything still queued.
    pub fn drain(&mut self) -> usize {
        let mut n = 0;
        while self.reveal_next().is_some() {
            n += 1;
        }
        n
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    /// Reveals a specific transaction, typically a private one. Its parents
    /// must already be visible. Returns the number of weights updated.
    pub fn reveal(&mut self, id: TxId) -> Result<usize> {
        self.check(id)?;
        if self.revealed[id.index()] {
            return Err(Error::AlreadyRevealed(id));
        }
        for p in self.links[id.index()].parents {
            if !self.revealed[p.index()] {
                return Err(Error::ParentNotRevealed { parent: p, issue_time: self.issue_time[id.index()] });
            }
        }
        if let Some(pos) = self.pending.iter().position(|&q| q == id) {
            self.pending.remove(pos);
        }
        Ok(self.reveal_unchecked(id))
    }

    fn reveal_unchecked(&mut self, id: TxId) -> usize {
        let i = id.index();
        let t = self.reveal_time[i];
        self.now = self.now.max(t);
        self.revealed[i] = true;
        self.revealed_count += 1;

        let [a, b] = self.links[i].parents;
        self.attach_approver(a, id, t);
        if b != a {
            self.attach_approver(b, id, t);
        }
        self.insert_tip(id);

        if self.maintain_weights {
            self.update_weights_incremental(id)
        } else {
            0
        }
    }

    fn attach_approver(&mut self, parent: TxId, approver: TxId, t: f64) {
        let p = parent.index();
        self.push_approver(p, approver);
        self.remove_tip(parent);
        if self.first_approval[p].is_none() {
            self.first_approval[p] = Some(t);
        }
    }

    fn push_approver(&mut self, parent: usize, approver: TxId) {
        let list = &mut self.approvers[parent];
        let n = list.len as usize;
        if n < INLINE_APPROVERS {
            list.slots[n] = approver;
        } else if n == INLINE_APPROVERS {
            let mut all = list.slots.to_vec();
            all.push(approver);
            list.slots[0] = TxId::new(self.spill.len());
            self.spill.push(all);
        } else {
            self.spill[list.slots[0].index()].push(approver);
        }
        list.len += 1;
    }

    fn insert_tip(&mut self, id: TxId) {
        self.tip_pos[id.index()] = self.tips.len() as u32;
        self.tips.push(id);
    }

    fn remove_tip(&mut self, id: TxId) {
        let pos = self.tip_pos[id.index()];
        if pos == NOT_A_TIP {
            return;
        }
        self.tips.swap_remove(pos as usize);
        if let Some(&moved) = self.tips.get(pos as usize) {
            self.tip_pos[moved.index()] = pos;
        }
        self.tip_pos[id.index()] = NOT_A_TIP;
    }

    /// Adds one to the cached weight of every transaction in the past cone of
    /// `new_tx` (itself excluded) and returns the size of that cone.
    ///
    /// Ids are a topological order, so the cone is swept in descending id
    /// order: a node is reached once some larger reached node names it as a
    /// parent, and each node is visited exactly once. The sweep ends as soon
    /// as no reached node is left below the cursor. Compared with a stack
    /// based search this visits the same set but reads memory sequentially.
    pub fn update_weights_incremental(&mut self, new_tx: TxId) -> usize {
        let start = new_tx.index();
        if start == 0 {
            return 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.links.iter_mut().for_each(|l| l.stamp = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let links = &mut self.links[..=start];
        let mut frontier = 0usize;
        for p in links[start].parents {
            let l = &mut links[p.index()];
            if l.stamp != epoch {
                l.stamp = epoch;
                frontier += 1;
            }
        }
        let mut visited = 0;
        let mut i = start;
        // Inside a grown Tangle nearly every older node is in the cone and
        // whether a parent was already reached is close to a coin flip, so
        // the loop body avoids data-dependent branches.
        while frontier > 0 && i > 0 {
            i -= 1;
            let hit = links[i].stamp == epoch;
            links[i].weight += u32::from(hit);
            visited += usize::from(hit);
            frontier -= usize::from(hit);
            for p in links[i].parents {
                let l = &mut links[p.index()];
                frontier += usize::from(hit & (l.stamp != epoch));
                l.stamp = if hit { epoch } else { l.stamp };
            }
        }
        visited
    }

    /// Rebuilds every cached weight from scratch and switches weight
    /// maintenance on for subsequent reveals.
    pub fn recompute_weights(&mut self) {
        self.maintain_weights = true;
        self.links.iter_mut().for_each(|l| l.weight = 1);
        for i in 1..self.len() {
            if self.revealed[i] {
                self.update_weights_incremental(TxId::new(i));
            }
        }
    }

    /// `1 + |{revealed y != x : y indirectly approves x}|`, computed by a
    /// full sweep over parent edges. Ignores the cached weights.
    pub fn cumulative_weight_oracle(&self, x: TxId) -> Result<u64> {
        self.check(x)?;
        let start = x.index();
        let mut reaches = vec![false; self.len() - start];
        reaches[0] = true;
        let mut count = 1u64;
        for i in start + 1..self.len() {
            let [a, b] = self.links[i].parents;
            let hit = |p: TxId| p.index() >= start && reaches[p.index() - start];
            if hit(a) || hit(b) {
                reaches[i - start] = true;
                if self.revealed[i] {
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    /// True iff `x` is reachable from `y` along parent edges. A transaction
    /// approves itself under this definition.
    pub fn indirectly_approves(&self, y: TxId, x: TxId) -> Result<bool> {
        self.check(y)?;
        self.check(x)?;
        if y == x {
            return Ok(true);
        }
        if y < x || y == TxId::GENESIS {
            return Ok(false);
        }
        let mut seen = vec![false; y.index() - x.index() + 1];
        let mut stack = vec![y];
        while let Some(v) = stack.pop() {
            if v == TxId::GENESIS {
                continue;
            }
            for p in self.links[v.index()].parents {
                if p == x {
                    return Ok(true);
                }
                if p > x && !seen[p.index() - x.index()] {
                    seen[p.index() - x.index()] = true;
                    stack.push(p);
                }
            }
        }
        Ok(false)
    }

    /// Marks `x` and every revealed transaction that indirectly approves it,
    /// following revealed approver edges forward.
    pub fn future_cone(&self, x: TxId) -> Result<Vec<bool>> {
        self.check(x)?;
        let mut mark = vec![false; self.len()];
        mark[x.index()] = true;
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            for &a in self.approvers(v) {
                if !mark[a.index()] {
                    mark[a.index()] = true;
                    stack.push(a);
                }
            }
        }
        Ok(mark)
    }

    /// Tip set recomputed from its definition.
    pub fn rescan_tips(&self) -> Vec<TxId> {
        let mut approved = vec![false; self.len()];
        for i in 1..self.len() {
            if self.revealed[i] {
                for p in self.links[i].parents {
                    approved[p.index()] = true;
                }
            }
        }
        (0..self.len()).filter(|&i| self.revealed[i] && !approved[i]).map(TxId::new).collect()
    }

    pub fn transaction(&self, id: TxId) -> Result<Transaction> {
        self.check(id)?;
        let i = id.index();
        Ok(Transaction {
            id,
            issue_time: self.issue_time[i],
            reveal_time: self.reveal_time[i],
            parents: (i != 0).then_some(self.links[i].parents),
            cumulative_weight: self.links[i].weight as u64,
            first_approval_time: self.first_approval[i],
            is_conflict_marker: self.conflict[i],
            revealed: self.revealed[i],
        })
    }

    pub fn len(&self) -> usize {
        self.issue_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issue_time.is_empty()
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed_count
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn maintains_weights(&self) -> bool {
        self.maintain_weights
    }

    /// Visible tips, in no particular order.
    pub fn tips(&self) -> &[TxId] {
        &self.tips
    }

    pub fn tip_count(&self) -> usize {
        self.tips.len()
    }

    pub fn is_tip(&self, id: TxId) -> bool {
        self.tip_pos.get(id.index()).is_some_and(|&p| p != NOT_A_TIP)
    }

    #[inline]
    pub fn is_revealed(&self, id: TxId) -> bool {
        self.revealed[id.index()]
    }

    /// Revealed direct approvers, in reveal order, one entry per approver.
    #[inline]
    pub fn approvers(&self, id: TxId) -> &[TxId] {
        let list = &self.approvers[id.index()];
        let n = list.len as usize;
        if n <= INLINE_APPROVERS {
            &list.slots[..n]
        } else {
            &self.spill[list.slots[0].index()]
        }
    }

    #[inline]
    pub fn parents(&self, id: TxId) -> Option<[TxId; 2]> {
        (id != TxId::GENESIS).then(|| self.links[id.index()].parents)
    }

    #[inline]
    pub fn weight(&self, id: TxId) -> u64 {
        self.links[id.index()].weight as u64
    }

    #[inline]
    pub fn issue_time(&self, id: TxId) -> f64 {
        self.issue_time[id.index()]
    }

    #[inline]
    pub fn reveal_time(&self, id: TxId) -> f64 {
        self.reveal_time[id.index()]
    }

    #[inline]
    pub fn first_approval_time(&self, id: TxId) -> Option<f64> {
        self.first_approval[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = TxId> + '_ {
        (0..self.len()).map(TxId::new)
    }

    /// Debug dump: one line per transaction, `id issue_time reveal_time
    /// parent1 parent2`, with `-` for the genesis parents. Unrevealed
    /// transactions are included.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for i in 0..self.len() {
            if i == 0 {
                writeln!(out, "0 {} {} - -", self.issue_time[0], self.reveal_time[0])?;
            } else {
                let [a, b] = self.links[i].parents;
                writeln!(out, "{} {} {} {} {}", i, self.issue_time[i], self.reveal_time[i], a, b)?;
            }
        }
        Ok(())
    }

    /// Rebuilds a Tangle from [`write_edge_list`] output. Every listed
    /// transaction with `reveal_time <= observe_at` is revealed.
    ///
    /// [`write_edge_list`]: TangleState::write_edge_list
    pub fn from_edge_list(text: &str, maintain_weights: bool, observe_at: f64) -> Result<Self> {
        let mut state = TangleState::new(maintain_weights);
        let mut expected = 0usize;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| Error::Parse { line: n + 1, reason: reason.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            let id: usize = fields[0].parse().map_err(|_| bad("bad id"))?;
            if id != expected {
                return Err(bad("ids must be contiguous from 0"));
            }
            expected += 1;
            if id == 0 {
                continue;
            }
            let issue: f64 = fields[1].parse().map_err(|_| bad("bad issue time"))?;
            let reveal: f64 = fields[2].parse().map_err(|_| bad("bad reveal time"))?;
            if (reveal - issue - REVEAL_DELAY).abs() > 1e-9 {
                return Err(bad("reveal time must be issue time + 1"));
            }
            let parse_parent = |s: &str| -> Result<TxId> {
                let p: usize = s.parse().map_err(|_| bad("bad parent"))?;
                if p >= id {
                    return Err(bad("parent must precede child"));
                }
                Ok(TxId::new(p))
            };
            let parents = [parse_parent(fields[3])?, parse_parent(fields[4])?];
            state.reveal_due(issue);
            state.add_transaction(parents, issue).map_err(|e| bad(&e.to_string()))?;
        }
        state.reveal_due(observe_at);
        Ok(state)
    }
}
