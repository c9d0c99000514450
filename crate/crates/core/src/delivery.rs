//! One-shot D2D delivery.
//!
//! Sender `i` only ever XORs sub-pieces it owns (`W_{q,V,i}`), so the system
//! splits into `K` independent shared-link problems. Within each, `i` picks
//! one leading demander per distinct file requested by the others and
//! broadcasts `Y^i_A` for every `t`-subset `A` of the other users that meets
//! the leader set. Non-leaders rebuild the withheld codewords from the
//! broadcast ones before peeling off their sub-piece.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};

use crate::bits::BitBlock;
use crate::combinatorics::{composition_of, int, Composition, Rational};
use crate::error::{Error, Result};
use crate::placement::{SubPieceId, SubPieceStore, UserCache};
use crate::subset::{small_binom, UserSet};

/// Requested file per user, 0-based in memory.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DemandVector {
    requests: Vec<usize>,
    files: usize,
}

impl DemandVector {
    pub fn new(requests: Vec<usize>, files: usize) -> Result<Self> {
        if let Some(bad) = requests.iter().find(|&&q| q >= files) {
            return Err(Error::InvalidDemand(format!(
                "file index {} outside [1, {files}]",
                bad + 1
            )));
        }
        if requests.is_empty() {
            return Err(Error::InvalidDemand("empty demand".into()));
        }
        Ok(DemandVector { requests, files })
    }

    /// From 1-based file indices, as written on the command line.
    pub fn from_one_based(requests: &[usize], files: usize) -> Result<Self> {
        if requests.contains(&0) {
            return Err(Error::InvalidDemand("file indices start at 1".into()));
        }
        DemandVector::new(requests.iter().map(|q| q - 1).collect(), files)
    }

    pub fn users(&self) -> usize {
        self.requests.len()
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn file_of(&self, user: usize) -> usize {
        self.requests[user]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.requests
    }

    /// `N_e(d)`.
    pub fn distinct(&self) -> usize {
        self.distinct_within(UserSet::full(self.users()))
    }

    /// `N_e(d_{\k})`.
    pub fn distinct_excluding(&self, user: usize) -> usize {
        self.distinct_within(UserSet::full(self.users()).without(user))
    }

    fn distinct_within(&self, users: UserSet) -> usize {
        let mut seen = vec![false; self.files];
        users
            .iter()
            .filter(|&u| !std::mem::replace(&mut seen[self.requests[u]], true))
            .count()
    }

    pub fn composition(&self) -> Composition {
        composition_of(&self.requests, self.files)
    }

    /// Every demand in `[N]^K`, in lexicographic order of the 0-based vector.
    pub fn all(files: usize, users: usize) -> impl Iterator<Item = DemandVector> {
        let total = (files as u64).pow(users as u32);
        (0..total).map(move |mut code| {
            let mut requests = vec![0; users];
            for slot in requests.iter_mut().rev() {
                *slot = (code % files as u64) as usize;
                code /= files as u64;
            }
            DemandVector { requests, files }
        })
    }
}

impl std::fmt::Display for DemandVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.requests.iter().map(|q| (q + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Which representative each sender picks per distinct file. Any choice
/// gives the same load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LeaderRule {
    #[default]
    Lowest,
    Highest,
}

/// Leading demanders `U^i`: one user per file requested in `d_{\i}`.
pub fn select_leaders(sender: usize, demand: &DemandVector, rule: LeaderRule) -> UserSet {
    let mut pick: BTreeMap<usize, usize> = BTreeMap::new();
    for user in (0..demand.users()).filter(|&u| u != sender) {
        let file = demand.file_of(user);
        match rule {
            LeaderRule::Lowest => {
                pick.entry(file).or_insert(user);
            }
            LeaderRule::Highest => {
                pick.insert(file, user);
            }
        }
    }
    pick.into_values().collect()
}

/// Anything that can produce sub-piece contents by id.
pub trait SubPieceSource {
    fn subpiece(&self, id: &SubPieceId) -> Cow<'_, BitBlock>;
    fn subpiece_bits(&self) -> usize;
}

impl SubPieceSource for SubPieceStore {
    fn subpiece(&self, id: &SubPieceId) -> Cow<'_, BitBlock> {
        Cow::Borrowed(
            self.get(id)
                .unwrap_or_else(|| panic!("sub-piece {id:?} is not part of the store")),
        )
    }

    fn subpiece_bits(&self) -> usize {
        SubPieceStore::subpiece_bits(self)
    }
}

/// The sub-pieces XORed into `Y^i_A`: `W_{d_k, (A + i) - k, i}` for `k in A`.
pub fn codeword_terms(sender: usize, targets: UserSet, demand: &DemandVector) -> Vec<SubPieceId> {
    let with_sender = targets.with(sender);
    targets
        .iter()
        .map(|k| SubPieceId::new(demand.file_of(k), with_sender.without(k), sender))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword {
    pub sender: usize,
    pub targets: UserSet,
    pub payload: BitBlock,
}

/// `Y^i_A`; the empty target set gives the all-zero block.
pub fn build_codeword(
    sender: usize,
    targets: UserSet,
    demand: &DemandVector,
    source: &impl SubPieceSource,
) -> Codeword {
    let mut payload = BitBlock::zeros(source.subpiece_bits());
    for id in codeword_terms(sender, targets, demand) {
        payload ^= source.subpiece(&id).as_ref();
    }
    Codeword {
        sender,
        targets,
        payload,
    }
}

/// What one user broadcasts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SenderLog {
    pub leaders: UserSet,
    pub active: bool,
    /// Sorted by target-set mask (colex).
    pub codewords: Vec<Codeword>,
}

/// Every codeword broadcast during one delivery, with bit accounting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionLog {
    users: usize,
    t: usize,
    subpiece_bits: usize,
    file_bits: u64,
    senders: Vec<SenderLog>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeliveryOptions {
    pub leaders: LeaderRule,
    /// Users that actually transmit.
    pub active: UserSet,
}

impl DeliveryOptions {
    pub fn all_active(users: usize) -> Self {
        DeliveryOptions {
            leaders: LeaderRule::Lowest,
            active: UserSet::full(users),
        }
    }
}

impl TransmissionLog {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn subpiece_bits(&self) -> usize {
        self.subpiece_bits
    }

    pub fn sender(&self, i: usize) -> &SenderLog {
        &self.senders[i]
    }

    pub fn senders(&self) -> &[SenderLog] {
        &self.senders
    }

    /// `|X_i|` in codewords.
    pub fn codeword_count(&self, i: usize) -> usize {
        self.senders[i].codewords.len()
    }

    pub fn total_bits(&self) -> u64 {
        self.senders
            .iter()
            .map(|s| (s.codewords.len() * self.subpiece_bits) as u64)
            .sum()
    }

    /// Broadcast bits over `F`.
    pub fn load(&self) -> Rational {
        int(self.total_bits() as i64) / int(self.file_bits as i64)
    }

    /// `R_k` per sender.
    pub fn per_user_loads(&self) -> Vec<Rational> {
        self.senders
            .iter()
            .map(|s| int((s.codewords.len() * self.subpiece_bits) as i64) / int(self.file_bits as i64))
            .collect()
    }

    pub fn get(&self, sender: usize, targets: UserSet) -> Option<&Codeword> {
        let list = &self.senders[sender].codewords;
        list.binary_search_by_key(&targets.bits(), |c| c.targets.bits())
            .ok()
            .map(|j| &list[j])
    }

    /// Every broadcast codeword meets its sender's leader set and only mixes
    /// sub-pieces owned by that sender.
    pub fn audit_structure(&self, demand: &DemandVector) -> bool {
        self.senders.iter().enumerate().all(|(i, s)| {
            s.codewords.iter().all(|c| {
                c.sender == i
                    && c.targets.intersects(s.leaders)
                    && !c.targets.contains(i)
                    && c.targets.len() == self.t
                    && codeword_terms(i, c.targets, demand).iter().all(|id| id.owner == i)
            })
        })
    }

    /// Wire format, codewords in sender order then target-mask order:
    /// `[sender u16 LE, 1-based][t u16 LE][K-bit LE target bitmap][payload]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let bitmap_bytes = self.users.div_ceil(8);
        for s in &self.senders {
            for c in &s.codewords {
                out.extend_from_slice(&((c.sender + 1) as u16).to_le_bytes());
                out.extend_from_slice(&(c.targets.len() as u16).to_le_bytes());
                out.extend_from_slice(&c.targets.bits().to_le_bytes()[..bitmap_bytes]);
                out.extend_from_slice(c.payload.as_bytes());
            }
        }
        out
    }

    /// Parses [`TransmissionLog::to_bytes`] output back into codewords.
    pub fn parse_bytes(bytes: &[u8], users: usize, subpiece_bits: usize) -> Result<Vec<Codeword>> {
        let bitmap_bytes = users.div_ceil(8);
        let payload_bytes = subpiece_bits.div_ceil(8);
        let record = 4 + bitmap_bytes + payload_bytes;
        if record == 0 || !bytes.len().is_multiple_of(record) {
            return Err(Error::Parse(format!(
                "log length {} is not a multiple of the record size {record}",
                bytes.len()
            )));
        }
        bytes
            .chunks(record)
            .map(|r| {
                let sender = u16::from_le_bytes([r[0], r[1]]) as usize;
                let t = u16::from_le_bytes([r[2], r[3]]) as usize;
                let mut mask = [0u8; 4];
                mask[..bitmap_bytes].copy_from_slice(&r[4..4 + bitmap_bytes]);
                let targets = UserSet::from_bits(u32::from_le_bytes(mask));
                if sender == 0 || sender > users || targets.len() != t {
                    return Err(Error::Parse("malformed codeword header".into()));
                }
                Ok(Codeword {
                    sender: sender - 1,
                    targets,
                    payload: BitBlock::from_bytes(&r[4 + bitmap_bytes..], subpiece_bits),
                })
            })
            .collect()
    }
}

/// Expected `|X_i|`: `C(K-1,t) - C(K-1-N_e(d_{\i}), t)`.
pub fn expected_codewords(users: usize, t: usize, distinct_others: usize) -> u64 {
    let k1 = users as u64 - 1;
    small_binom(k1, t as u64) - small_binom(k1 - distinct_others as u64, t as u64)
}

/// Runs the full delivery with every user active and lowest-index leaders.
pub fn transmit_all(demand: &DemandVector, store: &SubPieceStore) -> TransmissionLog {
    transmit_with(demand, store, DeliveryOptions::all_active(store.users()))
}

pub fn transmit_with(demand: &DemandVector, store: &SubPieceStore, options: DeliveryOptions) -> TransmissionLog {
    let users = store.users();
    let t = store.t();
    let senders = (0..users)
        .map(|i| {
            let leaders = select_leaders(i, demand, options.leaders);
            let active = options.active.contains(i);
            let codewords = if active {
                UserSet::full(users)
                    .without(i)
                    .subsets_of_size(t)
                    .filter(|a| a.intersects(leaders))
                    .map(|a| build_codeword(i, a, demand, store))
                    .collect()
            } else {
                Vec::new()
            };
            SenderLog {
                leaders,
                active,
                codewords,
            }
        })
        .collect();
    TransmissionLog {
        users,
        t,
        subpiece_bits: store.subpiece_bits(),
        file_bits: store.file_bits(),
        senders,
    }
}

/// Families `V` of users in `pool` that contain exactly one requester of each
/// file requested by `pool`'s members; `pool` must cover those files.
fn covering_families(pool: UserSet, demand: &DemandVector) -> Vec<UserSet> {
    let mut by_file: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for u in pool.iter() {
        by_file.entry(demand.file_of(u)).or_default().push(u);
    }
    let mut families = vec![UserSet::EMPTY];
    for members in by_file.values() {
        families = families
            .into_iter()
            .flat_map(|fam| members.iter().map(move |&u| fam.with(u)))
            .collect();
    }
    families
}

/// Families of `C` covering every file of `d_{\i}` exactly once.
pub fn lemma_families(sender: usize, pool: UserSet, demand: &DemandVector) -> Vec<UserSet> {
    let others = UserSet::full(demand.users()).without(sender);
    let mut files_needed: Vec<usize> = others.iter().map(|u| demand.file_of(u)).collect();
    files_needed.sort_unstable();
    files_needed.dedup();
    let mut in_pool: Vec<usize> = pool.iter().map(|u| demand.file_of(u)).collect();
    in_pool.sort_unstable();
    in_pool.dedup();
    if in_pool != files_needed {
        return Vec::new();
    }
    covering_families(pool, demand)
}

/// Where a recovered sub-piece came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub subpiece: SubPieceId,
    /// Sender whose transmission was used.
    pub sender: usize,
    /// Codewords XORed to obtain `Y^i_A`, as (sender, target set).
    pub codewords: Vec<(usize, UserSet)>,
}

impl Provenance {
    pub fn is_one_shot(&self) -> bool {
        self.codewords.iter().all(|&(s, _)| s == self.sender)
    }
}

/// Recovers the sub-pieces of `W_{d_k}` that user `k` gets from sender `i`:
/// `W_{d_k, B + i, i}` for every `(t-1)`-subset `B` of the other users.
pub fn recover_from_sender(
    cache: &UserCache<'_>,
    sender: usize,
    log: &TransmissionLog,
    demand: &DemandVector,
) -> Result<Vec<(SubPieceId, BitBlock, Provenance)>> {
    let k = cache.user();
    let t = log.t();
    if t == 0 || t > log.users() - 1 {
        return Ok(Vec::new());
    }
    let fail = |reason: String| Error::Reconstruction { user: k + 1, reason };
    let sender_log = log.sender(sender);
    let leaders = sender_log.leaders;
    let others = UserSet::full(log.users()).without(sender).without(k);
    let q = demand.file_of(k);
    let mut out = Vec::new();
    for rest in others.subsets_of_size(t - 1) {
        let targets = rest.with(k);
        let mut used = Vec::new();
        let mut y = if targets.intersects(leaders) {
            let c = log
                .get(sender, targets)
                .ok_or_else(|| fail(format!("codeword Y^{}_{targets} was not broadcast", sender + 1)))?;
            used.push((sender, targets));
            c.payload.clone()
        } else {
            // Y^i_A = XOR of Y^i_{C - V} over covering families V != U^i, C = A + U^i.
            let pool = targets.union(leaders);
            let mut acc = BitBlock::zeros(log.subpiece_bits());
            for fam in lemma_families(sender, pool, demand) {
                if fam == leaders {
                    continue;
                }
                let part = pool.difference(fam);
                let c = log
                    .get(sender, part)
                    .ok_or_else(|| fail(format!("codeword Y^{}_{part} missing for rebuild", sender + 1)))?;
                acc ^= &c.payload;
                used.push((sender, part));
            }
            acc
        };
        let with_sender = targets.with(sender);
        for x in rest.iter() {
            let side = SubPieceId::new(demand.file_of(x), with_sender.without(x), sender);
            y ^= cache.get(&side)?;
        }
        let id = SubPieceId::new(q, rest.with(sender), sender);
        out.push((
            id,
            y,
            Provenance {
                subpiece: id,
                sender,
                codewords: used,
            },
        ));
    }
    Ok(out)
}

/// Result of decoding at one user.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub user: usize,
    pub file: BitBlock,
    pub provenance: Vec<Provenance>,
}

impl Decoded {
    /// Each recovered sub-piece used codewords of exactly one sender, and
    /// every recovered sub-piece appears once.
    pub fn one_shot(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.provenance
            .iter()
            .all(|p| p.is_one_shot() && seen.insert(p.subpiece))
    }
}

/// Rebuilds `W_{d_k}` at user `k` from its cache and every other sender.
pub fn decode_all(
    cache: &UserCache<'_>,
    log: &TransmissionLog,
    demand: &DemandVector,
    store_layout: &SubPieceStore,
) -> Result<Decoded> {
    let k = cache.user();
    let q = demand.file_of(k);
    let mut recovered: HashMap<SubPieceId, BitBlock> = HashMap::new();
    let mut provenance = Vec::new();
    for sender in (0..log.users()).filter(|&i| i != k) {
        for (id, bits, prov) in recover_from_sender(cache, sender, log, demand)? {
            recovered.insert(id, bits);
            provenance.push(prov);
        }
    }
    let mut parts = Vec::with_capacity(store_layout.subpieces_per_file());
    for id in store_layout.ids_of_file(q) {
        if cache.holds(&id) {
            parts.push(cache.get(&id)?.clone());
        } else {
            let bits = recovered.remove(&id).ok_or_else(|| Error::Reconstruction {
                user: k + 1,
                reason: format!("sub-piece {id:?} neither cached nor received"),
            })?;
            parts.push(bits);
        }
    }
    Ok(Decoded {
        user: k,
        file: BitBlock::concat(&parts),
        provenance,
    })
}

/// Store extended with keyed pseudo-random blocks for holder sets whose size
/// differs from `t`, so the XOR identity can be exercised for any pool `C`.
struct ExtendedSource<'a> {
    store: &'a SubPieceStore,
}

impl SubPieceSource for ExtendedSource<'_> {
    fn subpiece(&self, id: &SubPieceId) -> Cow<'_, BitBlock> {
        if let Some(b) = self.store.get(id) {
            return Cow::Borrowed(b);
        }
        let key = (id.file as u64) << 40 ^ u64::from(id.holders.bits()) << 8 ^ id.owner as u64;
        let bits = crate::placement::file_bits_from_seed(
            0x005e_ed0f_1e55 ^ key.rotate_left(17),
            id.file,
            self.store.subpiece_bits() as u64,
        );
        Cow::Owned(bits)
    }

    fn subpiece_bits(&self) -> usize {
        self.store.subpiece_bits()
    }
}

/// `XOR_{V in V_F} Y^i_{C - V} == 0` for a pool `C` with `U^i <= C <= [K] - i`.
pub fn lemma1_null_check(
    sender: usize,
    demand: &DemandVector,
    pool: UserSet,
    store: &SubPieceStore,
    rule: LeaderRule,
) -> Result<bool> {
    let leaders = select_leaders(sender, demand, rule);
    let allowed = UserSet::full(demand.users()).without(sender);
    if !leaders.is_subset_of(pool) || !pool.is_subset_of(allowed) {
        return Err(Error::InvalidDemand(format!(
            "pool {pool} must contain U^{} = {leaders} and exclude the sender",
            sender + 1
        )));
    }
    let source = ExtendedSource { store };
    let mut acc = BitBlock::zeros(store.subpiece_bits());
    for fam in lemma_families(sender, pool, demand) {
        acc ^= &build_codeword(sender, pool.difference(fam), demand, &source).payload;
    }
    Ok(acc.is_zero())
}

/// Outcome of delivering one demand end to end.
#[derive(Clone, Debug)]
pub struct DeliveryReport {
    pub log: TransmissionLog,
    pub decoded: Vec<Result<Decoded>>,
}

impl DeliveryReport {
    pub fn all_decoded(&self, store: &SubPieceStore, demand: &DemandVector) -> bool {
        self.decoded.iter().enumerate().all(|(k, d)| {
            d.as_ref()
                .map(|d| d.file == store.file_contents(demand.file_of(k)))
                .unwrap_or(false)
        })
    }

    pub fn one_shot(&self) -> bool {
        self.decoded
            .iter()
            .all(|d| d.as_ref().map(Decoded::one_shot).unwrap_or(false))
    }
}

/// Transmit then decode at every user.
pub fn deliver(
    demand: &DemandVector,
    store: &SubPieceStore,
    cache: &crate::placement::CacheState,
    options: DeliveryOptions,
) -> DeliveryReport {
    let log = transmit_with(demand, store, options);
    let decoded = (0..store.users())
        .map(|k| decode_all(&cache.view(k, store), &log, demand, store))
        .collect();
    DeliveryReport { log, decoded }
}

/// Memory-sharing load: both parts delivered independently, bits summed.
pub fn memory_sharing_load(parts: &[&TransmissionLog], file_bits: u64) -> Rational {
    let bits: u64 = parts.iter().map(|l| l.total_bits()).sum();
    int(bits as i64) / int(file_bits as i64)
}

/// Codeword counts as `usize` for reports.
pub fn codeword_counts(log: &TransmissionLog) -> Vec<usize> {
    (0..log.users()).map(|i| log.codeword_count(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::rational;
    use crate::placement::{generate_database, man_placement, Scenario};

    fn set(users: &[usize]) -> UserSet {
        users.iter().map(|u| u - 1).collect()
    }

    fn worked() -> (Scenario, SubPieceStore, DemandVector) {
        let s = Scenario::from_t(2, 4, 2, 12).unwrap();
        let store = generate_database(&s, 7).unwrap();
        let d = DemandVector::from_one_based(&[1, 2, 1, 1], 2).unwrap();
        (s, store, d)
    }

    #[test]
    fn leaders() {
        let d = DemandVector::from_one_based(&[1, 2, 1, 1], 2).unwrap();
        assert_eq!(select_leaders(1, &d, LeaderRule::Lowest), set(&[1]));
        let distinct = DemandVector::from_one_based(&[1, 2, 3, 4], 4).unwrap();
        assert_eq!(select_leaders(2, &distinct, LeaderRule::Lowest), set(&[1, 2, 4]));
        let same = DemandVector::from_one_based(&[1, 1, 1], 1).unwrap();
        assert_eq!(select_leaders(0, &same, LeaderRule::Lowest), set(&[2]));
        assert_eq!(select_leaders(0, &same, LeaderRule::Highest), set(&[3]));
    }

    #[test]
    fn codeword_terms_match_worked_example() {
        let (_, store, d) = worked();
        let y = build_codeword(0, set(&[3, 4]), &d, &store);
        let a = store.get(&SubPieceId::new(0, set(&[1, 3]), 0)).unwrap();
        let b = store.get(&SubPieceId::new(0, set(&[1, 4]), 0)).unwrap();
        let mut expect = a.clone();
        expect ^= b;
        assert_eq!(y.payload, expect);

        let y = build_codeword(2, set(&[1, 2]), &d, &store);
        let a = store.get(&SubPieceId::new(0, set(&[2, 3]), 2)).unwrap();
        let b = store.get(&SubPieceId::new(1, set(&[1, 3]), 2)).unwrap();
        let mut expect = a.clone();
        expect ^= b;
        assert_eq!(y.payload, expect);
    }

    #[test]
    fn single_target_is_uncoded() {
        let s = Scenario::from_t(2, 3, 1, 6).unwrap();
        let store = generate_database(&s, 1).unwrap();
        let d = DemandVector::from_one_based(&[1, 1, 2], 2).unwrap();
        let y = build_codeword(0, set(&[3]), &d, &store);
        assert_eq!(&y.payload, store.get(&SubPieceId::new(1, set(&[1]), 0)).unwrap());
    }

    #[test]
    fn worked_example_load_and_counts() {
        let (_, store, d) = worked();
        let log = transmit_all(&d, &store);
        assert_eq!(codeword_counts(&log), [3, 2, 3, 3]);
        assert_eq!(log.load(), rational(11, 12));
        assert!(log.audit_structure(&d));
        // user 2 withholds Y^2_{3,4}
        assert!(log.get(1, set(&[3, 4])).is_none());
        assert!(log.get(1, set(&[1, 3])).is_some());
    }

    #[test]
    fn worked_example_decodes() {
        let (_, store, d) = worked();
        let cache = man_placement(&store);
        let report = deliver(&d, &store, &cache, DeliveryOptions::all_active(4));
        assert!(report.all_decoded(&store, &d));
        assert!(report.one_shot());
        // user 3 misses W_{1,{1,2}}, W_{1,{1,4}}, W_{1,{2,4}}; two halves each
        let decoded = report.decoded[2].as_ref().unwrap();
        let mut missing: Vec<String> = decoded
            .provenance
            .iter()
            .map(|p| format!("{}", p.subpiece.holders))
            .collect();
        missing.sort();
        missing.dedup();
        assert_eq!(missing, ["{1,2}", "{1,4}", "{2,4}"]);
        // and user 3 rebuilt Y^2_{3,4} from Y^2_{1,3} + Y^2_{1,4}
        let rebuilt = decoded
            .provenance
            .iter()
            .find(|p| p.sender == 1 && p.subpiece.holders == set(&[2, 4]))
            .unwrap();
        assert_eq!(rebuilt.codewords.len(), 2);
    }

    #[test]
    fn lemma_examples() {
        let (_, store, d) = worked();
        assert!(lemma1_null_check(1, &d, set(&[1, 3, 4]), &store, LeaderRule::Lowest).unwrap());
        let y13 = build_codeword(1, set(&[1, 3]), &d, &store).payload;
        let y14 = build_codeword(1, set(&[1, 4]), &d, &store).payload;
        let y34 = build_codeword(1, set(&[3, 4]), &d, &store).payload;
        let mut acc = y13;
        acc ^= &y14;
        acc ^= &y34;
        assert!(acc.is_zero());

        let s = Scenario::from_t(4, 4, 2, 24).unwrap();
        let store = generate_database(&s, 2).unwrap();
        let distinct = DemandVector::from_one_based(&[1, 2, 3, 4], 4).unwrap();
        assert!(lemma1_null_check(0, &distinct, set(&[2, 3, 4]), &store, LeaderRule::Lowest).unwrap());
        assert!(lemma1_null_check(0, &distinct, set(&[2, 3]), &store, LeaderRule::Lowest).is_err());
    }

    #[test]
    fn lemma_holds_on_random_scenario() {
        use rand::{Rng, SeedableRng};
        let s = Scenario::from_t(3, 5, 2, 40).unwrap();
        let store = generate_database(&s, 9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let reqs: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
            let d = DemandVector::new(reqs, 3).unwrap();
            let i = rng.random_range(0..5);
            let leaders = select_leaders(i, &d, LeaderRule::Lowest);
            let extra = UserSet::full(5).without(i).difference(leaders);
            let pick = UserSet::from_bits(extra.bits() & rng.random::<u32>());
            assert!(lemma1_null_check(i, &d, leaders.union(pick), &store, LeaderRule::Lowest).unwrap());
        }
    }

    #[test]
    fn wire_format_roundtrip() {
        let (_, store, d) = worked();
        let log = transmit_all(&d, &store);
        let bytes = log.to_bytes();
        // 11 codewords of 2 + 2 + 1 + 1 bytes
        assert_eq!(bytes.len(), 11 * 6);
        assert_eq!(&bytes[..4], &[1, 0, 2, 0]);
        let parsed = TransmissionLog::parse_bytes(&bytes, 4, 1).unwrap();
        let flat: Vec<Codeword> = log.senders().iter().flat_map(|s| s.codewords.clone()).collect();
        assert_eq!(parsed, flat);
        assert!(TransmissionLog::parse_bytes(&bytes[..5], 4, 1).is_err());
    }

    #[test]
    fn inactive_senders_stay_silent() {
        let (_, store, d) = worked();
        let opts = DeliveryOptions {
            leaders: LeaderRule::Lowest,
            active: UserSet::full(4).without(2),
        };
        let log = transmit_with(&d, &store, opts);
        assert_eq!(log.codeword_count(2), 0);
        assert_eq!(log.load(), rational(8, 12));
    }

    #[test]
    fn demand_stats() {
        let d = DemandVector::from_one_based(&[1, 2, 1, 1], 2).unwrap();
        assert_eq!(d.distinct(), 2);
        assert_eq!(d.distinct_excluding(1), 1);
        assert_eq!(d.distinct_excluding(0), 2);
        assert_eq!(DemandVector::all(2, 3).count(), 8);
        assert!(DemandVector::from_one_based(&[1, 3], 2).is_err());
        assert!(DemandVector::from_one_based(&[0, 1], 2).is_err());
    }
}
