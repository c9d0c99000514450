//! Synthetic file database and uncoded MAN placement.
//!
//! Each file is split into `C(K,t)` sub-files `W_{q,V}` (one per `t`-subset
//! `V` of users) and each sub-file into `t` sub-pieces `W_{q,V,i}`, one per
//! owner `i in V`. Sub-pieces are laid out per file in colex order of `V`,
//! owners ascending within `V`.

use std::collections::HashSet;
use std::fmt;

use num_traits::ToPrimitive;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitBlock;
use crate::combinatorics::{choose, int, rational, Rational};
use crate::error::{Error, Result};
use crate::subset::{small_binom, UserSet, MAX_USERS};

/// System parameters with an integer cache parameter `t = KM/N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    files: usize,
    users: usize,
    memory: Rational,
    file_bits: u64,
    t: usize,
}

impl Scenario {
    /// Validates `t = KM/N` integral in `[1, K]` and `MK >= N`. `M = N`
    /// (`t = K`, full caching) is accepted as the boundary point.
    pub fn new(files: usize, users: usize, memory: Rational, file_bits: u64) -> Result<Self> {
        check_sizes(files, users)?;
        let t = &memory * int(users as i64) / int(files as i64);
        if !t.is_integer() {
            return Err(Error::InvalidScenario(format!(
                "t = KM/N = {t} is not an integer; use memory sharing"
            )));
        }
        let t = t
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::InvalidScenario("t out of range".into()))?;
        if t < 1 || t > users as i64 {
            return Err(Error::InvalidScenario(format!(
                "t = {t} must lie in [1, K = {users}] (MK >= N, M <= N)"
            )));
        }
        Ok(Scenario {
            files,
            users,
            memory,
            file_bits,
            t: t as usize,
        })
    }

    pub fn from_t(files: usize, users: usize, t: usize, file_bits: u64) -> Result<Self> {
        let memory = rational((files * t) as i64, users as i64);
        Scenario::new(files, users, memory, file_bits)
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn memory(&self) -> &Rational {
        &self.memory
    }

    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `t C(K,t)`.
    pub fn subpieces_per_file(&self) -> u64 {
        self.t as u64 * small_binom(self.users as u64, self.t as u64)
    }

    pub fn subpiece_bits(&self) -> Result<u64> {
        let per_file = self.subpieces_per_file();
        if self.file_bits == 0 || !self.file_bits.is_multiple_of(per_file) {
            return Err(Error::Indivisible {
                bits: self.file_bits,
                divisor: per_file,
            });
        }
        Ok(self.file_bits / per_file)
    }

    /// Smallest valid file length with `bits_per_subpiece` bits per sub-piece.
    pub fn min_file_bits(users: usize, t: usize, bits_per_subpiece: u64) -> u64 {
        t as u64 * small_binom(users as u64, t as u64) * bits_per_subpiece
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} K={} M={} F={} t={}",
            self.files, self.users, self.memory, self.file_bits, self.t
        )
    }
}

fn check_sizes(files: usize, users: usize) -> Result<()> {
    if files == 0 {
        return Err(Error::InvalidScenario("N must be at least 1".into()));
    }
    if !(2..=MAX_USERS).contains(&users) {
        return Err(Error::InvalidScenario(format!(
            "K = {users} must lie in [2, {MAX_USERS}]"
        )));
    }
    Ok(())
}

/// Address of one sub-piece `W_{file, holders, owner}` (all 0-based).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubPieceId {
    pub file: usize,
    pub holders: UserSet,
    pub owner: usize,
}

impl SubPieceId {
    pub fn new(file: usize, holders: UserSet, owner: usize) -> Self {
        debug_assert!(holders.contains(owner));
        SubPieceId { file, holders, owner }
    }
}

impl fmt::Debug for SubPieceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W[{},{},{}]", self.file + 1, self.holders, self.owner + 1)
    }
}

/// Every sub-piece bit-block of the database, addressable by [`SubPieceId`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubPieceStore {
    files: usize,
    users: usize,
    t: usize,
    subpiece_bits: usize,
    file_bits: u64,
    blocks: Vec<BitBlock>,
}

impl SubPieceStore {
    /// Builds a store from per-file sub-piece blocks already in canonical
    /// order. `file_bits` is the length loads are normalised by.
    pub fn from_blocks(
        files: usize,
        users: usize,
        t: usize,
        file_bits: u64,
        per_file: Vec<Vec<BitBlock>>,
    ) -> Result<Self> {
        check_sizes(files, users)?;
        let expected = t * small_binom(users as u64, t as u64) as usize;
        if per_file.len() != files || per_file.iter().any(|b| b.len() != expected) {
            return Err(Error::InvalidScenario(format!(
                "need {files} files of {expected} sub-pieces"
            )));
        }
        let subpiece_bits = per_file[0][0].len();
        let blocks: Vec<BitBlock> = per_file.into_iter().flatten().collect();
        if blocks.iter().any(|b| b.len() != subpiece_bits) {
            return Err(Error::InvalidScenario("sub-pieces differ in length".into()));
        }
        Ok(SubPieceStore {
            files,
            users,
            t,
            subpiece_bits,
            file_bits,
            blocks,
        })
    }

    /// Splits whole files into sub-pieces in canonical order.
    pub fn from_files(scenario: &Scenario, contents: &[BitBlock]) -> Result<Self> {
        let sub = scenario.subpiece_bits()? as usize;
        let count = scenario.subpieces_per_file() as usize;
        let per_file = contents
            .iter()
            .map(|w| (0..count).map(|j| w.slice(j * sub, sub)).collect())
            .collect();
        SubPieceStore::from_blocks(
            scenario.files(),
            scenario.users(),
            scenario.t(),
            scenario.file_bits(),
            per_file,
        )
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn subpiece_bits(&self) -> usize {
        self.subpiece_bits
    }

    pub fn file_bits(&self) -> u64 {
        self.file_bits
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn subpieces_per_file(&self) -> usize {
        self.blocks.len() / self.files
    }

    /// Position of `id` in canonical order within its file.
    pub fn index_in_file(&self, id: &SubPieceId) -> usize {
        let rank = id.holders.colex_rank() as usize;
        let owner_pos = id.holders.iter().position(|u| u == id.owner).unwrap_or(0);
        rank * self.t + owner_pos
    }

    fn check_id(&self, id: &SubPieceId) -> bool {
        id.file < self.files
            && id.holders.len() == self.t
            && id.holders.is_subset_of(UserSet::full(self.users))
            && id.holders.contains(id.owner)
    }

    pub fn get(&self, id: &SubPieceId) -> Option<&BitBlock> {
        if !self.check_id(id) {
            return None;
        }
        self.blocks
            .get(id.file * self.subpieces_per_file() + self.index_in_file(id))
    }

    /// All sub-piece ids of one file, canonical order.
    pub fn ids_of_file(&self, file: usize) -> impl Iterator<Item = SubPieceId> + '_ {
        UserSet::full(self.users)
            .subsets_of_size(self.t)
            .flat_map(move |holders| holders.iter().map(move |owner| SubPieceId::new(file, holders, owner)))
    }

    pub fn ids(&self) -> impl Iterator<Item = SubPieceId> + '_ {
        (0..self.files).flat_map(move |q| self.ids_of_file(q))
    }

    /// Concatenation of a file's sub-pieces in canonical order.
    pub fn file_contents(&self, file: usize) -> BitBlock {
        let per = self.subpieces_per_file();
        BitBlock::concat(&self.blocks[file * per..(file + 1) * per])
    }
}

/// Pseudo-random contents of file `file` (0-based): ChaCha8 keyed by `seed`
/// with the file index as stream id.
pub fn file_bits_from_seed(seed: u64, file: usize, bits: u64) -> BitBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(file as u64);
    let mut bytes = vec![0u8; (bits as usize).div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitBlock::from_bytes(&bytes, bits as usize)
}

/// Deterministic database for `scenario`; same seed, same store.
pub fn generate_database(scenario: &Scenario, seed: u64) -> Result<SubPieceStore> {
    scenario.subpiece_bits()?;
    let contents: Vec<BitBlock> = (0..scenario.files())
        .map(|q| file_bits_from_seed(seed, q, scenario.file_bits()))
        .collect();
    SubPieceStore::from_files(scenario, &contents)
}

/// Per-user cached sub-piece sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheState {
    users: Vec<HashSet<SubPieceId>>,
    subpiece_bits: usize,
}

impl CacheState {
    pub fn users(&self) -> usize {
        self.users.len()
    }

    pub fn holds(&self, user: usize, id: &SubPieceId) -> bool {
        self.users[user].contains(id)
    }

    pub fn cached(&self, user: usize) -> &HashSet<SubPieceId> {
        &self.users[user]
    }

    pub fn cached_bits(&self, user: usize) -> u64 {
        (self.users[user].len() * self.subpiece_bits) as u64
    }

    /// Read access restricted to what `user` actually cached.
    pub fn view<'a>(&'a self, user: usize, store: &'a SubPieceStore) -> UserCache<'a> {
        UserCache {
            user,
            cache: self,
            store,
        }
    }
}

/// User `k` caches every sub-piece whose holder set contains `k`.
pub fn man_placement(store: &SubPieceStore) -> CacheState {
    let mut users = vec![HashSet::new(); store.users()];
    for id in store.ids() {
        for k in id.holders.iter() {
            users[k].insert(id);
        }
    }
    CacheState {
        users,
        subpiece_bits: store.subpiece_bits(),
    }
}

/// A single user's cache, backed by the shared store.
#[derive(Clone, Copy)]
pub struct UserCache<'a> {
    user: usize,
    cache: &'a CacheState,
    store: &'a SubPieceStore,
}

impl<'a> UserCache<'a> {
    pub fn user(&self) -> usize {
        self.user
    }

    pub fn holds(&self, id: &SubPieceId) -> bool {
        self.cache.holds(self.user, id)
    }

    pub fn get(&self, id: &SubPieceId) -> Result<&'a BitBlock> {
        if !self.holds(id) {
            return Err(Error::NotCached {
                user: self.user + 1,
                what: format!("{id:?}"),
            });
        }
        self.store.get(id).ok_or_else(|| Error::NotCached {
            user: self.user + 1,
            what: format!("{id:?} (not in store)"),
        })
    }
}

/// Memory sharing between the two neighbouring integer cache levels
/// `floor(t)` and `ceil(t)` for a non-integer `t = KM/N`.
///
/// Every file is split into a prefix of `F_low` bits placed with
/// `t_low` and a suffix of `F_high = (t - t_low) F` bits placed with
/// `t_high = t_low + 1`, so each user stores exactly `MF` bits.
#[derive(Clone, Debug)]
pub struct MemorySharing {
    pub t: Rational,
    pub low: Scenario,
    pub high: Scenario,
}

impl MemorySharing {
    pub fn new(files: usize, users: usize, memory: Rational, file_bits: u64) -> Result<Self> {
        check_sizes(files, users)?;
        let t = &memory * int(users as i64) / int(files as i64);
        if t.is_integer() {
            return Err(Error::InvalidScenario(
                "t is an integer; memory sharing is not needed".into(),
            ));
        }
        if t < int(1) || t > int(users as i64) {
            return Err(Error::InvalidScenario(format!("t = {t} outside [1, K]")));
        }
        let t_low = t.floor().to_integer().to_usize().unwrap_or(0);
        let high_bits = (&t - int(t_low as i64)) * int(file_bits as i64);
        if !high_bits.is_integer() {
            return Err(Error::InvalidScenario(format!(
                "(t - floor t) F = {high_bits} is not an integer"
            )));
        }
        let high_bits = high_bits.to_integer().to_u64().unwrap_or(0);
        let low_bits = file_bits - high_bits;
        let low = Scenario::from_t(files, users, t_low, low_bits)?;
        let high = Scenario::from_t(files, users, t_low + 1, high_bits)?;
        low.subpiece_bits()?;
        high.subpiece_bits()?;
        Ok(MemorySharing { t, low, high })
    }

    /// Bits per user across both parts; equals `MF`.
    pub fn cached_bits_per_user(&self) -> Rational {
        let part = |s: &Scenario| {
            int(s.files() as i64) * int(s.file_bits() as i64) * int(s.t() as i64) / int(s.users() as i64)
        };
        part(&self.low) + part(&self.high)
    }

    /// File bits assigned to the low and high level.
    pub fn part_sizes(&self) -> (u64, u64) {
        (self.low.file_bits(), self.high.file_bits())
    }
}

/// Count of sub-files of one file cached by a given user, `C(K-1, t-1)`.
pub fn cached_subfiles_per_file(users: usize, t: usize) -> u64 {
    choose(users as u64 - 1, t as u64 - 1).to_u64().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(n: usize, k: usize, t: usize, f: u64) -> (Scenario, SubPieceStore, CacheState) {
        let s = Scenario::from_t(n, k, t, f).unwrap();
        let store = generate_database(&s, 7).unwrap();
        let cache = man_placement(&store);
        (s, store, cache)
    }

    #[test]
    fn database_sizes() {
        let (_, store, _) = ex(2, 4, 2, 12);
        assert_eq!(store.len(), 24);
        assert_eq!(store.subpiece_bits(), 1);
        let (_, store, _) = ex(2, 3, 1, 6);
        assert_eq!(store.subpieces_per_file(), 3);
        assert_eq!(store.subpiece_bits(), 2);
    }

    #[test]
    fn database_is_deterministic_and_reassembles() {
        let s = Scenario::from_t(3, 5, 2, 40).unwrap();
        let a = generate_database(&s, 11).unwrap();
        let b = generate_database(&s, 11).unwrap();
        let c = generate_database(&s, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for q in 0..3 {
            assert_eq!(a.file_contents(q), file_bits_from_seed(11, q, 40));
        }
    }

    #[test]
    fn indivisible_file_length_rejected() {
        let s = Scenario::from_t(2, 4, 2, 13).unwrap();
        assert!(matches!(
            generate_database(&s, 0),
            Err(Error::Indivisible { bits: 13, divisor: 12 })
        ));
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(2, 4, rational(3, 4), 12).is_err()); // t = 3/2
        assert!(Scenario::new(4, 2, int(1), 12).is_err()); // MK < N
        assert!(Scenario::new(2, 4, int(3), 12).is_err()); // M > N
        assert!(Scenario::new(2, 1, int(2), 12).is_err()); // K < 2
        assert_eq!(Scenario::new(1, 2, int(1), 2).unwrap().t(), 2);
    }

    #[test]
    fn user_one_caches_worked_example_subfiles() {
        let (_, store, cache) = ex(2, 4, 2, 12);
        let holders: std::collections::BTreeSet<String> = cache
            .cached(0)
            .iter()
            .map(|id| format!("{}:{}", id.file + 1, id.holders))
            .collect();
        let expected: std::collections::BTreeSet<String> =
            ["1:{1,2}", "1:{1,3}", "1:{1,4}", "2:{1,2}", "2:{1,3}", "2:{1,4}"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        assert_eq!(holders, expected);
        assert_eq!(cache.cached_bits(0), 12); // M F = 1 * 12
        let _ = store;
    }

    #[test]
    fn full_caching_and_t1_caching() {
        let (s, store, cache) = ex(1, 2, 2, 2);
        for k in 0..2 {
            assert_eq!(cache.cached(k).len(), store.len());
            assert_eq!(cache.cached_bits(k), s.file_bits());
        }
        let (_, store, cache) = ex(2, 3, 1, 6);
        let ids: Vec<_> = cache.cached(0).iter().copied().collect();
        assert_eq!(ids.len(), 2);
        for id in ids {
            assert_eq!(id.holders, UserSet::singleton(0));
            assert_eq!(store.get(&id).unwrap().len(), 2);
        }
        assert_eq!(cache.cached_bits(0), 4);
    }

    #[test]
    fn placement_invariants() {
        for k in 2..=6usize {
            for t in 1..=k {
                for n in 1..=3usize {
                    let s = Scenario::from_t(n, k, t, Scenario::min_file_bits(k, t, 2)).unwrap();
                    let store = generate_database(&s, 3).unwrap();
                    let cache = man_placement(&store);
                    let mf = s.memory() * int(s.file_bits() as i64);
                    for user in 0..k {
                        assert_eq!(int(cache.cached_bits(user) as i64), mf);
                        for q in 0..n {
                            let subfiles: HashSet<UserSet> = cache
                                .cached(user)
                                .iter()
                                .filter(|id| id.file == q)
                                .map(|id| id.holders)
                                .collect();
                            assert_eq!(subfiles.len() as u64, cached_subfiles_per_file(k, t));
                        }
                    }
                    for id in store.ids() {
                        let holders = (0..k).filter(|&u| cache.holds(u, &id)).count();
                        assert_eq!(holders, t);
                    }
                }
            }
        }
    }

    #[test]
    fn cache_view_refuses_uncached() {
        let (_, store, cache) = ex(2, 4, 2, 12);
        let view = cache.view(0, &store);
        let mine = SubPieceId::new(0, [0, 1].into_iter().collect(), 1);
        let other = SubPieceId::new(0, [2, 3].into_iter().collect(), 2);
        assert!(view.get(&mine).is_ok());
        assert!(view.get(&other).is_err());
    }

    #[test]
    fn memory_sharing_split() {
        // N=2, K=4, M=3/4 -> t = 3/2, F_high = F/2.
        let ms = MemorySharing::new(2, 4, rational(3, 4), 48).unwrap();
        assert_eq!(ms.low.t(), 1);
        assert_eq!(ms.high.t(), 2);
        assert_eq!(ms.part_sizes(), (24, 24));
        assert_eq!(ms.cached_bits_per_user(), rational(3, 4) * int(48));
        assert!(MemorySharing::new(2, 4, int(1), 48).is_err());
    }
}
