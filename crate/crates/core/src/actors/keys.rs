use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};

use crate::crypto::{KeySize, RsaKeyPair, RsaPublicKey, SymKey};
use crate::wire::EntityId;

use super::GroupConfig;

/// Every long-term key in a deployment. Actors receive only their own
/// projection of it.
#[derive(Debug, Clone)]
pub struct KeyRegistry {
    /// `K_Ci` and `K_Di`.
    pub sym_keys: BTreeMap<EntityId, SymKey>,
    /// `K_GDi`, the target's second symmetric key.
    pub group_keys: BTreeMap<EntityId, SymKey>,
    pub target_keys: BTreeMap<EntityId, RsaKeyPair>,
    /// Clients allowed to access each target.
    pub authorizations: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

impl std::fmt::Debug for SymKeyMapDebug<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.0.keys()).finish()
    }
}

struct SymKeyMapDebug<'a>(&'a BTreeMap<EntityId, SymKey>);

impl KeyRegistry {
    /// Fresh keys for every member of `config`, with all clients authorized
    /// for the target.
    pub fn provision<R: RngCore + CryptoRng + ?Sized>(config: &GroupConfig, size: KeySize, rng: &mut R) -> Self {
        let mut sym_keys = BTreeMap::new();
        for id in config.clients.as_slice() {
            sym_keys.insert(*id, SymKey::random(rng));
        }
        sym_keys.insert(config.target, SymKey::random(rng));
        let group_keys = BTreeMap::from([(config.target, SymKey::random(rng))]);
        let target_keys = BTreeMap::from([(config.target, RsaKeyPair::generate(size, rng))]);
        let authorizations = BTreeMap::from([(config.target, config.clients.as_slice().iter().copied().collect())]);
        Self { sym_keys, group_keys, target_keys, authorizations }
    }

    pub fn as_view(&self) -> AsKeys {
        AsKeys {
            sym_keys: self.sym_keys.clone(),
            group_keys: self.group_keys.clone(),
            target_public: self.target_keys.iter().map(|(id, kp)| (*id, kp.public().clone())).collect(),
            authorizations: self.authorizations.clone(),
        }
    }

    pub fn client_view(&self, id: EntityId, target: EntityId) -> Option<ClientKeys> {
        Some(ClientKeys {
            own: self.sym_keys.get(&id)?.clone(),
            target_public: self.target_keys.get(&target)?.public().clone(),
        })
    }

    pub fn target_view(&self, id: EntityId) -> Option<TargetKeys> {
        Some(TargetKeys {
            k_d: self.sym_keys.get(&id)?.clone(),
            k_gd: self.group_keys.get(&id)?.clone(),
            keypair: self.target_keys.get(&id)?.clone(),
            authorized: self.authorizations.get(&id).cloned().unwrap_or_default(),
        })
    }

    /// Whether every listed client may access `target`.
    pub fn is_authorized(&self, target: EntityId, clients: &[EntityId]) -> bool {
        authorized(&self.authorizations, target, clients)
    }
}

pub(crate) fn authorized(
    table: &BTreeMap<EntityId, BTreeSet<EntityId>>,
    target: EntityId,
    clients: &[EntityId],
) -> bool {
    table.get(&target).is_some_and(|allowed| clients.iter().all(|c| allowed.contains(c)))
}

/// Everything the authentication server holds.
#[derive(Clone)]
pub struct AsKeys {
    pub sym_keys: BTreeMap<EntityId, SymKey>,
    pub group_keys: BTreeMap<EntityId, SymKey>,
    pub target_public: BTreeMap<EntityId, RsaPublicKey>,
    pub authorizations: BTreeMap<EntityId, BTreeSet<EntityId>>,
}

impl std::fmt::Debug for AsKeys {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AsKeys").field("sym_keys", &SymKeyMapDebug(&self.sym_keys)).finish_non_exhaustive()
    }
}

/// A client's own long-term key and the target's public key.
#[derive(Clone, Debug)]
pub struct ClientKeys {
    pub own: SymKey,
    pub target_public: RsaPublicKey,
}

/// `K_D1`, `K_GD1`, the RSA key pair and the target's authorization row.
#[derive(Clone, Debug)]
pub struct TargetKeys {
    pub k_d: SymKey,
    pub k_gd: SymKey,
    pub keypair: RsaKeyPair,
    pub authorized: BTreeSet<EntityId>,
}
