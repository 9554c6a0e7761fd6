//! Transaction execution: authorization, action dispatch with notifications,
//! inline and deferred sends, the native system actions, and billing.
//!
//! Execution runs against an [`Overlay`], so a transaction that fails at any
//! point leaves the ledger untouched.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::account::EOS;
use crate::chain::ledger::{DeferredEntry, Ledger, Overlay, Changes, SYSTEM_ACCOUNT, TOKEN_ACCOUNT};
use crate::chain::permission::{
    satisfies, Authority, KeyId, Permission, PermissionLevel, PermissionName, Signers,
};
use crate::chain::transaction::{Action, Payload, Transaction, TxId, TxKind, Value};
use crate::chain::ChainError;
use crate::contracts::descriptor;
use crate::contracts::ir::{cost, AccountRef, ActionTemplate, ArithMode, ArithOp, Operand, Payer, Row, Step, ValueExpr};
use crate::hash::CanonicalWriter;
use crate::name::AccountName;
use crate::resources::ResourceKind;
use crate::Millis;

/// Deepest allowed chain of inline actions below a top-level action.
pub const MAX_INLINE_DEPTH: usize = 16;
/// Lifetime of a contract-generated deferred transaction after it falls due.
pub const DEFERRED_EXPIRATION_MS: Millis = 3_600_000;

/// Chain context visible to executing contracts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecEnv {
    /// Timestamp of the block being built.
    pub now: Millis,
    pub head_num: u64,
    pub head_time: Millis,
}

/// Value in `[0, 100)` returned by `read_block_info`. Anyone who knows the
/// head block and picks `ref_block_num` can compute it in advance.
pub fn block_info_draw(head_num: u64, head_time: Millis, ref_block_num: u64) -> u64 {
    let mut w = CanonicalWriter::new();
    w.u64(head_num).u64(head_time).u64(ref_block_num);
    w.digest() % 100
}

/// Accounts with unmetered resources.
pub fn is_privileged(account: &AccountName) -> bool {
    account.as_str() == SYSTEM_ACCOUNT || account.as_str().starts_with("eosio.")
}

/// Observable side effects, recorded in traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    Transfer {
        code: AccountName,
        from: AccountName,
        to: AccountName,
        symbol: String,
        amount: u64,
        auth: Vec<PermissionLevel>,
    },
    RowStored {
        contract: AccountName,
        table: String,
        key: String,
        payer: AccountName,
        bytes: u64,
    },
    DeferredScheduled {
        id: TxId,
        due: Millis,
        sponsor: AccountName,
    },
    CodeSet {
        account: AccountName,
    },
    AccountCreated {
        name: AccountName,
        creator: AccountName,
    },
    CodeGranted {
        account: AccountName,
        permission: PermissionName,
        grantee: AccountName,
    },
    Staked {
        account: AccountName,
        cpu: u64,
        net: u64,
    },
    Unstaked {
        account: AccountName,
        cpu: u64,
        net: u64,
    },
    Draw {
        contract: AccountName,
        value: u64,
    },
}

#[derive(Debug)]
pub struct ExecOutcome {
    pub changes: Changes,
    /// Producer time spent, including send fees billed to sponsors.
    pub cpu_ms: u64,
    pub net_words: u64,
    pub payer: Option<AccountName>,
    pub effects: Vec<Effect>,
}

/// Checks every declared authorization of `tx` against its signatures.
pub fn authorize(source: &Overlay<'_>, tx: &Transaction) -> Result<(), ChainError> {
    let signers = Signers::keys(tx.signatures.iter().cloned());
    if tx.payer().is_none() {
        return Err(ChainError::AuthFailure("transaction declares no authorizer".into()));
    }
    for action in &tx.actions {
        for level in &action.authorizations {
            if !satisfies(source, level, &signers)? {
                return Err(ChainError::AuthFailure(format!("{level} is not satisfied by the signatures")));
            }
        }
    }
    Ok(())
}

/// Executes `tx` against `ledger` without modifying it.
///
/// `preauthorized` skips signature checks and expiry validation; it is set
/// for deferred transactions whose authority was checked when scheduled.
pub fn execute_transaction(ledger: &Ledger, tx: &Transaction, env: &ExecEnv, preauthorized: bool) -> Result<ExecOutcome, ChainError> {
    if tx.actions.is_empty() {
        return Err(ChainError::EmptyTransaction);
    }
    let mut overlay = ledger.overlay();
    if !preauthorized {
        if tx.expiration <= env.now {
            return Err(ChainError::Expired {
                expiration: tx.expiration,
                now: env.now,
            });
        }
        if tx.ref_block_num > env.head_num {
            return Err(ChainError::BadRefBlock {
                ref_block_num: tx.ref_block_num,
                head: env.head_num,
            });
        }
        authorize(&overlay, tx)?;
    }
    let mut run = Run {
        o: &mut overlay,
        env,
        tx_id: tx.id(),
        ref_block_num: tx.ref_block_num,
        cpu: 0,
        sponsored_cpu: 0,
        net: tx.net_words(),
        sends: 0,
        effects: Vec::new(),
    };
    for action in &tx.actions {
        run.action(action, 0)?;
    }
    let (cpu, sponsored_cpu, net, effects) = (run.cpu, run.sponsored_cpu, run.net, run.effects);
    let payer = tx.payer().cloned();
    if let Some(p) = &payer {
        if !overlay.exists(p) {
            return Err(ChainError::UnknownAccount(p.clone()));
        }
        if !is_privileged(p) {
            overlay.consume(p, cpu, net, env.now)?;
        }
    }
    Ok(ExecOutcome {
        changes: overlay.into_changes(),
        cpu_ms: cpu + sponsored_cpu,
        net_words: net,
        payer,
        effects,
    })
}

struct Run<'r, 'l> {
    o: &'r mut Overlay<'l>,
    env: &'r ExecEnv,
    tx_id: TxId,
    ref_block_num: u64,
    /// Billed to the transaction's payer.
    cpu: u64,
    /// Billed to deferred-transaction sponsors; still producer time.
    sponsored_cpu: u64,
    net: u64,
    sends: u64,
    effects: Vec<Effect>,
}

#[derive(Default)]
struct HandlerOut {
    notify: Vec<AccountName>,
    inline: Vec<Action>,
}

enum Flow {
    Continue,
    Return,
}

fn field<'p>(fields: &'p Payload, key: &str) -> Result<&'p Value, ChainError> {
    fields.get(key).ok_or_else(|| ChainError::MissingField(key.to_string()))
}

fn int_field(fields: &Payload, key: &str) -> Result<u64, ChainError> {
    field(fields, key)?
        .as_int()
        .ok_or_else(|| ChainError::ContractAssert(format!("field {key:?} is not an integer")))
}

fn name_field(fields: &Payload, key: &str) -> Result<AccountName, ChainError> {
    field(fields, key)?
        .as_name()
        .ok_or_else(|| ChainError::ContractAssert(format!("field {key:?} is not an account name")))
}

fn opt_int(fields: &Payload, key: &str) -> Result<u64, ChainError> {
    if fields.contains_key(key) {
        int_field(fields, key)
    } else {
        Ok(0)
    }
}

impl Run<'_, '_> {
    fn action(&mut self, action: &Action, depth: usize) -> Result<(), ChainError> {
        if depth > MAX_INLINE_DEPTH {
            return Err(ChainError::DepthExceeded(depth));
        }
        if !self.o.exists(&action.contract) {
            return Err(ChainError::UnknownAccount(action.contract.clone()));
        }
        for level in &action.authorizations {
            if !self.o.exists(&level.actor) {
                return Err(ChainError::UnknownAccount(level.actor.clone()));
            }
        }
        // The code account runs first; every account it (transitively)
        // notifies then runs its own handler once, in notification order.
        // Inline actions wait until all notifications have been handled.
        let mut receivers = vec![action.contract.clone()];
        let mut inline = Vec::new();
        let mut i = 0;
        while i < receivers.len() {
            let receiver = receivers[i].clone();
            let out = self.apply(&receiver, action, i == 0)?;
            for n in out.notify {
                if !receivers.contains(&n) {
                    receivers.push(n);
                }
            }
            inline.extend(out.inline);
            i += 1;
        }
        for a in &inline {
            self.action(a, depth + 1)?;
        }
        Ok(())
    }

    fn apply(&mut self, receiver: &AccountName, action: &Action, primary: bool) -> Result<HandlerOut, ChainError> {
        if primary {
            match receiver.as_str() {
                TOKEN_ACCOUNT => return self.native_token(action),
                SYSTEM_ACCOUNT => return self.native_system(action),
                _ => {}
            }
        }
        let handler = self
            .o
            .account(receiver)
            .and_then(|a| a.contract.as_ref())
            .and_then(|c| c.handler_for(&action.contract, &action.name))
            .cloned();
        let Some(handler) = handler else {
            if primary {
                return Err(ChainError::MissingHandler {
                    contract: receiver.clone(),
                    action: action.name.clone(),
                });
            }
            return Ok(HandlerOut::default());
        };
        let mut fields = action.payload.clone();
        let mut out = HandlerOut::default();
        self.steps(receiver, action, &handler.steps, &mut fields, &mut out)?;
        Ok(out)
    }

    fn resolve(&self, receiver: &AccountName, r: &AccountRef, fields: &Payload) -> Result<AccountName, ChainError> {
        match r {
            AccountRef::SelfAccount => Ok(receiver.clone()),
            AccountRef::Field(f) => name_field(fields, f),
            AccountRef::Literal(n) => Ok(n.clone()),
        }
    }

    fn operand(fields: &Payload, op: &Operand) -> Result<u64, ChainError> {
        match op {
            Operand::Field(f) => int_field(fields, f),
            Operand::Const(c) => Ok(*c),
        }
    }

    fn steps(
        &mut self,
        receiver: &AccountName,
        action: &Action,
        steps: &[Step],
        fields: &mut Payload,
        out: &mut HandlerOut,
    ) -> Result<Flow, ChainError> {
        for step in steps {
            self.cpu += step.cpu_ms();
            match step {
                Step::CheckAuth { actor } => {
                    let who = self.resolve(receiver, actor, fields)?;
                    if !action.has_auth(&who) {
                        return Err(ChainError::AuthFailure(format!("missing authority of {who}")));
                    }
                }
                Step::CheckCodeIs { account } => {
                    if &action.contract != account {
                        return Err(ChainError::ContractAssert(format!(
                            "{} accepted only from {account}, got {}",
                            action.name, action.contract
                        )));
                    }
                }
                Step::CheckRecipientIsSelf => {
                    if &name_field(fields, "to")? != receiver {
                        return Ok(Flow::Return);
                    }
                }
                Step::Arith {
                    op,
                    lhs,
                    rhs,
                    into,
                    mode,
                    bound,
                } => {
                    let a = Self::operand(fields, lhs)?;
                    let b = Self::operand(fields, rhs)?;
                    let exact: Option<u128> = match op {
                        ArithOp::Add => Some(u128::from(a) + u128::from(b)),
                        ArithOp::Mul => Some(u128::from(a) * u128::from(b)),
                        ArithOp::Sub => u128::from(a).checked_sub(u128::from(b)),
                    };
                    if let Some(limit) = bound {
                        if exact.is_none_or(|v| v > u128::from(*limit)) {
                            return Err(ChainError::ContractAssert(format!("{into} out of range [0, {limit}]")));
                        }
                    }
                    let value = match mode {
                        ArithMode::Checked => match exact {
                            Some(v) if v <= u128::from(u64::MAX) => v as u64,
                            _ => return Err(ChainError::OverflowTrap(format!("{a} {op:?} {b}"))),
                        },
                        ArithMode::Wrapping => match op {
                            ArithOp::Add => a.wrapping_add(b),
                            ArithOp::Mul => a.wrapping_mul(b),
                            ArithOp::Sub => a.wrapping_sub(b),
                        },
                    };
                    fields.insert(into.clone(), Value::Int(value));
                }
                Step::TransferOut { to, amount } => {
                    let to = name_field(fields, to)?;
                    let amount = int_field(fields, amount)?;
                    if amount == 0 {
                        return Err(ChainError::NonPositiveQuantity);
                    }
                    if &to == receiver {
                        return Err(ChainError::SelfTransfer);
                    }
                    self.o.move_tokens(receiver, &to, EOS, amount)?;
                    self.net += cost::TRANSFER_OUT_WORDS;
                    self.effects.push(Effect::Transfer {
                        code: TOKEN_ACCOUNT.parse().expect("valid"),
                        from: receiver.clone(),
                        to,
                        symbol: EOS.into(),
                        amount,
                        auth: vec![PermissionLevel::active(receiver.clone())],
                    });
                }
                Step::StoreRow {
                    table,
                    key,
                    bytes,
                    payer,
                    quota,
                } => self.store_row(receiver, action, fields, table, key, *bytes, *payer, *quota)?,
                Step::Notify { account } => {
                    let who = name_field(fields, account)?;
                    if !self.o.exists(&who) {
                        return Err(ChainError::UnknownAccount(who));
                    }
                    out.notify.push(who);
                }
                Step::SendInline(template) => {
                    let a = self.build(receiver, template, fields)?;
                    self.authorize_from_contract(receiver, &a)?;
                    out.inline.push(a);
                }
                Step::SendDeferred {
                    template,
                    delay_ms,
                    sponsor,
                } => {
                    let a = self.build(receiver, template, fields)?;
                    self.authorize_from_contract(receiver, &a)?;
                    let sponsor = match sponsor {
                        Payer::SelfAccount => receiver.clone(),
                        Payer::Actor => Self::actor(action)?,
                    };
                    if !is_privileged(&sponsor) {
                        self.o.consume(&sponsor, cost::SEND_DEFERRED_MS, 0, self.env.now)?;
                    }
                    self.sponsored_cpu += cost::SEND_DEFERRED_MS;
                    let due = self.env.now + delay_ms;
                    let mut nonce = CanonicalWriter::new();
                    nonce.u64(self.tx_id.0).u64(self.sends);
                    self.sends += 1;
                    let tx = Transaction {
                        actions: vec![a],
                        ref_block_num: self.env.head_num,
                        expiration: due + DEFERRED_EXPIRATION_MS,
                        kind: TxKind::Deferred {
                            delay_ms: *delay_ms,
                            sponsor: sponsor.clone(),
                        },
                        nonce: nonce.digest(),
                        signatures: BTreeSet::new(),
                    };
                    let id = tx.id();
                    self.o.push_deferred(DeferredEntry {
                        due,
                        id,
                        tx,
                        preauthorized: true,
                    });
                    self.effects.push(Effect::DeferredScheduled { id, due, sponsor });
                }
                Step::ReadBlockInfo { into } => {
                    let v = block_info_draw(self.env.head_num, self.env.head_time, self.ref_block_num);
                    fields.insert(into.clone(), Value::Int(v));
                    self.effects.push(Effect::Draw {
                        contract: receiver.clone(),
                        value: v,
                    });
                }
                Step::BranchOn {
                    field,
                    threshold,
                    then,
                    otherwise,
                } => {
                    let v = int_field(fields, field)?;
                    let arm = if v >= *threshold { then } else { otherwise };
                    if let Flow::Return = self.steps(receiver, action, arm, fields, out)? {
                        return Ok(Flow::Return);
                    }
                }
            }
        }
        Ok(Flow::Continue)
    }

    fn actor(action: &Action) -> Result<AccountName, ChainError> {
        action
            .authorizations
            .first()
            .map(|l| l.actor.clone())
            .ok_or_else(|| ChainError::AuthFailure(format!("{} carries no authorization", action.name)))
    }

    #[allow(clippy::too_many_arguments)]
    fn store_row(
        &mut self,
        receiver: &AccountName,
        action: &Action,
        fields: &Payload,
        table: &str,
        key: &str,
        bytes: u64,
        payer: Payer,
        quota: Option<u32>,
    ) -> Result<(), ChainError> {
        let key = field(fields, key)?.as_text();
        let actor = Self::actor(action).ok();
        let payer = match payer {
            Payer::SelfAccount => receiver.clone(),
            Payer::Actor => actor.clone().ok_or_else(|| ChainError::AuthFailure("row payer has no authority".into()))?,
        };
        let owner = actor.unwrap_or_else(|| receiver.clone());
        let existing = self
            .o
            .account(receiver)
            .and_then(|a| a.contract.as_ref())
            .and_then(|c| c.tables.get(table))
            .and_then(|t| t.get(&key))
            .cloned();
        if let Some(limit) = quota {
            let owned = self
                .o
                .account(receiver)
                .and_then(|a| a.contract.as_ref())
                .map_or(0, |c| c.rows_owned_by(table, &owner));
            let replacing_own = existing.as_ref().is_some_and(|r| r.owner == owner);
            if !replacing_own && owned >= limit as usize {
                return Err(ChainError::ContractAssert(format!("{owner} already holds {owned} rows in {table}")));
            }
        }
        if let Some(old) = &existing {
            self.o.release_ram(&old.payer, old.bytes)?;
        }
        self.o.use_ram(&payer, bytes)?;
        let acct = self.o.account_mut(receiver)?;
        let contract = acct
            .contract
            .as_mut()
            .ok_or_else(|| ChainError::MissingHandler {
                contract: receiver.clone(),
                action: action.name.clone(),
            })?;
        contract.tables.entry(table.to_string()).or_default().insert(
            key.clone(),
            Row {
                bytes,
                payer: payer.clone(),
                owner,
            },
        );
        self.effects.push(Effect::RowStored {
            contract: receiver.clone(),
            table: table.to_string(),
            key,
            payer,
            bytes,
        });
        Ok(())
    }

    fn build(&self, receiver: &AccountName, t: &ActionTemplate, fields: &Payload) -> Result<Action, ChainError> {
        let mut a = Action::new(self.resolve(receiver, &t.contract, fields)?, t.action.clone());
        for (who, perm) in &t.auth {
            a.authorizations
                .push(PermissionLevel::new(self.resolve(receiver, who, fields)?, perm.clone()));
        }
        for (k, v) in &t.data {
            let value = match v {
                ValueExpr::Field(f) => field(fields, f)?.clone(),
                ValueExpr::SelfAccount => Value::Name(receiver.clone()),
                ValueExpr::Literal(v) => v.clone(),
            };
            a.payload.insert(k.clone(), value);
        }
        Ok(a)
    }

    /// A contract may act as itself; any other authority must be granted to
    /// `receiver@eosio.code`.
    fn authorize_from_contract(&self, receiver: &AccountName, a: &Action) -> Result<(), ChainError> {
        let signers = Signers::code_of(receiver);
        for level in &a.authorizations {
            if &level.actor == receiver {
                continue;
            }
            if !satisfies(&*self.o, level, &signers)? {
                return Err(ChainError::AuthFailure(format!("{receiver} cannot act as {level}")));
            }
        }
        Ok(())
    }

    fn require(action: &Action, who: &AccountName) -> Result<(), ChainError> {
        if action.has_auth(who) {
            Ok(())
        } else {
            Err(ChainError::AuthFailure(format!("missing authority of {who}")))
        }
    }

    /// `setcode` and permission changes need the account's owner or active
    /// authority specifically.
    fn require_active(action: &Action, who: &AccountName) -> Result<(), ChainError> {
        let ok = action
            .authorizations
            .iter()
            .any(|l| &l.actor == who && matches!(l.permission, PermissionName::Owner | PermissionName::Active));
        if ok {
            Ok(())
        } else {
            Err(ChainError::AuthFailure(format!("{who}@active required")))
        }
    }

    fn native_token(&mut self, action: &Action) -> Result<HandlerOut, ChainError> {
        self.cpu += cost::NATIVE_ACTION_MS;
        let p = &action.payload;
        match action.name.as_str() {
            "transfer" => {
                let from = name_field(p, "from")?;
                let to = name_field(p, "to")?;
                let quantity = int_field(p, "quantity")?;
                let symbol = p.get("symbol").map_or_else(|| EOS.to_string(), Value::as_text);
                Self::require(action, &from)?;
                if from == to {
                    return Err(ChainError::SelfTransfer);
                }
                if quantity == 0 {
                    return Err(ChainError::NonPositiveQuantity);
                }
                self.o.move_tokens(&from, &to, &symbol, quantity)?;
                self.effects.push(Effect::Transfer {
                    code: action.contract.clone(),
                    from: from.clone(),
                    to: to.clone(),
                    symbol,
                    amount: quantity,
                    auth: action.authorizations.clone(),
                });
                Ok(HandlerOut {
                    notify: vec![from, to],
                    inline: Vec::new(),
                })
            }
            _ => Err(ChainError::MissingHandler {
                contract: action.contract.clone(),
                action: action.name.clone(),
            }),
        }
    }

    fn native_system(&mut self, action: &Action) -> Result<HandlerOut, ChainError> {
        self.cpu += cost::NATIVE_ACTION_MS;
        let p = &action.payload;
        match action.name.as_str() {
            "newaccount" => {
                let creator = name_field(p, "creator")?;
                let new_name = name_field(p, "name")?;
                let key = KeyId::new(field(p, "key")?.as_text());
                let ram = int_field(p, "ram")?;
                Self::require(action, &creator)?;
                self.o.create_account(
                    &creator,
                    &new_name,
                    Permission::single_key(PermissionName::Owner, key.clone()),
                    Permission::single_key(PermissionName::Active, key),
                    ram,
                    self.env.now,
                )?;
                self.effects.push(Effect::AccountCreated {
                    name: new_name,
                    creator,
                });
            }
            "delegatebw" => {
                let account = name_field(p, "account")?;
                let (cpu, net) = (opt_int(p, "cpu")?, opt_int(p, "net")?);
                Self::require(action, &account)?;
                if cpu == 0 && net == 0 {
                    return Err(crate::resources::ResourceError::ZeroAmount.into());
                }
                if cpu > 0 {
                    self.o.stake(&account, cpu, ResourceKind::Cpu)?;
                }
                if net > 0 {
                    self.o.stake(&account, net, ResourceKind::Net)?;
                }
                self.effects.push(Effect::Staked { account, cpu, net });
            }
            "undelegatebw" => {
                let account = name_field(p, "account")?;
                let (cpu, net) = (opt_int(p, "cpu")?, opt_int(p, "net")?);
                Self::require(action, &account)?;
                if cpu == 0 && net == 0 {
                    return Err(crate::resources::ResourceError::ZeroAmount.into());
                }
                if cpu > 0 {
                    self.o.unstake(&account, cpu, ResourceKind::Cpu, self.env.now)?;
                }
                if net > 0 {
                    self.o.unstake(&account, net, ResourceKind::Net, self.env.now)?;
                }
                self.effects.push(Effect::Unstaked { account, cpu, net });
            }
            "buyram" => {
                let payer = name_field(p, "payer")?;
                let receiver = if p.contains_key("receiver") {
                    name_field(p, "receiver")?
                } else {
                    payer.clone()
                };
                let quantity = int_field(p, "quantity")?;
                Self::require(action, &payer)?;
                self.o.buy_ram(&payer, &receiver, quantity)?;
            }
            "sellram" => {
                let account = name_field(p, "account")?;
                let bytes = int_field(p, "bytes")?;
                Self::require(action, &account)?;
                self.o.sell_ram(&account, bytes)?;
            }
            "setcode" => {
                let account = name_field(p, "account")?;
                Self::require_active(action, &account)?;
                let text = field(p, "code")?.as_text();
                let parsed = descriptor::parse(&text).map_err(|e| ChainError::Descriptor(e.to_string()))?;
                let code = parsed.contract.deployed_to(&account);
                let acct = self.o.account_mut(&account)?;
                // Tables survive a code swap; only the handlers change.
                let tables = acct.contract.take().map(|c| c.tables).unwrap_or_default();
                let mut code = code;
                code.tables = tables;
                acct.contract = Some(code);
                self.effects.push(Effect::CodeSet { account });
            }
            "updateauth" => {
                let account = name_field(p, "account")?;
                let permission = match p.get("permission") {
                    Some(v) => v.as_text().parse::<PermissionName>()?,
                    None => PermissionName::Active,
                };
                let grantee = name_field(p, "grant")?;
                Self::require_active(action, &account)?;
                if !self.o.exists(&grantee) {
                    return Err(ChainError::UnknownAccount(grantee));
                }
                let acct = self.o.account_mut(&account)?;
                let current = acct.permissions.get(&permission).cloned().ok_or_else(|| {
                    ChainError::Auth(crate::chain::permission::AuthError::UnknownPermission(PermissionLevel::new(
                        account.clone(),
                        permission.clone(),
                    )))
                })?;
                let level = PermissionLevel::new(grantee.clone(), PermissionName::code());
                let weight = current.threshold();
                let updated = current.with_authority(Authority::Account(level), weight)?;
                acct.permissions.insert(permission.clone(), updated);
                self.effects.push(Effect::CodeGranted {
                    account,
                    permission,
                    grantee,
                });
            }
            "regproducer" => {
                let producer = name_field(p, "producer")?;
                Self::require(action, &producer)?;
                let now = self.env.now;
                self.o.votes_mut().register(producer, now);
            }
            "voteproducer" => {
                let voter = name_field(p, "voter")?;
                Self::require(action, &voter)?;
                let list = field(p, "producers")?.as_text();
                let mut picks = BTreeSet::new();
                for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    picks.insert(part.parse::<AccountName>()?);
                }
                let r = self.o.resources(&voter);
                let stake = r.staked_cpu + r.staked_net;
                self.o.votes_mut().vote(voter, stake, picks).map_err(|e| match e {
                    crate::consensus::ConsensusError::Chain(c) => c,
                    other => ChainError::ContractAssert(other.to_string()),
                })?;
            }
            _ => {
                return Err(ChainError::MissingHandler {
                    contract: action.contract.clone(),
                    action: action.name.clone(),
                })
            }
        }
        Ok(HandlerOut::default())
    }
}
