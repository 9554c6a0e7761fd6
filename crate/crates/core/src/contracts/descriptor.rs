//! Line-oriented text format for [`ContractDef`].
//!
//! ```text
//! # expect: fake-eos                 label consumed by the linter tests
//! contract eosbet                    owner the handlers are written for
//! ricardian "Pays twice any bet."    optional, free text
//! handler * transfer                 code account (`*`, `self` or a name), action
//!   check_auth actor=$from
//!   check_code_is account=eosio.token
//!   check_recipient_is_self
//!   arith op=mul lhs=$quantity rhs=2 into=payout mode=checked bound=1000000
//!   transfer_out to=$from amount=$payout
//!   store_row table=bets key=$from bytes=100 payer=self quota=5
//!   notify account=$to
//!   send_inline contract=eosio.token action=transfer auth=self@active data.from=self data.to=$from
//!   send_deferred contract=self action=spam delay=0 sponsor=self auth=self@active
//!   read_block_info into=draw
//!   branch_on field=$draw threshold=50
//!     ...
//!   else
//!     ...
//!   end
//! end
//! ```
//!
//! Every step is a keyword followed by `key=value` arguments in any order.
//! Account arguments take `self`, `$field` or a literal account name.
//! Operands take `$field` or an integer. `data.<key>=` values additionally
//! accept integers and double-quoted strings (`\"` and `\\` escapes).
//! `auth=` and `data.*=` may repeat; their order is kept. Indentation is
//! not significant; `end` closes the innermost open handler or branch.
//! Blank lines and lines starting with `#` are ignored, except `# expect:`
//! which lists the vulnerability classes the contract is labeled with
//! (comma-separated, or `none`).

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::chain::permission::PermissionName;
use crate::chain::transaction::Value;
use crate::contracts::checker::VulnClass;
use crate::contracts::ir::{
    AccountRef, ActionTemplate, ArithMode, ArithOp, CodeMatch, ContractDef, HandlerSpec, Operand, Payer, Step, ValueExpr,
};
use crate::name::AccountName;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct DescriptorError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedContract {
    pub contract: ContractDef,
    /// Labels from `# expect:` lines; `None` when the file has none.
    pub expects: Option<BTreeSet<VulnClass>>,
}

fn err(line: usize, message: impl Into<String>) -> DescriptorError {
    DescriptorError {
        line,
        message: message.into(),
    }
}

/// Splits on whitespace, keeping double-quoted runs (with escapes) intact.
fn tokenize(text: &str, line: usize) -> Result<Vec<String>, DescriptorError> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars();
    let mut in_quotes = false;
    while let Some(c) = chars.next() {
        if in_quotes {
            cur.push(c);
            match c {
                '\\' => match chars.next() {
                    Some(n) => cur.push(n),
                    None => return Err(err(line, "dangling escape")),
                },
                '"' => in_quotes = false,
                _ => {}
            }
        } else if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            if c == '"' {
                in_quotes = true;
            }
            cur.push(c);
        }
    }
    if in_quotes {
        return Err(err(line, "unterminated string"));
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

fn unquote(s: &str, line: usize) -> Result<String, DescriptorError> {
    let inner = s
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .ok_or_else(|| err(line, format!("expected a quoted string, got {s}")))?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            out.push(chars.next().ok_or_else(|| err(line, "dangling escape"))?);
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
}

struct Args {
    line: usize,
    pairs: Vec<(String, String)>,
}

impl Args {
    fn parse(tokens: &[String], line: usize) -> Result<Self, DescriptorError> {
        let mut pairs = Vec::new();
        for t in tokens {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key=value, got {t}")))?;
            if v.is_empty() {
                return Err(err(line, format!("empty value for {k}")));
            }
            pairs.push((k.to_string(), v.to_string()));
        }
        Ok(Self { line, pairs })
    }

    fn opt(&self, key: &str) -> Result<Option<&str>, DescriptorError> {
        let mut found = self.pairs.iter().filter(|(k, _)| k == key);
        let first = found.next();
        if found.next().is_some() {
            return Err(err(self.line, format!("{key} given twice")));
        }
        Ok(first.map(|(_, v)| v.as_str()))
    }

    fn req(&self, key: &str) -> Result<&str, DescriptorError> {
        self.opt(key)?.ok_or_else(|| err(self.line, format!("missing {key}=")))
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.pairs.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn check_known(&self, known: &[&str]) -> Result<(), DescriptorError> {
        for (k, _) in &self.pairs {
            if !known.contains(&k.as_str()) && !(known.contains(&"data.*") && k.starts_with("data.")) {
                return Err(err(self.line, format!("unknown argument {k}")));
            }
        }
        Ok(())
    }

    fn int(&self, key: &str) -> Result<u64, DescriptorError> {
        let v = self.req(key)?;
        v.parse().map_err(|_| err(self.line, format!("{key} must be an integer, got {v}")))
    }

    fn opt_int(&self, key: &str) -> Result<Option<u64>, DescriptorError> {
        match self.opt(key)? {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| err(self.line, format!("{key} must be an integer, got {v}"))),
        }
    }

    fn ident(&self, key: &str) -> Result<String, DescriptorError> {
        let v = self.req(key)?;
        if is_ident(v) {
            Ok(v.to_string())
        } else {
            Err(err(self.line, format!("{key} must be an identifier, got {v}")))
        }
    }

    fn field(&self, key: &str) -> Result<String, DescriptorError> {
        let v = self.req(key)?;
        match v.strip_prefix('$') {
            Some(f) if is_ident(f) => Ok(f.to_string()),
            _ => Err(err(self.line, format!("{key} must be a $field, got {v}"))),
        }
    }

    fn account(&self, key: &str) -> Result<AccountRef, DescriptorError> {
        account_ref(self.req(key)?, self.line)
    }

    fn name(&self, key: &str) -> Result<AccountName, DescriptorError> {
        let v = self.req(key)?;
        v.parse().map_err(|e| err(self.line, format!("{key}: {e}")))
    }

    fn operand(&self, key: &str) -> Result<Operand, DescriptorError> {
        let v = self.req(key)?;
        if let Some(f) = v.strip_prefix('$') {
            if is_ident(f) {
                return Ok(Operand::Field(f.to_string()));
            }
        } else if let Ok(n) = v.parse() {
            return Ok(Operand::Const(n));
        }
        Err(err(self.line, format!("{key} must be a $field or integer, got {v}")))
    }

    fn payer(&self, key: &str) -> Result<Payer, DescriptorError> {
        match self.req(key)? {
            "self" => Ok(Payer::SelfAccount),
            "actor" => Ok(Payer::Actor),
            v => Err(err(self.line, format!("{key} must be self or actor, got {v}"))),
        }
    }

    fn template(&self) -> Result<ActionTemplate, DescriptorError> {
        let mut auth = Vec::new();
        for a in self.all("auth") {
            let (who, perm) = a
                .split_once('@')
                .ok_or_else(|| err(self.line, format!("auth must be account@permission, got {a}")))?;
            let perm: PermissionName = perm.parse().map_err(|e| err(self.line, format!("auth: {e}")))?;
            auth.push((account_ref(who, self.line)?, perm));
        }
        let mut data = Vec::new();
        for (k, v) in &self.pairs {
            if let Some(key) = k.strip_prefix("data.") {
                if !is_ident(key) {
                    return Err(err(self.line, format!("bad data key {key}")));
                }
                if data.iter().any(|(d, _): &(String, ValueExpr)| d == key) {
                    return Err(err(self.line, format!("data.{key} given twice")));
                }
                data.push((key.to_string(), value_expr(v, self.line)?));
            }
        }
        Ok(ActionTemplate {
            contract: self.account("contract")?,
            action: self.ident("action")?,
            auth,
            data,
        })
    }
}

fn account_ref(v: &str, line: usize) -> Result<AccountRef, DescriptorError> {
    if v == "self" {
        return Ok(AccountRef::SelfAccount);
    }
    if let Some(f) = v.strip_prefix('$') {
        if is_ident(f) {
            return Ok(AccountRef::Field(f.to_string()));
        }
        return Err(err(line, format!("bad field reference {v}")));
    }
    v.parse()
        .map(AccountRef::Literal)
        .map_err(|e| err(line, format!("account {v}: {e}")))
}

fn value_expr(v: &str, line: usize) -> Result<ValueExpr, DescriptorError> {
    if v == "self" {
        return Ok(ValueExpr::SelfAccount);
    }
    if let Some(f) = v.strip_prefix('$') {
        if is_ident(f) {
            return Ok(ValueExpr::Field(f.to_string()));
        }
        return Err(err(line, format!("bad field reference {v}")));
    }
    if v.starts_with('"') {
        return Ok(ValueExpr::Literal(Value::Str(unquote(v, line)?)));
    }
    if v.bytes().all(|b| b.is_ascii_digit()) {
        return v
            .parse()
            .map(|n| ValueExpr::Literal(Value::Int(n)))
            .map_err(|_| err(line, format!("integer out of range: {v}")));
    }
    v.parse()
        .map(|n| ValueExpr::Literal(Value::Name(n)))
        .map_err(|e| err(line, format!("value {v}: {e}")))
}

fn parse_step(keyword: &str, args: &Args) -> Result<Step, DescriptorError> {
    let line = args.line;
    let step = match keyword {
        "check_auth" => {
            args.check_known(&["actor"])?;
            Step::CheckAuth {
                actor: args.account("actor")?,
            }
        }
        "check_code_is" => {
            args.check_known(&["account"])?;
            Step::CheckCodeIs {
                account: args.name("account")?,
            }
        }
        "check_recipient_is_self" => {
            args.check_known(&[])?;
            Step::CheckRecipientIsSelf
        }
        "arith" => {
            args.check_known(&["op", "lhs", "rhs", "into", "mode", "bound"])?;
            let op = match args.req("op")? {
                "add" => ArithOp::Add,
                "mul" => ArithOp::Mul,
                "sub" => ArithOp::Sub,
                v => return Err(err(line, format!("op must be add, mul or sub, got {v}"))),
            };
            let mode = match args.req("mode")? {
                "wrapping" => ArithMode::Wrapping,
                "checked" => ArithMode::Checked,
                v => return Err(err(line, format!("mode must be wrapping or checked, got {v}"))),
            };
            Step::Arith {
                op,
                lhs: args.operand("lhs")?,
                rhs: args.operand("rhs")?,
                into: args.ident("into")?,
                mode,
                bound: args.opt_int("bound")?,
            }
        }
        "transfer_out" => {
            args.check_known(&["to", "amount"])?;
            Step::TransferOut {
                to: args.field("to")?,
                amount: args.field("amount")?,
            }
        }
        "store_row" => {
            args.check_known(&["table", "key", "bytes", "payer", "quota"])?;
            let quota = match args.opt_int("quota")? {
                None => None,
                Some(q) => Some(u32::try_from(q).map_err(|_| err(line, "quota out of range"))?),
            };
            Step::StoreRow {
                table: args.ident("table")?,
                key: args.field("key")?,
                bytes: args.int("bytes")?,
                payer: args.payer("payer")?,
                quota,
            }
        }
        "notify" => {
            args.check_known(&["account"])?;
            Step::Notify {
                account: args.field("account")?,
            }
        }
        "send_inline" => {
            args.check_known(&["contract", "action", "auth", "data.*"])?;
            Step::SendInline(args.template()?)
        }
        "send_deferred" => {
            args.check_known(&["contract", "action", "auth", "data.*", "delay", "sponsor"])?;
            Step::SendDeferred {
                template: args.template()?,
                delay_ms: args.int("delay")?,
                sponsor: args.payer("sponsor")?,
            }
        }
        "read_block_info" => {
            args.check_known(&["into"])?;
            Step::ReadBlockInfo {
                into: args.ident("into")?,
            }
        }
        other => return Err(err(line, format!("unknown step {other}"))),
    };
    Ok(step)
}

enum Open {
    Handler { code: CodeMatch, action: String, steps: Vec<Step>, line: usize },
    Branch { field: String, threshold: u64, then: Vec<Step>, otherwise: Option<Vec<Step>>, line: usize },
}

impl Open {
    fn push(&mut self, step: Step) {
        match self {
            Open::Handler { steps, .. } => steps.push(step),
            Open::Branch { then, otherwise, .. } => match otherwise {
                Some(o) => o.push(step),
                None => then.push(step),
            },
        }
    }
}

/// Parses one descriptor document.
pub fn parse(text: &str) -> Result<ParsedContract, DescriptorError> {
    let mut owner: Option<AccountName> = None;
    let mut ricardian = None;
    let mut expects: Option<BTreeSet<VulnClass>> = None;
    let mut handlers: Vec<HandlerSpec> = Vec::new();
    let mut stack: Vec<Open> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(labels) = comment.trim().strip_prefix("expect:") {
                let set = expects.get_or_insert_with(BTreeSet::new);
                for label in labels.split(',').map(str::trim).filter(|l| !l.is_empty()) {
                    if label == "none" {
                        continue;
                    }
                    set.insert(label.parse().map_err(|e: String| err(line, e))?);
                }
            }
            continue;
        }
        let tokens = tokenize(trimmed, line)?;
        let keyword = tokens[0].as_str();
        let rest = &tokens[1..];
        match keyword {
            "contract" => {
                if owner.is_some() {
                    return Err(err(line, "second contract declaration"));
                }
                if !stack.is_empty() {
                    return Err(err(line, "contract inside a handler"));
                }
                let [n] = rest else {
                    return Err(err(line, "expected: contract <account>"));
                };
                owner = Some(n.parse().map_err(|e| err(line, format!("contract: {e}")))?);
            }
            "ricardian" => {
                let [text] = rest else {
                    return Err(err(line, "expected: ricardian \"text\""));
                };
                if owner.is_none() || !stack.is_empty() {
                    return Err(err(line, "ricardian must follow the contract line"));
                }
                ricardian = Some(unquote(text, line)?);
            }
            "handler" => {
                let Some(own) = &owner else {
                    return Err(err(line, "handler before contract declaration"));
                };
                if !stack.is_empty() {
                    return Err(err(line, "handler inside another handler; missing end?"));
                }
                let [code, action] = rest else {
                    return Err(err(line, "expected: handler <code> <action>"));
                };
                let code = match code.as_str() {
                    "*" => CodeMatch::Any,
                    "self" => CodeMatch::Exact(own.clone()),
                    n => CodeMatch::Exact(n.parse().map_err(|e| err(line, format!("handler code: {e}")))?),
                };
                if !is_ident(action) {
                    return Err(err(line, format!("bad action name {action}")));
                }
                stack.push(Open::Handler {
                    code,
                    action: action.clone(),
                    steps: Vec::new(),
                    line,
                });
            }
            "branch_on" => {
                if stack.is_empty() {
                    return Err(err(line, "step outside a handler"));
                }
                let args = Args::parse(rest, line)?;
                args.check_known(&["field", "threshold"])?;
                stack.push(Open::Branch {
                    field: args.field("field")?,
                    threshold: args.int("threshold")?,
                    then: Vec::new(),
                    otherwise: None,
                    line,
                });
            }
            "else" => match stack.last_mut() {
                Some(Open::Branch { otherwise, .. }) if otherwise.is_none() && rest.is_empty() => {
                    *otherwise = Some(Vec::new());
                }
                _ => return Err(err(line, "else without an open branch_on")),
            },
            "end" => {
                if !rest.is_empty() {
                    return Err(err(line, "end takes no arguments"));
                }
                match stack.pop() {
                    None => return Err(err(line, "end without an open handler or branch")),
                    Some(Open::Handler { code, action, steps, .. }) => {
                        if handlers.iter().any(|h| h.code == code && h.action == action) {
                            return Err(err(line, format!("second handler for ({code}, {action})")));
                        }
                        handlers.push(HandlerSpec::new(code, action, steps));
                    }
                    Some(Open::Branch {
                        field,
                        threshold,
                        then,
                        otherwise,
                        ..
                    }) => {
                        let step = Step::BranchOn {
                            field,
                            threshold,
                            then,
                            otherwise: otherwise.unwrap_or_default(),
                        };
                        stack.last_mut().expect("branch inside handler").push(step);
                    }
                }
            }
            kw => {
                let Some(top) = stack.last_mut() else {
                    return Err(err(line, format!("step {kw} outside a handler")));
                };
                let args = Args::parse(rest, line)?;
                top.push(parse_step(kw, &args)?);
            }
        }
    }
    if let Some(open) = stack.last() {
        let l = match open {
            Open::Handler { line, .. } | Open::Branch { line, .. } => *line,
        };
        return Err(err(l, "block opened here is never closed with end"));
    }
    let owner = owner.ok_or_else(|| err(last_line.max(1), "no contract declaration"))?;
    let mut contract = ContractDef::new(owner, handlers).map_err(|e| err(last_line, e.to_string()))?;
    contract.ricardian = ricardian;
    Ok(ParsedContract { contract, expects })
}

struct Printer<'a> {
    owner: &'a AccountName,
    out: String,
}

fn account_text(r: &AccountRef) -> String {
    match r {
        AccountRef::SelfAccount => "self".into(),
        AccountRef::Field(f) => format!("${f}"),
        AccountRef::Literal(n) => n.to_string(),
    }
}

fn operand_text(o: &Operand) -> String {
    match o {
        Operand::Field(f) => format!("${f}"),
        Operand::Const(c) => c.to_string(),
    }
}

fn payer_text(p: Payer) -> &'static str {
    match p {
        Payer::SelfAccount => "self",
        Payer::Actor => "actor",
    }
}

fn template_text(t: &ActionTemplate) -> String {
    let mut s = format!("contract={} action={}", account_text(&t.contract), t.action);
    for (who, perm) in &t.auth {
        let _ = write!(s, " auth={}@{perm}", account_text(who));
    }
    for (k, v) in &t.data {
        let v = match v {
            ValueExpr::Field(f) => format!("${f}"),
            ValueExpr::SelfAccount => "self".into(),
            ValueExpr::Literal(Value::Int(n)) => n.to_string(),
            ValueExpr::Literal(Value::Name(n)) => n.to_string(),
            ValueExpr::Literal(Value::Str(s)) => quote(s),
        };
        let _ = write!(s, " data.{k}={v}");
    }
    s
}

impl Printer<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn steps(&mut self, steps: &[Step], depth: usize) {
        for s in steps {
            let text = match s {
                Step::CheckAuth { actor } => format!("check_auth actor={}", account_text(actor)),
                Step::CheckCodeIs { account } => format!("check_code_is account={account}"),
                Step::CheckRecipientIsSelf => "check_recipient_is_self".into(),
                Step::Arith {
                    op,
                    lhs,
                    rhs,
                    into,
                    mode,
                    bound,
                } => {
                    let op = match op {
                        ArithOp::Add => "add",
                        ArithOp::Mul => "mul",
                        ArithOp::Sub => "sub",
                    };
                    let mode = match mode {
                        ArithMode::Wrapping => "wrapping",
                        ArithMode::Checked => "checked",
                    };
                    let mut t = format!(
                        "arith op={op} lhs={} rhs={} into={into} mode={mode}",
                        operand_text(lhs),
                        operand_text(rhs)
                    );
                    if let Some(b) = bound {
                        let _ = write!(t, " bound={b}");
                    }
                    t
                }
                Step::TransferOut { to, amount } => format!("transfer_out to=${to} amount=${amount}"),
                Step::StoreRow {
                    table,
                    key,
                    bytes,
                    payer,
                    quota,
                } => {
                    let mut t = format!("store_row table={table} key=${key} bytes={bytes} payer={}", payer_text(*payer));
                    if let Some(q) = quota {
                        let _ = write!(t, " quota={q}");
                    }
                    t
                }
                Step::Notify { account } => format!("notify account=${account}"),
                Step::SendInline(t) => format!("send_inline {}", template_text(t)),
                Step::SendDeferred {
                    template,
                    delay_ms,
                    sponsor,
                } => format!(
                    "send_deferred {} delay={delay_ms} sponsor={}",
                    template_text(template),
                    payer_text(*sponsor)
                ),
                Step::ReadBlockInfo { into } => format!("read_block_info into={into}"),
                Step::BranchOn {
                    field,
                    threshold,
                    then,
                    otherwise,
                } => {
                    self.line(depth, &format!("branch_on field=${field} threshold={threshold}"));
                    self.steps(then, depth + 1);
                    if !otherwise.is_empty() {
                        self.line(depth, "else");
                        self.steps(otherwise, depth + 1);
                    }
                    self.line(depth, "end");
                    continue;
                }
            };
            self.line(depth, &text);
        }
    }
}

/// Canonical text of `contract`'s code. Table contents are runtime state and
/// are not part of the document.
pub fn print(contract: &ContractDef) -> String {
    let mut p = Printer {
        owner: &contract.owner,
        out: String::new(),
    };
    p.line(0, &format!("contract {}", contract.owner));
    if let Some(r) = &contract.ricardian {
        p.line(0, &format!("ricardian {}", quote(r)));
    }
    for h in contract.handlers() {
        let code = match &h.code {
            CodeMatch::Any => "*".to_string(),
            CodeMatch::Exact(n) if n == p.owner => "self".to_string(),
            CodeMatch::Exact(n) => n.to_string(),
        };
        p.line(0, &format!("handler {code} {}", h.action));
        p.steps(&h.steps, 1);
        p.line(0, "end");
    }
    p.out
}

impl fmt::Display for ParsedContract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(&self.contract))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::name;

    const SAMPLE: &str = r#"
# expect: fake-eos, missing-auth
contract eosbet
ricardian "Pays \"twice\" any bet."
handler * transfer
  check_recipient_is_self
  arith op=mul lhs=$quantity rhs=2 into=payout mode=checked bound=1000
  branch_on field=$payout threshold=10
    transfer_out to=$from amount=$payout
  else
    notify account=$from
  end
  send_inline contract=eosio.token action=transfer auth=self@active data.from=self data.to=$from data.memo="a b"
end
"#;

    #[test]
    fn parses_sample() {
        let p = parse(SAMPLE).unwrap();
        assert_eq!(p.contract.owner, name("eosbet"));
        assert_eq!(p.contract.ricardian.as_deref(), Some("Pays \"twice\" any bet."));
        let expects = p.expects.unwrap();
        assert!(expects.contains(&VulnClass::FakeEos));
        assert!(expects.contains(&VulnClass::MissingAuth));
        let h = &p.contract.handlers()[0];
        assert_eq!(h.code, CodeMatch::Any);
        assert_eq!(h.steps.len(), 4);
        match &h.steps[2] {
            Step::BranchOn { then, otherwise, .. } => {
                assert_eq!(then.len(), 1);
                assert_eq!(otherwise.len(), 1);
            }
            s => panic!("unexpected {s:?}"),
        }
        match &h.steps[3] {
            Step::SendInline(t) => {
                assert_eq!(t.data[2], ("memo".into(), ValueExpr::Literal(Value::Str("a b".into()))));
            }
            s => panic!("unexpected {s:?}"),
        }
    }

    #[test]
    fn print_then_parse_is_identity() {
        let p = parse(SAMPLE).unwrap();
        let again = parse(&print(&p.contract)).unwrap();
        assert_eq!(again.contract, p.contract);
    }

    #[test]
    fn errors_cite_lines() {
        assert_eq!(parse("").unwrap_err().line, 1);
        let e = parse("contract a\nhandler * t\n  bogus x=1\nend\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("unknown step"));
        let e = parse("contract a\nhandler * t\n  transfer_out to=from amount=$x\nend\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse("contract a\nhandler * t\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("contract a\nhandler * t\nend\nhandler * t\nend\n").unwrap_err();
        assert_eq!(e.line, 5);
        let e = parse("contract a\n  check_auth actor=self\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
