//! Line-oriented event trace. Header lines start with `#`.

use std::fmt::Write as _;

use crate::ids::{ActorId, Role};
use crate::SimError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActorInfo {
    pub id: ActorId,
    pub role: Role,
    pub subnet: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub actor: ActorId,
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl TraceEvent {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub meta: Vec<(String, String)>,
    pub actors: Vec<ActorInfo>,
    /// `(deposit_id, spawn proof hex)`.
    pub spawns: Vec<(String, String)>,
    pub events: Vec<TraceEvent>,
}

fn clean(s: &str) -> bool {
    !s.is_empty() && !s.contains(['\t', '\n', ' ', '='])
}

impl Trace {
    pub fn push(&mut self, tick: u64, actor: &ActorId, kind: &str, fields: Vec<(&str, String)>) {
        debug_assert!(fields.iter().all(|(k, v)| clean(k) && clean(v)), "{kind}: {fields:?}");
        self.events.push(TraceEvent {
            tick,
            actor: actor.clone(),
            kind: kind.to_owned(),
            fields: fields.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
        });
    }

    pub fn role_of(&self, id: &ActorId) -> Option<Role> {
        self.actors.iter().find(|a| &a.id == id).map(|a| a.role)
    }

    pub fn events_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("#deaddrop-trace v1\n");
        for (k, v) in &self.meta {
            writeln!(out, "#meta\t{k}\t{v}").expect("write to String");
        }
        for a in &self.actors {
            writeln!(out, "#actor\t{}\t{}\t{}", a.id, a.role, a.subnet).expect("write to String");
        }
        for (d, p) in &self.spawns {
            writeln!(out, "#spawn\t{d}\t{p}").expect("write to String");
        }
        for e in &self.events {
            let fields: Vec<String> = e.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(out, "{}\t{}\t{}\t{}", e.tick, e.actor, e.kind, fields.join(" ")).expect("write to String");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let bad = |l: &str| SimError::Decode(format!("bad trace line {l:?}"));
        let mut t = Trace::default();
        for line in text.lines().filter(|l| !l.is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols[..] {
                ["#deaddrop-trace v1"] => {}
                ["#meta", k, v] => t.meta.push((k.into(), v.into())),
                ["#actor", id, role, subnet] => {
                    t.actors.push(ActorInfo { id: ActorId::new(id), role: role.parse()?, subnet: subnet.into() })
                }
                ["#spawn", d, p] => t.spawns.push((d.into(), p.into())),
                [tick, actor, kind, fields] if !tick.starts_with('#') => {
                    let fields = fields
                        .split(' ')
                        .filter(|f| !f.is_empty())
                        .map(|f| f.split_once('=').map(|(k, v)| (k.to_owned(), v.to_owned())).ok_or_else(|| bad(line)))
                        .collect::<Result<_, _>>()?;
                    t.events.push(TraceEvent {
                        tick: tick.parse().map_err(|_| bad(line))?,
                        actor: ActorId::new(actor),
                        kind: kind.into(),
                        fields,
                    });
                }
                _ => return Err(bad(line)),
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut t = Trace::default();
        t.meta.push(("seed".into(), "00ff".into()));
        t.actors.push(ActorInfo { id: ActorId::new("ab"), role: Role::C(2), subnet: "s1".into() });
        t.actors.push(ActorInfo { id: ActorId::new("cd"), role: Role::Sender, subnet: "-".into() });
        t.spawns.push(("d".into(), "beef".into()));
        t.push(3, &ActorId::new("ab"), "recv", vec![("from", "cd".into()), ("msg", "store".into())]);
        t.push(4, &ActorId::new("ab"), "tombstone", vec![]);
        let back = Trace::parse(&t.to_text()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), t.to_text());
        assert!(Trace::parse("garbage").is_err());
    }
}
