//! Line-oriented instance file format: reader and writer.
//!
//! ```text
//! problem smti
//! types 4
//! type 1 side=m count=3 prefs=(2 3) 4
//! type 2 side=w count=2 prefs=1
//! refine 2: (m1 m2) m3
//! except agent=m1 cand=w2 place=top
//! couple types=(1,2) count=1 prefs=[(3,4) (4,3)] (3,3)
//! ```
//!
//! Type ids are 1-based in files. Singleton tie groups may omit their
//! parentheses; `#` starts a comment.

use std::collections::BTreeMap;

use crate::instance::{
    CoupleType, ExceptionEntry, InstanceError, Placement, ProblemKind, Side, TypePreference,
    TypeSpec, TypedInstance,
};

fn syntax(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Splits `(a b) c (d)` into groups of raw tokens.
fn split_groups(text: &str, line: usize) -> Result<Vec<Vec<String>>, InstanceError> {
    let mut groups = Vec::new();
    let mut current: Option<Vec<String>> = None;
    let mut token = String::new();
    let flush = |token: &mut String, current: &mut Option<Vec<String>>, groups: &mut Vec<Vec<String>>| {
        if !token.is_empty() {
            let t = std::mem::take(token);
            match current {
                Some(g) => g.push(t),
                None => groups.push(vec![t]),
            }
        }
    };
    for ch in text.chars() {
        match ch {
            '(' => {
                flush(&mut token, &mut current, &mut groups);
                if current.is_some() {
                    return Err(syntax(line, "nested '('"));
                }
                current = Some(Vec::new());
            }
            ')' => {
                flush(&mut token, &mut current, &mut groups);
                match current.take() {
                    Some(g) if !g.is_empty() => groups.push(g),
                    Some(_) => return Err(syntax(line, "empty tie group")),
                    None => return Err(syntax(line, "unbalanced ')'")),
                }
            }
            c if c.is_whitespace() => flush(&mut token, &mut current, &mut groups),
            c => token.push(c),
        }
    }
    flush(&mut token, &mut current, &mut groups);
    if current.is_some() {
        return Err(syntax(line, "unclosed '('"));
    }
    Ok(groups)
}

fn parse_type_id(tok: &str, k: usize, line: usize) -> Result<usize, InstanceError> {
    let id: usize = tok
        .parse()
        .map_err(|_| syntax(line, format!("bad type id '{tok}'")))?;
    if id == 0 || id > k {
        return Err(InstanceError::Semantic(format!(
            "line {line}: unknown type id {id}"
        )));
    }
    Ok(id - 1)
}

/// Parses `(p,q)` into 0-based hospital type ids.
fn parse_pair(tok: &str, k: usize, line: usize) -> Result<(usize, usize), InstanceError> {
    let inner = tok
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| syntax(line, format!("expected '(p,q)', got '{tok}'")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| syntax(line, format!("expected '(p,q)', got '{tok}'")))?;
    Ok((
        parse_type_id(a.trim(), k, line)?,
        parse_type_id(b.trim(), k, line)?,
    ))
}

/// Parses couple preferences: pairs separated by whitespace, ties in `[..]`.
fn parse_pair_groups(
    text: &str,
    k: usize,
    line: usize,
) -> Result<Vec<Vec<(usize, usize)>>, InstanceError> {
    let mut groups = Vec::new();
    let mut current: Option<Vec<(usize, usize)>> = None;
    let mut rest = text.trim();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('[') {
            if current.is_some() {
                return Err(syntax(line, "nested '['"));
            }
            current = Some(Vec::new());
            rest = r.trim_start();
            continue;
        }
        if let Some(r) = rest.strip_prefix(']') {
            match current.take() {
                Some(g) if !g.is_empty() => groups.push(g),
                Some(_) => return Err(syntax(line, "empty tie group")),
                None => return Err(syntax(line, "unbalanced ']'")),
            }
            rest = r.trim_start();
            continue;
        }
        let end = rest
            .find(')')
            .ok_or_else(|| syntax(line, "unclosed hospital pair"))?;
        let pair = parse_pair(&rest[..=end].replace(' ', ""), k, line)?;
        match &mut current {
            Some(g) => g.push(pair),
            None => groups.push(vec![pair]),
        }
        rest = rest[end + 1..].trim_start();
    }
    if current.is_some() {
        return Err(syntax(line, "unclosed '['"));
    }
    Ok(groups)
}

fn parse_side(s: &str, line: usize) -> Result<Side, InstanceError> {
    Ok(match s {
        "m" => Side::Man,
        "w" => Side::Woman,
        "h" => Side::Hospital,
        "r" => Side::Resident,
        "none" => Side::None,
        _ => return Err(syntax(line, format!("unknown side '{s}'"))),
    })
}

fn parse_placement(s: &str, k: usize, line: usize) -> Result<Placement, InstanceError> {
    if s == "top" {
        return Ok(Placement::Top);
    }
    if s == "bottom" {
        return Ok(Placement::Bottom);
    }
    if let Some(t) = s.strip_prefix("after:") {
        return Ok(Placement::After(parse_type_id(t, k, line)?));
    }
    if let Some(ts) = s.strip_prefix("tiebetween:") {
        let (a, b) = ts
            .split_once(',')
            .ok_or_else(|| syntax(line, "tiebetween needs two type ids"))?;
        return Ok(Placement::TieBetween(
            parse_type_id(a, k, line)?,
            parse_type_id(b, k, line)?,
        ));
    }
    Err(syntax(line, format!("unknown placement '{s}'")))
}

/// Splits `key=value` words preceding an optional trailing `prefs=...`.
fn key_values(
    text: &str,
    line: usize,
) -> Result<(BTreeMap<String, String>, Option<String>), InstanceError> {
    let (head, prefs) = match text.find("prefs=") {
        Some(p) => (&text[..p], Some(text[p + 6..].trim().to_string())),
        None => (text, None),
    };
    let mut kv = BTreeMap::new();
    for word in head.split_whitespace() {
        let (key, value) = word
            .split_once('=')
            .ok_or_else(|| syntax(line, format!("expected key=value, got '{word}'")))?;
        if kv.insert(key.to_string(), value.to_string()).is_some() {
            return Err(syntax(line, format!("duplicate key '{key}'")));
        }
    }
    Ok((kv, prefs))
}

fn parse_count(v: Option<&String>, key: &str, line: usize) -> Result<Option<usize>, InstanceError> {
    v.map(|s| {
        s.parse()
            .map_err(|_| syntax(line, format!("{key} must be a non-negative integer")))
    })
    .transpose()
}

struct PendingType {
    spec: TypeSpec,
    names: Vec<String>,
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<TypedInstance, InstanceError> {
    let mut kind: Option<ProblemKind> = None;
    let mut k: Option<usize> = None;
    let mut types: BTreeMap<usize, PendingType> = BTreeMap::new();
    let mut couples: Vec<CoupleType> = Vec::new();
    let mut refines: Vec<(usize, usize, String)> = Vec::new();
    let mut excepts: Vec<(usize, String, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (keyword, rest) = content
            .split_once(char::is_whitespace)
            .map(|(a, b)| (a, b.trim()))
            .unwrap_or((content, ""));
        match keyword {
            "problem" => {
                if kind.is_some() {
                    return Err(syntax(line, "duplicate 'problem' line"));
                }
                kind = Some(match rest {
                    "smti" => ProblemKind::Smti,
                    "srti" => ProblemKind::Srti,
                    "hrt" => ProblemKind::Hrt,
                    "hrc" => ProblemKind::Hrc,
                    _ => return Err(syntax(line, format!("unknown problem kind '{rest}'"))),
                });
            }
            "types" => {
                if kind.is_none() {
                    return Err(syntax(line, "'types' must follow 'problem'"));
                }
                let v: usize = rest
                    .parse()
                    .map_err(|_| syntax(line, "types needs a positive integer"))?;
                if v == 0 {
                    return Err(syntax(line, "an instance needs at least one type"));
                }
                k = Some(v);
            }
            "type" => {
                let k = k.ok_or_else(|| syntax(line, "'type' before 'types'"))?;
                let (id_tok, tail) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| syntax(line, "incomplete type line"))?;
                let t = parse_type_id(id_tok, k, line)?;
                let (kv, prefs) = key_values(tail, line)?;
                for key in kv.keys() {
                    if !matches!(key.as_str(), "side" | "count" | "cap" | "names") {
                        return Err(syntax(line, format!("unknown key '{key}'")));
                    }
                }
                let side = parse_side(
                    kv.get("side")
                        .ok_or_else(|| syntax(line, "missing side="))?,
                    line,
                )?;
                let count = parse_count(kv.get("count"), "count", line)?
                    .ok_or_else(|| syntax(line, "missing count="))?;
                let capacity = parse_count(kv.get("cap"), "cap", line)?.unwrap_or(1);
                let names: Vec<String> = kv
                    .get("names")
                    .map(|s| s.split(',').map(str::to_string).collect())
                    .unwrap_or_default();
                let prefs = prefs.ok_or_else(|| syntax(line, "missing prefs="))?;
                let groups = split_groups(&prefs, line)?
                    .into_iter()
                    .map(|g| {
                        g.iter()
                            .map(|tok| parse_type_id(tok, k, line))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let pending = PendingType {
                    spec: TypeSpec {
                        side,
                        count,
                        capacity,
                        pref: TypePreference::new(groups),
                    },
                    names,
                };
                if types.insert(t, pending).is_some() {
                    return Err(syntax(line, format!("type {} declared twice", t + 1)));
                }
            }
            "couple" => {
                let k = k.ok_or_else(|| syntax(line, "'couple' before 'types'"))?;
                let (kv, prefs) = key_values(rest, line)?;
                let pair = parse_pair(
                    kv.get("types")
                        .ok_or_else(|| syntax(line, "missing types="))?,
                    k,
                    line,
                )?;
                let count = parse_count(kv.get("count"), "count", line)?
                    .ok_or_else(|| syntax(line, "missing count="))?;
                let mut pref = parse_pair_groups(&prefs.unwrap_or_default(), k, line)?;
                let (first, second) = if pair.0 <= pair.1 {
                    pair
                } else {
                    for g in &mut pref {
                        for p in g.iter_mut() {
                            *p = (p.1, p.0);
                        }
                    }
                    (pair.1, pair.0)
                };
                couples.push(CoupleType {
                    first,
                    second,
                    count,
                    pref,
                    members: Vec::new(),
                });
            }
            "refine" => {
                let k = k.ok_or_else(|| syntax(line, "'refine' before 'types'"))?;
                let (id_tok, groups) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(line, "expected 'refine <type>: <groups>'"))?;
                let t = parse_type_id(id_tok.trim(), k, line)?;
                refines.push((line, t, groups.to_string()));
            }
            "except" => {
                let (kv, _) = key_values(rest, line)?;
                let get = |key: &str| {
                    kv.get(key)
                        .cloned()
                        .ok_or_else(|| syntax(line, format!("missing {key}=")))
                };
                excepts.push((line, get("agent")?, get("cand")?, get("place")?));
            }
            other => return Err(syntax(line, format!("unknown keyword '{other}'"))),
        }
    }

    let kind = kind.ok_or_else(|| syntax(1, "missing 'problem' line"))?;
    let k = k.ok_or_else(|| syntax(1, "missing 'types' line"))?;
    if types.len() != k {
        let missing = (0..k).find(|t| !types.contains_key(t)).unwrap_or(0);
        return Err(InstanceError::Semantic(format!(
            "type {} is declared in 'types {k}' but never defined",
            missing + 1
        )));
    }
    let (specs, names): (Vec<_>, Vec<_>) = types.into_values().map(|p| (p.spec, p.names)).unzip();
    let mut inst = TypedInstance::build(kind, specs, names, couples)?;

    if !refines.is_empty() {
        let mut table = vec![None; k];
        for (line, t, text) in refines {
            if table[t].is_some() {
                return Err(syntax(line, format!("type {} refined twice", t + 1)));
            }
            let groups = split_groups(&text, line)?
                .into_iter()
                .map(|g| {
                    g.iter()
                        .map(|name| {
                            inst.agent_by_name(name).ok_or_else(|| {
                                InstanceError::Semantic(format!(
                                    "line {line}: unknown agent '{name}'"
                                ))
                            })
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            table[t] = Some(groups);
        }
        inst = inst.with_refinements(table)?;
    }
    if !excepts.is_empty() {
        let mut list = Vec::new();
        for (line, a, b, place) in excepts {
            let lookup = |name: &str| {
                inst.agent_by_name(name).ok_or_else(|| {
                    InstanceError::Semantic(format!("line {line}: unknown agent '{name}'"))
                })
            };
            list.push(ExceptionEntry {
                agent: lookup(&a)?,
                candidate: lookup(&b)?,
                placement: parse_placement(&place, k, line)?,
            });
        }
        inst = inst.with_exceptions(list)?;
    }
    Ok(inst)
}

fn write_groups(groups: &[Vec<usize>], label: impl Fn(usize) -> String) -> String {
    groups
        .iter()
        .map(|g| {
            if g.len() == 1 {
                label(g[0])
            } else {
                format!(
                    "({})",
                    g.iter().map(|&x| label(x)).collect::<Vec<_>>().join(" ")
                )
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_placement(p: Placement) -> String {
    match p {
        Placement::Top => "top".into(),
        Placement::Bottom => "bottom".into(),
        Placement::After(t) => format!("after:{}", t + 1),
        Placement::TieBetween(a, b) => format!("tiebetween:{},{}", a + 1, b + 1),
    }
}

/// Renders an instance in the file format; `parse_instance` inverts it.
pub fn write_instance(inst: &TypedInstance) -> String {
    let mut out = String::new();
    out.push_str(&format!("problem {}\n", inst.kind.as_str()));
    out.push_str(&format!("types {}\n", inst.k()));
    let defaults = TypedInstance::build(
        inst.kind,
        inst.types.clone(),
        Vec::new(),
        inst.couples.clone(),
    )
    .ok();
    for (t, spec) in inst.types.iter().enumerate() {
        let singles = inst.singles_of_type(t);
        let custom = match &defaults {
            Some(d) => singles.iter().any(|&a| d.agent_name(a) != inst.agent_name(a)),
            None => true,
        };
        let mut line = format!("type {} side={} count={}", t + 1, spec.side.code(), spec.count);
        if spec.capacity != 1 {
            line.push_str(&format!(" cap={}", spec.capacity));
        }
        if custom && !singles.is_empty() {
            let names: Vec<&str> = singles.iter().map(|&a| inst.agent_name(a)).collect();
            line.push_str(&format!(" names={}", names.join(",")));
        }
        line.push_str(&format!(
            " prefs={}\n",
            write_groups(&spec.pref.groups, |x| (x + 1).to_string())
        ));
        out.push_str(&line);
    }
    for ct in &inst.couples {
        let prefs: Vec<String> = ct
            .pref
            .iter()
            .map(|g| {
                let pairs: Vec<String> =
                    g.iter().map(|(p, q)| format!("({},{})", p + 1, q + 1)).collect();
                if g.len() == 1 {
                    pairs[0].clone()
                } else {
                    format!("[{}]", pairs.join(" "))
                }
            })
            .collect();
        out.push_str(&format!(
            "couple types=({},{}) count={} prefs={}\n",
            ct.first + 1,
            ct.second + 1,
            ct.count,
            prefs.join(" ")
        ));
    }
    for (t, r) in inst.refinements.iter().enumerate() {
        if let Some(groups) = r {
            out.push_str(&format!(
                "refine {}: {}\n",
                t + 1,
                write_groups(groups, |a| inst.agent_name(a).to_string())
            ));
        }
    }
    for e in &inst.exceptions {
        out.push_str(&format!(
            "except agent={} cand={} place={}\n",
            inst.agent_name(e.agent),
            inst.agent_name(e.candidate),
            write_placement(e.placement)
        ));
    }
    out
}
