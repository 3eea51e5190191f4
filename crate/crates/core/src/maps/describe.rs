//! Human-readable formulas for basis specs, e.g.
//! `out[a,b,a] = sum_{c in common} in[c,b,b]`.
//!
//! Output-side blocks (transfer and broadcast) take letters from `a` in block
//! order; summation blocks take letters from `c`, or right after the
//! output-side letters when there are more than two of those. A broadcast
//! over the whole output domain is written `for all a in D2`; a broadcast
//! without such a clause ranges over the common atoms. Sums name their range
//! as `common` or `D1`.

use std::collections::HashMap;

use itertools::Itertools;

use crate::combinatorics::{BlockKind, SetPartition};
use crate::error::{contract, Result};

use super::spec::{BasisMapSpec, Flag};

fn letters(spec: &BasisMapSpec) -> Vec<char> {
    let kinds = spec.kinds();
    let n_free = kinds.iter().filter(|k| **k != BlockKind::Sum).count();
    let mut next_free = 0u8;
    let mut next_sum = n_free.max(2) as u8;
    kinds
        .iter()
        .map(|k| {
            let slot = if *k == BlockKind::Sum {
                next_sum += 1;
                next_sum - 1
            } else {
                next_free += 1;
                next_free - 1
            };
            (b'a' + slot) as char
        })
        .collect()
}

/// Deterministic formula for a spec; [`parse_description`] inverts it.
pub fn describe_spec(spec: &BasisMapSpec) -> String {
    let names = letters(spec);
    let rgs = spec.partition().rgs();
    let (out_modes, in_modes) = rgs.split_at(spec.k_out());
    let out_idx = out_modes.iter().map(|&b| names[b]).join(",");
    let in_idx = in_modes.iter().map(|&b| names[b]).join(",");
    let mut text = format!("out[{out_idx}] = ");
    for (b, kind) in spec.kinds().iter().enumerate() {
        if *kind == BlockKind::Sum {
            let range = match spec.flag(b) {
                Some(Flag::CommonOnly) => "common",
                _ => "D1",
            };
            text.push_str(&format!("sum_{{{} in {range}}} ", names[b]));
        }
    }
    text.push_str(&format!("in[{in_idx}]"));
    let broadcasts = spec
        .kinds()
        .iter()
        .enumerate()
        .filter(|(b, k)| **k == BlockKind::Broadcast && spec.flag(*b) == Some(Flag::All))
        .map(|(b, _)| format!("for all {} in D2", names[b]))
        .join(", ");
    if !broadcasts.is_empty() {
        text.push(' ');
        text.push_str(&broadcasts);
    }
    text
}

fn parse_indices(s: &str) -> Result<Vec<char>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let mut chars = t.trim().chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_lowercase() => Ok(c),
                _ => Err(contract(format!("bad index {t:?}"))),
            }
        })
        .collect()
}

/// `"<letter> in <range>"`
fn parse_binding(s: &str) -> Result<(char, &str)> {
    let (var, range) = s
        .split_once(" in ")
        .ok_or_else(|| contract(format!("expected '<index> in <range>', got {s:?}")))?;
    let var = parse_indices(var.trim())?;
    match var[..] {
        [v] => Ok((v, range.trim())),
        _ => Err(contract(format!("expected one index in {s:?}"))),
    }
}

fn bracketed<'a>(s: &'a str, head: &str) -> Result<(&'a str, &'a str)> {
    let rest = s
        .strip_prefix(head)
        .ok_or_else(|| contract(format!("expected {head:?} at {s:?}")))?;
    let close = rest
        .find(']')
        .ok_or_else(|| contract(format!("unclosed {head:?}")))?;
    Ok((&rest[..close], &rest[close + 1..]))
}

/// Parses a formula produced by [`describe_spec`] back into a spec.
pub fn parse_description(text: &str) -> Result<BasisMapSpec> {
    let text = text.trim();
    let (out_part, rest) = bracketed(text, "out[")?;
    let out_idx = parse_indices(out_part)?;
    let mut rest = rest
        .trim_start()
        .strip_prefix('=')
        .ok_or_else(|| contract("expected '='"))?
        .trim_start();

    let mut sums: HashMap<char, Flag> = HashMap::new();
    while let Some(after) = rest.strip_prefix("sum_{") {
        let close = after.find('}').ok_or_else(|| contract("unclosed sum"))?;
        let (var, range) = parse_binding(&after[..close])?;
        let flag = match range {
            "common" => Flag::CommonOnly,
            "D1" => Flag::All,
            other => return Err(contract(format!("unknown sum range {other:?}"))),
        };
        if sums.insert(var, flag).is_some() {
            return Err(contract(format!("index {var} summed twice")));
        }
        rest = after[close + 1..].trim_start();
    }

    let (in_part, rest) = bracketed(rest, "in[")?;
    let in_idx = parse_indices(in_part)?;
    let mut broadcasts: HashMap<char, Flag> = HashMap::new();
    let rest = rest.trim();
    if !rest.is_empty() {
        for clause in rest.split(',') {
            let binding = clause
                .trim()
                .strip_prefix("for all ")
                .ok_or_else(|| contract(format!("expected 'for all', got {clause:?}")))?;
            let (var, range) = parse_binding(binding)?;
            let flag = match range {
                "common" => Flag::CommonOnly,
                "D2" => Flag::All,
                other => return Err(contract(format!("unknown broadcast range {other:?}"))),
            };
            broadcasts.insert(var, flag);
        }
    }

    let k_out = out_idx.len();
    let k_in = in_idx.len();
    let mut label: HashMap<char, usize> = HashMap::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for (mode, var) in out_idx.iter().chain(&in_idx).enumerate() {
        let b = *label.entry(*var).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(mode);
    }
    let partition = SetPartition::from_blocks(k_out + k_in, &blocks)?;
    let by_block: Vec<char> = blocks
        .iter()
        .map(|b| {
            if b[0] < k_out {
                out_idx[b[0]]
            } else {
                in_idx[b[0] - k_out]
            }
        })
        .collect();

    let (kinds, _) = crate::combinatorics::classify_partition(&partition, k_out, k_in)?;
    let mut flags = Vec::new();
    for (kind, var) in kinds.iter().zip(&by_block) {
        match kind {
            BlockKind::Sum => flags.push(
                *sums
                    .get(var)
                    .ok_or_else(|| contract(format!("input-only index {var} is never summed")))?,
            ),
            BlockKind::Broadcast => {
                flags.push(broadcasts.get(var).copied().unwrap_or(Flag::CommonOnly));
            }
            BlockKind::Transfer => {
                if sums.contains_key(var) || broadcasts.contains_key(var) {
                    return Err(contract(format!("transfer index {var} cannot be bound")));
                }
            }
        }
    }
    if sums
        .keys()
        .any(|v| !in_idx.contains(v) || out_idx.contains(v))
    {
        return Err(contract("summed index must appear only in the input"));
    }
    if broadcasts
        .keys()
        .any(|v| !out_idx.contains(v) || in_idx.contains(v))
    {
        return Err(contract("broadcast index must appear only in the output"));
    }
    BasisMapSpec::new(k_in, k_out, partition, &flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{enumerate_specs, MapMode};

    #[test]
    fn worked_example_text() {
        let p = SetPartition::from_rgs(vec![0, 1, 0, 2, 1, 1]).unwrap();
        let spec = BasisMapSpec::new(3, 3, p, &[Flag::CommonOnly, Flag::CommonOnly]).unwrap();
        assert_eq!(
            describe_spec(&spec),
            "out[a,b,a] = sum_{c in common} in[c,b,b]"
        );
    }

    #[test]
    fn scalar_text() {
        let spec = &enumerate_specs(0, 0, MapMode::Overlap).unwrap()[0];
        assert_eq!(describe_spec(spec), "out[] = in[]");
    }

    #[test]
    fn first_order_texts() {
        let same = enumerate_specs(1, 1, MapMode::SameDomain).unwrap();
        assert_eq!(describe_spec(&same[0]), "out[a] = in[a]");
        assert_eq!(
            describe_spec(&same[1]),
            "out[a] = sum_{c in D1} in[c] for all a in D2"
        );
    }

    #[test]
    fn many_free_indices_push_sum_letters_along() {
        let p = SetPartition::from_rgs(vec![0, 1, 2, 3]).unwrap();
        let spec = BasisMapSpec::same_domain(1, 3, p).unwrap();
        assert_eq!(
            describe_spec(&spec),
            "out[a,b,c] = sum_{d in D1} in[d] for all a in D2, for all b in D2, for all c in D2"
        );
    }

    #[test]
    fn every_spec_round_trips() {
        for k_in in 0..=3 {
            for k_out in 0..=3 {
                for mode in [MapMode::SameDomain, MapMode::Overlap] {
                    for spec in enumerate_specs(k_in, k_out, mode).unwrap() {
                        let text = describe_spec(&spec);
                        assert_eq!(parse_description(&text).unwrap(), spec, "{text}");
                    }
                }
            }
        }
    }

    #[test]
    fn malformed_text_is_rejected() {
        for bad in [
            "out[a] = in[b]",
            "out[a] in[a]",
            "out[a] = sum_{a in D1} in[a]",
            "out[a] = sum_{c in D3} in[c] for all a in D2",
            "out[a] = in[a] for all a in D2",
            "out[A] = in[A]",
            "out[a] = sum_{c in D1} in[c] for each a in D2",
        ] {
            assert!(parse_description(bad).is_err(), "{bad}");
        }
    }
}
