mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use kaf_core::assessment::{postulate_violations, score_questions, threshold, Coverage};
use kaf_core::classification::{ClassificationTable, LifecyclePhase, NonakaClass};
use kaf_core::comms::{letter_placeholders, render_letter, CommsError, LetterContext, LetterKind};
use kaf_core::crosswalk::{parse_dc, serialize_dc, MappingTable, Target};
use kaf_core::model::{validate_record, KnowledgeResource};
use kaf_core::record::{self, Record};
use kaf_core::storage::Registry;
use kaf_core::workflow::{replay, EventKind, Verdict, WorkflowEvent, WorkflowState};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

/// Brute-force postulate: direct evaluation of the quantifier over
/// (conceptual, systemic) pairs.
fn postulate_oracle(resources: &[KnowledgeResource], table: &ClassificationTable) -> Vec<String> {
    let phase = |r: &KnowledgeResource| -> LifecyclePhase {
        r.lifecycle_phase.unwrap_or(table.lifecycle_of(&r.resource_type).0)
    };
    let mut out = Vec::new();
    for c in resources {
        if table.nonaka_class_of(&c.resource_type) != NonakaClass::Conceptual {
            continue;
        }
        let mut has_counterpart = false;
        for s in resources {
            if table.nonaka_class_of(&s.resource_type) != NonakaClass::Systemic {
                continue;
            }
            if c.corresponds_to.as_deref() == Some(s.resource_id.as_str()) || phase(c) == phase(s) {
                has_counterpart = true;
            }
        }
        if !has_counterpart {
            out.push(c.resource_id.clone());
        }
    }
    out.sort();
    out
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn legal_events_is_sound_and_complete(seed in any::<u64>(), len in 0usize..60) {
        let mut rng = common::rng(seed);
        let events = common::event_sequence(&mut rng, len);
        let mut state = WorkflowState::initial();
        for e in &events {
            let legal = state.legal_events();
            for kind in common::candidate_kinds(&state) {
                let probe = WorkflowEvent::new(e.timestamp, kind);
                prop_assert_eq!(legal.contains(&kind), state.apply(&probe).is_ok(), "{} in {}", kind, state);
            }
            if let Ok(next) = state.apply(e) {
                prop_assert!(next.stage() >= state.stage());
                state = next;
            }
        }
    }

    #[test]
    fn replay_is_deterministic_and_counts_loops(seed in any::<u64>(), len in 0usize..80) {
        let mut rng = common::rng(seed);
        let all = common::event_sequence(&mut rng, len);
        let mut state = WorkflowState::initial();
        let mut accepted = Vec::new();
        for e in &all {
            if let Ok(next) = state.apply(e) {
                if let EventKind::ReportAmended(v) = e.kind {
                    prop_assert_eq!(Some(v), state.current_report_version().map(|c| c + 1));
                }
                state = next;
                accepted.push(e.clone());
            }
        }
        let invalid = accepted
            .iter()
            .filter(|e| matches!(e.kind, EventKind::ValidationReceived(_, Verdict::Invalid)))
            .count();
        prop_assert_eq!(state.loop_count() as usize, invalid);
        let a = replay(&accepted).unwrap();
        let b = replay(&accepted).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &state);
    }

    #[test]
    fn record_files_round_trip(
        recs in prop::collection::vec(
            ("[a-z][a-z0-9_-]{0,8}", prop::collection::vec(("[a-z][a-z0-9_.]{0,8}", "[^\r]{1,30}"), 0..5)),
            0..5,
        )
    ) {
        let records: Vec<Record> = recs
            .iter()
            .map(|(kind, fields)| {
                let mut r = Record::new(kind.clone());
                for (n, v) in fields {
                    r.push(n.clone(), v.clone());
                }
                r
            })
            .collect();
        match record::write(&records) {
            Ok(text) => {
                let back = record::parse(&text).unwrap();
                let strip = |rs: &[Record]| -> Vec<(String, Vec<(String, String)>)> {
                    rs.iter()
                        .map(|r| (r.kind.clone(), r.fields.iter().map(|f| (f.name.clone(), f.value.clone())).collect()))
                        .collect()
                };
                prop_assert_eq!(strip(&back), strip(&records));
                prop_assert_eq!(record::write(&back).unwrap(), text);
            }
            Err(_) => {
                // Only values with a line that is exactly `>>>` cannot be written.
                let unwritable = recs.iter().flat_map(|(_, f)| f).any(|(_, v)| v.split('\n').any(|l| l == ">>>"));
                prop_assert!(unwritable);
            }
        }
    }

    #[test]
    fn dc_serialization_is_identity(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let r = common::dc_record(&mut rng);
        prop_assert_eq!(parse_dc(&serialize_dc(&r)).unwrap(), r);
    }

    #[test]
    fn crosswalk_recovers_mapped_fields(seed in any::<u64>(), fill in 0.0f64..=1.0) {
        let mut rng = common::rng(seed);
        let inv = common::inventory(&mut rng, 3, fill);
        let r = inv.last().unwrap();
        prop_assert!(validate_record(r).is_empty());
        let table = MappingTable::canonical();
        let dc = table.export(r).unwrap();
        prop_assert!(dc.validate().is_ok());
        let expected: BTreeMap<&str, String> = table
            .rows()
            .iter()
            .filter(|m| m.target != Target::Extension)
            .filter_map(|m| r.field_value(m.kaf_field).map(|v| (m.kaf_field, v)))
            .collect();
        prop_assert_eq!(table.recover(&dc).unwrap(), expected);
    }

    #[test]
    fn coverage_is_monotone(seed in any::<u64>(), n in 0usize..12) {
        let mut rng = common::rng(seed);
        let project = common::project(&mut rng, 0.5);
        let mut inv = common::inventory(&mut rng, n, 0.5);
        let before = score_questions(&project, &inv);

        let earlier: Vec<String> = inv.iter().map(|r| r.resource_id.clone()).collect();
        inv.push(common::full_resource(&mut rng, &format!("R{:03}", n + 1), &earlier));
        let added = score_questions(&project, &inv);
        for (b, a) in before.iter().zip(&added) {
            prop_assert!(a.coverage >= b.coverage, "{:?} fell on add", a.question);
        }

        let i = rng.gen_range(0..inv.len());
        let field = *KnowledgeResource::FIELDS[3..].choose(&mut rng).unwrap();
        inv[i].set_field(field, "").unwrap();
        let removed = score_questions(&project, &inv);
        for (a, r) in added.iter().zip(&removed) {
            prop_assert!(r.coverage <= a.coverage, "{:?} rose after clearing {}", r.question, field);
        }
    }

    #[test]
    fn scores_ignore_order_and_keep_invariants(seed in any::<u64>(), n in 0usize..15) {
        let mut rng = common::rng(seed);
        let project = common::project(&mut rng, 0.5);
        let inv = common::inventory(&mut rng, n, 0.6);
        let mut shuffled = inv.clone();
        shuffled.shuffle(&mut rng);
        let a = score_questions(&project, &inv);
        prop_assert_eq!(&a, &score_questions(&project, &shuffled));
        for s in &a {
            prop_assert!(s.coverage >= Coverage::from_integer(0) && s.coverage <= Coverage::from_integer(1));
            prop_assert_eq!(s.answered, s.coverage >= threshold());
            prop_assert_eq!(s.missing.is_empty(), s.coverage == Coverage::from_integer(1));
        }
    }

    #[test]
    fn postulate_matches_oracle(seed in any::<u64>(), n in 0usize..=20) {
        let mut rng = common::rng(seed);
        let inv = common::inventory(&mut rng, n, 0.4);
        let t = ClassificationTable::builtin();
        prop_assert_eq!(postulate_violations(&inv, t), postulate_oracle(&inv, t));
    }

    #[test]
    fn letters_accept_exactly_their_placeholders(mask in any::<u16>(), kind_ix in 0usize..4) {
        let kind = LetterKind::all().nth(kind_ix).unwrap();
        let names = letter_placeholders(kind);
        let mut ctx = LetterContext::new();
        let mut withheld = Vec::new();
        for (i, n) in names.iter().enumerate() {
            if mask & (1 << i) != 0 {
                ctx.set(n, format!("value of {n}"));
            } else {
                withheld.push(n.to_string());
            }
        }
        match render_letter(kind, &ctx) {
            Ok(text) => {
                prop_assert!(withheld.is_empty());
                for n in &names {
                    let marker = format!("{{{n}}}");
                    prop_assert!(!text.contains(&marker));
                }
            }
            Err(CommsError::MissingPlaceholder(missing)) => prop_assert_eq!(missing, withheld),
            Err(e) => prop_assert!(false, "unexpected {}", e),
        }
    }
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn save_load_save_is_byte_identical(seed in any::<u64>(), steps in 0usize..50) {
        let mut rng = common::rng(seed);
        let a = common::audit(&mut rng, steps);
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::new(dir.path());
        reg.save_audit(&a).unwrap();
        let first = snapshot(dir.path());
        let back = reg.load_audit(&a.audit_id).unwrap();
        prop_assert_eq!(&back, &a);
        reg.save_audit(&back).unwrap();
        prop_assert_eq!(snapshot(dir.path()), first);
    }

    #[test]
    fn inventory_edits_keep_ids_unique_and_references_resolved(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut a = common::audit(&mut rng, 0);
        let t = common::t0();
        for (i, s) in kaf_core::workflow::StepId::all().take(4).enumerate() {
            a = a.record_event(WorkflowEvent::new(t + chrono::Duration::seconds(i as i64), EventKind::StepCompleted(s))).unwrap();
        }
        for _ in 0..40 {
            if rng.gen_bool(0.6) || a.resources().is_empty() {
                let earlier: Vec<String> = a.resources().iter().map(|r| r.resource_id.clone()).collect();
                let r = common::resource(&mut rng, "", &earlier, 0.5);
                a = a.add_resource(r).unwrap();
            } else {
                let id = a.resources().choose(&mut rng).unwrap().resource_id.clone();
                let referenced = a.resources().iter().any(|r| r.corresponds_to.as_deref() == Some(id.as_str()));
                match a.remove_resource(&id) {
                    Ok(next) => { prop_assert!(!referenced); a = next; }
                    Err(e) => { prop_assert!(referenced); prop_assert_eq!(e.code(), "referenced-resource"); }
                }
            }
            let ids: std::collections::BTreeSet<&str> = a.resources().iter().map(|r| r.resource_id.as_str()).collect();
            prop_assert_eq!(ids.len(), a.resources().len());
            for r in a.resources() {
                if let Some(t) = &r.corresponds_to {
                    prop_assert!(ids.contains(t.as_str()));
                }
            }
        }
    }
}

/// Every file under `root` with its bytes, lock files excluded.
pub fn snapshot(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
